"""INI run configuration: ``[ladder]``, ``[evolution]``, ``[sweep]``, ``[two_spin]``.

Example::

    [ladder]
    chain_length = 5
    boundary = periodic
    hamiltonian = isotropic
    inter_coupling = 0.1

    [evolution]
    t_max = 200
    dt = 0.1

    [sweep]
    jy_values = 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.11, 0.12
    hamiltonians = xy, isotropic, dipolar, h1, h2
    workers = 1

Errors name the offending ``section.key`` and, where possible, its line.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

from .analytic import TwoSpinParams
from .errors import ConfigError
from .evolution import EvolutionConfig
from .lattice import LadderSpec

# (a, b) weights of the rung Ising and flip-flop terms
INTERACTIONS = {
    "xy": (0.0, 1.0),
    "isotropic": (1.0, 1.0),
    "dipolar": (-2.0, 1.0),
    "h1": (1.0, 0.5),
    "h2": (1.8, 0.5),
}

_LADDER_KEYS = {
    "chain_length": int,
    "intra_coupling": float,
    "inter_coupling": float,
    "ising_weight": float,
    "xy_weight": float,
    "boundary": str,
    "excitation_site": int,
    "hamiltonian": str,
}
_EVOLUTION_KEYS = {
    "t_max": float,
    "dt": float,
    "method": str,
    "trotter_substep": float,
    "ensemble": str,
    "n_samples": int,
    "seed": int,
}
_SWEEP_KEYS = {"jy_values": str, "hamiltonians": str, "workers": int, "t_fit_max": float}
_TWO_SPIN_KEYS = {
    "a": float,
    "b": float,
    "j_y": float,
    "j_x": float,
    "omega0": float,
    "gamma_xy": float,
    "gamma_zz": float,
    "delta_p": float,
    "delta_p_env": str,
    "t_max": float,
    "dt": float,
}
_HAMILTONIAN_KEYS = {"a": float, "b": float}
_SECTIONS = {
    "ladder": _LADDER_KEYS,
    "evolution": _EVOLUTION_KEYS,
    "sweep": _SWEEP_KEYS,
    "two_spin": _TWO_SPIN_KEYS,
}


@dataclass(frozen=True)
class SweepSettings:
    jy_values: tuple[float, ...]
    hamiltonians: tuple[tuple[str, float, float], ...]
    workers: int = 1
    t_fit_max: float | None = None


@dataclass(frozen=True)
class TwoSpinSettings:
    params: TwoSpinParams
    t_max: float | None = None
    dt: float | None = None


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)
    source: str = "<string>"
    lines: dict = field(default_factory=dict)

    # -- raw access -------------------------------------------------------

    def has(self, section: str) -> bool:
        return section in self.sections

    def _err(self, msg: str, section: str, key: str | None = None) -> ConfigError:
        name = section if key is None else f"{section}.{key}"
        return ConfigError(msg, field=name, line=self.lines.get((section, key)))

    def _get(self, section: str, key: str, kind, default=None, required=False):
        values = self.sections.get(section, {})
        if key not in values:
            if required:
                raise self._err("required field is missing", section, key)
            return default
        raw = values[key]
        try:
            return kind(raw)
        except ValueError:
            raise self._err(f"cannot parse {raw!r} as {kind.__name__}", section, key) from None

    # -- typed views ------------------------------------------------------

    def ladder(self, **overrides) -> LadderSpec:
        if "ladder" not in self.sections:
            raise self._err("section is missing", "ladder")
        g = lambda k, d=None, req=False: self._get("ladder", k, _LADDER_KEYS[k], d, req)  # noqa: E731
        a, b = 1.0, 1.0
        name = g("hamiltonian")
        if name is not None:
            a, b = self.interaction(name, "ladder", "hamiltonian")
        kwargs = dict(
            chain_length=g("chain_length", req=True),
            intra_coupling=g("intra_coupling", 1.0),
            inter_coupling=g("inter_coupling", 0.0),
            ising_weight=g("ising_weight", a),
            xy_weight=g("xy_weight", b),
            boundary=g("boundary", "open"),
            excitation_site=g("excitation_site", 1),
        )
        kwargs.update(overrides)
        if kwargs["boundary"] not in ("open", "periodic"):
            raise self._err("must be 'open' or 'periodic'", "ladder", "boundary")
        try:
            return LadderSpec(**kwargs)
        except ValueError as exc:
            raise self._err(str(exc), "ladder") from None

    def evolution(self, spec: LadderSpec, seed: int | None = None) -> EvolutionConfig:
        g = lambda k, d=None: self._get("evolution", k, _EVOLUTION_KEYS[k], d)  # noqa: E731
        kwargs = dict(
            t_max=g("t_max", 40.0 * spec.chain_length),
            dt=g("dt", 0.1),
            method=g("method", "exact_diag"),
            trotter_substep=g("trotter_substep", 0.01),
            ensemble=g("ensemble", "full_trace"),
            n_samples=g("n_samples", 8),
            seed=g("seed", 0) if seed is None else seed,
        )
        for key, allowed in (("method", ("exact_diag", "trotter")), ("ensemble", ("full_trace", "random_superposition"))):
            if kwargs[key] not in allowed:
                raise self._err(f"must be one of {', '.join(allowed)}", "evolution", key)
        try:
            return EvolutionConfig(**kwargs)
        except ValueError as exc:
            raise self._err(str(exc), "evolution") from None

    def interaction(self, name: str, section: str, key: str) -> tuple[float, float]:
        custom = f"hamiltonian:{name}"
        if custom in self.sections:
            return (
                self._get(custom, "a", float, required=True),
                self._get(custom, "b", float, required=True),
            )
        if name.lower() in INTERACTIONS:
            return INTERACTIONS[name.lower()]
        raise self._err(f"unknown interaction type {name!r}", section, key)

    def sweep(self) -> SweepSettings:
        if "sweep" not in self.sections:
            raise self._err("section is missing", "sweep")
        raw_jy = self._get("sweep", "jy_values", str, required=True)
        try:
            jys = tuple(float(x) for x in _split(raw_jy))
        except ValueError:
            raise self._err(f"cannot parse {raw_jy!r} as a list of numbers", "sweep", "jy_values") from None
        if not jys:
            raise self._err("grid is empty", "sweep", "jy_values")
        names = _split(self._get("sweep", "hamiltonians", str, "isotropic"))
        if not names:
            raise self._err("no interaction types listed", "sweep", "hamiltonians")
        hams = tuple((n, *self.interaction(n, "sweep", "hamiltonians")) for n in names)
        workers = self._get("sweep", "workers", int, 1)
        if workers < 1:
            raise self._err("must be >= 1", "sweep", "workers")
        return SweepSettings(jys, hams, workers, self._get("sweep", "t_fit_max", float))

    def two_spin(self) -> TwoSpinSettings:
        if "two_spin" not in self.sections:
            raise self._err("section is missing", "two_spin")
        g = lambda k, d=None: self._get("two_spin", k, _TWO_SPIN_KEYS[k], d)  # noqa: E731
        env_raw = g("delta_p_env", "0, 0")
        try:
            env = tuple(float(x) for x in _split(env_raw))
        except ValueError:
            env = ()
        if len(env) != 2:
            raise self._err("expected two comma-separated numbers", "two_spin", "delta_p_env")
        try:
            j_x = g("j_x", 1.0)
            params = TwoSpinParams.from_couplings(g("a", 1.0), g("b", 1.0), g("j_y", 0.1), j_x, g("delta_p", 0.5), env)
            direct = {k: g(k) for k in ("omega0", "gamma_xy", "gamma_zz") if g(k) is not None}
            if direct:
                params = TwoSpinParams(
                    direct.get("omega0", params.omega0),
                    direct.get("gamma_xy", params.gamma_xy),
                    direct.get("gamma_zz", params.gamma_zz),
                    params.delta_p,
                    params.delta_p_env,
                )
        except ValueError as exc:
            raise self._err(str(exc), "two_spin") from None
        return TwoSpinSettings(params, g("t_max"), g("dt"))

    # -- serialization ----------------------------------------------------

    def to_ini(self) -> str:
        """Canonical text: sections and keys sorted, no comments."""
        out = []
        for section in sorted(self.sections):
            out.append(f"[{section}]")
            for key in sorted(self.sections[section]):
                out.append(f"{key} = {self.sections[section][key]}")
            out.append("")
        return "\n".join(out)

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()

    def with_value(self, section: str, key: str, value) -> "RunConfig":
        sections = {s: dict(v) for s, v in self.sections.items()}
        sections.setdefault(section, {})[key] = str(value)
        return RunConfig(sections, self.source, dict(self.lines))


def _split(text: str) -> list[str]:
    return [part.strip() for part in re.split(r"[,\s]+", text.strip()) if part.strip()]


def _line_numbers(text: str) -> dict:
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]$", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = no
        elif section and s and s[0] not in "#;":
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            lines[(section, key)] = no
    return lines


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], field=source, line=line) from None
    lines = _line_numbers(text)
    sections = {}
    for name in parser.sections():
        allowed = _SECTIONS.get(name)
        if allowed is None and name.startswith("hamiltonian:"):
            allowed = _HAMILTONIAN_KEYS
        if allowed is None:
            raise ConfigError("unknown section", field=name, line=lines.get((name, None)))
        values = dict(parser.items(name))
        for key in values:
            if key not in allowed:
                raise ConfigError("unknown field", field=f"{name}.{key}", line=lines.get((name, key)))
        sections[name] = values
    return RunConfig(sections, source, lines)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", field=str(path)) from None
    return parse_config(text, str(path))
