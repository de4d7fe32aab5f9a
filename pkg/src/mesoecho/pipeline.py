"""Run directories, manifests and the simulate / sweep / two-spin / plot stages.

Every output CSV is a pure function of the configuration and seed.  The
manifest additionally records a timestamped run id, stage status and file
checksums, and is rewritten atomically after each completed stage so an
interrupted run can be resumed.
"""

from __future__ import annotations

import datetime as _dt
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    Regime,
    decoherence_time,
    glbe_converged,
    glbe_numeric_solver,
    isolated_chain_P11,
    observable_frequency,
    two_spin_P11,
)
from .config import RunConfig
from .csvio import atomic_write, fmt, read_table, read_trace, render_table, sha256_file, write_trace
from .echo import analyse_echoes, extract_AB, fit_fgr_slope, line_fit
from .errors import ConfigError, CriticalRegimeError, MesoechoError, StepSizeError
from .evolution import EvolutionConfig, PolarizationTrace, autocorrelation_P11
from .lattice import DEFAULT_DIM_CAP, LadderSpec
from . import svg

MANIFEST = "manifest.txt"
FGR_COLUMNS = ("hamiltonian", "a", "b", "jy", "slope", "slope_err", "tau_phi", "t_r", "n_points")
AB_COLUMNS = ("A", "A_err", "B", "B_err")
TWO_SPIN_COLUMNS = ("time", "p11_closed", "p11_glbe", "abs_diff")


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    run_id: str
    command: str
    config_hash: str
    seed: int
    tool_version: str = __version__
    stages: dict = field(default_factory=dict)
    checksums: dict = field(default_factory=dict)

    @classmethod
    def new(cls, command: str, config: RunConfig, seed: int) -> "RunManifest":
        digest = config.digest()
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        return cls(f"{stamp}-{digest[:12]}", command, digest, seed)

    @property
    def complete(self) -> bool:
        return bool(self.stages) and all(v == "done" for v in self.stages.values())

    def to_text(self) -> str:
        lines = [
            f"run_id={self.run_id}",
            f"command={self.command}",
            f"config_hash={self.config_hash}",
            f"seed={self.seed}",
            f"tool_version={self.tool_version}",
            f"status={'complete' if self.complete else 'incomplete'}",
        ]
        lines += [f"stage.{k}={self.stages[k]}" for k in sorted(self.stages)]
        lines += [f"checksum.{k}={self.checksums[k]}" for k in sorted(self.checksums)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunManifest":
        kv = {}
        for line in text.splitlines():
            key, sep, value = line.partition("=")
            if sep:
                kv[key.strip()] = value.strip()
        m = cls(kv["run_id"], kv["command"], kv["config_hash"], int(kv["seed"]), kv.get("tool_version", ""))
        m.stages = {k[6:]: v for k, v in kv.items() if k.startswith("stage.")}
        m.checksums = {k[9:]: v for k, v in kv.items() if k.startswith("checksum.")}
        return m

    def save(self, out_dir: Path) -> None:
        atomic_write(out_dir / MANIFEST, self.to_text())

    def finish(self, out_dir: Path, stage: str, *files: str) -> None:
        for name in files:
            self.checksums[name] = sha256_file(out_dir / name)
        self.stages[stage] = "done"
        self.save(out_dir)

    def is_done(self, out_dir: Path, stage: str, name: str) -> bool:
        path = out_dir / name
        return (
            self.stages.get(stage) == "done"
            and path.exists()
            and self.checksums.get(name) == sha256_file(path)
        )


def open_run(out_dir, command: str, config: RunConfig, seed: int) -> tuple[Path, RunManifest]:
    """Create ``out_dir`` or reopen it for resumption when the config matches."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    existing = out / MANIFEST
    if existing.exists():
        old = RunManifest.from_text(existing.read_text())
        if old.command == command and old.config_hash == config.digest() and old.seed == seed:
            return out, old
        raise ConfigError(
            "output directory holds a run with a different command, config or seed", field=str(out)
        )
    manifest = RunManifest.new(command, config, seed)
    atomic_write(out / "config.ini", config.to_ini())
    manifest.checksums["config.ini"] = sha256_file(out / "config.ini")
    manifest.save(out)
    return out, manifest


def _seed_of(config: RunConfig, seed: int | None) -> int:
    if seed is not None:
        return seed
    return config._get("evolution", "seed", int, 0)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(config: RunConfig, out_dir, seed: int | None = None, dim_cap: int = DEFAULT_DIM_CAP) -> Path:
    seed = _seed_of(config, seed)
    spec = config.ladder()
    evo = config.evolution(spec, seed)
    out, manifest = open_run(out_dir, "simulate", config, seed)
    manifest.stages.setdefault("trace", "pending")
    if not manifest.is_done(out, "trace", "trace.csv"):
        trace = autocorrelation_P11(spec, evo, dim_cap=dim_cap)
        write_trace(out / "trace.csv", trace, {"seed": seed})
        manifest.finish(out, "trace", "trace.csv")
    return out / "trace.csv"


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepPoint:
    hamiltonian: str
    a: float
    b: float
    jy: float

    @property
    def filename(self) -> str:
        return f"points/{self.hamiltonian}_jy{self.jy:.6g}.csv"


@dataclass(frozen=True)
class SweepPlan:
    base: LadderSpec
    evolution: EvolutionConfig
    points: tuple
    out_dir: Path
    t_fit_max: float | None = None

    def __post_init__(self):
        if not self.points:
            raise ConfigError("sweep grid is empty", field="sweep")

    def spec_for(self, p: SweepPoint) -> LadderSpec:
        return self.base.with_coupling(inter_coupling=p.jy, ising_weight=p.a, xy_weight=p.b)


def make_plan(config: RunConfig, out_dir, seed: int | None = None) -> SweepPlan:
    settings = config.sweep()
    base = config.ladder()
    evo = config.evolution(base, _seed_of(config, seed))
    points = tuple(SweepPoint(n, a, b, jy) for n, a, b in settings.hamiltonians for jy in settings.jy_values)
    return SweepPlan(base, evo, points, Path(out_dir), settings.t_fit_max)


def _point_task(spec: LadderSpec, evo: EvolutionConfig, dim_cap: int):
    try:
        trace = autocorrelation_P11(spec, evo, dim_cap=dim_cap)
    except MesoechoError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return trace, None


def cmd_sweep(
    config: RunConfig,
    out_dir,
    seed: int | None = None,
    dim_cap: int = DEFAULT_DIM_CAP,
    workers: int | None = None,
) -> Path:
    plan = make_plan(config, out_dir, seed)
    workers = workers or config.sweep().workers
    out, manifest = open_run(plan.out_dir, "sweep", config, plan.evolution.seed)
    for p in plan.points:
        manifest.stages.setdefault(f"point:{p.filename}", "pending")
    manifest.stages.setdefault("report", "pending")
    manifest.save(out)

    failures: dict[str, str] = {}
    todo = [p for p in plan.points if not manifest.is_done(out, f"point:{p.filename}", p.filename)]

    def store(point, result):
        trace, err = result
        if err is not None:
            failures[point.filename] = err
            return
        write_trace(out / point.filename, trace, {"hamiltonian": point.hamiltonian, "seed": plan.evolution.seed})
        manifest.finish(out, f"point:{point.filename}", point.filename)

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(p, pool.submit(_point_task, plan.spec_for(p), plan.evolution, dim_cap)) for p in todo]
            for p, fut in futures:
                store(p, fut.result())
    else:
        for p in todo:
            store(p, _point_task(plan.spec_for(p), plan.evolution, dim_cap))

    write_sweep_report(plan, out, failures)
    manifest.finish(out, "report", "isolated.csv", "fgr_report.csv", "ab_summary.csv")
    return out / "fgr_report.csv"


def write_sweep_report(plan: SweepPlan, out: Path, failures: dict | None = None) -> None:
    """Echo fits per point, golden-rule slope per type, pooled A and B."""
    failures = dict(failures or {})
    base = plan.base
    iso = isolated_chain_P11(
        base.chain_length, base.boundary, plan.evolution.times, base.excitation_site, base.intra_coupling
    )
    write_trace(out / "isolated.csv", iso)
    rows = []
    gaps = {}
    per_type: dict[str, list] = {}
    weights: dict[str, tuple[float, float]] = {}
    for p in plan.points:
        weights[p.hamiltonian] = (p.a, p.b)
        per_type.setdefault(p.hamiltonian, [])
        err = failures.get(p.filename)
        fit = None
        if err is None:
            try:
                trace = read_trace(out / p.filename)
                _, fit = analyse_echoes(trace, iso, plan.t_fit_max)
            except (MesoechoError, OSError, ValueError) as exc:
                err = f"{type(exc).__name__}: {exc}"
        if fit is None:
            gaps[p.filename] = err
            rows.append((p.hamiltonian, p.a, p.b, p.jy, None, None, None, None, 0))
            continue
        x = p.jy**2 / base.intra_coupling
        per_type[p.hamiltonian].append((x, fit.rate))
        rows.append((p.hamiltonian, p.a, p.b, p.jy, fit.slope, fit.slope_stderr, fit.tau_phi,
                     fit.crossover_time, fit.n_points_used))

    slopes = []
    for name, pts in per_type.items():
        if len(pts) < 3:
            continue
        try:
            f = fit_fgr_slope(pts)
        except MesoechoError as exc:
            gaps[f"fgr.{name}"] = f"{type(exc).__name__}: {exc}"
            continue
        rows.append((name, *weights[name], "all", f.slope, f.slope_stderr, None, None, len(pts)))
        if f.slope > 0:
            slopes.append((*weights[name], f.slope))

    header = {f"gap.{k}": v.replace("\n", " ") for k, v in gaps.items()}
    atomic_write(out / "fgr_report.csv", render_table(FGR_COLUMNS, rows, header))

    ab_rows = []
    ab_header = {}
    if len(slopes) >= 3:
        try:
            ab = extract_AB(slopes)
            ab_rows.append((ab.A, ab.A_err, ab.B, ab.B_err))
        except MesoechoError as exc:
            ab_header["gap.ab"] = str(exc)
    atomic_write(out / "ab_summary.csv", render_table(AB_COLUMNS, ab_rows, ab_header))


# ---------------------------------------------------------------------------
# two-spin


def cmd_two_spin(config: RunConfig, out_dir, seed: int | None = None) -> Path:
    settings = config.two_spin()
    params = settings.params
    seed = _seed_of(config, seed)
    out, manifest = open_run(out_dir, "two-spin", config, seed)
    sol = observable_frequency(params)
    tau = decoherence_time(params, sol)
    t_max = settings.t_max or (5.0 * tau if math.isfinite(tau) else 40.0 / params.omega0)
    notes = []
    try:
        if settings.dt is not None:
            numeric = glbe_numeric_solver(params, settings.dt, t_max)
        else:
            numeric = glbe_converged(params, t_max)
    except StepSizeError as exc:
        raise ConfigError(str(exc), field="two_spin.dt") from None
    try:
        closed = two_spin_P11(params, numeric.times).values
    except CriticalRegimeError as exc:
        closed = np.full(len(numeric.times), np.nan)
        notes.append(str(exc))
    diff = np.abs(closed - numeric.values)
    rows = zip(numeric.times, closed, numeric.values, diff)
    atomic_write(out / "two_spin.csv", render_table(TWO_SPIN_COLUMNS, rows, {"source": "two_spin"}))
    ratio = params.gamma_zz / params.gamma_xy if params.gamma_xy > 0 else math.inf
    report = {
        "regime": sol.regime.value,
        "omega0": params.omega0,
        "omega": sol.omega,
        "eta": sol.eta,
        "phi": sol.phi,
        "gamma_xy": params.gamma_xy,
        "gamma_zz": params.gamma_zz,
        "ratio_zz_xy": ratio,
        "tau_phi": tau,
        "t_max": t_max,
        "glbe_dt": numeric.spec_snapshot.get("dt"),
        "max_deviation": None if sol.regime is Regime.CRITICAL else float(np.nanmax(diff)),
        "note": "; ".join(notes) if notes else None,
    }
    atomic_write(out / "two_spin_report.txt", "".join(f"{k}={fmt(v)}\n" for k, v in report.items()))
    manifest.finish(out, "two_spin", "two_spin.csv", "two_spin_report.txt")
    return out / "two_spin_report.txt"


# ---------------------------------------------------------------------------
# plot


def _detect_kind(columns) -> str | None:
    cols = tuple(columns)
    if cols == ("time", "p11"):
        return "trace"
    if cols == FGR_COLUMNS:
        return "fgr"
    if cols == TWO_SPIN_COLUMNS:
        return "two-spin"
    return None


def _floats(values):
    return [float(v) if v != "" else math.nan for v in values]


def cmd_plot(csv_path, kind: str = "auto", out=None) -> Path:
    csv_path = Path(csv_path)
    try:
        header, columns, rows = read_table(csv_path)
    except OSError as exc:
        raise ConfigError(f"cannot read CSV: {exc.strerror}", field=str(csv_path)) from None
    detected = _detect_kind(columns)
    if detected is None:
        raise ConfigError("unknown CSV schema" if columns else "CSV is empty", field=str(csv_path))
    if kind != "auto" and kind != detected:
        raise ConfigError(f"CSV holds a {detected} table, not {kind}", field="--kind")
    if not rows:
        raise ConfigError("CSV has no data rows", field=str(csv_path))

    if detected == "trace":
        t, p = zip(*((float(r[0]), float(r[1])) for r in rows))
        chart = svg.Chart("Local polarization", "time (hbar/J_x)", "P11", [svg.Series("P11", t, p)])
    elif detected == "two-spin":
        t, c, g = (_floats(col) for col in list(zip(*rows))[:3])
        chart = svg.Chart("Two-spin polarization", "time (hbar/J_x)", "P11", [
            svg.Series("closed form", t, c),
            svg.Series("GLBE numeric", t, g, dashed=True),
        ])
    else:
        chart = svg.Chart("Decoherence rates", "J_y^2 / J_x", "1/tau_phi", [])
        groups: dict[str, list] = {}
        for r in rows:
            if r[3] == "all" or r[4] == "":
                continue
            groups.setdefault(r[0], []).append((float(r[3]) ** 2, float(r[4])))
        for i, (name, pts) in enumerate(groups.items()):
            color = svg.PALETTE[i % len(svg.PALETTE)]
            xs, ys = zip(*pts)
            chart.series.append(svg.Series(name, xs, ys, style="points", color=color))
            if len(pts) >= 2 and np.ptp(xs) > 0:
                f = line_fit(xs, ys)
                lo, hi = 0.0, max(xs)
                chart.series.append(svg.Series(f"{name} fit", (lo, hi), (f.intercept, f.intercept + f.slope * hi),
                                               color=color, dashed=True))
        if not chart.series:
            raise ConfigError("report holds no fitted points", field=str(csv_path))

    if out is None:
        target = csv_path.with_suffix(".svg")
    else:
        target = Path(out)
        if target.suffix.lower() != ".svg":
            target = target / (csv_path.stem + ".svg")
    atomic_write(target, svg.render(chart))
    return target
