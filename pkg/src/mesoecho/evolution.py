"""Infinite-temperature polarization autocorrelation of the ladder.

Two propagators are provided: dense spectral decomposition per sector and a
second-order Trotter splitting into two-site gates.  Two ensemble strategies
evaluate the trace: every sector basis vector (``full_trace``) or a handful of
random-phase superpositions per sector (``random_superposition``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .errors import ResourceCapError
from .lattice import (
    DEFAULT_DIM_CAP,
    LadderSpec,
    SectorBasis,
    SparseHamiltonian,
    build_total_hamiltonian,
    enumerate_sectors,
)

DENSE_DIM_CAP = 4096


class Method(str, enum.Enum):
    EXACT_DIAG = "exact_diag"
    TROTTER = "trotter"


class Ensemble(str, enum.Enum):
    FULL_TRACE = "full_trace"
    RANDOM_SUPERPOSITION = "random_superposition"


@dataclass(frozen=True)
class EvolutionConfig:
    """Time grid and numerical strategy for one autocorrelation run."""

    t_max: float
    dt: float = 0.1
    method: Method = Method.EXACT_DIAG
    trotter_substep: float = 0.01
    ensemble: Ensemble = Ensemble.FULL_TRACE
    n_samples: int = 8
    seed: int = 0
    dense_cap: int = DENSE_DIM_CAP

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "ensemble", Ensemble(self.ensemble))
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if not 0 < self.dt <= self.t_max:
            raise ValueError(f"dt must lie in (0, t_max], got {self.dt}")
        if not 0 < self.trotter_substep <= self.dt:
            raise ValueError(f"trotter_substep must lie in (0, dt], got {self.trotter_substep}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def default_for(cls, spec: LadderSpec, **overrides) -> "EvolutionConfig":
        """Defaults with ``t_max = 40 M``, long enough for several ring echoes."""
        overrides.setdefault("t_max", 40.0 * spec.chain_length)
        return cls(**overrides)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_max / self.dt + 1e-9))

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def substeps_per_sample(self) -> int:
        # the inner step is shrunk so that it divides dt exactly
        return max(1, math.ceil(self.dt / self.trotter_substep - 1e-9))

    def as_dict(self) -> dict:
        data = asdict(self)
        data["method"] = self.method.value
        data["ensemble"] = self.ensemble.value
        return data


@dataclass
class PolarizationTrace:
    """``P(t)`` sampled on ``times`` with a snapshot of how it was produced."""

    times: np.ndarray
    values: np.ndarray
    spec_snapshot: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")

    def __len__(self) -> int:
        return len(self.times)

    def check_invariants(self, tol0: float = 1e-12, tol_hi: float = 1e-9) -> None:
        """Raise ``AssertionError`` unless ``P(0) = 1`` and ``-1 <= P <= 1``."""
        if self.times[0] != 0.0:
            raise AssertionError("trace must start at t = 0")
        if abs(self.values[0] - 1.0) > tol0:
            raise AssertionError(f"P(0) = {self.values[0]!r}, expected 1")
        if np.any(self.values < -1.0 - tol_hi) or np.any(self.values > 1.0 + tol_hi):
            raise AssertionError("trace leaves [-1, 1]")


# ---------------------------------------------------------------------------
# exact diagonalization


class SpectralPropagator:
    """``exp(-iHt)`` on one sector through the eigendecomposition ``H = V E V^T``."""

    def __init__(self, energies: np.ndarray, modes: np.ndarray, times=None):
        self.energies = energies
        self.modes = modes
        self.times = None if times is None else np.asarray(times, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.energies)

    def apply(self, vectors, t: float) -> np.ndarray:
        """Evolve a vector (shape ``(d,)``) or a column batch (``(d, k)``) to time ``t``."""
        v = np.asarray(vectors)
        phase = np.exp(-1j * self.energies * t)
        coeff = self.modes.T @ v
        coeff = phase * coeff if coeff.ndim == 1 else phase[:, None] * coeff
        return self.modes @ coeff

    def __iter__(self):
        """Yield ``(t, applier)`` for every requested time."""
        if self.times is None:
            raise ValueError("no times were requested")
        for t in self.times:
            yield t, (lambda v, _t=t: self.apply(v, _t))

    def unitary(self, t: float) -> np.ndarray:
        return (self.modes * np.exp(-1j * self.energies * t)) @ self.modes.T


def evolve_exact(H: SparseHamiltonian, times=None, dim_cap: int = DENSE_DIM_CAP) -> SpectralPropagator:
    """Diagonalize one sector block and return its propagator."""
    if H.dim > dim_cap:
        raise ResourceCapError(
            f"sector dimension {H.dim} exceeds the dense diagonalization cap {dim_cap}; "
            "use method=trotter"
        )
    energies, modes = np.linalg.eigh(H.to_dense())
    return SpectralPropagator(energies, modes, times)


def _spectral_expectation(energies, weights, times, chunk=2048):
    """``sum_ab C_a W_ab conj(C_b)`` with ``C = exp(iEt)``, real part, per time."""
    out = np.empty(len(times))
    for lo in range(0, len(times), chunk):
        c = np.exp(1j * np.outer(times[lo:lo + chunk], energies))
        out[lo:lo + chunk] = np.real(np.sum((c @ weights) * c.conj(), axis=1))
    return out


# ---------------------------------------------------------------------------
# Trotter splitting


@dataclass(frozen=True)
class _GateGroup:
    """Mutually disjoint bonds, applied together as one stage."""

    zz_diag: np.ndarray
    pair_a: np.ndarray
    pair_b: np.ndarray
    pair_flip: np.ndarray
    bond_ptr: np.ndarray

    def stage(self, tau: float):
        phase = np.exp(-1j * tau * self.zz_diag)
        angle = 0.5 * self.pair_flip * tau
        return (
            np.ascontiguousarray(phase),
            self.pair_a,
            self.pair_b,
            np.ascontiguousarray(np.cos(angle)),
            np.ascontiguousarray(-1j * np.sin(angle)),
            self.bond_ptr,
        )


def _bond_colouring(spec: LadderSpec) -> list[list[tuple[int, int, float, float]]]:
    """Split all bonds into groups of pairwise disjoint bonds, rungs last.

    Chain bonds starting on an even site, then on an odd site, then (odd-length
    rings only) the closing bond.  Both chains share each group.
    """
    m = spec.chain_length
    jx = spec.intra_coupling
    even, odd, wrap = [], [], []
    for i, j in spec.chain_bonds("I"):
        if j == 0 and m % 2 == 1:
            wrap.append((i, j))
        elif i % 2 == 0:
            even.append((i, j))
        else:
            odd.append((i, j))
    groups = []
    for g in (even, odd, wrap):
        if g:
            groups.append([(i + off, j + off, jx, 0.0) for off in (0, m) for i, j in g])
    jy = spec.inter_coupling
    if jy != 0.0 and (spec.ising_weight != 0.0 or spec.xy_weight != 0.0):
        groups.append([(i, j, spec.xy_weight * jy, spec.ising_weight * jy) for i, j in spec.rungs()])
    return groups


def _build_group(sector: SectorBasis, bonds) -> _GateGroup:
    states = sector.states
    diag = np.zeros(sector.dim)
    pa, pb, flips, ptr = [], [], [], [0]
    for i, j, flip, zz in bonds:
        bi = (states >> i) & 1
        bj = (states >> j) & 1
        if zz != 0.0:
            diag += zz * (bi - 0.5) * (bj - 0.5)
        if flip != 0.0:
            src = np.flatnonzero((bi == 1) & (bj == 0))
            dst = sector.index_of(states[src] ^ ((1 << i) | (1 << j)))
            pa.append(src)
            pb.append(dst)
            flips.append(np.full(len(src), flip))
            ptr.append(ptr[-1] + len(src))
    cat = lambda xs, dt: np.ascontiguousarray(np.concatenate(xs) if xs else np.zeros(0, dt), dtype=dt)  # noqa: E731
    return _GateGroup(
        diag,
        cat(pa, np.int64),
        cat(pb, np.int64),
        cat(flips, float),
        np.asarray(ptr, dtype=np.int64),
    )


class TrotterStepper:
    """Symmetric second-order product formula on one sector.

    With gate groups ``G_1 .. G_k`` one step of length ``tau`` is
    ``G_1(tau/2) .. G_{k-1}(tau/2) G_k(tau) G_{k-1}(tau/2) .. G_1(tau/2)``.
    Consecutive steps fuse the touching ``G_1`` half steps.  Each group is
    tabulated once at ``tau/2`` and ``tau``; a run of substeps is then a
    list of table indices handed to the kernel in one call.
    """

    def __init__(self, spec: LadderSpec, sector: SectorBasis, tau: float):
        if not tau > 0:
            raise ValueError("substep must be positive")
        self.sector = sector
        self.tau = tau
        self.groups = [_build_group(sector, g) for g in _bond_colouring(spec)]
        # kind 2g is group g at tau/2, kind 2g+1 at tau
        stages = [grp.stage(t) for grp in self.groups for t in (0.5 * tau, tau)]
        d = sector.dim
        if stages:
            self._phases = np.ascontiguousarray(np.array([st[0] for st in stages]).reshape(len(stages), d))
            self._has_phase = np.array([np.any(st[0] != 1.0) for st in stages], dtype=np.uint8)
            self._pair_a = np.ascontiguousarray(np.concatenate([st[1] for st in stages]))
            self._pair_b = np.ascontiguousarray(np.concatenate([st[2] for st in stages]))
            self._cos = np.ascontiguousarray(np.concatenate([st[3] for st in stages]))
            self._sin = np.ascontiguousarray(np.concatenate([st[4] for st in stages]))
            ptrs, kind_bond, offset = [0], [0], 0
            for st in stages:
                ptrs.extend((st[5][1:] + offset).tolist())
                offset += st[5][-1]
                kind_bond.append(len(ptrs) - 1)
            self._bond_ptr = np.asarray(ptrs, dtype=np.int64)
            self._kind_bond = np.asarray(kind_bond, dtype=np.int64)
        self._programs: dict = {}

    def program(self, n_steps: int) -> np.ndarray:
        """Stage-kind indices realizing ``n_steps`` fused substeps."""
        if n_steps not in self._programs:
            k = len(self.groups)
            if k == 0 or n_steps == 0:
                seq = []
            elif k == 1:
                seq = [1] * n_steps
            else:
                middle = [2 * g for g in range(1, k - 1)]
                middle = middle + [2 * (k - 1) + 1] + middle[::-1]
                seq = [0] + middle + ([1] + middle) * (n_steps - 1) + [0]
            self._programs[n_steps] = np.asarray(seq, dtype=np.int64)
        return self._programs[n_steps]

    def advance(self, psi: np.ndarray, n_steps: int = 1) -> np.ndarray:
        """Apply ``n_steps`` substeps in place to a ``(d, k)`` complex C-contiguous batch."""
        prog = self.program(n_steps)
        if len(prog):
            _kernels.apply_program(
                psi, self._phases, self._has_phase, self._pair_a, self._pair_b,
                self._cos, self._sin, self._bond_ptr, self._kind_bond, prog,
            )
        return psi


def evolve_trotter(spec: LadderSpec, sector: SectorBasis, state, t: float, substep: float) -> np.ndarray:
    """Evolve ``state`` (vector or column batch) to time ``t`` by Trotter stepping.

    The number of substeps is ``ceil(t / substep)`` so the actual substep never
    exceeds the requested one.
    """
    if not substep > 0:
        raise ValueError("substep must be positive")
    state = np.asarray(state)
    vector = state.ndim == 1
    psi = np.array(state.reshape(len(state), -1), dtype=complex, order="C")
    if t != 0:
        n = max(1, math.ceil(abs(t) / substep - 1e-9))
        TrotterStepper(spec, sector, t / n).advance(psi, n)
    return psi[:, 0] if vector else psi


# ---------------------------------------------------------------------------
# ensembles


def _snapshot(spec: LadderSpec, config: EvolutionConfig, **extra) -> dict:
    snap = {f"spec.{k}": v for k, v in spec.as_dict().items()}
    snap.update({f"config.{k}": v for k, v in config.as_dict().items()})
    snap.update(extra)
    return snap


def _random_split(sector: SectorBasis, site: int, n_samples: int, seed: int):
    """Random-phase states, split by the spin on ``site``.

    Returns ``(up, down)`` column batches whose sum is a unit vector with
    uniform magnitudes ``1/sqrt(d)`` and independent uniform phases.
    """
    rng = np.random.default_rng([seed, sector.n_up])
    d = sector.dim
    phi = np.exp(2j * np.pi * rng.random((d, n_samples))) / np.sqrt(d)
    up = ((sector.states >> site) & 1).astype(bool)
    return np.where(up[:, None], phi, 0), np.where(up[:, None], 0, phi)


def _sector_weights_random(z1_tilde_modes, modes, up, down, d):
    """Weight matrix for the split estimator in the eigenbasis."""
    cu = modes.T @ up
    cd = modes.T @ down
    r = (cu.conj() @ cu.T - cd.conj() @ cd.T) * (0.5 * d / up.shape[1])
    return r * z1_tilde_modes


def _check_caps(spec, config, dim_cap):
    sectors = enumerate_sectors(spec.chain_length, dim_cap)
    if config.method is Method.EXACT_DIAG:
        biggest = max(s.dim for s in sectors)
        if biggest > config.dense_cap:
            raise ResourceCapError(
                f"largest sector has dimension {biggest}, above the dense cap {config.dense_cap}; "
                "use method=trotter"
            )
    return sectors


def _exact_sector_p11(spec, config, sector, times):
    site = spec.excitation_bit
    ham = build_total_hamiltonian(spec, sector)
    prop = evolve_exact(ham, dim_cap=config.dense_cap)
    z = sector.spin(site)
    zt = prop.modes.T @ (z[:, None] * prop.modes)
    if config.ensemble is Ensemble.FULL_TRACE:
        w = zt * zt
    else:
        up, down = _random_split(sector, site, config.n_samples, config.seed)
        w = _sector_weights_random(zt, prop.modes, up, down, sector.dim)
    return _spectral_expectation(prop.energies, w, times)


def _trotter_sector_p11(spec, config, sector, times):
    site = spec.excitation_bit
    z = sector.spin(site)
    d = sector.dim
    if config.ensemble is Ensemble.FULL_TRACE:
        psi = np.eye(d, dtype=complex)

        def measure(p):
            return z @ (np.abs(p) ** 2) @ z
    else:
        up, down = _random_split(sector, site, config.n_samples, config.seed)
        psi = np.ascontiguousarray(np.hstack((up, down)), dtype=complex)
        s = config.n_samples
        sign = np.concatenate((np.ones(s), -np.ones(s))) * (0.5 * d / s)

        def measure(p):
            return (z @ (np.abs(p) ** 2)) @ sign
    nsub = config.substeps_per_sample
    stepper = TrotterStepper(spec, sector, config.dt / nsub)
    out = np.empty(len(times))
    out[0] = measure(psi)
    for k in range(1, len(times)):
        stepper.advance(psi, nsub)
        out[k] = measure(psi)
    return out


def autocorrelation_P11(
    spec: LadderSpec, config: EvolutionConfig, dim_cap: int = DEFAULT_DIM_CAP
) -> PolarizationTrace:
    """``Tr[S^z_1(t) S^z_1] / Tr[(S^z_1)^2]`` over the full space, sector by sector.

    Sector contributions are summed in ascending ``n_up`` order, so the result
    does not depend on how the work is scheduled.
    """
    sectors = _check_caps(spec, config, dim_cap)
    times = config.times
    total = np.zeros(len(times))
    sector_fn = _exact_sector_p11 if config.method is Method.EXACT_DIAG else _trotter_sector_p11
    for sector in sectors:
        total += sector_fn(spec, config, sector, times)
    total /= 2.0 ** spec.n_sites / 4.0
    return PolarizationTrace(times, total, _snapshot(spec, config, source="ladder"))


def site_polarization_profile(
    spec: LadderSpec, config: EvolutionConfig, t: float, dim_cap: int = DEFAULT_DIM_CAP
) -> np.ndarray:
    """``P_{m,1}(t)`` for every site ``m = 0 .. 2M-1`` (same normalization as P11)."""
    sectors = _check_caps(spec, config, dim_cap)
    site = spec.excitation_bit
    profile = np.zeros(spec.n_sites)
    for sector in sectors:
        zs = np.array([sector.spin(m) for m in range(spec.n_sites)])
        z1 = zs[site]
        if config.ensemble is Ensemble.FULL_TRACE:
            batch = np.eye(sector.dim, dtype=complex)
            weights = z1
        else:
            up, down = _random_split(sector, site, config.n_samples, config.seed)
            batch = np.hstack((up, down))
            s = config.n_samples
            weights = np.concatenate((np.ones(s), -np.ones(s))) * (0.5 * sector.dim / s)
        if config.method is Method.EXACT_DIAG:
            prop = evolve_exact(build_total_hamiltonian(spec, sector), dim_cap=config.dense_cap)
            evolved = prop.apply(batch, t)
        else:
            nsub = config.substeps_per_sample * max(1, math.ceil(abs(t) / config.dt - 1e-9))
            evolved = np.ascontiguousarray(batch, dtype=complex)
            if t != 0:
                TrotterStepper(spec, sector, t / nsub).advance(evolved, nsub)
        profile += zs @ (np.abs(evolved) ** 2) @ weights
    return profile / (2.0 ** spec.n_sites / 4.0)
