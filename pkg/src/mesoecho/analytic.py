"""Closed-form references: the isolated XY chain and the two-spin channel.

The two-spin model is a pair of sites coupled at Rabi frequency ``omega0``,
each weakly attached to a fast environment through flip-flop (rate
``gamma_xy``) and Ising (rate ``gamma_zz``) couplings.  Its excess
polarization obeys two coupled Volterra equations; in the wide-band limit
they integrate to the closed form evaluated by :func:`two_spin_P11`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CriticalRegimeError, StepSizeError
from .evolution import PolarizationTrace
from .lattice import Boundary

STEP_LIMIT = 0.05


def isolated_chain_P11(
    chain_length: int,
    boundary: Boundary | str,
    times,
    excitation_site: int = 1,
    intra_coupling: float = 1.0,
) -> PolarizationTrace:
    """Return probability of one fermion hopping on an isolated XY chain.

    Open chains use the standing-wave modes ``sin(n k pi / (M+1))``.  On a ring
    the Jordan-Wigner string makes the fermion boundary condition depend on
    particle-number parity, so the infinite-temperature trace is the average of
    the periodic and antiperiodic one-body amplitudes.
    """
    m = int(chain_length)
    if m < 1:
        raise ValueError("chain_length must be >= 1")
    boundary = Boundary(boundary)
    times = np.asarray(times, dtype=float)
    jx = intra_coupling
    if boundary is Boundary.OPEN:
        k = np.arange(1, m + 1)
        eps = jx * np.cos(k * np.pi / (m + 1))
        weight = (2.0 / (m + 1)) * np.sin(excitation_site * k * np.pi / (m + 1)) ** 2
        amp = np.exp(-1j * np.outer(times, eps)) @ weight
        values = np.abs(amp) ** 2
    else:
        if m < 3:
            raise ValueError("periodic boundary needs chain_length >= 3")
        k = np.arange(m)
        values = np.zeros(len(times))
        for twist in (0.0, 0.5):
            eps = jx * np.cos(2 * np.pi * (k + twist) / m)
            amp = np.exp(-1j * np.outer(times, eps)).sum(axis=1) / m
            values += 0.5 * np.abs(amp) ** 2
    snapshot = {
        "source": "isolated_chain",
        "spec.chain_length": m,
        "spec.boundary": boundary.value,
        "spec.intra_coupling": jx,
        "spec.excitation_site": excitation_site,
    }
    return PolarizationTrace(times, values, snapshot)


def two_spin_decay_rates(a: float, b: float, j_y: float, j_x: float, delta_p_env=(0.0, 0.0)):
    """Wide-band, high-temperature decay rates ``(gamma_xy, gamma_zz)``.

    ``2 gamma_xy = (b j_y)^2 / j_x`` and, per environment site,
    ``2 gamma_zz = (32 / 3 pi) (a j_y)^2 (1/4 - dP^2) / j_x``, which at
    ``dP = 0`` reduces to ``(8 / 3 pi) (a j_y)^2 / j_x``.  With unequal
    environment excesses the two site rates are averaged.
    """
    if not j_x > 0:
        raise ValueError("j_x must be positive")
    dp = np.asarray(delta_p_env, dtype=float)
    if dp.shape != (2,) or np.any(np.abs(dp) > 0.5):
        raise ValueError("delta_p_env must be a pair with |dP| <= 1/2")
    gamma_xy = 0.5 * (b * j_y) ** 2 / j_x
    site_rates = (16.0 / (3.0 * math.pi)) * (a * j_y) ** 2 * (0.25 - dp**2) / j_x
    return gamma_xy, float(site_rates.mean())


@dataclass(frozen=True)
class TwoSpinParams:
    omega0: float
    gamma_xy: float
    gamma_zz: float
    delta_p: float = 0.5
    delta_p_env: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if self.gamma_xy < 0 or self.gamma_zz < 0:
            raise ValueError("decay rates must be non-negative")
        if not 0 < self.delta_p <= 0.5:
            raise ValueError("delta_p must lie in (0, 1/2]")
        if len(self.delta_p_env) != 2 or any(abs(x) > 0.5 for x in self.delta_p_env):
            raise ValueError("delta_p_env must be a pair with |dP| <= 1/2")

    @classmethod
    def from_couplings(cls, a, b, j_y, j_x=1.0, delta_p=0.5, delta_p_env=(0.0, 0.0)):
        """Two sites joined by ``j_x`` (so ``omega0 = j_x``) with rates from the rung couplings."""
        gxy, gzz = two_spin_decay_rates(a, b, j_y, j_x, delta_p_env)
        return cls(j_x, gxy, gzz, delta_p, tuple(delta_p_env))


class Regime(str, enum.Enum):
    OSCILLATORY = "oscillatory"
    CRITICAL = "critical"
    OVERDAMPED = "overdamped"


@dataclass(frozen=True)
class TwoSpinSolution:
    """Observable frequency ``omega``, overdamped rate ``eta`` and phase ``phi``.

    ``phi`` is ``None`` outside the oscillatory regime, where the phase of the
    closed form is not a real number.
    """

    omega: float
    eta: float
    phi: float | None
    regime: Regime


def observable_frequency(params: TwoSpinParams) -> TwoSpinSolution:
    w0 = params.omega0
    g = params.gamma_zz
    if g == w0:
        return TwoSpinSolution(0.0, 0.0, None, Regime.CRITICAL)
    r = g / w0
    if r < 1.0:
        omega = w0 * math.sqrt(1.0 - r * r)
        # principal branch, phi in (-pi/2, 0]
        return TwoSpinSolution(omega, 0.0, math.atan(-g / omega), Regime.OSCILLATORY)
    return TwoSpinSolution(0.0, w0 * math.sqrt(r * r - 1.0), None, Regime.OVERDAMPED)


def decoherence_time(params: TwoSpinParams, solution: TwoSpinSolution | None = None) -> float:
    """``1 / ((2 gamma_xy + gamma_zz) - eta)``, infinite without damping."""
    solution = solution or observable_frequency(params)
    rate = 2.0 * params.gamma_xy + params.gamma_zz - solution.eta
    return math.inf if rate <= 0 else 1.0 / rate


def _coherent_factor(params: TwoSpinParams, sol: TwoSpinSolution, t: np.ndarray) -> np.ndarray:
    """``cos((omega + i eta) t + phi) / cos(phi)`` written with real functions.

    Oscillatory: ``cos(wt + phi)/cos(phi) = cos wt + (G/w) sin wt`` since
    ``tan phi = -G/w``.  Overdamped: continue ``w -> i eta``, giving
    ``cosh(eta t) + (G/eta) sinh(eta t)``.
    """
    g = params.gamma_zz
    if sol.regime is Regime.OSCILLATORY:
        return np.cos(sol.omega * t) + (g / sol.omega) * np.sin(sol.omega * t)
    return np.cosh(sol.eta * t) + (g / sol.eta) * np.sinh(sol.eta * t)


def _snapshot(params: TwoSpinParams, source: str, **extra) -> dict:
    snap = {
        "source": source,
        "omega0": params.omega0,
        "gamma_xy": params.gamma_xy,
        "gamma_zz": params.gamma_zz,
        "delta_p": params.delta_p,
        "delta_p_env": f"{params.delta_p_env[0]};{params.delta_p_env[1]}",
    }
    snap.update(extra)
    return snap


def two_spin_P11(params: TwoSpinParams, times) -> PolarizationTrace:
    """Closed-form local polarization of the two-spin channel.

    ``P(t) = 2 dP [ e^{-2 Gxy t} / 2 + f(t) e^{-(2 Gxy + Gzz) t} / 2 ]`` with
    ``f`` from :func:`_coherent_factor`.  Refused at the critical point.
    """
    sol = observable_frequency(params)
    if sol.regime is Regime.CRITICAL:
        raise CriticalRegimeError(
            "closed form is singular at omega0 = gamma_zz; use glbe_numeric_solver"
        )
    t = np.asarray(times, dtype=float)
    gxy, gzz = params.gamma_xy, params.gamma_zz
    # evaluate the overdamped growth inside the exponent to avoid overflow at long times
    if sol.regime is Regime.OVERDAMPED:
        e = sol.eta
        damp = 2 * gxy + gzz
        coherent = 0.5 * ((1 + gzz / e) * np.exp((e - damp) * t) + (1 - gzz / e) * np.exp(-(e + damp) * t))
    else:
        coherent = _coherent_factor(params, sol, t) * np.exp(-(2 * gxy + gzz) * t)
    values = 2.0 * params.delta_p * (0.5 * np.exp(-2 * gxy * t) + 0.5 * coherent)
    return PolarizationTrace(t, values, _snapshot(params, "two_spin_closed_form", regime=sol.regime.value))


def _glbe_march(params: TwoSpinParams, dt: float, n: int):
    t = dt * np.arange(n + 1)
    survival = np.exp(-2.0 * (params.gamma_xy + params.gamma_zz) * t)
    k_same = np.cos(0.5 * params.omega0 * t) ** 2 * survival
    k_cross = np.sin(0.5 * params.omega0 * t) ** 2 * survival
    p0 = 0.5 + params.delta_p
    free1 = p0 * k_same + 0.5 * k_cross
    free2 = p0 * k_cross + 0.5 * k_same
    p1, _ = _kernels.glbe_march(k_same, k_cross, free1, free2, 2.0 * params.gamma_zz, params.gamma_xy, dt)
    return t, 2.0 * np.asarray(p1) - 1.0


def glbe_numeric_solver(
    params: TwoSpinParams, dt: float, t_max: float, richardson: bool = True
) -> PolarizationTrace:
    """March the two coupled Volterra equations for the site densities.

    ``p_i(t) = f_i(t) + int_0^t sum_j K_ij(t-s) S_j(s) ds`` where
    ``K_same = cos^2(w0 t/2) e^{-t/tau}``, ``K_cross = sin^2(w0 t/2) e^{-t/tau}``,
    ``1/tau = 2 (gamma_xy + gamma_zz)`` and the reinjection
    ``S_j = 2 gamma_zz p_j + gamma_xy`` (high-temperature environment at
    occupation 1/2).  Trapezoidal quadrature with an implicit endpoint.

    With ``richardson`` the march is repeated at ``dt / 2`` and the two
    second-order results are combined as ``(4 P_{dt/2} - P_dt) / 3``, still
    reported on the ``dt`` grid.  Returns ``P = 2 p_1 - 1``.
    """
    if not dt > 0 or not t_max > 0:
        raise ValueError("dt and t_max must be positive")
    total_rate = params.gamma_xy + params.gamma_zz
    if total_rate * dt > STEP_LIMIT or params.omega0 * dt > STEP_LIMIT:
        raise StepSizeError(
            f"dt={dt} too coarse: need (gamma_xy + gamma_zz) dt <= {STEP_LIMIT} "
            f"and omega0 dt <= {STEP_LIMIT}"
        )
    n = int(math.floor(t_max / dt + 1e-9))
    t, values = _glbe_march(params, dt, n)
    if richardson:
        _, fine = _glbe_march(params, 0.5 * dt, 2 * n)
        values = (4.0 * fine[::2] - values) / 3.0
    return PolarizationTrace(
        t, values, _snapshot(params, "glbe_numeric", dt=dt, richardson=richardson)
    )


def default_glbe_step(params: TwoSpinParams) -> float:
    """Largest step allowed by the solver's precondition."""
    return STEP_LIMIT / max(params.omega0, params.gamma_xy + params.gamma_zz)


def glbe_converged(params: TwoSpinParams, t_max: float, tol: float = 1e-5, max_halvings: int = 6):
    """Halve ``dt`` from :func:`default_glbe_step` until successive traces agree.

    Returns the finer trace once the sup-norm change on the shared grid drops
    below ``tol``.
    """
    dt = default_glbe_step(params)
    prev = glbe_numeric_solver(params, dt, t_max)
    for _ in range(max_halvings):
        dt *= 0.5
        cur = glbe_numeric_solver(params, dt, t_max)
        m = min(len(prev), (len(cur) + 1) // 2)
        if np.max(np.abs(cur.values[: 2 * m - 1 : 2] - prev.values[:m])) < tol:
            return cur
        prev = cur
    return prev
