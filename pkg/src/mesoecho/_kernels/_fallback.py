"""Pure numpy versions of the compiled kernels (same signatures and results)."""

import numpy as np


def apply_stage(psi, phase, pair_a, pair_b, pair_cos, pair_sin, bond_ptr):
    """In-place ``psi <- R_pairs @ diag(phase) @ psi``.

    Pairs belonging to one bond are disjoint, so each bond (the slice
    ``bond_ptr[k]:bond_ptr[k+1]``) is applied as a single vectorized rotation.
    """
    if not np.all(phase == 1.0):
        psi *= phase[:, None]
    for lo, hi in zip(bond_ptr[:-1], bond_ptr[1:]):
        if hi == lo:
            continue
        a = pair_a[lo:hi]
        b = pair_b[lo:hi]
        c = pair_cos[lo]
        s = pair_sin[lo]
        x = psi[a]
        y = psi[b]
        psi[a] = c * x + s * y
        psi[b] = s * x + c * y


def glbe_march(k_same, k_cross, free1, free2, feedback, source, dt):
    """Trapezoidal march of the two coupled site-density Volterra equations."""
    n = len(k_same)
    p1 = np.empty(n)
    p2 = np.empty(n)
    s1 = np.empty(n)
    s2 = np.empty(n)
    p1[0], p2[0] = free1[0], free2[0]
    s1[0] = feedback * p1[0] + source
    s2[0] = feedback * p2[0] + source
    denom = 1.0 - 0.5 * dt * feedback * k_same[0]
    for m in range(1, n):
        ks = k_same[m - 1:0:-1]
        kc = k_cross[m - 1:0:-1]
        acc1 = 0.5 * (k_same[m] * s1[0] + k_cross[m] * s2[0]) + ks @ s1[1:m] + kc @ s2[1:m]
        acc2 = 0.5 * (k_cross[m] * s1[0] + k_same[m] * s2[0]) + kc @ s1[1:m] + ks @ s2[1:m]
        p1[m] = (free1[m] + dt * acc1 + 0.5 * dt * k_same[0] * source) / denom
        p2[m] = (free2[m] + dt * acc2 + 0.5 * dt * k_same[0] * source) / denom
        s1[m] = feedback * p1[m] + source
        s2[m] = feedback * p2[m] + source
    return p1, p2


def apply_program(psi, phases, has_phase, pair_a, pair_b, pair_cos, pair_sin, bond_ptr, kind_bond, program):
    """Apply the stages listed in ``program`` in order (see the compiled version)."""
    for k in program:
        b0, b1 = kind_bond[k], kind_bond[k + 1]
        if has_phase[k]:
            psi *= phases[k][:, None]
        for lo, hi in zip(bond_ptr[b0:b1], bond_ptr[b0 + 1:b1 + 1]):
            if hi == lo:
                continue
            a = pair_a[lo:hi]
            b = pair_b[lo:hi]
            c = pair_cos[lo]
            s = pair_sin[lo]
            x = psi[a]
            y = psi[b]
            psi[a] = c * x + s * y
            psi[b] = s * x + c * y
