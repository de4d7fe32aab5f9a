import os
import subprocess
import sys

import numpy as np
import pytest

from mesoecho import _kernels
from mesoecho._kernels import _fallback
from mesoecho.evolution import TrotterStepper
from mesoecho.lattice import LadderSpec, enumerate_sectors

compiled = pytest.importorskip("mesoecho._kernels._ckernels", reason="compiled kernels not built")


def test_backend_name():
    assert _kernels.BACKEND in ("cython", "python")


def _stepper():
    spec = LadderSpec(4, inter_coupling=0.3, ising_weight=-2, boundary="periodic")
    return TrotterStepper(spec, enumerate_sectors(4)[4], 0.05)


def _batch(d, k=3, seed=0):
    rng = np.random.default_rng(seed)
    return np.ascontiguousarray(rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k)))


def _args(st, n):
    return (st._phases, st._has_phase, st._pair_a, st._pair_b, st._cos, st._sin,
            st._bond_ptr, st._kind_bond, st.program(n))


@pytest.mark.parametrize("n", [1, 7])
def test_apply_program_parity(n):
    st = _stepper()
    x = _batch(st.sector.dim)
    y = x.copy()
    compiled.apply_program(x, *_args(st, n))
    _fallback.apply_program(y, *_args(st, n))
    assert np.allclose(x, y, rtol=0, atol=1e-13)


def test_apply_stage_parity():
    st = _stepper()
    k = 3
    lo, hi = st._kind_bond[k], st._kind_bond[k + 1]
    ptr = st._bond_ptr[lo:hi + 1]
    p0, p1 = ptr[0], ptr[-1]
    args = (st._phases[k], st._pair_a[p0:p1], st._pair_b[p0:p1], st._cos[p0:p1], st._sin[p0:p1], ptr - p0)
    x = _batch(st.sector.dim, seed=1)
    y = x.copy()
    compiled.apply_stage(x, *args)
    _fallback.apply_stage(y, *args)
    assert np.allclose(x, y, rtol=0, atol=1e-13)


def test_program_equals_stage_sequence():
    st = _stepper()
    x = _batch(st.sector.dim, seed=2)
    y = x.copy()
    _kernels.apply_program(x, *_args(st, 3))
    for k in st.program(3):
        lo, hi = st._kind_bond[k], st._kind_bond[k + 1]
        ptr = st._bond_ptr[lo:hi + 1]
        p0, p1 = ptr[0], ptr[-1]
        _kernels.apply_stage(y, st._phases[k], st._pair_a[p0:p1], st._pair_b[p0:p1],
                             st._cos[p0:p1], st._sin[p0:p1], ptr - p0)
    assert np.allclose(x, y, rtol=0, atol=1e-13)


def test_glbe_march_parity():
    t = np.arange(400) * 0.01
    decay = np.exp(-0.4 * t)
    ks = np.cos(t / 2) ** 2 * decay
    kc = np.sin(t / 2) ** 2 * decay
    f1, f2 = 0.9 * ks + 0.5 * kc, 0.9 * kc + 0.5 * ks
    a = compiled.glbe_march(ks, kc, f1, f2, 0.3, 0.05, 0.01)
    b = _fallback.glbe_march(ks, kc, f1, f2, 0.3, 0.05, 0.01)
    for u, v in zip(a, b):
        assert np.allclose(u, v, rtol=0, atol=1e-13)


def test_environment_forces_fallback():
    env = dict(os.environ, MESOECHO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import mesoecho; print(mesoecho.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
