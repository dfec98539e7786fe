import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photmol import _kernels
from photmol.model import liouvillian
from strategies import params, random_density

needs_numba = pytest.mark.skipif("numba" not in _kernels.available_backends(), reason="numba not installed")


def test_numpy_backend_always_available():
    assert "numpy" in _kernels.available_backends()
    with pytest.raises(ValueError):
        _kernels.lindblad_rhs(None, None, backend="fortran")


def test_env_flag_disables_numba():
    env = dict(os.environ, PHOTMOL_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from photmol import _kernels; print(_kernels.BACKEND, _kernels.available_backends())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split()[0] == "numpy"
    assert "numba" not in out.stdout


@given(params(), st.integers(0, 2**32 - 1))
def test_numpy_rhs_matches_sparse_matrix(p, seed):
    L = liouvillian(p)
    rho = random_density(np.random.default_rng(seed), L.space.dim)
    expect = (L.matrix @ rho.reshape(-1, order="F")).reshape(rho.shape, order="F")
    got = _kernels.lindblad_rhs(L.kernel_pack, rho, backend="numpy")
    np.testing.assert_allclose(got, expect, atol=1e-12)


@needs_numba
@settings(max_examples=30)
@given(params(), st.integers(0, 2**32 - 1))
def test_backends_agree_on_rhs(p, seed):
    L = liouvillian(p)
    rho = random_density(np.random.default_rng(seed), L.space.dim)
    a = _kernels.lindblad_rhs(L.kernel_pack, rho, backend="numpy")
    b = _kernels.lindblad_rhs(L.kernel_pack, rho, backend="numba")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


@needs_numba
@settings(max_examples=10)
@given(params(cutoff=st.integers(1, 2)), st.integers(0, 2**32 - 1))
def test_backends_agree_on_rk4(p, seed):
    L = liouvillian(p)
    rho = random_density(np.random.default_rng(seed), L.space.dim)
    dt = 0.01 / L.spectral_radius_estimate()
    ra, da = _kernels.rk4_evolve(L.kernel_pack, rho, dt, 200, backend="numpy")
    rb, db = _kernels.rk4_evolve(L.kernel_pack, rho, dt, 200, backend="numba")
    np.testing.assert_allclose(ra, rb, rtol=0, atol=1e-12)
    assert da < 1e-10 and db < 1e-10
