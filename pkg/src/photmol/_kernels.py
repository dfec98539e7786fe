"""Hot loops: Lindblad right-hand side and fixed-step RK4.

Two interchangeable backends:

* ``numba``: CSR loops compiled with ``@njit``; the jump sandwich
  ``c rho c'`` costs O(nnz * d) instead of a dense O(d^3) product.
* ``numpy``: dense matrix products, no compilation.

The default is ``numba`` when it imports; set ``PHOTMOL_DISABLE_NUMBA=1`` to
force the numpy path.  Both compute ``K rho + rho K' + sum C rho C'`` where
``K`` is the no-jump generator and ``C = sqrt(rate) c``.
"""
from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

_DISABLED = os.environ.get("PHOTMOL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by PHOTMOL_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


class LindbladPack(NamedTuple):
    k_dense: np.ndarray
    k_indptr: np.ndarray
    k_indices: np.ndarray
    k_data: np.ndarray
    c_dense: np.ndarray  # (n_jumps, d, d)
    c_indptr: np.ndarray  # (n_jumps, d + 1), offsets into c_indices/c_data
    c_indices: np.ndarray
    c_data: np.ndarray


def pack(k: np.ndarray, jumps: list[np.ndarray]) -> LindbladPack:
    d = k.shape[0]
    ks = sp.csr_matrix(k)
    ks.sort_indices()
    indptr = np.zeros((len(jumps), d + 1), dtype=np.int64)
    indices, data = [], []
    offset = 0
    for n, c in enumerate(jumps):
        cs = sp.csr_matrix(c)
        cs.sort_indices()
        indptr[n] = cs.indptr + offset
        indices.append(cs.indices.astype(np.int64))
        data.append(cs.data.astype(complex))
        offset += cs.nnz
    c_dense = np.array(jumps, dtype=complex).reshape(len(jumps), d, d)
    return LindbladPack(
        np.ascontiguousarray(k, dtype=complex),
        ks.indptr.astype(np.int64),
        ks.indices.astype(np.int64),
        ks.data.astype(complex),
        c_dense,
        indptr,
        np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
        np.concatenate(data) if data else np.zeros(0, dtype=complex),
    )


# -- numpy backend ---------------------------------------------------------

def _rhs_numpy(p: LindbladPack, rho: np.ndarray) -> np.ndarray:
    k = p.k_dense
    out = k @ rho + rho @ k.conj().T
    for c in p.c_dense:
        out += c @ rho @ c.conj().T
    return out


def _rk4_numpy(p: LindbladPack, rho0: np.ndarray, dt: float, nsteps: int):
    rho = np.array(rho0, dtype=complex)
    tr0 = np.trace(rho)
    drift = 0.0
    half = 0.5 * dt
    for _ in range(nsteps):
        k1 = _rhs_numpy(p, rho)
        k2 = _rhs_numpy(p, rho + half * k1)
        k3 = _rhs_numpy(p, rho + half * k2)
        k4 = _rhs_numpy(p, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = max(drift, abs(np.trace(rho) - tr0))
    return rho, drift


# -- numba backend ---------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _csr_left(indptr, indices, data, x, out):
        # out += A @ x
        d = x.shape[1]
        for i in range(indptr.shape[0] - 1):
            for p in range(indptr[i], indptr[i + 1]):
                k = indices[p]
                v = data[p]
                for col in range(d):
                    out[i, col] += v * x[k, col]

    @njit(cache=True)
    def _csr_right_dagger(indptr, indices, data, x, out):
        # out += x @ A'   ((x A')[r, j] = sum_k x[r, k] conj(A[j, k]))
        d = x.shape[0]
        for j in range(indptr.shape[0] - 1):
            for p in range(indptr[j], indptr[j + 1]):
                k = indices[p]
                v = np.conj(data[p])
                for r in range(d):
                    out[r, j] += x[r, k] * v

    @njit(cache=True)
    def _rhs_kernel(k_indptr, k_indices, k_data, c_indptr, c_indices, c_data, rho, out, tmp):
        out[:, :] = 0.0
        _csr_left(k_indptr, k_indices, k_data, rho, out)
        _csr_right_dagger(k_indptr, k_indices, k_data, rho, out)
        for n in range(c_indptr.shape[0]):
            tmp[:, :] = 0.0
            _csr_left(c_indptr[n], c_indices, c_data, rho, tmp)
            _csr_right_dagger(c_indptr[n], c_indices, c_data, tmp, out)

    @njit(cache=True)
    def _rk4_kernel(k_indptr, k_indices, k_data, c_indptr, c_indices, c_data, rho0, dt, nsteps):
        d = rho0.shape[0]
        rho = rho0.copy()
        k1 = np.empty_like(rho)
        k2 = np.empty_like(rho)
        k3 = np.empty_like(rho)
        k4 = np.empty_like(rho)
        stage = np.empty_like(rho)
        tmp = np.empty_like(rho)
        tr0 = np.trace(rho)
        drift = 0.0
        half = 0.5 * dt
        sixth = dt / 6.0
        for _ in range(nsteps):
            _rhs_kernel(k_indptr, k_indices, k_data, c_indptr, c_indices, c_data, rho, k1, tmp)
            for i in range(d):
                for j in range(d):
                    stage[i, j] = rho[i, j] + half * k1[i, j]
            _rhs_kernel(k_indptr, k_indices, k_data, c_indptr, c_indices, c_data, stage, k2, tmp)
            for i in range(d):
                for j in range(d):
                    stage[i, j] = rho[i, j] + half * k2[i, j]
            _rhs_kernel(k_indptr, k_indices, k_data, c_indptr, c_indices, c_data, stage, k3, tmp)
            for i in range(d):
                for j in range(d):
                    stage[i, j] = rho[i, j] + dt * k3[i, j]
            _rhs_kernel(k_indptr, k_indices, k_data, c_indptr, c_indices, c_data, stage, k4, tmp)
            tr = 0.0j
            for i in range(d):
                for j in range(d):
                    rho[i, j] += sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
                tr += rho[i, i]
            dev = abs(tr - tr0)
            if dev > drift:
                drift = dev
        return rho, drift

    def _rhs_numba(p: LindbladPack, rho: np.ndarray) -> np.ndarray:
        rho = np.ascontiguousarray(rho, dtype=complex)
        out = np.empty_like(rho)
        tmp = np.empty_like(rho)
        _rhs_kernel(p.k_indptr, p.k_indices, p.k_data, p.c_indptr, p.c_indices, p.c_data, rho, out, tmp)
        return out

    def _rk4_numba(p: LindbladPack, rho0: np.ndarray, dt: float, nsteps: int):
        rho0 = np.ascontiguousarray(rho0, dtype=complex)
        rho, drift = _rk4_kernel(
            p.k_indptr, p.k_indices, p.k_data, p.c_indptr, p.c_indices, p.c_data, rho0, float(dt), int(nsteps)
        )
        return rho, float(drift)


_BACKENDS = {"numpy": (_rhs_numpy, _rk4_numpy)}
if HAVE_NUMBA:
    _BACKENDS["numba"] = (_rhs_numba, _rk4_numba)


def available_backends() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def _resolve(backend: str | None):
    name = BACKEND if backend is None else backend
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})") from None


def lindblad_rhs(p: LindbladPack, rho: np.ndarray, backend: str | None = None) -> np.ndarray:
    return _resolve(backend)[0](p, rho)


def rk4_evolve(p: LindbladPack, rho0: np.ndarray, dt: float, nsteps: int, backend: str | None = None):
    """Integrate ``nsteps`` RK4 steps; returns ``(rho, max trace drift)``."""
    return _resolve(backend)[1](p, rho0, dt, nsteps)
