"""Steady state of the Lindblad generator and photon statistics of mode a.

Two steady-state routes are provided:

``krylov`` (default)
    GMRES on the bordered system ``L rho + w tr(rho) = w`` with ``w`` the
    vacuum projector.  The border makes the operator nonsingular whenever
    the steady state is unique, and its solution has unit trace.  The system
    is left-preconditioned by the exact inverse of the no-jump part
    ``X -> K X + X K'``, applied in the eigenbasis of ``K`` (or as a
    triangular Sylvester solve in its Schur basis when the eigenbasis is
    ill-conditioned).  Cost per iteration is O(d^3) with d the Hilbert
    dimension.  A second solve with a different border checks that the
    kernel is one-dimensional.

``lu``
    Sparse LU of the vectorized ``dim^2 x dim^2`` Liouvillian with its first
    row replaced by the trace functional.  Used as the reference route and
    to detect degenerate kernels; fill-in makes it impractical above cutoff 5.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as sla
from scipy.linalg.lapack import ztrsyl

from . import _kernels
from .errors import (
    DegenerateSteadyState,
    IntegrationUnstable,
    NoPhotons,
    SolveFailed,
    SpaceMismatch,
)
from .hilbert import HilbertSpace, annihilation_a, annihilation_b, sigma_minus
from .model import Superoperator, SystemParams, liouvillian, unvec, vec

log = logging.getLogger(__name__)

CUTOFF_LADDER = (4, 6, 8, 12)
RESIDUAL_TOL = 1e-9
PRECONDITIONER_SHIFT = 1e-3
UNIQUENESS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise SpaceMismatch("density matrix shape does not match space")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def check(self, herm_tol=1e-10, trace_tol=1e-10, eig_tol=1e-8) -> None:
        """Raise ``ValueError`` if any density-matrix invariant is violated."""
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > herm_tol:
            raise ValueError(f"not Hermitian (max |rho - rho'| = {herm:.2e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} != 1")
        lmin = self.min_eigenvalue()
        if lmin < -eig_tol:
            raise ValueError(f"negative eigenvalue {lmin:.2e}")

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.einsum("ij,ji->", self.matrix, op))

    @classmethod
    def pure(cls, space: HilbertSpace, m: int, n: int, x: int) -> DensityMatrix:
        return cls(space, space.projector(m, n, x))

    @classmethod
    def vacuum(cls, space: HilbertSpace) -> DensityMatrix:
        return cls.pure(space, 0, 0, 0)


@dataclass(frozen=True)
class ObservableReport:
    n_a: float
    n_b: float
    p_e: float
    g2_a: float
    cutoff_used: tuple[int, int]
    converged: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cutoff_used"] = list(self.cutoff_used)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> ObservableReport:
        d = dict(d)
        d["cutoff_used"] = tuple(d["cutoff_used"])
        return cls(**d)


def trace_distance(r1, r2) -> float:
    m1 = r1.matrix if isinstance(r1, DensityMatrix) else np.asarray(r1)
    m2 = r2.matrix if isinstance(r2, DensityMatrix) else np.asarray(r2)
    diff = m1 - m2
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


# -- steady state ----------------------------------------------------------

class _SylvesterInverse:
    """Applies ``Y -> X`` solving ``K X + X K' = Y``.

    Uses the eigenbasis of ``K`` (four matrix products per call) when it is
    well conditioned and a Schur factorization with a triangular Sylvester
    solve otherwise.  Either way it only preconditions GMRES, so its accuracy
    does not limit the steady-state accuracy.
    """

    EIG_COND_LIMIT = 1e8

    def __init__(self, k: np.ndarray, shift: float):
        d = k.shape[0]
        ks = k - shift * np.eye(d)
        lam, v = np.linalg.eig(ks)
        if np.linalg.cond(v) < self.EIG_COND_LIMIT:
            vi = np.linalg.inv(v)
            self.mode = "eig"
            self.v, self.vh, self.vi, self.vih = v, v.conj().T, vi, vi.conj().T
            self.denom = lam[:, None] + lam.conj()[None, :]
        else:
            t, q = la.schur(ks, output="complex")
            self.mode = "schur"
            self.t, self.q, self.qh = t, q, q.conj().T

    def __call__(self, y: np.ndarray) -> np.ndarray:
        if self.mode == "eig":
            return self.v @ ((self.vi @ y @ self.vih) / self.denom) @ self.vh
        c = self.qh @ y @ self.q
        z, scale, info = ztrsyl(self.t, self.t, c, trana="N", tranb="C", isgn=1)
        if info < 0:
            raise SolveFailed(f"ztrsyl argument error {info}")
        return self.q @ (z / scale) @ self.qh


def _probe_border(space: HilbertSpace) -> np.ndarray:
    """Second border for the uniqueness probe: the mixed state on all levels with at most one excitation."""
    m, n, x = space.quantum_numbers()
    low = (m + n + x <= 1).astype(complex)
    return np.diag(low / low.sum())


def _solve_krylov(L: Superoperator, tol: float, maxiter: int, probe: bool = True) -> np.ndarray:
    d = L.space.dim
    vacuum = np.zeros((d, d), dtype=complex)
    vacuum[0, 0] = 1.0
    precond = _SylvesterInverse(L.no_jump_generator, PRECONDITIONER_SHIFT)
    p = L.kernel_pack

    def solve(border):
        def bordered(rho):
            return _kernels.lindblad_rhs(p, rho) + border * np.trace(rho)

        def matvec(x):
            return precond(bordered(x.reshape(d, d))).ravel()

        op = sla.LinearOperator((d * d, d * d), matvec=matvec, dtype=complex)
        rhs = precond(border).ravel()
        atol = tol * np.linalg.norm(rhs)
        x = np.zeros(d * d, dtype=complex)
        previous = np.inf
        # one restart cycle at a time; stop at the tolerance or once the
        # true residual stops halving (the floating-point floor)
        for cycle in range(maxiter):
            x, info = sla.gmres(op, rhs, x0=x, rtol=0.0, atol=atol, restart=min(d * d, 100), maxiter=1)
            if info < 0:
                raise SolveFailed(f"gmres breakdown (info={info})")
            resid = np.linalg.norm(rhs - matvec(x))
            log.debug("krylov cycle %d: residual %.3e (target %.3e)", cycle, resid, atol)
            if resid <= atol or resid > 0.5 * previous:
                break
            previous = resid
        return x.reshape(d, d)

    rho = solve(vacuum)
    if probe:
        # with a one-dimensional kernel every border gives the same state
        other = solve(_probe_border(L.space))
        gap = trace_distance(rho / np.trace(rho), other / np.trace(other))
        if gap > UNIQUENESS_TOL:
            raise DegenerateSteadyState(f"steady state depends on the border (trace distance {gap:.2e})")
    return rho


def _solve_lu(L: Superoperator) -> np.ndarray:
    d = L.space.dim
    a = L.matrix.tolil(copy=True)
    trace_row = np.zeros(d * d, dtype=complex)
    trace_row[:: d + 1] = 1.0
    a[0, :] = trace_row
    a = a.tocsc()
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = sla.splu(a)
    except RuntimeError as exc:
        raise DegenerateSteadyState(f"Liouvillian kernel is not one-dimensional: {exc}") from exc
    u_diag = np.abs(lu.U.diagonal())
    if u_diag.min() <= 1e-13 * u_diag.max():
        raise DegenerateSteadyState(
            f"near-singular trace-constrained system (pivot ratio {u_diag.min() / u_diag.max():.1e})"
        )
    return unvec(lu.solve(rhs), d)


def steady_state(
    L: Superoperator,
    method: str = "krylov",
    tol: float = 1e-14,
    maxiter: int = 20,
    check_unique: bool = True,
) -> DensityMatrix:
    """Unique unit-trace state with ``L rho = 0``.

    The raw solution must satisfy ``max |L rho| < 1e-9 * ||L||`` before it is
    Hermitized; Hermitization does not clip eigenvalues.  A kernel of
    dimension above one raises :class:`DegenerateSteadyState`; on the Krylov
    route this costs a second solve and can be skipped with
    ``check_unique=False``.
    """
    if method == "krylov":
        raw = _solve_krylov(L, tol, maxiter, probe=check_unique)
    elif method == "lu":
        raw = _solve_lu(L)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    if not np.all(np.isfinite(raw)):
        raise SolveFailed("non-finite steady state")
    resid = float(np.max(np.abs(L.apply(raw))))
    scale = L.norm_bound()
    if resid > RESIDUAL_TOL * scale:
        raise SolveFailed(f"steady-state residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e} * {scale:.3e}")
    rho = 0.5 * (raw + raw.conj().T)
    rho = rho / np.trace(rho).real
    out = DensityMatrix(L.space, rho)
    if out.min_eigenvalue() < -1e-8:
        raise SolveFailed(f"steady state has negative eigenvalue {out.min_eigenvalue():.2e}")
    return out


def max_stable_step(L: Superoperator) -> float:
    return 0.01 / L.spectral_radius_estimate()


def evolve(
    rho0: DensityMatrix,
    L: Superoperator,
    t_final: float,
    dt: float | None = None,
    backend: str | None = None,
) -> DensityMatrix:
    """Fixed-step RK4 integration of ``drho/dt = L rho`` up to ``t_final`` (units 1/kappa).

    ``dt`` defaults to, and may not exceed, ``0.01 / r`` with ``r`` the
    spectral-radius estimate of ``L``.
    """
    if rho0.space != L.space:
        raise SpaceMismatch("initial state and generator live on different spaces")
    if not t_final > 0:
        raise ValueError("t_final must be > 0")
    limit = max_stable_step(L)
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:.3e} exceeds stability limit {limit:.3e}")
    nsteps = max(1, math.ceil(t_final / dt))
    dt = t_final / nsteps
    rho, drift = _kernels.rk4_evolve(L.kernel_pack, rho0.matrix, dt, nsteps, backend=backend)
    if not np.all(np.isfinite(rho)) or drift > 1e-8:
        raise IntegrationUnstable(f"trace drift {drift:.3e} after {nsteps} steps")
    return DensityMatrix(L.space, rho)


# -- observables -----------------------------------------------------------

def _mode_a_moments(rho: DensityMatrix) -> tuple[complex, complex]:
    a = annihilation_a(rho.space).matrix
    ad = a.conj().T
    n = rho.expect(ad @ a)
    nn = rho.expect(ad @ ad @ a @ a)
    return n, nn


def g2_zero(rho: DensityMatrix) -> float:
    """``<a'a'aa> / <a'a>^2`` for the emitting cavity mode."""
    n, nn = _mode_a_moments(rho)
    if n.real <= 1e-30:
        raise NoPhotons(f"<a'a> = {n.real:.3e}")
    ratio = nn / n**2
    if abs(ratio.imag) > 1e-10 * max(abs(ratio.real), 1e-300):
        raise SolveFailed(f"complex g2(0) = {ratio}")
    return float(ratio.real)


def _report(rho: DensityMatrix, params: SystemParams, converged: bool) -> ObservableReport:
    sp_ = rho.space
    b = annihilation_b(sp_).matrix
    s = sigma_minus(sp_).matrix
    n_a, _ = _mode_a_moments(rho)
    return ObservableReport(
        n_a=max(float(n_a.real), 0.0),
        n_b=max(float(rho.expect(b.conj().T @ b).real), 0.0),
        p_e=min(max(float(rho.expect(s.conj().T @ s).real), 0.0), 1.0),
        g2_a=max(g2_zero(rho), 0.0),
        cutoff_used=(params.n_max_a, params.n_max_b),
        converged=converged,
    )


def observables(params: SystemParams, method: str = "krylov") -> ObservableReport:
    """Observables at the cutoff stored in ``params``.

    ``converged`` is always False here: no cutoff check is made.
    """
    rho = steady_state(liouvillian(params), method=method)
    return _report(rho, params, converged=False)


def converged_g2(params: SystemParams, rel_tol: float = 1e-3, ladder=CUTOFF_LADDER, method: str = "krylov") -> ObservableReport:
    """Climb the cutoff ladder until g2(0) changes by less than ``rel_tol``."""
    if not 0 < rel_tol <= 0.1:
        raise ValueError("rel_tol must lie in (0, 0.1]")
    previous = None
    report = None
    for k, n in enumerate(ladder):
        p = params.with_cutoff(n)
        # kernel degeneracy is structural, so probing the first rung suffices
        rho = steady_state(liouvillian(p), method=method, check_unique=k == 0)
        report = _report(rho, p, converged=False)
        if previous is not None:
            change = abs(report.g2_a - previous.g2_a) / max(report.g2_a, 1e-300)
            log.debug("cutoff %d: g2=%.6e rel change %.2e", n, report.g2_a, change)
            if change < rel_tol:
                return ObservableReport(**{**asdict(report), "converged": True})
        previous = report
    return report
