"""Physical parameters, rotating-frame Hamiltonian and Lindblad generator.

All rates, detunings and drive amplitudes are in units of the cavity decay
rate kappa.  Both drives are assumed to share one laser frequency, so the
rotating-frame Hamiltonian is time independent::

    H = D_a a'a + D_b b'b + D_b s's + g (s'b + b's) + J (a'b + b'a)
        + E_a (a' e^{-i theta} + a e^{i theta}) + E_b (b' + b)

The master equation is ``drho/dt = -i[H, rho] + sum_c rate_c D[c] rho`` with
``D[c] rho = c rho c' - (c'c rho + rho c'c) / 2`` for ``c`` in (a, b, s) and
rates (kappa_a, kappa_b, gamma).

Superoperators act on column-stacked density matrices, ``vec(rho)[i + d*j] =
rho[i, j]``, so ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import InvalidParams, InvalidRate, SpaceMismatch
from .hilbert import (
    HilbertSpace,
    Operator,
    annihilation_a,
    annihilation_b,
    make_space,
    sigma_minus,
)

TWO_PI = 2.0 * math.pi

# Reference device in GHz/2pi; kappa/2pi = 16 GHz sets the unit.
KAPPA_GHZ = 16.0
BASELINE_DRIVE = 1.0 / KAPPA_GHZ
BASELINE_GAMMA = 1.0 / KAPPA_GHZ


def normalize_phase(theta: float) -> float:
    """Map ``theta`` into [0, 2pi), snapped to 1e-12 rad.

    Snapping makes ``theta`` and ``theta + 2pi`` normalize to the same float
    unless ``theta`` sits within rounding distance of a snapping midpoint.
    """
    t = math.fmod(float(theta), TWO_PI)
    if t < 0:
        t += TWO_PI
    t = round(t, 12)
    if t >= TWO_PI:
        t = 0.0
    return t + 0.0


@dataclass(frozen=True)
class SystemParams:
    delta_a: float = 0.0
    delta_b: float = 0.0
    g: float = 1.0
    j: float = 3.0
    e_a: float = BASELINE_DRIVE
    e_b: float = 0.0
    theta: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 1.0
    gamma: float = BASELINE_GAMMA
    n_max_a: int = 6
    n_max_b: int = 6

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.startswith("n_max"):
                if isinstance(value, bool) or int(value) != value or value < 1:
                    raise InvalidParams(f"{f.name} must be an integer >= 1, got {value!r}")
                object.__setattr__(self, f.name, int(value))
                continue
            value = float(value)
            if not math.isfinite(value):
                raise InvalidParams(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        if self.kappa_a <= 0 or self.kappa_b <= 0:
            raise InvalidParams("cavity decay rates must be > 0")
        for name in ("gamma", "e_a", "e_b", "g", "j"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        object.__setattr__(self, "theta", normalize_phase(self.theta))

    def space(self) -> HilbertSpace:
        return make_space(self.n_max_a, self.n_max_b)

    def with_cutoff(self, n_max_a: int, n_max_b: int | None = None) -> SystemParams:
        return replace(self, n_max_a=n_max_a, n_max_b=n_max_a if n_max_b is None else n_max_b)

    def set(self, name: str, value: float) -> SystemParams:
        """Return a copy with one parameter changed.

        ``delta`` sets both detunings and ``e`` sets both drive amplitudes.
        """
        if name == "delta":
            return replace(self, delta_a=value, delta_b=value)
        if name == "e":
            return replace(self, e_a=value, e_b=value)
        if name not in PARAM_NAMES:
            raise InvalidParams(f"unknown parameter {name!r}")
        return replace(self, **{name: value})

    def get(self, name: str) -> float:
        if name == "delta":
            return self.delta_a
        if name == "e":
            return self.e_a
        return getattr(self, name)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SystemParams:
        unknown = set(data) - set(PARAM_NAMES)
        if unknown:
            raise InvalidParams(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_ghz(cls, kappa_ghz: float, **values) -> SystemParams:
        """Build parameters from values quoted as ``X/2pi`` in GHz.

        Keys are field names with a ``_ghz`` suffix (``e_a_ghz=1``); ``theta``
        and the cutoffs pass through unchanged.
        """
        if not kappa_ghz > 0:
            raise InvalidParams("kappa_ghz must be > 0")
        out = {}
        for key, value in values.items():
            if key.endswith("_ghz"):
                name = key[: -len("_ghz")]
                if name not in RATE_NAMES:
                    raise InvalidParams(f"{key} is not a frequency parameter")
                out[name] = value / kappa_ghz
            else:
                out[key] = value
        return cls.from_dict(out)


PARAM_NAMES = tuple(f.name for f in fields(SystemParams))
RATE_NAMES = tuple(n for n in PARAM_NAMES if n not in ("theta", "n_max_a", "n_max_b"))


class Superoperator:
    """Lindblad generator ``L rho = -i[H, rho] + sum rate (c rho c' - {c'c, rho}/2)``.

    Stored structurally (Hamiltonian plus weighted jump operators); the
    ``dim^2 x dim^2`` matrix is assembled on demand as a sparse matrix.
    """

    def __init__(self, space: HilbertSpace, hamiltonian=None, jumps=()):
        self.space = space
        d = space.dim
        h = np.zeros((d, d), dtype=complex) if hamiltonian is None else np.array(hamiltonian, dtype=complex)
        if h.shape != (d, d):
            raise SpaceMismatch("Hamiltonian shape does not match space")
        h.setflags(write=False)
        self.hamiltonian = h
        checked = []
        for c, rate in jumps:
            c = np.array(c, dtype=complex)
            if c.shape != (d, d):
                raise SpaceMismatch("jump operator shape does not match space")
            if rate < 0:
                raise InvalidRate(f"negative rate {rate}")
            c.setflags(write=False)
            checked.append((c, float(rate)))
        self.jumps = tuple(checked)

    def __add__(self, other: Superoperator) -> Superoperator:
        if other.space != self.space:
            raise SpaceMismatch("superoperators act on different spaces")
        return Superoperator(self.space, self.hamiltonian + other.hamiltonian, self.jumps + other.jumps)

    def __repr__(self):
        return f"Superoperator(dim={self.space.dim}, jumps={len(self.jumps)})"

    @cached_property
    def no_jump_generator(self) -> np.ndarray:
        """``K = -iH - sum rate c'c / 2`` so that ``L rho = K rho + rho K' + sum rate c rho c'``."""
        k = -1j * self.hamiltonian
        for c, rate in self.jumps:
            k = k - 0.5 * rate * (c.conj().T @ c)
        return k

    @cached_property
    def kernel_pack(self) -> _kernels.LindbladPack:
        weighted = [math.sqrt(rate) * c for c, rate in self.jumps if rate > 0]
        return _kernels.pack(self.no_jump_generator, weighted)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return _kernels.lindblad_rhs(self.kernel_pack, rho)

    __call__ = apply

    def adjoint_apply(self, x: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action ``i[H, X] + sum rate (c'Xc - {c'c, X}/2)``."""
        x = np.asarray(x, dtype=complex)
        k = self.no_jump_generator
        out = k.conj().T @ x + x @ k
        for c, rate in self.jumps:
            out = out + rate * (c.conj().T @ x @ c)
        return out

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        d = self.space.dim
        eye = sp.identity(d, dtype=complex, format="csr")
        h = sp.csr_matrix(self.hamiltonian)
        out = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
        for c, rate in self.jumps:
            if rate == 0:
                continue
            cs = sp.csr_matrix(c)
            cdc = (cs.conj().T @ cs).tocsr()
            out = out + rate * (sp.kron(cs.conj(), cs) - 0.5 * sp.kron(eye, cdc) - 0.5 * sp.kron(cdc.T, eye))
        return sp.csr_matrix(out)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def spectral_radius_estimate(self) -> float:
        """``max |l_i + conj(l_j)|`` over eigenvalues of the no-jump generator."""
        lam = np.linalg.eigvals(self.no_jump_generator)
        return float(np.max(np.abs(lam[:, None] + lam[None, :].conj())))

    def norm_bound(self) -> float:
        """Upper bound on the operator norm of L (Hilbert-Schmidt)."""
        bound = 2.0 * np.linalg.norm(self.hamiltonian, 2)
        for c, rate in self.jumps:
            bound += 2.0 * rate * np.linalg.norm(c, 2) ** 2
        return float(bound)


def hamiltonian(params: SystemParams, space: HilbertSpace | None = None) -> Operator:
    space = params.space() if space is None else space
    a = annihilation_a(space).matrix
    b = annihilation_b(space).matrix
    s = sigma_minus(space).matrix
    ad, bd, sd = a.conj().T, b.conj().T, s.conj().T
    phase = np.exp(-1j * params.theta)
    h = (
        params.delta_a * (ad @ a)
        + params.delta_b * (bd @ b)
        + params.delta_b * (sd @ s)
        + params.g * (sd @ b + bd @ s)
        + params.j * (ad @ b + bd @ a)
        + params.e_a * (phase * ad + np.conj(phase) * a)
        + params.e_b * (bd + b)
    )
    # exact Hermitian symmetry; the drive terms can differ in the last bit
    h = 0.5 * (h + h.conj().T)
    return Operator(space, h)


def dissipator(c: Operator, rate: float) -> Superoperator:
    if rate < 0:
        raise InvalidRate(f"negative rate {rate}")
    return Superoperator(c.space, None, ((c.matrix, rate),))


def liouvillian(params: SystemParams, space: HilbertSpace | None = None) -> Superoperator:
    space = params.space() if space is None else space
    h = hamiltonian(params, space)
    jumps = (
        (annihilation_a(space).matrix, params.kappa_a),
        (annihilation_b(space).matrix, params.kappa_b),
        (sigma_minus(space).matrix, params.gamma),
    )
    return Superoperator(space, h.matrix, jumps)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")
