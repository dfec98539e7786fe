"""Composite Hilbert space of cavity A, cavity B and a two-level quantum dot.

Basis states are ``|m, n, x>`` with ``m`` photons in mode a, ``n`` photons in
mode b and the dot in the ground (``x = 0``) or excited (``x = 1``) state.
The flat index is::

    index = (m * (n_max_b + 1) + n) * 2 + x

i.e. the dot index runs fastest, then mode b, then mode a.  This is the
Kronecker ordering ``A (x) B (x) QD`` and every operator, superoperator and
serialized matrix in the package uses it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidTruncation, SpaceMismatch

ORDERING = "a-b-qd/qd-fastest"

GROUND, EXCITED = 0, 1


@dataclass(frozen=True)
class HilbertSpace:
    n_max_a: int
    n_max_b: int

    def __post_init__(self):
        for name in ("n_max_a", "n_max_b"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidTruncation(f"{name} must be an integer >= 1, got {value!r}")

    @property
    def dim(self) -> int:
        return (self.n_max_a + 1) * (self.n_max_b + 1) * 2

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.n_max_a + 1, self.n_max_b + 1, 2)

    def index_of(self, m: int, n: int, x: int) -> int:
        if not (0 <= m <= self.n_max_a and 0 <= n <= self.n_max_b and x in (0, 1)):
            raise IndexError(f"state |{m},{n},{x}> outside truncated space")
        return (m * (self.n_max_b + 1) + n) * 2 + x

    def state_of(self, index: int) -> tuple[int, int, int]:
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} outside 0..{self.dim - 1}")
        mn, x = divmod(index, 2)
        m, n = divmod(mn, self.n_max_b + 1)
        return m, n, x

    def quantum_numbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(m, n, x)`` giving the occupation of every basis index."""
        idx = np.arange(self.dim)
        mn, x = np.divmod(idx, 2)
        m, n = np.divmod(mn, self.n_max_b + 1)
        return m, n, x

    def basis_vector(self, m: int, n: int, x: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index_of(m, n, x)] = 1.0
        return v

    def projector(self, m: int, n: int, x: int) -> np.ndarray:
        v = self.basis_vector(m, n, x)
        return np.outer(v, v.conj())


def make_space(n_max_a: int, n_max_b: int) -> HilbertSpace:
    return HilbertSpace(n_max_a, n_max_b)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix on a :class:`HilbertSpace`.

    The matrix is stored read-only so operators can be shared between sweep
    workers.
    """

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise SpaceMismatch(
                f"matrix shape {mat.shape} does not match space dim {self.space.dim}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(-1.0, other))

    def __matmul__(self, other):
        return matmul(self, other)

    def __mul__(self, c):
        return scale(c, self)

    __rmul__ = __mul__

    @property
    def H(self) -> Operator:
        return dagger(self)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=complex)

    def to_json(self, tol: float = 0.0) -> str:
        """Debug dump listing the nonzero entries as ``(row, col, re, im)``."""
        rows, cols = np.nonzero(np.abs(self.matrix) > tol)
        entries = [
            [int(r), int(c), float(self.matrix[r, c].real), float(self.matrix[r, c].imag)]
            for r, c in zip(rows, cols)
        ]
        return json.dumps(
            {
                "dims": list(self.space.dims),
                "ordering": ORDERING,
                "nonzeros": entries,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> Operator:
        data = json.loads(text)
        if data.get("ordering") != ORDERING:
            raise ValueError(f"unsupported basis ordering {data.get('ordering')!r}")
        na, nb, _ = data["dims"]
        space = HilbertSpace(na - 1, nb - 1)
        mat = np.zeros((space.dim, space.dim), dtype=complex)
        for r, c, re, im in data["nonzeros"]:
            mat[r, c] = complex(re, im)
        return cls(space, mat)


def _ladder(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def _embed(space: HilbertSpace, op_a=None, op_b=None, op_qd=None) -> Operator:
    na, nb, nq = space.dims
    mat = np.kron(
        np.kron(np.eye(na) if op_a is None else op_a, np.eye(nb) if op_b is None else op_b),
        np.eye(nq) if op_qd is None else op_qd,
    )
    return Operator(space, mat)


def annihilation_a(space: HilbertSpace) -> Operator:
    return _embed(space, op_a=_ladder(space.n_max_a))


def annihilation_b(space: HilbertSpace) -> Operator:
    return _embed(space, op_b=_ladder(space.n_max_b))


def sigma_minus(space: HilbertSpace) -> Operator:
    """Dot lowering operator, ``|m, n, e> -> |m, n, g>``."""
    return _embed(space, op_qd=np.array([[0.0, 1.0], [0.0, 0.0]]))


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


def _check_same(*ops: Operator) -> HilbertSpace:
    space = ops[0].space
    for op in ops[1:]:
        if op.space != space:
            raise SpaceMismatch(f"operator spaces differ: {space} vs {op.space}")
    return space


def dagger(op: Operator) -> Operator:
    return Operator(op.space, op.matrix.conj().T)


def add(x: Operator, y: Operator) -> Operator:
    return Operator(_check_same(x, y), x.matrix + y.matrix)


def scale(c: complex, op: Operator) -> Operator:
    return Operator(op.space, complex(c) * op.matrix)


def matmul(x: Operator, y: Operator) -> Operator:
    return Operator(_check_same(x, y), x.matrix @ y.matrix)


def commutator(x: Operator, y: Operator) -> Operator:
    return Operator(_check_same(x, y), x.matrix @ y.matrix - y.matrix @ x.matrix)


def expectation_matrix_element(op: Operator, i: int, j: int) -> complex:
    """``<i| op |j>`` for basis indices ``i`` and ``j``."""
    return complex(op.matrix[i, j])
