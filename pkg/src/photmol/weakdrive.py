"""Weak-drive amplitude hierarchy on the two-excitation manifold.

With ``C_{0,0,g} = 1`` fixed, the steady state of the non-Hermitian
Hamiltonian

    H_nh = H - i (kappa_a/2) a'a - i (kappa_b/2) b'b - i (gamma/2) s's

is found order by order: projecting ``H_nh |psi> = 0`` onto each
one-excitation state gives three equations driven by ``C_{0,0,g}``; the
five two-excitation equations are then driven by the one-excitation
amplitudes.  Terms that feed an amplitude from the manifold above it are
higher order in the drive and dropped.

Writing ``da = Delta_a - i kappa_a/2``, ``db = Delta_b - i kappa_b/2``,
``ds = Delta_b - i gamma/2``, ``Ea = E_a exp(-i theta)`` and ``Eb = E_b``::

    <1,0,g|:  da C10g + J C01g                         = -Ea C00g
    <0,1,g|:  db C01g + J C10g + g C00e                = -Eb C00g
    <0,0,e|:  ds C00e + g C01g                         = 0

    <2,0,g|:  2 da C20g + r2 J C11g                    = -r2 Ea C10g
    <1,1,g|:  (da+db) C11g + r2 J (C20g + C02g) + g C10e = -(Ea C01g + Eb C10g)
    <0,2,g|:  2 db C02g + r2 J C11g + r2 g C01e        = -r2 Eb C01g
    <1,0,e|:  (da+ds) C10e + g C11g + J C01e           = -Ea C00e
    <0,1,e|:  (db+ds) C01e + r2 g C02g + J C10e        = -Eb C00e

with ``r2 = sqrt(2)``.  For a single resonant mode this gives
``C10g = -Ea / da = -i Ea / (kappa/2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateManifold, NoPhotons
from .model import SystemParams

LABELS = ("0,0,g", "1,0,g", "0,1,g", "0,0,e", "2,0,g", "1,1,g", "0,2,g", "1,0,e", "0,1,e")
# (m, n, x) occupation of each label
OCCUPATION = np.array(
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (1, 1, 0), (0, 2, 0), (1, 0, 1), (0, 1, 1)]
)
ONE = slice(1, 4)
TWO = slice(4, 9)
SQRT2 = np.sqrt(2.0)
_COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class AmplitudeVector:
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.c, dtype=complex)
        if c.shape != (9,):
            raise ValueError("expected nine amplitudes")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __getitem__(self, label: str) -> complex:
        return complex(self.c[LABELS.index(label)])

    def __repr__(self):
        body = ", ".join(f"{lab}: {v:.3e}" for lab, v in zip(LABELS, self.c))
        return f"AmplitudeVector({body})"

    def probabilities(self) -> np.ndarray:
        """Populations of the normalized truncated state."""
        p = np.abs(self.c) ** 2
        return p / p.sum()

    def mean_occupations(self) -> tuple[float, float, float]:
        """``(n_a, n_b, p_e)`` of the normalized truncated state."""
        p = self.probabilities()
        m, n, x = OCCUPATION.T
        return float(p @ m), float(p @ n), float(p @ x)

    def to_dict(self) -> dict:
        return {lab: [float(v.real), float(v.imag)] for lab, v in zip(LABELS, self.c)}


def _complex_rates(params: SystemParams):
    da = params.delta_a - 0.5j * params.kappa_a
    db = params.delta_b - 0.5j * params.kappa_b
    ds = params.delta_b - 0.5j * params.gamma
    ea = params.e_a * np.exp(-1j * params.theta)
    eb = complex(params.e_b)
    return da, db, ds, ea, eb


def one_excitation_block(params: SystemParams) -> np.ndarray:
    da, db, ds, _, _ = _complex_rates(params)
    g, j = params.g, params.j
    # unknowns: C10g, C01g, C00e
    return np.array(
        [
            [da, j, 0.0],
            [j, db, g],
            [0.0, g, ds],
        ],
        dtype=complex,
    )


def two_excitation_block(params: SystemParams) -> np.ndarray:
    da, db, ds, _, _ = _complex_rates(params)
    g, j = params.g, params.j
    # unknowns: C20g, C11g, C02g, C10e, C01e
    return np.array(
        [
            [2 * da, SQRT2 * j, 0.0, 0.0, 0.0],
            [SQRT2 * j, da + db, SQRT2 * j, g, 0.0],
            [0.0, SQRT2 * j, 2 * db, 0.0, SQRT2 * g],
            [0.0, g, 0.0, da + ds, j],
            [0.0, 0.0, SQRT2 * g, j, db + ds],
        ],
        dtype=complex,
    )


def _source_terms(params: SystemParams, one: np.ndarray) -> dict[str, np.ndarray]:
    """Drive feeds into the two-excitation block, keyed by the transition that adds the second quantum."""
    _, _, _, ea, eb = _complex_rates(params)
    c10g, c01g, c00e = one
    terms = {
        "E_a: |1,0,g> -> |2,0,g>": (0, SQRT2 * ea * c10g),
        "E_a: |0,1,g> -> |1,1,g>": (1, ea * c01g),
        "E_a: |0,0,e> -> |1,0,e>": (3, ea * c00e),
        "E_b: |1,0,g> -> |1,1,g>": (1, eb * c10g),
        "E_b: |0,1,g> -> |0,2,g>": (2, SQRT2 * eb * c01g),
        "E_b: |0,0,e> -> |0,1,e>": (4, eb * c00e),
    }
    out = {}
    for name, (row, value) in terms.items():
        v = np.zeros(5, dtype=complex)
        v[row] = value
        out[name] = v
    return out


def _solve(block: np.ndarray, rhs: np.ndarray, which: str) -> np.ndarray:
    if np.linalg.cond(block) > _COND_LIMIT:
        raise DegenerateManifold(f"{which}-excitation block is singular")
    return np.linalg.solve(block, rhs)


def steady_amplitudes(params: SystemParams) -> AmplitudeVector:
    _, _, _, ea, eb = _complex_rates(params)
    one = _solve(one_excitation_block(params), -np.array([ea, eb, 0.0], dtype=complex), "one")
    feed = sum(_source_terms(params, one).values())
    two = _solve(two_excitation_block(params), -feed, "two")
    return AmplitudeVector(np.concatenate([[1.0 + 0j], one, two]))


def g2_weakdrive(amps: AmplitudeVector) -> float:
    """Leading-order ``g2(0) = 2 |C20g|^2 / |C10g|^4`` in the ``C00g = 1`` gauge."""
    c10 = abs(amps.c[1])
    if c10 <= 1e-30:
        raise NoPhotons("one-photon amplitude of mode a vanishes")
    return float(2.0 * abs(amps.c[4]) ** 2 / c10**4)


def two_photon_amplitude(params: SystemParams) -> complex:
    return complex(steady_amplitudes(params).c[4])


def path_contributions(params: SystemParams) -> dict[str, complex]:
    """Split ``C20g`` by which drive transition supplied the second quantum.

    The two-excitation block is linear in its sources, so the contributions
    add up to ``C20g`` exactly.  With a single drive on cavity A only the three
    ``E_a`` entries are nonzero: the direct step from ``|1,0,g>``, the step
    after tunnelling to ``|0,1,g>``, and the step after absorption by the dot.
    """
    amps = steady_amplitudes(params)
    block = two_excitation_block(params)
    out = {}
    for name, src in _source_terms(params, amps.c[ONE]).items():
        out[name] = complex(np.linalg.solve(block, -src)[0])
    return out


def paths_report(params: SystemParams) -> dict:
    amps = steady_amplitudes(params)
    contributions = path_contributions(params)
    n_a, n_b, p_e = amps.mean_occupations()
    report = {
        "params": params.to_dict(),
        "amplitudes": amps.to_dict(),
        "C20g": [amps.c[4].real, amps.c[4].imag],
        "C20g_contributions": {k: [v.real, v.imag] for k, v in contributions.items()},
        "n_a": n_a,
        "n_b": n_b,
        "p_e": p_e,
    }
    try:
        report["g2"] = g2_weakdrive(amps)
    except NoPhotons:
        report["g2"] = None
    return report


def paths_json(params: SystemParams) -> str:
    return json.dumps(paths_report(params), indent=2)
