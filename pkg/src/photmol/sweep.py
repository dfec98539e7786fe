"""Parameter sweeps, figure presets and scalar minimization of g2(0)."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import __version__
from .errors import ComputationError, InvalidParams, OptimizationFailed, SpecError, UnknownPreset
from .model import BASELINE_DRIVE, SystemParams
from .solver import converged_g2, observables
from .weakdrive import g2_weakdrive, steady_amplitudes

AXIS_NAMES = ("delta", "g", "j", "theta", "e", "e_a", "e_b")
ENGINES = ("full", "weakdrive")
COLUMNS = ("g2", "n_a", "n_b", "p_e", "converged", "status")


@dataclass(frozen=True)
class Axis:
    """A swept parameter: ``points`` values evenly spaced over [start, stop], or explicit ``values``."""

    param: str
    start: float | None = None
    stop: float | None = None
    points: int | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.param not in AXIS_NAMES:
            raise SpecError(f"unknown sweep parameter {self.param!r}; expected one of {AXIS_NAMES}")
        if self.values is not None:
            if self.start is not None or self.stop is not None or self.points is not None:
                raise SpecError("give either values or start/stop/points, not both")
            vals = tuple(float(v) for v in self.values)
            if len(vals) < 2:
                raise SpecError("an axis needs at least 2 points")
            object.__setattr__(self, "values", vals)
            return
        if self.start is None or self.stop is None or self.points is None:
            raise SpecError("axis needs start, stop and points")
        if int(self.points) != self.points or self.points < 2:
            raise SpecError("an axis needs at least 2 points")
        if not self.start < self.stop:
            raise SpecError("axis start must be < stop")
        object.__setattr__(self, "points", int(self.points))

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values)
        return np.linspace(self.start, self.stop, self.points)

    def __len__(self):
        return len(self.values) if self.values is not None else self.points

    def to_dict(self) -> dict:
        if self.values is not None:
            return {"param": self.param, "values": list(self.values)}
        return {"param": self.param, "from": self.start, "to": self.stop, "points": self.points}

    @classmethod
    def from_dict(cls, d: dict) -> Axis:
        d = dict(d)
        unknown = set(d) - {"param", "from", "to", "points", "values"}
        if unknown:
            raise SpecError(f"unknown axis key(s): {sorted(unknown)}")
        if "param" not in d:
            raise SpecError("axis needs a 'param'")
        if "values" in d:
            return cls(d["param"], values=tuple(d["values"]))
        return cls(d["param"], d.get("from"), d.get("to"), d.get("points"))


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    axes: tuple[Axis, ...]
    engine: str = "full"
    convergence_tol: float | None = 1e-3

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 2:
            raise SpecError("a sweep has 1 or 2 axes")
        object.__setattr__(self, "axes", axes)
        if self.engine not in ENGINES:
            raise SpecError(f"unknown engine {self.engine!r}")
        if self.convergence_tol is not None and not 0 < self.convergence_tol <= 0.1:
            raise SpecError("convergence_tol must lie in (0, 0.1]")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def points(self) -> list[tuple[float, ...]]:
        """Grid points in row-major order (last axis fastest)."""
        return list(product(*(a.grid().tolist() for a in self.axes)))

    def params_at(self, point) -> SystemParams:
        p = self.base
        for axis, value in zip(self.axes, point):
            p = p.set(axis.param, value)
        return p

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "axes": [a.to_dict() for a in self.axes],
            "engine": self.engine,
            "convergence_tol": self.convergence_tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SweepSpec:
        unknown = set(d) - {"base", "axes", "engine", "convergence_tol"}
        if unknown:
            raise SpecError(f"unknown sweep key(s): {sorted(unknown)}")
        try:
            base = SystemParams.from_dict(d.get("base", {}))
        except InvalidParams as exc:
            raise SpecError(str(exc)) from exc
        return cls(
            base=base,
            axes=tuple(Axis.from_dict(a) for a in d.get("axes", [])),
            engine=d.get("engine", "full"),
            convergence_tol=d.get("convergence_tol", 1e-3),
        )


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[tuple] = field(repr=False)
    timestamp: str = ""
    version: str = __version__

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.param for a in self.spec.axes)

    @property
    def header(self) -> tuple[str, ...]:
        return self.axis_names + COLUMNS

    def column(self, name: str) -> np.ndarray:
        k = self.header.index(name)
        return np.array([r[k] for r in self.rows])

    def select(self, **fixed) -> SweepResult:
        """1D slice of a 2D sweep, e.g. ``result.select(j=3.0)``."""
        if len(fixed) != 1 or len(self.spec.axes) != 2:
            raise SpecError("select fixes exactly one axis of a 2D sweep")
        (name, value), = fixed.items()
        k = self.axis_names.index(name)
        keep = 1 - k
        rows = [r for r in self.rows if math.isclose(r[k], value, rel_tol=0, abs_tol=1e-12)]
        if not rows:
            raise SpecError(f"no rows with {name}={value}")
        spec = replace(self.spec, base=self.spec.base.set(name, value), axes=(self.spec.axes[keep],))
        return SweepResult(spec, [(r[keep],) + tuple(r[2:]) for r in rows], self.timestamp, self.version)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "base": self.spec.base.to_dict(),
            "engine": self.spec.engine,
            "axes": [a.to_dict() for a in self.spec.axes],
            "convergence_tol": self.spec.convergence_tol,
            "rows": len(self.rows),
            "timestamp": self.timestamp,
            "version": self.version,
        }

    def write(self, csv_path: str, meta_path: str | None = None) -> None:
        if meta_path is None:
            root, _ = os.path.splitext(csv_path)
            meta_path = root + ".meta.json"
        atomic_write(csv_path, self.to_csv())
        atomic_write(meta_path, json.dumps(self.metadata(), indent=2) + "\n")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17e}"
    return str(v)


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def evaluate(params: SystemParams, engine: str = "full", convergence_tol: float | None = 1e-3) -> tuple:
    """``(g2, n_a, n_b, p_e, converged, status)`` at one parameter point; never raises on numerical failure."""
    nan = float("nan")
    try:
        if engine == "weakdrive":
            amps = steady_amplitudes(params)
            n_a, n_b, p_e = amps.mean_occupations()
            return (g2_weakdrive(amps), n_a, n_b, p_e, True, "ok")
        if convergence_tol is None:
            rep = observables(params)
            return (rep.g2_a, rep.n_a, rep.n_b, rep.p_e, True, "ok")
        rep = converged_g2(params, convergence_tol)
        return (rep.g2_a, rep.n_a, rep.n_b, rep.p_e, rep.converged, "ok" if rep.converged else "not-converged")
    except ComputationError as exc:
        return (nan, nan, nan, nan, False, type(exc).__name__)


def _evaluate_task(args):
    params, engine, tol = args
    return evaluate(params, engine, tol)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every grid point; rows come back in row-major axis order for any worker count."""
    points = spec.points()
    tasks = [(spec.params_at(pt), spec.engine, spec.convergence_tol) for pt in points]
    if workers <= 1 or len(tasks) < 2:
        values = [_evaluate_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_evaluate_task, tasks, chunksize=chunk))
    rows = [tuple(float(x) for x in pt) + tuple(v) for pt, v in zip(points, values)]
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return SweepResult(spec, rows, stamp)


# -- figure presets -----------------------------------------------------------

_E = BASELINE_DRIVE
_SINGLE = SystemParams(g=1.0, j=1.0, e_a=_E, e_b=0.0, theta=0.0)
_DOUBLE = SystemParams(g=1.0, j=1.0, e_a=_E, e_b=_E, theta=1.5 * math.pi)


def _presets() -> dict[str, SweepSpec]:
    delta = Axis("delta", -5.0, 5.0, 201)
    j_series = Axis("j", values=(1.0, 2.0, 3.0))
    fig2 = SweepSpec(_SINGLE, (j_series, delta))
    fig4a_axes = (Axis("theta", 0.0, 2 * math.pi, 101), Axis("delta", -5.0, 5.0, 101))
    fig6 = SweepSpec(_DOUBLE, (Axis("g", 0.0, 3.0, 101), Axis("j", 0.0, 3.0, 101)))
    fig7_base = replace(_DOUBLE, j=0.9)
    return {
        "fig2a": fig2,
        "fig2b": fig2,
        "fig3a": SweepSpec(_SINGLE, (j_series, Axis("g", 0.1, 3.5, 201))),
        "fig3b": SweepSpec(replace(_SINGLE, g=1.1, j=3.0), (Axis("e_a", 0.01, 0.5, 50),)),
        "fig4a": SweepSpec(_DOUBLE, fig4a_axes),
        "fig4b": SweepSpec(_DOUBLE, (Axis("theta", values=(0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)), delta)),
        "fig5a": SweepSpec(_DOUBLE, (Axis("j", values=(0.5, 1.0, 1.5, 2.0)), Axis("theta", 0.0, 2 * math.pi, 201))),
        "fig5b": SweepSpec(_DOUBLE, (Axis("j", 0.015, 3.0, 200),)),
        "fig6a": fig6,
        "fig6b": fig6,
        "fig7a": SweepSpec(fig7_base, (Axis("e", 0.01, 0.3125, 50),)),
        "fig7b": SweepSpec(fig7_base, (Axis("e", 0.01, 1.0, 60),)),
    }


PRESET_NAMES = tuple(_presets())


def figure_preset(name: str) -> SweepSpec:
    presets = _presets()
    try:
        return presets[name]
    except KeyError:
        raise UnknownPreset(f"unknown figure preset {name!r}; known: {', '.join(presets)}") from None


# -- optimization -------------------------------------------------------------

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Minimize a unimodal ``f`` on [lo, hi]; returns ``(x, f(x))`` of the best point evaluated."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    best = min((f1, x1), (f2, x2))
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
            best = min(best, (f1, x1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
            best = min(best, (f2, x2))
    return best[1], best[0]


def minimize_g2(
    base: SystemParams,
    var: str,
    bounds: tuple[float, float],
    tol: float = 1e-3,
    engine: str = "full",
    convergence_tol: float | None = 1e-3,
    grid_points: int = 65,
) -> tuple[float, float]:
    """Global grid scan, then golden-section refinement inside the bracket of the best grid point.

    Returns ``(argmin, g2_min)``; ties on the grid go to the smaller parameter value.
    """
    lo, hi = map(float, bounds)
    if not lo < hi:
        raise ValueError("bounds must satisfy lo < hi")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if var not in AXIS_NAMES:
        raise InvalidParams(f"cannot optimize over {var!r}")
    grid_points = max(int(grid_points), 64)

    def f(x):
        g2 = evaluate(base.set(var, x), engine, convergence_tol)[0]
        return g2 if math.isfinite(g2) else math.inf

    xs = np.linspace(lo, hi, grid_points)
    ys = np.array([f(x) for x in xs])
    if not np.any(np.isfinite(ys)):
        raise OptimizationFailed(f"g2(0) not finite anywhere on [{lo}, {hi}]")
    k = int(np.argmin(ys))
    x_best, y_best = float(xs[k]), float(ys[k])
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid_points - 1)]
    x_ref, y_ref = golden_section(f, float(a), float(b), tol)
    if y_ref < y_best:
        x_best, y_best = x_ref, y_ref
    return x_best, y_best


def find_dips(sweep) -> list[tuple[float, float]]:
    """Strict interior local minima of g2 along a 1D sweep, deepest first.

    Accepts a 1D :class:`SweepResult` or a pair of sequences ``(x, g2)``.
    """
    if isinstance(sweep, SweepResult):
        if len(sweep.spec.axes) != 1:
            raise SpecError("find_dips needs a 1D sweep")
        x, y = sweep.column(sweep.axis_names[0]), sweep.column("g2")
    else:
        x, y = (np.asarray(v, dtype=float) for v in sweep)
    dips = []
    for i in range(1, len(y) - 1):
        if np.isfinite(y[i - 1 : i + 2]).all() and y[i] < y[i - 1] and y[i] < y[i + 1]:
            dips.append((float(x[i]), float(y[i])))
    return sorted(dips, key=lambda d: d[1])
