"""Least-squares polynomial fits and a rectangular piecewise-bilinear surface."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class FittingError(ValueError):
    pass


class RankDeficient(FittingError):
    pass


class DegenerateFit(FittingError):
    pass


class IncompleteGrid(FittingError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"({x!r}, {y!r})" for x, y in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" and {len(self.missing) - 10} more"
        super().__init__(f"grid is missing {len(self.missing)} cell(s): {shown}{more}")


class DuplicateSample(FittingError):
    pass


class DegenerateAxis(FittingError):
    pass


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple  # ascending degree

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if not self.coeffs:
            raise FittingError("a polynomial needs at least one coefficient")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return poly_eval(self, x)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "Polynomial":
        poly = cls(tuple(d["coeffs"]))
        if "degree" in d and d["degree"] != poly.degree:
            raise FittingError("degree does not match coefficient count")
        return poly


@dataclass(frozen=True)
class GoodnessOfFit:
    sse: float
    rmse: float
    r2: float

    def to_dict(self) -> dict:
        return {"sse": self.sse, "rmse": self.rmse, "r2": self.r2}

    @classmethod
    def from_dict(cls, d: dict) -> "GoodnessOfFit":
        return cls(float(d["sse"]), float(d["rmse"]), float(d["r2"]))


def poly_eval(p: Polynomial, x):
    """Horner evaluation; works on scalars and numpy arrays."""
    result = 0.0 * x if isinstance(x, np.ndarray) else 0.0
    for a in reversed(p.coeffs):
        result = result * x + a
    return result


def _stats(y: np.ndarray, yhat: np.ndarray, n_params: int) -> GoodnessOfFit:
    resid = y - yhat
    sse = float(resid @ resid)
    dof = len(y) - n_params
    rmse = math.sqrt(sse / dof) if dof > 0 else math.nan
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        # constant data: perfect only if the residual is at round-off level
        if sse <= 1e-24 * max(1.0, float(y @ y)):
            r2 = 1.0
        else:
            raise DegenerateFit("r2 undefined: data has zero variance but nonzero error")
    else:
        r2 = 1.0 - sse / ss_tot
    return GoodnessOfFit(sse, rmse, r2)


def gof(y: Sequence[float], yhat: Sequence[float], n_params: int) -> GoodnessOfFit:
    """SSE, RMSE on ``n - n_params`` degrees of freedom, and R^2."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise FittingError("y and yhat must be 1-D and of equal length")
    if not len(y) > n_params:
        raise FittingError(f"need more than {n_params} points, got {len(y)}")
    return _stats(y, yhat, n_params)


def polyfit(x: Sequence[float], y: Sequence[float], degree: int = 2):
    """Least-squares polynomial of the given degree.

    Solved by a QR factorization of the Vandermonde matrix. Returns
    ``(Polynomial, GoodnessOfFit)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if degree < 0:
        raise FittingError("degree must be >= 0")
    if x.shape != y.shape or x.ndim != 1:
        raise FittingError("x and y must be 1-D and of equal length")
    if len(x) < degree + 1:
        raise FittingError(f"degree {degree} needs at least {degree + 1} points, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FittingError("non-finite data")

    V = np.vander(x, degree + 1, increasing=True)
    # column scaling keeps the rank test meaningful for wide x ranges
    scale = np.linalg.norm(V, axis=0)
    scale[scale == 0] = 1.0
    Q, R = np.linalg.qr(V / scale)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * max(diag.max(), 1.0) or degree > 0 and np.ptp(x) == 0:
        raise RankDeficient(
            f"Vandermonde matrix of degree {degree} is rank deficient for the given x"
        )
    coeffs = np.linalg.solve(R, Q.T @ y) / scale
    poly = Polynomial(tuple(coeffs))
    return poly, _stats(y, poly_eval(poly, x), degree + 1)


@dataclass(frozen=True, eq=False)
class GridSurface:
    """Samples on a rectangular grid; ``zs[i, j]`` sits at ``(xs[i], ys[j])``."""

    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float)
        zs = np.array(self.zs, dtype=float)
        for name, axis in (("xs", xs), ("ys", ys)):
            if axis.ndim != 1 or len(axis) < 2:
                raise DegenerateAxis(f"{name} needs at least two entries")
            if not np.all(np.diff(axis) > 0):
                raise FittingError(f"{name} must be strictly increasing")
        if zs.shape != (len(xs), len(ys)):
            raise FittingError(f"zs has shape {zs.shape}, expected {(len(xs), len(ys))}")
        if not np.all(np.isfinite(zs)):
            raise FittingError("zs must be finite")
        for arr in (xs, ys, zs):
            arr.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "zs", zs)

    @property
    def n_coefficients(self) -> int:
        return self.zs.size

    def __eq__(self, other):
        if not isinstance(other, GridSurface):
            return NotImplemented
        return (np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys)
                and np.array_equal(self.zs, other.zs))

    def __call__(self, x: float, y: float):
        return surface_eval(self, x, y)

    def to_dict(self) -> dict:
        return {
            "xs": self.xs.tolist(),
            "ys": self.ys.tolist(),
            "zs": self.zs.tolist(),  # row-major, one row per xs entry
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSurface":
        return cls(np.array(d["xs"]), np.array(d["ys"]), np.array(d["zs"]))


def surface_build(xs_raw: Iterable[float] | None, ys_raw: Iterable[float] | None,
                  z_samples: Iterable[tuple]) -> GridSurface:
    """Assemble a GridSurface from ``(x, y, z)`` samples covering a full grid.

    ``xs_raw``/``ys_raw`` may list the axis values (any order, repeats
    allowed); when ``None`` they are taken from the samples.
    """
    samples = [(float(x), float(y), float(z)) for x, y, z in z_samples]
    xs = np.unique(np.asarray(xs_raw if xs_raw is not None else [s[0] for s in samples], float))
    ys = np.unique(np.asarray(ys_raw if ys_raw is not None else [s[1] for s in samples], float))
    xi = {x: i for i, x in enumerate(xs.tolist())}
    yi = {y: j for j, y in enumerate(ys.tolist())}

    zs = np.full((len(xs), len(ys)), np.nan)
    for x, y, z in samples:
        if x not in xi or y not in yi:
            raise FittingError(f"sample ({x!r}, {y!r}) is not on the declared axes")
        i, j = xi[x], yi[y]
        if not np.isnan(zs[i, j]) and zs[i, j] != z:
            raise DuplicateSample(f"conflicting values {zs[i, j]!r} and {z!r} at ({x!r}, {y!r})")
        zs[i, j] = z

    missing = [(xs[i], ys[j]) for i, j in zip(*np.nonzero(np.isnan(zs)))]
    if missing:
        raise IncompleteGrid([(float(x), float(y)) for x, y in missing])
    return GridSurface(xs, ys, zs)


def _cell(axis: np.ndarray, v: float):
    k = int(np.searchsorted(axis, v, side="right")) - 1
    k = min(max(k, 0), len(axis) - 2)
    t = (v - axis[k]) / (axis[k + 1] - axis[k])
    return k, t


def surface_eval(s: GridSurface, x: float, y: float):
    """Bilinear interpolation; returns ``(z, extrapolated)``.

    Outside the grid the nearest boundary cell's bilinear form is
    extended linearly and ``extrapolated`` is True.
    """
    i, t = _cell(s.xs, x)
    j, u = _cell(s.ys, y)
    z = s.zs
    value = ((1 - t) * (1 - u) * z[i, j] + t * (1 - u) * z[i + 1, j]
             + (1 - t) * u * z[i, j + 1] + t * u * z[i + 1, j + 1])
    extrapolated = not (s.xs[0] <= x <= s.xs[-1] and s.ys[0] <= y <= s.ys[-1])
    return float(value), extrapolated
