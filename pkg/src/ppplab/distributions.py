"""Initial-value distributions on [0, 1] and single-round Myerson quantities.

Every distribution exposes ``cdf``, ``pdf``, ``ppf`` (quantile), ``survival``
(the probability that the value is *at least* ``x``), ``mean`` and
``sample``.  The survival function is the left limit ``1 - F(x-)`` so that a
posted price equal to an atom still sells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._search import grid_argmax
from .errors import DomainError, UndefinedDensityError

__all__ = [
    "ValueDistribution",
    "Uniform01",
    "PowerCdf",
    "PointMass",
    "PiecewiseTable",
    "eval_cdf",
    "sample",
    "virtual_value",
    "monopoly_price",
    "myerson_revenue",
]

_EPS = 1e-12


def _check_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"value outside [0, 1]: {x!r}")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


class ValueDistribution:
    """Base class for laws of the initial value V0 on [0, 1]."""

    kind = "abstract"

    def cdf(self, x):
        """F(x), right-continuous."""
        arr = _check_unit(x)
        return _out(self._cdf(arr), x)

    def survival(self, x):
        """P(V >= x)."""
        arr = _check_unit(x)
        return _out(self._survival(arr), x)

    def pdf(self, x):
        """Density f(x); raises for laws without a density."""
        arr = _check_unit(x)
        return _out(self._pdf(arr), x)

    def ppf(self, u):
        """Generalized inverse ``inf{x : F(x) >= u}``."""
        arr = _check_unit(u)
        return _out(self._ppf(arr), u)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF sampling with a caller-owned generator."""
        u = rng.random(size)
        return _out(self._ppf(np.asarray(u, dtype=float)), u)

    def candidate_points(self) -> tuple:
        """Points where revenue curves may have kinks or jumps."""
        return ()

    # -- subclass hooks ---------------------------------------------------
    def _cdf(self, x):
        raise NotImplementedError

    def _survival(self, x):
        return 1.0 - self._cdf(x)

    def _pdf(self, x):
        raise NotImplementedError

    def _ppf(self, u):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform01(ValueDistribution):
    """Uniform law on [0, 1]."""

    kind = "uniform"

    def _cdf(self, x):
        return x.copy()

    def _pdf(self, x):
        return np.ones_like(x)

    def _ppf(self, u):
        return u.copy()

    @property
    def mean(self) -> float:
        return 0.5

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class PowerCdf(ValueDistribution):
    """F(x) = x**k on [0, 1] with k > 0."""

    k: float = 2.0
    kind = "power"

    def __post_init__(self):
        if not (np.isfinite(self.k) and self.k > 0):
            raise DomainError(f"exponent must be positive, got {self.k}")

    def _cdf(self, x):
        return x ** self.k

    def _pdf(self, x):
        with np.errstate(divide="ignore"):
            return self.k * x ** (self.k - 1.0)

    def _ppf(self, u):
        return u ** (1.0 / self.k)

    @property
    def mean(self) -> float:
        return self.k / (self.k + 1.0)

    def to_dict(self):
        return {"kind": self.kind, "k": self.k}


@dataclass(frozen=True)
class PointMass(ValueDistribution):
    """Degenerate law at ``v``."""

    v: float = 0.5
    kind = "point"

    def __post_init__(self):
        _check_unit(self.v)

    def _cdf(self, x):
        return (x >= self.v).astype(float)

    def _survival(self, x):
        return (x <= self.v).astype(float)

    def _pdf(self, x):
        raise UndefinedDensityError("a point mass has no density")

    def _ppf(self, u):
        return np.full_like(u, self.v, dtype=float)

    def candidate_points(self):
        return (self.v,)

    @property
    def mean(self) -> float:
        return float(self.v)

    def to_dict(self):
        return {"kind": self.kind, "v": self.v}


@dataclass(frozen=True)
class PiecewiseTable(ValueDistribution):
    """Continuous CDF given by linear interpolation of a table.

    Parameters
    ----------
    x : sequence of float
        Strictly increasing breakpoints with ``x[0] = 0`` and ``x[-1] = 1``.
    F : sequence of float
        Nondecreasing CDF values with ``F[0] = 0`` and ``F[-1] = 1``.
    """

    x: tuple = field(default=(0.0, 1.0))
    F: tuple = field(default=(0.0, 1.0))
    kind = "table"

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        fs = np.asarray(self.F, dtype=float)
        if xs.ndim != 1 or xs.shape != fs.shape or len(xs) < 2:
            raise DomainError("table needs matching 1-d x and F with at least two points")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if abs(xs[0]) > _EPS or abs(xs[-1] - 1.0) > _EPS:
            raise DomainError("breakpoints must span [0, 1]")
        if np.any(np.diff(fs) < 0) or abs(fs[0]) > _EPS or abs(fs[-1] - 1.0) > _EPS:
            raise DomainError("CDF values must be nondecreasing from 0 to 1")
        object.__setattr__(self, "x", tuple(float(v) for v in xs))
        object.__setattr__(self, "F", tuple(float(v) for v in fs))

    @property
    def _xs(self):
        return np.asarray(self.x)

    @property
    def _fs(self):
        return np.asarray(self.F)

    def _cdf(self, x):
        return np.interp(x, self._xs, self._fs)

    def _pdf(self, x):
        xs, fs = self._xs, self._fs
        slopes = np.diff(fs) / np.diff(xs)
        # right-continuous density; the last breakpoint uses the last slope
        seg = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        return slopes[seg]

    def _ppf(self, u):
        xs, fs = self._xs, self._fs
        j = np.clip(np.searchsorted(fs, u, side="left"), 1, len(xs) - 1)
        f0, f1 = fs[j - 1], fs[j]
        x0, x1 = xs[j - 1], xs[j]
        span = np.where(f1 > f0, f1 - f0, 1.0)
        out = x0 + (x1 - x0) * np.clip((u - f0) / span, 0.0, 1.0)
        return np.where(u <= 0.0, 0.0, out)

    def candidate_points(self):
        return self.x

    @property
    def mean(self) -> float:
        xs, fs = self._xs, self._fs
        # E[V] = ∫ (1 - F), exact for a piecewise-linear F
        return float(np.sum(np.diff(xs) * (1.0 - 0.5 * (fs[1:] + fs[:-1]))))

    def to_dict(self):
        return {"kind": self.kind, "x": list(self.x), "F": list(self.F)}


def eval_cdf(d: ValueDistribution, x):
    """Evaluate F(x); raises :class:`DomainError` outside [0, 1]."""
    return d.cdf(x)


def sample(d: ValueDistribution, rng: np.random.Generator, size=None):
    """Draw from ``d`` by inverse-CDF sampling."""
    return d.sample(rng, size)


def virtual_value(d: ValueDistribution, x):
    """φ(x) = x − (1 − F(x)) / f(x).

    Raises
    ------
    UndefinedDensityError
        If f(x) = 0 or the law has no density.
    """
    arr = _check_unit(x)
    f = np.asarray(d._pdf(arr), dtype=float)
    if np.any(~(f > 0)):
        raise UndefinedDensityError(f"density vanishes at {x!r}")
    phi = arr - (1.0 - d._cdf(arr)) / f
    return _out(phi, x)


def _revenue_curve(d: ValueDistribution):
    return lambda p: p * d._survival(np.asarray(p, dtype=float))


def monopoly_price(d: ValueDistribution, resolution: int = 10_000) -> float:
    """Revenue-maximizing posted price for a single sale.

    Grid search over [0, 1] (atoms and breakpoints included) refined by
    golden-section search; ties go to the smaller price.
    """
    p, _ = grid_argmax(_revenue_curve(d), resolution=resolution,
                       candidates=d.candidate_points())
    return p


def myerson_revenue(d: ValueDistribution, resolution: int = 10_000) -> float:
    """max_p p·P(V ≥ p)."""
    p = monopoly_price(d, resolution)
    return float(p * d._survival(np.asarray(p)))
