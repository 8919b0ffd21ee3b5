"""Value-evolution processes and trajectory sampling.

Three processes are provided:

* :class:`RandomWalkModel` -- ±δ steps on the grid {0, δ, ..., 1}, reflected
  at 1 and absorbed at 0.
* :class:`BinaryValueModel` -- the value stays at V0 for T(V0) usages and then
  drops to 0.
* :class:`GeneralMarkovModel` -- a martingale with a state-independent
  increment law, reflected by returning to the previous value after a
  crossing of 1 and absorbed at or below 0.

Scalar step functions return ``0.0`` for an absorbed value.  Each model also
carries a vectorized batch interface (``batch_init``/``batch_advance``) that
the Monte Carlo engine in :mod:`ppplab.sim` uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridError

__all__ = [
    "RandomWalkModel",
    "LinearMean",
    "DeterministicStop",
    "GeometricStop",
    "TableStop",
    "BinaryValueModel",
    "GeneralMarkovModel",
    "Trajectory",
    "step_walk",
    "step_binary",
    "step_general",
    "sample_trajectory",
    "default_cap",
]

_GRID_TOL = 1e-9


# ---------------------------------------------------------------------------
# random walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomWalkModel:
    """Symmetric ±δ walk on {0, δ, ..., 1}.

    Parameters
    ----------
    delta : float
        Step size in (0, 0.5]; ``1/delta`` must be an integer.
    """

    delta: float
    kind = "walk"

    def __post_init__(self):
        d = float(self.delta)
        if not (0.0 < d <= 0.5):
            raise DomainError(f"delta must lie in (0, 0.5], got {d}")
        n = round(1.0 / d)
        if abs(n * d - 1.0) > _GRID_TOL:
            raise DomainError(f"1/delta must be an integer, got delta={d}")

    @property
    def n(self) -> int:
        """Number of steps between 0 and 1."""
        return round(1.0 / self.delta)

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def index_of(self, v):
        """Grid index of ``v``; raises :class:`GridError` when off-grid."""
        arr = np.asarray(v, dtype=float)
        idx = np.rint(arr * self.n)
        if np.any(np.abs(arr * self.n - idx) > _GRID_TOL * self.n) or np.any(idx < 0) \
                or np.any(idx > self.n):
            raise GridError(f"{v!r} is not on the grid of step {self.delta}")
        idx = idx.astype(np.int64)
        return int(idx) if idx.ndim == 0 else idx

    def on_grid(self, v) -> bool:
        try:
            self.index_of(v)
        except GridError:
            return False
        return True

    def snap_index(self, v0, rng: np.random.Generator):
        """Mean-preserving randomized rounding of ``v0`` onto the grid.

        Returns ``floor`` with probability ``1 - frac`` and ``ceil`` otherwise,
        so that the expected grid value equals ``v0``.  One uniform is drawn
        per entry whether or not it is needed.
        """
        x = np.asarray(v0, dtype=float) * self.n
        lo = np.floor(x + _GRID_TOL)
        frac = np.where(np.abs(x - np.rint(x)) <= _GRID_TOL, 0.0, x - lo)
        u = rng.random(x.shape)
        idx = (lo + (u < frac)).astype(np.int64)
        return np.clip(idx, 0, self.n)

    def expected_stop(self, v):
        """Expected absorption time v(2 − v)/δ²."""
        v = np.asarray(v, dtype=float)
        return v * (2.0 - v) / self.delta ** 2

    def min_stop(self, v):
        """Fewest usages before absorption: the straight descent."""
        return np.ceil(np.asarray(v, dtype=float) * self.n - _GRID_TOL)

    # -- batch interface ---------------------------------------------------
    def batch_init(self, v0, rng):
        idx = self.snap_index(v0, rng)
        return _WalkBatch(idx=idx, n=self.n)

    def batch_advance(self, state, rows, rng):
        i = state.idx[rows]
        up = rng.random(len(rows)) < 0.5
        step = np.where(i == state.n, -1, np.where(up, 1, -1))
        i = i + step
        state.idx[rows] = i
        return i == 0

    def to_dict(self):
        return {"kind": self.kind, "delta": self.delta}


@dataclass
class _WalkBatch:
    idx: np.ndarray
    n: int

    @property
    def values(self):
        return self.idx / self.n

    def values_at(self, rows):
        return self.idx[rows] / self.n


# ---------------------------------------------------------------------------
# binary model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearMean:
    """m(v) = intercept + slope·v, floored at 0."""

    slope: float = 10.0
    intercept: float = 0.0

    def __call__(self, v):
        return np.maximum(0.0, self.intercept + self.slope * np.asarray(v, dtype=float))

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class DeterministicStop:
    """T(v) = ⌊m(v)⌋ with certainty."""

    mean: LinearMean = field(default_factory=LinearMean)
    kind = "deterministic"

    def _t(self, v):
        return np.floor(self.mean(v) + 1e-12)

    def expected(self, v):
        return self._t(v)

    def min_support(self, v):
        return self._t(v)

    def continue_prob(self, v, usage):
        return np.where(usage + 1 <= self._t(v), 1.0, 0.0)

    def sample(self, v, rng):
        v = np.asarray(v, dtype=float)
        rng.random(v.shape)  # keep the stream aligned with the other laws
        return self._t(v).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, **self.mean.to_dict()}


@dataclass(frozen=True)
class GeometricStop:
    """Memoryless stop law with mean m(v).

    The first usage happens with probability ``min(1, m)``; every later usage
    continues with probability ``1 − 1/max(m, 1)``.  The mean is ``m`` in both
    regimes.
    """

    mean: LinearMean = field(default_factory=LinearMean)
    kind = "geometric"

    def expected(self, v):
        return self.mean(v)

    def min_support(self, v):
        m = self.mean(v)
        return np.where(m >= 1.0, 1.0, 0.0)

    def continue_prob(self, v, usage):
        m = self.mean(v)
        first = np.minimum(1.0, m)
        later = 1.0 - 1.0 / np.maximum(m, 1.0)
        return np.where(np.asarray(usage) == 0, first, later)

    def sample(self, v, rng):
        v = np.asarray(v, dtype=float)
        m = self.mean(v)
        u = rng.random(v.shape)
        starts = u < np.minimum(1.0, m)
        p = 1.0 / np.maximum(m, 1.0)
        extra = rng.geometric(p, size=v.shape)
        return np.where(starts, extra, 0).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, **self.mean.to_dict()}


@dataclass(frozen=True)
class TableStop:
    """Piecewise-constant stop law.

    Parameters
    ----------
    edges : sequence of float
        Increasing bin edges covering [0, 1]; bin j is ``[edges[j], edges[j+1])``
        and the last bin is closed.
    support : sequence of int
        Possible stop times, shared by all bins.
    probs : sequence of sequence of float
        One pmf over ``support`` per bin.
    """

    edges: tuple
    support: tuple
    probs: tuple
    kind = "table"

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        s = np.asarray(self.support)
        p = np.asarray(self.probs, dtype=float)
        if e.ndim != 1 or len(e) < 2 or np.any(np.diff(e) <= 0) or e[0] > 0 or e[-1] < 1:
            raise DomainError("edges must be increasing and cover [0, 1]")
        if s.ndim != 1 or np.any(s < 0) or np.any(s != np.floor(s)):
            raise DomainError("support must be nonnegative integers")
        if p.shape != (len(e) - 1, len(s)) or np.any(p < 0):
            raise DomainError("probs must be one nonnegative pmf per bin")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise DomainError("each pmf must sum to 1")
        object.__setattr__(self, "edges", tuple(map(float, e)))
        object.__setattr__(self, "support", tuple(int(x) for x in s))
        object.__setattr__(self, "probs", tuple(tuple(map(float, r)) for r in p))

    def _bin(self, v):
        e = np.asarray(self.edges)
        return np.clip(np.searchsorted(e, np.asarray(v, dtype=float), side="right") - 1,
                       0, len(e) - 2)

    def expected(self, v):
        p = np.asarray(self.probs)[self._bin(v)]
        return p @ np.asarray(self.support, dtype=float)

    def min_support(self, v):
        p = np.asarray(self.probs)[self._bin(v)]
        s = np.asarray(self.support, dtype=float)
        masked = np.where(p > 0, s, np.inf)
        return masked.min(axis=-1)

    def continue_prob(self, v, usage):
        p = np.asarray(self.probs)[self._bin(v)]
        s = np.asarray(self.support)
        usage = np.asarray(usage)[..., None]
        at_least = np.sum(np.where(s >= usage, p, 0.0), axis=-1)
        beyond = np.sum(np.where(s >= usage + 1, p, 0.0), axis=-1)
        return np.where(at_least > 0, beyond / np.where(at_least > 0, at_least, 1.0), 0.0)

    def sample(self, v, rng):
        v = np.asarray(v, dtype=float)
        cdf = np.cumsum(np.asarray(self.probs), axis=1)[self._bin(v)]
        u = rng.random(v.shape)[..., None]
        j = np.minimum(np.sum(cdf < u, axis=-1), len(self.support) - 1)
        return np.asarray(self.support, dtype=np.int64)[j]

    def to_dict(self):
        return {"kind": self.kind, "edges": list(self.edges), "support": list(self.support),
                "probs": [list(r) for r in self.probs]}


@dataclass(frozen=True)
class BinaryValueModel:
    """Value V0 for T(V0) usages, then 0."""

    stop_law: object = field(default_factory=GeometricStop)
    kind = "binary"

    def __post_init__(self):
        grid = np.linspace(0.0, 1.0, 100)
        m = np.asarray(self.stop_law.expected(grid), dtype=float)
        if np.any(~np.isfinite(m)) or np.any(m < 0):
            raise DomainError("E[T|v] must be finite and nonnegative")
        if np.any(np.diff(m) < -1e-12):
            raise DomainError("E[T|v] must be nondecreasing in v")

    def expected_stop(self, v):
        return self.stop_law.expected(v)

    def min_stop(self, v):
        return self.stop_law.min_support(v)

    def batch_init(self, v0, rng):
        v0 = np.asarray(v0, dtype=float)
        t = self.stop_law.sample(v0, rng)
        t = np.where(v0 > 0, t, 0)
        return _BinaryBatch(v0=v0, stop=t, usage=np.zeros(len(v0), dtype=np.int64))

    def batch_advance(self, state, rows, rng):
        state.usage[rows] += 1
        return state.usage[rows] >= state.stop[rows]

    def to_dict(self):
        return {"kind": self.kind, "stop": self.stop_law.to_dict()}


@dataclass
class _BinaryBatch:
    v0: np.ndarray
    stop: np.ndarray
    usage: np.ndarray

    @property
    def values(self):
        return np.where(self.usage < self.stop, self.v0, 0.0)

    def values_at(self, rows):
        return np.where(self.usage[rows] < self.stop[rows], self.v0[rows], 0.0)


# ---------------------------------------------------------------------------
# general martingale model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralMarkovModel:
    """Martingale walk with a finite, state-independent increment law.

    Parameters
    ----------
    increments : sequence of float
        Support of Δ.
    probs : sequence of float
        Probabilities; must give E[Δ] = 0.
    reflection : {"excursion", "immediate"}
        ``"excursion"``: a value above 1 is allowed for one step and the next
        value is the one before it.  ``"immediate"``: a step that would
        exceed 1 is replaced at once by the previous value.
    """

    increments: tuple
    probs: tuple
    reflection: str = "excursion"
    kind = "markov"

    def __post_init__(self):
        d = np.asarray(self.increments, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if d.ndim != 1 or d.shape != p.shape or len(d) < 2:
            raise DomainError("increments and probs must be matching 1-d sequences")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("probs must form a pmf")
        if abs(float(p @ d)) > 1e-12:
            raise DomainError("increment law must have mean zero")
        if self.reflection not in ("excursion", "immediate"):
            raise DomainError(f"unknown reflection rule {self.reflection!r}")
        object.__setattr__(self, "increments", tuple(map(float, d)))
        object.__setattr__(self, "probs", tuple(map(float, p)))

    @classmethod
    def symmetric(cls, delta: float, **kw):
        """±δ with probability ½ each."""
        return cls((delta, -delta), (0.5, 0.5), **kw)

    @classmethod
    def skewed(cls, delta: float, **kw):
        """+δ w.p. 2/3 and −2δ w.p. 1/3."""
        return cls((delta, -2.0 * delta), (2.0 / 3.0, 1.0 / 3.0), **kw)

    @property
    def epsilon(self) -> float:
        return float(np.max(np.abs(self.increments)))

    @property
    def delta_sq(self) -> float:
        return float(np.asarray(self.probs) @ np.asarray(self.increments) ** 2)

    @property
    def c3(self) -> float:
        return float(np.asarray(self.probs) @ np.asarray(self.increments) ** 3)

    def sample_increments(self, rng, size=None):
        return rng.choice(np.asarray(self.increments), size=size, p=np.asarray(self.probs))

    def expected_stop(self, v):
        v = np.asarray(v, dtype=float)
        return v * (2.0 - v) / self.delta_sq

    def next_value(self, prev, current, inc):
        """Vectorized transition given drawn increments."""
        prev = np.asarray(prev, dtype=float)
        current = np.asarray(current, dtype=float)
        # sums of increments drift in floating point; compare with a tolerance
        if self.reflection == "excursion":
            nxt = np.where(current > 1.0 + _GRID_TOL, prev, current + inc)
        else:
            nxt = np.where(current + inc > 1.0 + _GRID_TOL, prev, current + inc)
        return np.where(nxt <= _GRID_TOL, 0.0, nxt)

    def batch_init(self, v0, rng):
        v0 = np.asarray(v0, dtype=float).copy()
        return _GeneralBatch(values=v0, prev=v0.copy())

    def batch_advance(self, state, rows, rng):
        inc = self.sample_increments(rng, len(rows))
        cur = state.values[rows]
        nxt = self.next_value(state.prev[rows], cur, inc)
        state.prev[rows] = cur
        state.values[rows] = nxt
        return nxt <= 0.0

    def to_dict(self):
        return {"kind": self.kind,
                "increments": {"values": list(self.increments), "probs": list(self.probs)},
                "reflection": self.reflection}


@dataclass
class _GeneralBatch:
    values: np.ndarray
    prev: np.ndarray

    def values_at(self, rows):
        return self.values[rows]


# ---------------------------------------------------------------------------
# scalar steps and trajectories
# ---------------------------------------------------------------------------

def step_walk(model: RandomWalkModel, value: float, rng: np.random.Generator) -> float:
    """One step of the reflected/absorbed walk; returns 0.0 once absorbed."""
    i = model.index_of(value)
    if i == 0:
        return 0.0
    if i == model.n:
        return (model.n - 1) / model.n
    return (i + (1 if rng.random() < 0.5 else -1)) / model.n


def step_binary(model: BinaryValueModel, v0: float, usage: int,
                rng: np.random.Generator) -> float:
    """Value for usage ``usage + 1`` given the value survived ``usage`` usages."""
    if v0 <= 0.0:
        return 0.0
    q = float(model.stop_law.continue_prob(v0, usage))
    return float(v0) if rng.random() < q else 0.0


def step_general(model: GeneralMarkovModel, prev: float, current: float,
                 rng: np.random.Generator) -> float:
    """One transition from the window (V_{t-1}, V_t); returns 0.0 when absorbed."""
    if current <= 0.0:
        return 0.0
    inc = float(model.sample_increments(rng))
    return float(model.next_value(prev, current, inc))


@dataclass
class Trajectory:
    """A realized value path.

    ``values`` holds V0, ..., V_{stop−1}: the positive values at which a usage
    took place.
    """

    v0: float
    values: list
    stop_time: int
    absorbed: bool
    capped: bool


def default_cap(model, v0) -> int:
    """Usage cap 50·⌈E[T(v0)]⌉, at least 1."""
    return max(1, 50 * math.ceil(float(model.expected_stop(v0)) - 1e-9))


def sample_trajectory(model, v0: float, cap: int | None = None,
                      rng: np.random.Generator | None = None) -> Trajectory:
    """Run the scalar step operation until absorption or ``cap`` usages."""
    if rng is None:
        raise DomainError("a seeded generator is required")
    if cap is None:
        cap = default_cap(model, v0)
    if cap < 1:
        raise DomainError("cap must be at least 1")
    if isinstance(model, RandomWalkModel):
        model.index_of(v0)
    values = []
    v, prev = float(v0), float(v0)
    if isinstance(model, BinaryValueModel):
        v = step_binary(model, float(v0), 0, rng)
    while v > 0.0 and len(values) < cap:
        values.append(v)
        if isinstance(model, RandomWalkModel):
            v = step_walk(model, v, rng)
        elif isinstance(model, BinaryValueModel):
            v = step_binary(model, float(v0), len(values), rng)
        elif isinstance(model, GeneralMarkovModel):
            prev, v = v, step_general(model, prev, v, rng)
        else:
            raise DomainError(f"unknown model {model!r}")
    absorbed = v <= 0.0
    return Trajectory(v0=float(v0), values=values, stop_time=len(values),
                      absorbed=bool(absorbed), capped=not absorbed)
