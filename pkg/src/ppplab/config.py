"""Experiment configuration: a JSON document plus command-line overrides.

A config looks like::

    {
      "distribution": {"kind": "uniform"},
      "process": {"kind": "walk", "delta": 0.1},
      "schemes": [{"kind": "ppp", "price": 0.5}, {"kind": "bin", "price": "optimal"}],
      "profiles": [{"alpha": 0}],
      "n_samples": 100000,
      "seed": 1
    }

Every sub-spec is a mapping with a ``kind`` key and the constructor
arguments of the corresponding object, either inline or under ``params``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import distributions as D
from . import process as P
from . import schemes as S
from .errors import ConfigError, PPPLabError
from .strategy import RiskProfile

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_distribution",
    "parse_process",
    "parse_scheme",
    "parse_profile",
]


def _params(spec, what):
    if isinstance(spec, str):
        return spec, {}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{what} spec needs a 'kind' key: {spec!r}")
    params = dict(spec.get("params", {}))
    params.update({k: v for k, v in spec.items() if k not in ("kind", "params")})
    return str(spec["kind"]).lower(), params


def _build(what, fn, **kw):
    try:
        return fn(**kw)
    except ConfigError:
        raise
    except (PPPLabError, ValueError, OverflowError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"invalid {what} arguments: {exc}") from exc


def parse_distribution(spec):
    kind, p = _params(spec, "distribution")
    table = {
        "uniform": D.Uniform01,
        "power": lambda k=2.0: D.PowerCdf(float(k)),
        "point": lambda v: D.PointMass(float(v)),
        "table": lambda x, F: D.PiecewiseTable(tuple(x), tuple(F)),
    }
    if kind not in table:
        raise ConfigError(f"unknown distribution kind {kind!r}; choose from {sorted(table)}")
    return _build("distribution", table[kind], **p)


def _stop_law(spec):
    kind, p = _params(spec, "stop law")
    if kind in ("geometric", "deterministic"):
        mean = P.LinearMean(float(p.pop("slope", 10.0)), float(p.pop("intercept", 0.0)))
        if p:
            raise ConfigError(f"unexpected stop-law keys {sorted(p)}")
        cls = P.GeometricStop if kind == "geometric" else P.DeterministicStop
        return cls(mean)
    if kind == "table":
        return _build("stop law", lambda edges, support, probs: P.TableStop(
            tuple(edges), tuple(support), tuple(tuple(r) for r in probs)), **p)
    raise ConfigError(f"unknown stop law {kind!r}")


def _walk(delta):
    delta = float(delta)
    if not (0 < delta <= 1):
        raise ConfigError(f"delta must lie in (0, 1], got {delta}")
    n = round(1.0 / delta)
    if abs(n * delta - 1.0) > 1e-9:
        raise ConfigError(f"1/delta must be an integer, got delta={delta}")
    return P.RandomWalkModel(delta)


def parse_process(spec):
    kind, p = _params(spec, "process")
    if kind == "walk":
        return _build("process", _walk, **p)
    if kind == "binary":
        law = _stop_law(p.pop("stop", {"kind": "geometric"}))
        if p:
            raise ConfigError(f"unexpected binary-model keys {sorted(p)}")
        return _build("process", P.BinaryValueModel, stop_law=law)
    if kind == "markov":
        if "delta" in p and "increments" not in p:
            shape = p.pop("shape", "symmetric")
            if shape not in ("symmetric", "skewed"):
                raise ConfigError(f"unknown markov shape {shape!r}")
            return _build("process", getattr(P.GeneralMarkovModel, shape), **p)
        inc = p.pop("increments", None)
        if not isinstance(inc, dict) or "values" not in inc or "probs" not in inc:
            raise ConfigError("markov process needs increments {values, probs}")
        return _build("process", P.GeneralMarkovModel, increments=tuple(inc["values"]),
                      probs=tuple(inc["probs"]), **p)
    raise ConfigError(f"unknown process kind {kind!r}; choose from ['binary', 'markov', 'walk']")


def parse_profile(spec):
    if isinstance(spec, (int, float, str)):
        spec = {"alpha": spec}
    if not isinstance(spec, dict) or "alpha" not in spec:
        raise ConfigError(f"profile spec needs an 'alpha' key: {spec!r}")
    a = spec["alpha"]
    if isinstance(a, str):
        if a.lower() not in ("inf", "infinity"):
            raise ConfigError(f"alpha must be a number or 'inf', got {a!r}")
        a = math.inf
    return _build("profile", RiskProfile, alpha=float(a))


def parse_scheme(spec, model=None, F=None, profile=None, resolution=10_000, dry=False):
    """Build a pricing scheme.

    ``"optimal"`` prices (bin, ppp) and ``"recommended"`` free trials need
    the model; optimal prices also need ``F`` and ``profile``.  With
    ``dry=True`` optimal prices are only checked, not computed, and None is
    returned for them.
    """
    kind, p = _params(spec, "scheme")
    if kind in ("bin", "ppp") and p.get("price") == "optimal":
        if set(p) != {"price"}:
            raise ConfigError(f"unexpected scheme keys {sorted(set(p) - {'price'})}")
        if model is None or F is None or profile is None:
            raise ConfigError("an optimal price needs distribution, process and profile")
        if dry:
            return None
        if kind == "bin":
            return S.BuyItNow(S.optimal_bin(F, model, profile, resolution).price)
        return S.ConstantPPP(S.optimal_constant_ppp(F, model, profile)[0])
    if kind in ("free_ppp", "free_bin") and p.get("recommended"):
        if not isinstance(model, P.RandomWalkModel):
            raise ConfigError("recommended free trials need the random walk process")
        fn = S.recommended_free_trial_ppp if kind == "free_ppp" else S.recommended_free_trial_bin
        return fn(model)
    if kind == "rto" and "alpha" in p:
        if not isinstance(model, P.RandomWalkModel):
            raise ConfigError("rent-to-own parameters need the random walk process")
        if "v_star" in p:
            return _build("scheme", S.rent_to_own_params, alpha=float(p["alpha"]),
                          v_star=float(p["v_star"]), params=model)
        if F is None:
            raise ConfigError("rent-to-own without v_star needs a distribution")
        if dry:
            return None
        return _build("scheme", S.alpha_ppp_scheme, alpha=float(p["alpha"]), F=F, model=model)
    table = {
        "bin": lambda price: S.BuyItNow(float(price)),
        "ppp": lambda price: S.ConstantPPP(float(price)),
        "free_ppp": lambda trial_length, price: S.FreeTrialPPP(int(trial_length), float(price)),
        "free_bin": lambda trial_length, price: S.FreeTrialBIN(int(trial_length), float(price)),
        "rto": lambda price, paid_rounds=None: S.RentToOwn(
            float(price), None if paid_rounds is None else int(paid_rounds)),
        "sequence": lambda prices, tail_price=0.0: S.PriceSequence(tuple(prices),
                                                                   float(tail_price)),
    }
    if kind not in table:
        raise ConfigError(f"unknown scheme kind {kind!r}; choose from {sorted(table)}")
    return _build("scheme", table[kind], **p)


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    Sub-specs are kept in their JSON form; the ``build_*`` methods construct
    the objects.
    """

    distribution: dict = field(default_factory=lambda: {"kind": "uniform"})
    process: dict = field(default_factory=lambda: {"kind": "walk", "delta": 0.1})
    schemes: list = field(default_factory=lambda: [{"kind": "ppp", "price": 0.5},
                                                  {"kind": "bin", "price": "optimal"}])
    profiles: list = field(default_factory=lambda: [{"alpha": 0}])
    n_samples: int = 100_000
    seed: int | None = None
    out: str | None = None
    format: str = "json"
    grid_resolution: int = 10_000
    slack_constant: float = 10.0
    v_grid: list | None = None
    workers: int = 1

    def validate(self):
        self.build_distribution()
        self.build_process()
        for prof in self.build_profiles():
            self.build_schemes(prof, dry=True)
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigError("n_samples must be a positive integer")
        if self.seed is not None and (int(self.seed) != self.seed or self.seed < 0):
            raise ConfigError("seed must be a nonnegative integer")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        if self.grid_resolution < 1000:
            raise ConfigError("grid_resolution must be at least 1000")
        if not (self.slack_constant >= 0):
            raise ConfigError("slack_constant must be nonnegative")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if self.v_grid is not None:
            v = np.asarray(self.v_grid, dtype=float)
            if v.ndim != 1 or np.any((v < 0) | (v > 1)):
                raise ConfigError("v_grid must be a list of values in [0, 1]")
        return self

    def build_distribution(self):
        return parse_distribution(self.distribution)

    def build_process(self):
        return parse_process(self.process)

    def build_profiles(self):
        if not self.profiles:
            raise ConfigError("at least one profile is required")
        return [parse_profile(p) for p in self.profiles]

    def build_schemes(self, profile=None, dry=False):
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        model, F = self.build_process(), self.build_distribution()
        profile = profile or self.build_profiles()[0]
        return [parse_scheme(s, model, F, profile, self.grid_resolution, dry)
                for s in self.schemes]

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required for Monte Carlo commands (--seed or 'seed')")
        return int(self.seed)

    def to_dict(self):
        return asdict(self)


_FIELDS = set(ExperimentConfig.__dataclass_fields__)


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Read a JSON config (or start from defaults) and apply overrides.

    ``overrides`` keys: ``seed``, ``n_samples``, ``delta``, ``out``,
    ``format``.  Entries whose value is None are ignored.
    """
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if "master_seed" in raw:
        raw.setdefault("seed", raw.pop("master_seed"))
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key in ("schemes", "profiles"):
        if key in raw and isinstance(raw[key], dict):
            raw[key] = [raw[key]]
    cfg = ExperimentConfig(**raw)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "delta":
            proc = dict(cfg.process)
            proc.setdefault("kind", "walk")
            if proc["kind"] not in ("walk", "markov"):
                raise ConfigError("--delta applies to walk and markov processes")
            proc.pop("params", None)
            proc["delta"] = val
            cfg.process = proc
        elif key in _FIELDS:
            setattr(cfg, key, val)
        else:
            raise ConfigError(f"unknown override {key!r}")
    return cfg.validate()
