"""Experiment configuration documents (YAML or JSON).

Schema (all keys optional except ``scenario``)::

    scenario: parabolic | hyperbolic | error | sweep | lemmas
    operator:                   # either a preset ...
      preset: coercive-uniform  # or noncoercive-1/k2
      n: 8
    # operator: {eigenvalues: [1, 4, 9], coercive: true}   # ... or explicit
    epsilon: 1.0e-3
    gamma: 1.0                  # >= 1
    p: 0.0                      # in [0, 1]
    u0: [1.0, 0.5, ...]         # default 1/k
    u1: [0.0, ...]              # default 0
    horizon: 1.0e4
    tol: 1.0e-9
    epsilons: [1.0e-2, 3.1623e-3, 1.0e-3, 3.1623e-4]   # sweep only, decreasing
    n_instances: 1000           # lemmas only
    seed: 20240611
    output: results
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .lemmas import DEFAULT_SEED
from .problem import DEFAULT_HORIZON, DEFAULT_TOL, ProblemConfig
from .spectral import PRESETS, NonlinearityParams, SpectralOperator

SCENARIOS = ("parabolic", "hyperbolic", "error", "sweep", "lemmas")
DEFAULT_EPSILONS = (1e-2, 10**-2.5, 1e-3, 10**-3.5)
DEFAULT_PRESET_SIZE = 8
_KEYS = {"scenario", "operator", "epsilon", "gamma", "p", "u0", "u1", "horizon", "tol",
         "epsilons", "n_instances", "seed", "output"}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    operator: dict
    eigenvalues: tuple
    coercive: bool
    epsilon: float = 1e-3
    gamma: float = 1.0
    p: float = 0.0
    u0: tuple = ()
    u1: tuple = ()
    horizon: float = DEFAULT_HORIZON
    tol: float = DEFAULT_TOL
    epsilons: tuple = DEFAULT_EPSILONS
    n_instances: int = 1000
    seed: int = DEFAULT_SEED
    output: str = "results"
    source: str = field(default=None, compare=False)

    @property
    def op(self):
        return SpectralOperator(np.array(self.eigenvalues), coercive=self.coercive)

    @property
    def params(self):
        return NonlinearityParams(self.gamma, self.p)

    def problem_config(self, epsilon=None):
        return ProblemConfig(
            op=self.op, u0=np.array(self.u0), u1=np.array(self.u1),
            epsilon=self.epsilon if epsilon is None else epsilon,
            params=self.params, horizon=self.horizon, tol=self.tol,
        )

    def with_overrides(self, **kw):
        """Re-validate with some top-level keys replaced (``None`` values are ignored)."""
        doc = self.to_document()
        doc.update({k: v for k, v in kw.items() if v is not None})
        return validate_config(doc, source=self.source)

    def to_document(self):
        d = asdict(self)
        for k in ("eigenvalues", "coercive", "source"):
            d.pop(k)
        d["u0"], d["u1"], d["epsilons"] = list(self.u0), list(self.u1), list(self.epsilons)
        return d


def _as_number(val):
    # YAML 1.1 loads "1.0e4" (unsigned exponent) as a string.
    if isinstance(val, str):
        try:
            return float(val)
        except ValueError:
            return val
    return val


def _real(doc, key, errors, default, lo=None, hi=None, lo_open=False, note=""):
    val = _as_number(doc.get(key, default))
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        errors.append(f"{key} must be a finite real number, got {val!r}")
        return default
    val = float(val)
    if lo is not None and (val < lo or (lo_open and val == lo)):
        errors.append(f"{key}={val:g} violates {key} {'>' if lo_open else '>='} {lo:g}{note}")
    if hi is not None and val > hi:
        errors.append(f"{key}={val:g} violates {key} <= {hi:g}{note}")
    return val


def _vector(val, key, errors):
    if not isinstance(val, (list, tuple)) or not val:
        errors.append(f"{key} must be a nonempty list of numbers")
        return None
    try:
        arr = np.array([float(_as_number(x)) for x in val if not isinstance(x, bool)], dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{key} must contain only numbers")
        return None
    if arr.size != len(val) or not np.all(np.isfinite(arr)):
        errors.append(f"{key} must contain only finite numbers")
        return None
    return arr


def _operator(entry, errors):
    if entry is None:
        entry = {"eigenvalues": [1.0]}
    if not isinstance(entry, dict):
        errors.append("operator must be a mapping with 'preset' or 'eigenvalues'")
        return entry, None, None
    unknown = set(entry) - {"preset", "n", "eigenvalues", "coercive"}
    if unknown:
        errors.append(f"unknown operator keys: {sorted(unknown)}")
    if ("preset" in entry) == ("eigenvalues" in entry):
        errors.append("operator needs exactly one of 'preset' or 'eigenvalues'")
        return entry, None, None
    if "preset" in entry:
        n = entry.get("n", DEFAULT_PRESET_SIZE)
        if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= 64:
            errors.append(f"operator.n must be an integer in [1, 64], got {n!r}")
            return entry, None, None
        if entry["preset"] not in PRESETS:
            errors.append(f"unknown operator preset {entry['preset']!r}; choose from {list(PRESETS)}")
            return entry, None, None
        op = SpectralOperator.from_preset(entry["preset"], n)
        return {"preset": entry["preset"], "n": n}, op.eigenvalues, op.coercive
    lam = _vector(entry["eigenvalues"], "operator.eigenvalues", errors)
    if lam is None:
        return entry, None, None
    if np.any(lam < 0):
        errors.append("operator.eigenvalues must be nonnegative")
        return entry, None, None
    coercive = entry.get("coercive", bool(lam.min() > 0))
    if not isinstance(coercive, bool):
        errors.append("operator.coercive must be true or false")
        return entry, None, None
    if coercive and lam.min() <= 0:
        errors.append("operator.coercive=true requires positive eigenvalues")
    return {"eigenvalues": lam.tolist(), "coercive": coercive}, lam, coercive


def validate_config(doc, source=None):
    """Validate a parsed document and fill defaults; raises :class:`ConfigError` listing all problems."""
    if not isinstance(doc, dict):
        raise ConfigError(["configuration must be a mapping of keys to values"])
    errors = []
    unknown = set(doc) - _KEYS
    if unknown:
        errors.append(f"unknown keys: {sorted(unknown)}")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        errors.append(f"scenario must be one of {list(SCENARIOS)}, got {scenario!r}")
    op_doc, lam, coercive = _operator(doc.get("operator"), errors)
    eps = _real(doc, "epsilon", errors, 1e-3, lo=0.0, hi=1.0, lo_open=True)
    gamma = _real(doc, "gamma", errors, 1.0, lo=1.0,
                  note=" (the nonlinearity requires gamma >= 1)")
    p = _real(doc, "p", errors, 0.0, lo=0.0, hi=1.0, note=" (p must lie in [0, 1])")
    horizon = _real(doc, "horizon", errors, DEFAULT_HORIZON, lo=0.0, lo_open=True)
    tol = _real(doc, "tol", errors, DEFAULT_TOL, lo=0.0, hi=1e-3, lo_open=True)

    u0 = u1 = None
    if lam is not None:
        n = lam.size
        u0 = (_vector(doc["u0"], "u0", errors) if "u0" in doc
              else 1.0 / np.arange(1, n + 1, dtype=float))
        u1 = _vector(doc["u1"], "u1", errors) if "u1" in doc else np.zeros(n)
        for name, vec in (("u0", u0), ("u1", u1)):
            if vec is not None and vec.size != n:
                errors.append(f"{name} has {vec.size} entries but the operator has {n} modes")
        if u0 is not None and u0.size == n and not float(np.dot(lam, u0 * u0)) > 0:
            errors.append("initial datum must satisfy |A^{1/2}u0| != 0 (mildly degenerate setting)")

    epsilons = doc.get("epsilons", list(DEFAULT_EPSILONS))
    eps_arr = _vector(epsilons, "epsilons", errors)
    if eps_arr is not None:
        if np.any(eps_arr <= 0) or np.any(eps_arr > 1):
            errors.append("epsilons must lie in (0, 1]")
        if np.any(np.diff(eps_arr) >= 0):
            errors.append("epsilons must be strictly decreasing")
        if scenario == "sweep" and eps_arr.size < 3:
            errors.append("a sweep needs at least 3 epsilons for the slope fit")

    n_inst = doc.get("n_instances", 1000)
    if isinstance(n_inst, bool) or not isinstance(n_inst, int) or n_inst < 1:
        errors.append(f"n_instances must be a positive integer, got {n_inst!r}")
    seed = doc.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        errors.append(f"seed must be an integer in [0, 2^64), got {seed!r}")
    output = doc.get("output", "results")
    if not isinstance(output, str) or not output:
        errors.append("output must be a nonempty path string")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        scenario=scenario, operator=op_doc, eigenvalues=tuple(lam.tolist()), coercive=coercive,
        epsilon=eps, gamma=gamma, p=p, u0=tuple(u0.tolist()), u1=tuple(u1.tolist()),
        horizon=horizon, tol=tol, epsilons=tuple(eps_arr.tolist()), n_instances=n_inst,
        seed=seed, output=output, source=source,
    )


def load_config(path):
    """Parse a YAML or JSON file and validate it.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ConfigError
        On parse errors or any violated precondition.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"cannot parse {path}: {exc}"]) from exc
    return validate_config(doc, source=str(path))
