"""Total rates, partial rate sums, the limit constant and regime labels.

Conventions:
  * rescaled time, i.e. every spreading rate is divided by R_n^- (the total
    rate of the minus type), and lambda_- == 1;
  * R_j(alpha) sums ||v||^-alpha over the j nearest *nonzero* points, so the
    full torus sum is R_{n-1};
  * for n that is not a perfect d-th power the sum runs over the n-1 nearest
    nonzero points of the smallest torus with at least n vertices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping

import numpy as np

from .alias import build_alias
from .torus import TorusPoint, TorusSpec, antipode, displacement_norms, sorted_nonzero_norms, to_flat, wrap

MINUS, PLUS = 0, 1
TYPES = {"minus": MINUS, "plus": PLUS, "-": MINUS, "+": PLUS, MINUS: MINUS, PLUS: PLUS}

FAMILY_KINDS = {
    "constant": ("c",),
    "affine_log": ("a", "b"),
    "log_squared": ("a", "b"),
    "log_power": ("a", "b", "q"),
    "power": ("a", "b"),
    "table": ("values",),
}

# beyond this many vertices rate sums fall back to R(alpha) n^(1 - alpha/d)
EXACT_RATE_CAP = 2_000_000
DEFAULT_REGIME_GRID = tuple(10**k for k in range(2, 11))
PLACEMENTS = ("antipodal", "uniform-distinct", "explicit")


def _type_index(kind) -> int:
    try:
        return TYPES[kind]
    except KeyError:
        raise ValueError(f"unknown infection type {kind!r}") from None


@dataclass(frozen=True)
class ParamFamily:
    """A parameter sequence n -> value."""

    kind: str
    coefficients: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {sorted(FAMILY_KINDS)}")
        missing = [k for k in FAMILY_KINDS[self.kind] if k not in self.coefficients]
        extra = [k for k in self.coefficients if k not in FAMILY_KINDS[self.kind]]
        if missing or extra:
            raise ValueError(f"family {self.kind!r} needs coefficients {FAMILY_KINDS[self.kind]}, "
                             f"missing={missing} unexpected={extra}")

    @classmethod
    def constant(cls, c: float) -> "ParamFamily":
        return cls("constant", {"c": float(c)})

    @classmethod
    def log_power(cls, a: float, b: float, q: float) -> "ParamFamily":
        return cls("log_power", {"a": float(a), "b": float(b), "q": float(q)})

    def __call__(self, n: int) -> float:
        c = self.coefficients
        if self.kind == "constant":
            return float(c["c"])
        logn = math.log(n)
        if self.kind == "affine_log":
            return c["a"] + c["b"] * logn
        if self.kind == "log_squared":
            return c["a"] + c["b"] * logn**2
        if self.kind == "log_power":
            return c["a"] + c["b"] * logn ** c["q"]
        if self.kind == "power":
            return c["a"] * float(n) ** c["b"]
        values = {int(k): float(v) for k, v in c["values"].items()}
        if n not in values:
            raise ValueError(f"table family has no entry for n={n}")
        return values[n]

    def to_dict(self) -> dict:
        if self.kind == "table":
            return {"kind": "table", "values": {str(k): v for k, v in self.coefficients["values"].items()}}
        return {"kind": self.kind, **{k: float(v) for k, v in self.coefficients.items()}}


@dataclass(frozen=True)
class ModelParams:
    spec: TorusSpec
    alpha_minus: ParamFamily = ParamFamily.constant(0.0)
    alpha_plus: ParamFamily = ParamFamily.constant(0.0)
    lam: ParamFamily = ParamFamily.constant(1.0)
    placement: str = "antipodal"
    source_minus: TorusPoint | None = None
    source_plus: TorusPoint | None = None
    # finite-torus sums exist for any alpha >= 0; alpha < d is only needed for limits
    enforce_alpha: bool = True

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        self.check(self.spec.n)
        if self.placement == "explicit":
            if self.source_minus is None or self.source_plus is None:
                raise ValueError("explicit placement requires both sources")
            if wrap(self.source_minus, self.spec) == wrap(self.source_plus, self.spec):
                raise ValueError("sources must be distinct")

    def check(self, n: int) -> None:
        d = self.spec.d
        for name, fam in (("alpha_minus", self.alpha_minus), ("alpha_plus", self.alpha_plus)):
            a = fam(n)
            if not (0 <= a < d or (a >= 0 and not self.enforce_alpha)):
                raise ValueError(f"{name}({n}) = {a} outside [0, {d})")
        if not self.lam(n) > 0:
            raise ValueError(f"lambda({n}) = {self.lam(n)} must be positive")

    @property
    def n(self) -> int:
        return self.spec.n

    def alphas(self) -> tuple[float, float]:
        return self.alpha_minus(self.n), self.alpha_plus(self.n)

    def lambda_value(self) -> float:
        return self.lam(self.n)

    def with_m(self, m: int) -> "ModelParams":
        return replace(self, spec=TorusSpec(self.spec.d, m, self.spec.p))

    def swapped(self) -> "ModelParams":
        """Exchange the two types; lambda is renormalised so lambda_- stays 1."""
        lam = 1.0 / self.lambda_value()
        return replace(self, alpha_minus=self.alpha_plus, alpha_plus=self.alpha_minus,
                       lam=ParamFamily.constant(lam),
                       source_minus=self.source_plus, source_plus=self.source_minus)

    def sources(self, rng: np.random.Generator | None = None) -> tuple[int, int]:
        """Flat indices of (v-, v+)."""
        spec = self.spec
        if self.placement == "antipodal":
            return 0, to_flat(antipode(spec), spec)
        if self.placement == "explicit":
            return to_flat(self.source_minus, spec), to_flat(self.source_plus, spec)
        if rng is None:
            raise ValueError("uniform-distinct placement needs a random stream")
        a = int(rng.integers(0, spec.n))
        b = int(rng.integers(0, spec.n - 1))
        return a, b + (b >= a)

    def to_dict(self) -> dict:
        out = {
            "d": self.spec.d, "m": self.spec.m,
            "norm_p": "inf" if math.isinf(self.spec.p) else self.spec.p,
            "alpha_minus": self.alpha_minus.to_dict(),
            "alpha_plus": self.alpha_plus.to_dict(),
            "lambda": self.lam.to_dict(),
            "placement": self.placement,
        }
        if self.placement == "explicit":
            out["source_minus"] = list(self.source_minus)
            out["source_plus"] = list(self.source_plus)
        return out


@dataclass(frozen=True)
class RateSummary:
    r_minus: float
    r_plus: float
    z: float
    c: float
    regime: str = "indeterminate"


@lru_cache(maxsize=64)
def _sorted_norms_cached(d: int, m: int, p: float) -> np.ndarray:
    arr = sorted_nonzero_norms(TorusSpec(d, m, p))
    arr.setflags(write=False)
    return arr


def partial_rate_sum(j: int, alpha: float, spec: TorusSpec) -> float:
    """R_j(alpha): sum of ||v||^-alpha over the j nearest nonzero points."""
    if not 1 <= j <= spec.n - 1:
        raise ValueError(f"j must lie in [1, {spec.n - 1}], got {j}")
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0:
        return float(j)
    norms = _sorted_norms_cached(spec.d, spec.m, spec.p)[:j]
    return math.fsum(norms ** (-alpha))


def ambient_side(n: int, d: int) -> int:
    """Smallest m with m**d >= n."""
    m = max(2, int(round(n ** (1.0 / d))))
    while m**d < n:
        m += 1
    while m > 2 and (m - 1) ** d >= n:
        m -= 1
    return m


def rate_sum_n(n: int, alpha: float, d: int, p: float) -> float:
    """R_n(alpha) for arbitrary n >= 2 (exact up to EXACT_RATE_CAP vertices)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if alpha == 0:
        return float(n - 1)
    m = ambient_side(n, d)
    if m**d > EXACT_RATE_CAP:
        if alpha >= d:
            raise ValueError(f"alpha must lie in [0, {d}) for the asymptotic rate")
        return limit_constant(alpha, d, p) * n ** (1 - alpha / d)
    return partial_rate_sum(n - 1, alpha, TorusSpec(d, m, p))


def total_rates(params: ModelParams, regime_grid=None) -> RateSummary:
    """R_n^-, R_n^+, Z_n, c_n at the instance size; optionally label the regime."""
    spec = params.spec
    a_minus, a_plus = params.alphas()
    r_minus = partial_rate_sum(spec.n - 1, a_minus, spec)
    r_plus = params.lambda_value() * partial_rate_sum(spec.n - 1, a_plus, spec)
    z = r_plus / r_minus
    regime = classify_regime(params, regime_grid) if regime_grid is not None else "indeterminate"
    return RateSummary(r_minus, r_plus, z, (z - 1.0) * math.log(spec.n), regime)


def rates_at(params: ModelParams, n: int) -> RateSummary:
    """Rate summary of the family at an arbitrary n (general-n convention)."""
    d, p = params.spec.d, params.spec.p
    params.check(n)
    r_minus = rate_sum_n(n, params.alpha_minus(n), d, p)
    r_plus = params.lam(n) * rate_sum_n(n, params.alpha_plus(n), d, p)
    z = r_plus / r_minus
    return RateSummary(r_minus, r_plus, z, (z - 1.0) * math.log(n))


# -- limit constant ------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _norm_p(x: np.ndarray, p: float) -> np.ndarray:
    if p == 1:
        return x.sum(axis=-1)
    if math.isinf(p):
        return x.max(axis=-1)
    return (x**p).sum(axis=-1) ** (1.0 / p)


def _sorted_integrand(s: np.ndarray, alpha: float, p: float) -> np.ndarray:
    """||(1, s1, s1*s2, ...)||^-alpha times the Jacobian prod_k s_k^(d-1-k)."""
    k = s.shape[-1]
    x = np.concatenate([np.ones(s.shape[:-1] + (1,)), np.cumprod(s, axis=-1)], axis=-1)
    jac = np.prod(s ** np.arange(k - 1, -1, -1), axis=-1)
    return _norm_p(x, p) ** (-alpha) * jac


def _cell_rule(lo: np.ndarray, h: float, alpha: float, p: float) -> float:
    k = lo.size
    t = (_GL_NODES + 1.0) * 0.5 * h
    w = _GL_WEIGHTS * 0.5 * h
    pts = np.stack(np.meshgrid(*([t] * k), indexing="ij"), axis=-1).reshape(-1, k) + lo
    wts = np.prod(np.stack(np.meshgrid(*([w] * k), indexing="ij"), axis=-1).reshape(-1, k), axis=1)
    return float(np.dot(wts, _sorted_integrand(pts, alpha, p)))


def _adaptive_cube(lo, h, alpha, p, tol, depth=0) -> float:
    k = lo.size
    coarse = _cell_rule(lo, h, alpha, p)
    half = h / 2
    kids = [lo + half * np.array(c) for c in itertools.product((0, 1), repeat=k)]
    fine = math.fsum(_cell_rule(c, half, alpha, p) for c in kids)
    if abs(fine - coarse) <= tol or depth >= 12:
        return fine
    return math.fsum(_adaptive_cube(c, half, alpha, p, tol / 2**k, depth + 1) for c in kids)


@lru_cache(maxsize=256)
def limit_constant(alpha: float, d: int, p: float, tol: float = 1e-10) -> float:
    """R(alpha, d, p) = 2^d * int_{[0,1/2]^d} ||x||_p^-alpha dx.

    The integrand is symmetric in the coordinates, so integrate over the
    sorted region 1/2 >= x1 >= x2 >= ... and multiply by d!.  Writing
    x1 = r, x_{k+1} = x_k * s_k with s in [0,1]^(d-1) separates the radial
    singularity, int_0^(1/2) r^(d-1-alpha) dr = 2^(alpha-d)/(d-alpha), from a
    smooth integral over the unit cube that is done by adaptive cubature.
    """
    if not 0 <= alpha < d:
        raise ValueError(f"alpha must lie in [0, {d}) for a finite limit constant, got {alpha}")
    if alpha == 0:
        return 1.0
    radial = 2.0 ** (alpha - d) / (d - alpha)
    if d == 1:
        angular = 1.0
    else:
        angular = _adaptive_cube(np.zeros(d - 1), 1.0, alpha, p, tol)
    return 2.0**d * math.factorial(d) * radial * angular


# -- regimes -------------------------------------------------------------

def _bounded(x: np.ndarray) -> bool:
    top = np.max(np.abs(x))
    return top <= 1e-9 or (np.max(x) - np.min(x)) <= 0.2 * top


def _doubles(x: np.ndarray) -> bool:
    return bool(x[0] > 0 and x[-1] >= 2 * x[0] and np.all(np.diff(x) >= -1e-12 * np.abs(x[1:])))


def _halves(x: np.ndarray) -> bool:
    return bool(x[0] > 0 and x[-1] <= 0.5 * x[0] and np.all(np.diff(x) <= 1e-12 * np.abs(x[1:])))


def classify_regime(params: ModelParams, n_grid=DEFAULT_REGIME_GRID) -> str:
    """Finite-grid proxy for the asymptotic regime of c_n = (Z_n - 1) log n.

    Heuristic: a ratio "diverges" if it at least doubles monotonically across
    the grid, is "bounded" if its spread is within 20% of its maximum, and
    "vanishes" if it at least halves monotonically.
    """
    grid = sorted(int(n) for n in n_grid)
    if len(grid) < 3:
        raise ValueError("need at least 3 grid points")
    logn = np.log(np.array(grid, dtype=float))
    c = np.abs(np.array([rates_at(params, n).c for n in grid]))
    if _bounded(c):
        return "coexistence"
    r2 = c / logn**2
    if _doubles(r2):
        return "case-i"
    if _bounded(r2):
        return "case-ii"
    if _doubles(c):
        return "case-iv" if _halves(c / logn) else "case-iii"
    return "indeterminate"


# -- displacement distributions -----------------------------------------

def kernel_weights(params: ModelParams, kind) -> np.ndarray:
    """lambda_t * ||v||^-alpha_t per flat displacement; the origin gets 0."""
    t = _type_index(kind)
    alpha = params.alphas()[t]
    lam = 1.0 if t == MINUS else params.lambda_value()
    norms = displacement_norms(params.spec)
    w = np.zeros(params.spec.n)
    w[1:] = lam * norms[1:] ** (-alpha)
    return w


@dataclass(frozen=True)
class DisplacementTable:
    """p_n(v) over flat displacements plus an alias table over v != 0."""

    probs: np.ndarray
    prob: np.ndarray
    alias: np.ndarray

    def sample(self, rng: np.random.Generator) -> int:
        i = int(rng.integers(0, self.prob.size))
        return 1 + (i if rng.random() < self.prob[i] else int(self.alias[i]))


def displacement_table(params: ModelParams, kind) -> DisplacementTable:
    w = kernel_weights(params, kind)
    probs = w / math.fsum(w)
    prob, alias = build_alias(probs[1:])
    return DisplacementTable(probs, prob, alias)
