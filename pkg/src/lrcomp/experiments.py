"""Scenarios: finite-n statistical checks of the coexistence / non-coexistence picture.

Each scenario fixes a parameter template, a grid of side lengths, an engine, a
number of runs per grid point, an observable and a pass rule.  Run ``i`` at
grid position ``g`` uses stream ``derive_stream(seed, g * runs + i)``, so any
single trajectory can be replayed from the report alone.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .coupled import coupled_run, defect_size, phase_time, prepare_coupled
from .gillespie import ORACLE_CAP, OracleCapExceeded, RunResult, gillespie_run, prepare_oracle
from .rates import (ModelParams, ParamFamily, limit_constant, rate_sum_n, total_rates)
from .seeding import derive_stream
from .stats import (SIGNIFICANCE, chi_square_gof, chi_square_two_sample, geometric_reference,
                    histogram, iqr, tv_distance)
from .torus import TorusSpec
from .urn import urn_run
from .yule import geometric_sizes

ENGINES = ("coupled", "oracle")
TESTS = ("fraction", "tv-geometric", "median-band", "exceedance", "chi-square",
         "rel-error", "two-sample")
DEFAULT_SEED = 20240611
PHASE_M = 8.0

# equal alpha used by the phase-diagram scenarios
SCENARIO_ALPHA = 0.5


def thread_count() -> int:
    env = os.environ.get("LRC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class ScenarioSpec:
    name: str
    params: ModelParams
    m_grid: tuple[int, ...]
    engine: str = "coupled"
    runs: int = 2000
    observable: str = "m_n"
    test: str = "fraction"
    tolerance: float = 0.1
    seed: int = DEFAULT_SEED
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        self.m_grid = tuple(int(m) for m in self.m_grid)
        if self.runs < 100:
            raise ValueError(f"runs must be >= 100, got {self.runs}")
        if not self.m_grid:
            raise ValueError("grid must be nonempty")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.test not in TESTS:
            raise ValueError(f"test must be one of {TESTS}")
        for m in self.m_grid:
            self.params.with_m(m)  # validates alpha range at every n

    def n_grid(self) -> list[int]:
        return [m ** self.params.spec.d for m in self.m_grid]

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params.to_dict(), "m_grid": list(self.m_grid),
                "engine": self.engine, "runs": self.runs, "observable": self.observable,
                "test": self.test, "tolerance": self.tolerance, "seed": self.seed,
                "options": _json_options(self.options)}


def _json_options(options: dict) -> dict:
    out = dict(options)
    if "settings" in out:
        out["settings"] = [[label, p.to_dict()] for label, p in out["settings"]]
    return out


@dataclass
class ScenarioReport:
    spec: dict
    per_n: list[dict]
    statistics: dict
    passed: bool
    runtimes: list[float] = field(default_factory=list)
    results: list[RunResult] = field(default_factory=list, repr=False)

    def summary_line(self) -> str:
        return f"{self.spec['name']}: {'PASS' if self.passed else 'FAIL'} {self.statistics}"


# -- batched runs ---------------------------------------------------------

def _defect_rng(stream_seed: int) -> np.random.Generator:
    return np.random.default_rng([stream_seed, 1])


def run_batch(params: ModelParams, engine: str, master_seed: int, indices, phase_m: float | None = PHASE_M,
              checkpoint_times=(), threads: int | None = None) -> list[RunResult]:
    """Runs for the given run indices, returned in index order."""
    indices = list(indices)
    if engine == "oracle":
        tables = prepare_oracle(params, ORACLE_CAP)
    else:
        tables = prepare_coupled(params)
    rates = tables.rates
    echo = params.to_dict()
    t_n = phase_time(params.n, rates.z, phase_m) if phase_m is not None else None
    times = tuple(checkpoint_times) + ((t_n,) if t_n is not None else ())

    def one(i):
        s = derive_stream(master_seed, i)
        if engine == "oracle":
            res = gillespie_run(params, s, times, tables=tables)
        else:
            res, log = coupled_run(params, s, times, tables=tables)
            if t_n is not None:
                rng = _defect_rng(s)
                if t_n > 0:
                    res.defect_minus_at_tn = defect_size(log, t_n, "minus", rates, rng)
                    res.defect_plus_at_tn = defect_size(log, t_n, "plus", rates, rng)
                else:
                    res.defect_minus_at_tn = res.defect_plus_at_tn = 0
        res.run_index = i
        res.params = echo
        return res

    threads = threads or thread_count()
    if threads == 1 or len(indices) < 2:
        return [one(i) for i in indices]
    with ThreadPoolExecutor(threads) as pool:
        out = list(pool.map(one, indices, chunksize=64))
    out.sort(key=lambda r: r.run_index)
    return out


# -- observables and pass rules -----------------------------------------------

def observable_values(results: list[RunResult], name: str, options: dict) -> np.ndarray:
    n = results[0].n
    z = results[0].z
    c = results[0].c_n
    m_n = np.array([r.m_n for r in results], dtype=float)
    if name == "m_n":
        return m_n
    if name == "n_minus":
        return np.array([r.n_minus for r in results], dtype=float)
    if name == "coexist":
        return (m_n / n > options.get("threshold", 0.05)).astype(float)
    if name == "m_n_is_1":
        return (m_n == 1).astype(float)
    if name == "log_ratio":
        return np.log(m_n) * z / math.log(n)
    if name == "log_gap":
        return (math.log(n) - np.log(m_n)) / c
    if name == "phase_event":
        return phase_event(results, options.get("A", 20.0), options.get("phase_m", PHASE_M),
                           options.get("xi", 1e-3)).astype(float)
    raise ValueError(f"unknown observable {name!r}")


def phase_event(results: list[RunResult], a: float, m: float, xi: float) -> np.ndarray:
    """Indicator of {N-(t_n) <= A e^{t_n}} and {N+(t_n) >= xi n} at t_n = (log n - m)/Z_n."""
    out = []
    for r in results:
        t_n = phase_time(r.n, r.z, m)
        cm, cp = r.checkpoint(t_n)
        out.append(cm <= a * math.exp(t_n) and cp >= xi * r.n)
    return np.array(out, dtype=bool)


def _closer(a: float, b: float, target: float) -> bool:
    return abs(a - target) < abs(b - target)


def _evaluate_mn(spec: ScenarioSpec, per_n: list[dict], values: list[np.ndarray]) -> tuple[dict, bool]:
    tol = spec.tolerance
    if spec.test == "fraction":
        fracs = [float(v.mean()) for v in values]
        for row, f in zip(per_n, fracs):
            row["fraction"] = f
        ok_last = fracs[-1] >= 1.0 - tol
        trend = all(b >= a for a, b in zip(fracs, fracs[1:]))
        stats = {"fraction_last": fracs[-1], "threshold": 1.0 - tol, "non_decreasing": trend}
        return stats, ok_last and (trend or not spec.options.get("require_trend", True))
    if spec.test == "tv-geometric":
        c = spec.options.get("c", 1.0)
        ref = geometric_reference(math.exp(-1.0 / abs(c)))
        tvs = []
        for row, v in zip(per_n, values):
            counts = histogram(v.astype(np.int64))
            tvs.append(tv_distance(counts / counts.sum(), ref))
            row["tv"] = tvs[-1]
        stats = {"tv_last": tvs[-1], "tv_first": tvs[0], "tolerance": tol}
        return stats, tvs[-1] < tol and tvs[-1] < tvs[0]
    if spec.test == "median-band":
        target = spec.options.get("target", 1.0)
        meds = [float(np.median(v)) for v in values]
        iqrs = [iqr(v) for v in values]
        for row, med, q in zip(per_n, meds, iqrs):
            row["median"] = med
            row["iqr"] = q
        ok = abs(meds[-1] - target) <= tol
        stats = {"median_last": meds[-1], "median_first": meds[0], "band": [target - tol, target + tol]}
        if spec.options.get("closer", False):
            stats["closer"] = _closer(meds[-1], meds[0], target)
            ok = ok and stats["closer"]
        if spec.options.get("iqr_shrink", False):
            stats["iqr_first"], stats["iqr_last"] = iqrs[0], iqrs[-1]
            stats["iqr_shrinks"] = iqrs[-1] < iqrs[0]
            ok = ok and stats["iqr_shrinks"]
        return stats, ok
    raise ValueError(f"test {spec.test!r} does not apply to run observables")


def _run_grid(spec: ScenarioSpec, threads=None) -> ScenarioReport:
    per_n, values, runtimes, all_results = [], [], [], []
    phase_m = spec.options.get("phase_m", PHASE_M) if spec.engine == "coupled" else None
    for g, m in enumerate(spec.m_grid):
        params = spec.params.with_m(m)
        start = g * spec.runs
        t0 = time.perf_counter()
        results = run_batch(params, spec.engine, spec.seed, range(start, start + spec.runs),
                            phase_m=phase_m, threads=threads)
        runtimes.append(time.perf_counter() - t0)
        v = observable_values(results, spec.observable, spec.options)
        per_n.append({"m": m, "n": params.n, "runs": spec.runs, "z": results[0].z,
                      "c_n": results[0].c_n, "run_index_start": start,
                      "first_stream_seed": derive_stream(spec.seed, start)})
        values.append(v)
        all_results.extend(results)
    stats, passed = _evaluate_mn(spec, per_n, values)
    return ScenarioReport(spec.to_dict(), per_n, stats, bool(passed), runtimes, all_results)


# -- checks that are not per-run M_n statistics ------------------------------------

@dataclass
class DefectBoundResult:
    threshold: float
    t_n: float
    fraction_minus: float
    fraction_plus: float
    samples_minus: np.ndarray
    samples_plus: np.ndarray


def check_defect_bound(params: ModelParams, m: float, delta: float, runs: int,
                       seed: int = DEFAULT_SEED, threads: int | None = None) -> DefectBoundResult:
    """Fraction of coupled runs whose defect at t_n = (log n - m)/Z_n exceeds n e^{-m(1+delta)}."""
    d = params.spec.d
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 <= delta < 1 - max(params.alphas()) / d:
        raise ValueError(f"delta must lie in [0, 1 - max alpha/d), got {delta}")
    results = run_batch(params, "coupled", seed, range(runs), phase_m=m, threads=threads)
    dm = np.array([r.defect_minus_at_tn for r in results])
    dp = np.array([r.defect_plus_at_tn for r in results])
    thr = params.n * math.exp(-m * (1 + delta))
    t_n = phase_time(params.n, results[0].z, m)
    return DefectBoundResult(thr, t_n, float((dm > thr).mean()), float((dp > thr).mean()), dm, dp)


def check_rate_convergence(alpha: float, d: int, p: float, n_list) -> list[float]:
    """Relative errors |R_n / n^{1-alpha/d} - R| / R along ``n_list``."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    if not 0 <= alpha < d:
        raise ValueError(f"alpha must lie in [0, {d})")
    lim = limit_constant(alpha, d, p)
    return [abs(rate_sum_n(n, alpha, d, p) / n ** (1 - alpha / d) - lim) / lim for n in n_list]


def _yule_law(spec: ScenarioSpec) -> ScenarioReport:
    sigma = spec.options.get("sigma", 1.0)
    t = spec.options.get("t", math.log(2))
    rng = np.random.default_rng(derive_stream(spec.seed, 0))
    t0 = time.perf_counter()
    sizes = geometric_sizes(np.full(spec.runs, t), sigma, rng)
    p = math.exp(-sigma * t)
    stat, pval = chi_square_gof(histogram(sizes), geometric_reference(p))
    mean = float(sizes.mean())
    rel = abs(mean - 1 / p) * p
    stats = {"chi2": stat, "p_value": pval, "mean": mean, "mean_rel_error": rel}
    ok = pval > SIGNIFICANCE and rel < spec.tolerance
    return ScenarioReport(spec.to_dict(), [{"samples": spec.runs, "sigma": sigma, "t": t}],
                          stats, ok, [time.perf_counter() - t0])


def _rn_convergence(spec: ScenarioSpec) -> ScenarioReport:
    d = spec.params.spec.d
    p = spec.params.spec.p
    alpha = spec.params.alpha_minus(spec.n_grid()[-1])
    n_list = spec.options.get("n_list") or spec.n_grid()
    t0 = time.perf_counter()
    errs = check_rate_convergence(alpha, d, p, n_list)
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    per_n = [{"n": int(n), "rel_error": e} for n, e in zip(n_list, errs)]
    stats = {"rel_error_last": errs[-1], "strictly_decreasing": decreasing,
             "limit": limit_constant(alpha, d, p)}
    return ScenarioReport(spec.to_dict(), per_n, stats, errs[-1] < spec.tolerance and decreasing,
                          [time.perf_counter() - t0])


def _defect_bound(spec: ScenarioSpec, threads=None) -> ScenarioReport:
    m = spec.m_grid[-1]
    params = spec.params.with_m(m)
    t0 = time.perf_counter()
    res = check_defect_bound(params, spec.options.get("phase_m", PHASE_M),
                             spec.options.get("delta", 0.2), spec.runs, spec.seed, threads)
    stats = {"threshold": res.threshold, "t_n": res.t_n, "fraction_minus": res.fraction_minus,
             "fraction_plus": res.fraction_plus}
    ok = res.fraction_minus < spec.tolerance and res.fraction_plus < spec.tolerance
    per_n = [{"m": m, "n": params.n, "runs": spec.runs, "run_index_start": 0}]
    return ScenarioReport(spec.to_dict(), per_n, stats, ok, [time.perf_counter() - t0])


def crossval_settings(d: int) -> list[tuple[str, ModelParams]]:
    """The three comparison settings on a d-dimensional torus (side fixed later)."""
    spec = TorusSpec(d, 2)
    a = ParamFamily.constant(SCENARIO_ALPHA)
    return [
        ("lambda=1 equal alpha", ModelParams(spec, a, a, ParamFamily.constant(1.0))),
        ("lambda=2 equal alpha", ModelParams(spec, a, a, ParamFamily.constant(2.0))),
        ("alpha-=0 alpha+=0.5", ModelParams(spec, ParamFamily.constant(0.0), ParamFamily.constant(0.5),
                                            ParamFamily.constant(1.0))),
    ]


def compare_engines(params: ModelParams, runs: int, seed: int, threads=None) -> dict:
    """Two-sample chi-square on N^- between the oracle and the coupled engine."""
    a = run_batch(params, "oracle", seed, range(runs), phase_m=None, threads=threads)
    b = run_batch(params, "coupled", seed, range(runs, 2 * runs), phase_m=None, threads=threads)
    stat, pval = chi_square_two_sample(histogram([r.n_minus for r in a]),
                                       histogram([r.n_minus for r in b]))
    return {"n": params.n, "chi2": stat, "p_value": pval, "results": a + b}


def _engine_crossval(spec: ScenarioSpec, threads=None) -> ScenarioReport:
    per_n, results, runtimes = [], [], []
    ok = True
    base = spec.params
    block = 0
    settings = spec.options.get("settings") or [(f"d={base.spec.d}", base)]
    for label, params in settings:
        for m in spec.m_grid:
            p = params.with_m(m)
            t0 = time.perf_counter()
            out = compare_engines(p, spec.runs, derive_stream(spec.seed, block), threads)
            runtimes.append(time.perf_counter() - t0)
            per_n.append({"setting": label, "d": p.spec.d, "m": m, "n": p.n, "runs": spec.runs,
                          "block": block, "chi2": out["chi2"], "p_value": out["p_value"]})
            results.extend(out["results"])
            ok = ok and out["p_value"] > SIGNIFICANCE
            block += 1
    stats = {"min_p_value": min(r["p_value"] for r in per_n), "significance": SIGNIFICANCE}
    return ScenarioReport(spec.to_dict(), per_n, stats, ok, runtimes, results)


def _urn_crossval(spec: ScenarioSpec, threads=None) -> ScenarioReport:
    m = spec.m_grid[-1]
    params = spec.params.with_m(m)
    t0 = time.perf_counter()
    z = total_rates(params).z
    urn = [urn_run(params.n, z, derive_stream(spec.seed, i))[0] for i in range(spec.runs)]
    res = run_batch(params, "coupled", spec.seed, range(spec.runs, 2 * spec.runs), phase_m=None,
                    threads=threads)
    stat, pval = chi_square_two_sample(histogram(urn), histogram([r.n_minus for r in res]))
    per_n = [{"m": m, "n": params.n, "z": z, "runs": spec.runs, "chi2": stat, "p_value": pval}]
    return ScenarioReport(spec.to_dict(), per_n, {"chi2": stat, "p_value": pval}, pval > SIGNIFICANCE,
                          [time.perf_counter() - t0], res)


def run_scenario(spec: ScenarioSpec, threads: int | None = None) -> ScenarioReport:
    if spec.engine == "oracle" and spec.observable != "none":
        too_big = [m for m in spec.m_grid if m ** spec.params.spec.d > ORACLE_CAP]
        if too_big and spec.test not in ("chi-square", "rel-error", "two-sample"):
            raise OracleCapExceeded(f"grid sides {too_big} exceed the oracle cap {ORACLE_CAP}")
    if spec.test == "chi-square":
        return _yule_law(spec)
    if spec.test == "rel-error":
        return _rn_convergence(spec)
    if spec.test == "exceedance":
        return _defect_bound(spec, threads)
    if spec.test == "two-sample":
        if spec.observable == "urn":
            return _urn_crossval(spec, threads)
        return _engine_crossval(spec, threads)
    return _run_grid(spec, threads)


# -- built-in scenarios --------------------------------------------------------

def _equal(alpha, lam: ParamFamily, d=1, m=2, p=2.0) -> ModelParams:
    a = ParamFamily.constant(alpha)
    return ModelParams(TorusSpec(d, m, p), a, a, lam)


def builtin_scenario(name: str, runs: int | None = None, seed: int | None = None,
                     m_grid=None) -> ScenarioSpec:
    seed = DEFAULT_SEED if seed is None else seed
    alpha = SCENARIO_ALPHA
    regime_grid = (100, 1000, 10_000)
    table = {
        "coexistence": dict(params=_equal(alpha, ParamFamily.constant(1.0)), m_grid=(1000, 10_000),
                            observable="coexist", test="fraction", tolerance=0.1,
                            options={"threshold": 0.05}),
        "case-i": dict(params=_equal(alpha, ParamFamily("log_squared", {"a": 0.0, "b": 1.0})),
                       m_grid=regime_grid, observable="m_n_is_1", test="fraction", tolerance=0.1,
                       options={"require_trend": False}),
        "case-ii": dict(params=_equal(alpha, ParamFamily("affine_log", {"a": 1.0, "b": 1.0})),
                        m_grid=(100, 10_000), observable="m_n", test="tv-geometric", tolerance=0.1,
                        options={"c": 1.0}),
        "case-iii": dict(params=_equal(alpha, ParamFamily.constant(2.0)), m_grid=regime_grid,
                         observable="log_ratio", test="median-band", tolerance=0.25,
                         options={"closer": True}),
        "case-iv": dict(params=_equal(alpha, ParamFamily.log_power(1.0, 1.0, -0.5)), m_grid=regime_grid,
                        observable="log_gap", test="median-band", tolerance=0.4,
                        options={"iqr_shrink": True}),
        "phase-event": dict(params=_equal(alpha, ParamFamily.constant(2.0)), m_grid=(10_000,),
                            observable="phase_event", test="fraction", tolerance=0.2,
                            options={"A": 20.0, "phase_m": 8.0, "xi": 1e-3, "require_trend": False}),
        "defect-bound": dict(params=_equal(0.0, ParamFamily.constant(1.0)), m_grid=(10_000,),
                             observable="defect", test="exceedance", tolerance=0.1,
                             options={"phase_m": 8.0, "delta": 0.2}),
        "yule-law": dict(params=_equal(0.0, ParamFamily.constant(1.0)), m_grid=(2,), runs=100_000,
                         observable="yule_size", test="chi-square", tolerance=0.02,
                         options={"sigma": 1.0, "t": math.log(2)}),
        "rn-convergence": dict(params=_equal(1.0, ParamFamily.constant(1.0), d=2, p=math.inf),
                               m_grid=(2,), runs=100, observable="rel_error", test="rel-error",
                               tolerance=0.02, options={"n_list": [10**3, 10**4, 10**5, 10**6]}),
        "engine-crossval": dict(params=_equal(alpha, ParamFamily.constant(1.0)), m_grid=(7,),
                                runs=10_000, observable="n_minus", test="two-sample", tolerance=0.01),
        "urn-crossval": dict(params=_equal(0.0, ParamFamily.constant(2.0)), m_grid=(25,), runs=10_000,
                             observable="urn", test="two-sample", tolerance=0.01),
    }
    if name not in table:
        raise ValueError(f"unknown scenario {name!r}; built-ins: {sorted(table)}")
    kw = dict(table[name])
    kw.setdefault("runs", 2000)
    if runs is not None:
        kw["runs"] = runs
    if m_grid is not None:
        kw["m_grid"] = tuple(m_grid)
    return ScenarioSpec(name=name, seed=seed, **kw)


BUILTIN_SCENARIOS = ("coexistence", "case-i", "case-ii", "case-iii", "case-iv", "phase-event",
                     "defect-bound", "yule-law", "rn-convergence", "engine-crossval", "urn-crossval")
