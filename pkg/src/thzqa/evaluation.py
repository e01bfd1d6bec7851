"""Subjective-score aggregation and objective-metric evaluation.

Raw metric values are mapped onto the MOS scale with a five-parameter
logistic-plus-linear function before PLCC, RMSE and R^2 are computed;
SROCC is computed on the raw values so its sign keeps the metric's polarity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, stats

MIN_FIT_SAMPLES = 6
MAX_EVALS = 20_000
SPREAD_TOL = 1e-10
LOA_Z = 1.96
START_SLOPES = (0.3, 3.0, 10.0)
START_CENTRES = (-1.0, 0.0, 1.0)


class EvaluationError(ValueError):
    pass


# --------------------------------------------------------------------------
# subjective scores


def mos(scores: Sequence[int]) -> float:
    """Mean opinion score: the unweighted mean of the observers' grades."""
    if len(scores) == 0:
        raise EvaluationError("empty score list")
    return float(sum(scores)) / len(scores)


@dataclass(frozen=True)
class MosRecord:
    image_id: str
    mos: float
    n_observers: int
    scores: tuple[int, ...] = ()


def mos_table(observer_scores: Mapping[str, Sequence[int]]) -> dict[str, MosRecord]:
    table = {}
    for image_id, scores in observer_scores.items():
        if any(int(s) != s or not 1 <= s <= 5 for s in scores):
            raise EvaluationError(f"{image_id}: scores must be integers in 1..5")
        table[image_id] = MosRecord(image_id, mos(scores), len(scores), tuple(int(s) for s in scores))
    return table


# --------------------------------------------------------------------------
# logistic mapping


@dataclass(frozen=True)
class LogisticParams:
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float

    def as_list(self) -> list[float]:
        return [self.b1, self.b2, self.b3, self.b4, self.b5]


@dataclass(frozen=True)
class FitResult:
    params: LogisticParams
    residual_rmse: float
    converged: bool
    iterations: int


def _logistic_term(z):
    """1/2 - 1/(1 + e^z) without overflow; equals tanh(z/2)/2."""
    return 0.5 * np.tanh(0.5 * np.asarray(z, dtype=float))


def map_quality(x, params: LogisticParams):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        # an infinite argument just saturates tanh
        out = params.b1 * _logistic_term(params.b2 * (x - params.b3)) + params.b4 * x + params.b5
    return float(out) if out.ndim == 0 else out


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    slope = float(dx @ (y - ym) / (dx @ dx))
    return slope, float(ym - slope * xm)


def _linear_part(t: np.ndarray, z: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Best (b1, b4, b5) for a fixed logistic column, and the resulting SSE."""
    design = np.column_stack([t, z, np.ones_like(z)])
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    r = design @ coef - y
    return coef, float(r @ r)


def _local_search(fn, start: np.ndarray, budget: int):
    """Nelder-Mead restarted from its own result until it stops improving."""
    best, best_val = start, fn(start)
    used, converged, step = 0, False, 0.5
    while used < budget:
        simplex = np.array([best, best + [step, 0.0], best + [0.0, step]])
        res = optimize.minimize(
            fn, best, method="Nelder-Mead",
            options={"maxfev": budget - used, "fatol": SPREAD_TOL, "xatol": np.inf,
                     "initial_simplex": simplex},
        )
        used += res.nfev
        converged = bool(res.success)
        improved = res.fun < best_val * (1 - 1e-9)
        if res.fun <= best_val:
            best, best_val = res.x, float(res.fun)
        if not improved:
            break
        step = 0.1
    return best, best_val, used, converged


def fit_logistic(x, y) -> FitResult:
    """Least-squares fit of the five-parameter mapping.

    The model is linear in (b1, b4, b5) once (b2, b3) are fixed, so
    Nelder-Mead searches only over (b2, b3) on standardized ``x`` and the
    other three are solved exactly at every evaluation.  Searches start
    from the standard initialization and a small fixed grid; the nested
    purely linear solution is always a candidate.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise EvaluationError("x and y must be equal-length vectors")
    if x.size < MIN_FIT_SAMPLES:
        raise EvaluationError("insufficient samples")
    if np.all(x == x[0]):
        raise EvaluationError("constant predictor")
    centre, sd = float(x.mean()), float(x.std())
    z = (x - centre) / sd

    def profile(p):
        return _linear_part(_logistic_term(p[0] * (z - p[1])), z, y)

    def sse(p):
        return profile(p)[1]

    # b2 = 1/SD(x) and b3 = mean(x) in standardized units, then a fixed grid
    starts = [(1.0, 0.0)] + [(k, c) for k in START_SLOPES for c in START_CENTRES]
    budget = MAX_EVALS // len(starts)
    best, best_val = None, np.inf
    evals, converged = 0, False
    for start in starts:
        point, val, used, ok = _local_search(sse, np.array(start), budget)
        evals += used
        if val < best_val:
            best, best_val, converged = point, val, ok

    (b1, b4s, b5s), _ = profile(best)
    # back to the original x scale
    params = LogisticParams(float(b1), float(best[0] / sd), float(centre + sd * best[1]),
                            float(b4s / sd), float(b5s - b4s * centre / sd))
    # residuals are judged on what map_quality actually returns, which can
    # differ from the standardized-scale value when the fit is step-like
    fit_sse = _sse(map_quality(x, params), y)
    slope, intercept = _linear_fit(x, y)
    linear = LogisticParams(0.0, 1.0, centre, slope, intercept)
    linear_sse = _sse(map_quality(x, linear), y)
    if not fit_sse <= linear_sse:
        params, fit_sse = linear, linear_sse
    return FitResult(params, float(np.sqrt(fit_sse / x.size)), converged, evals)


def _sse(pred, y) -> float:
    r = np.asarray(pred, dtype=float) - y
    return float(r @ r)


# --------------------------------------------------------------------------
# agreement statistics


def _pair(a, b, min_len: int):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise EvaluationError("length mismatch")
    if a.size < min_len:
        raise EvaluationError(f"need at least {min_len} samples")
    return a, b


def plcc(a, b) -> float:
    a, b = _pair(a, b, 2)
    da, db = a - a.mean(), b - b.mean()
    saa, sbb = float(da @ da), float(db @ db)
    if saa == 0 or sbb == 0:
        raise EvaluationError("zero variance")
    # one square root of the product keeps r = +-1 exact for b = +-a
    denom = np.sqrt(saa * sbb)
    if not np.isfinite(denom) or denom == 0:
        denom = np.sqrt(saa) * np.sqrt(sbb)
    return float(np.clip(da @ db / denom, -1.0, 1.0))


def srocc(a, b) -> float:
    a, b = _pair(a, b, 2)
    return plcc(stats.rankdata(a), stats.rankdata(b))


def rmse(a, b) -> float:
    a, b = _pair(a, b, 1)
    d = a - b
    return float(np.sqrt(d @ d / d.size))


@dataclass(frozen=True)
class RegressionSummary:
    slope: float
    intercept: float
    r2: float
    band_half_width: float
    n: int
    residual_sd: float = 0.0

    @property
    def band_width(self) -> float:
        """Vertical extent between the upper and lower 95% prediction bands."""
        return 2.0 * self.band_half_width


def regression_summary(mapped, mos_values) -> RegressionSummary:
    """OLS of MOS on mapped scores with the 95% prediction band at mean(x)."""
    x, y = _pair(mapped, mos_values, 3)
    if np.all(x == x[0]):
        raise EvaluationError("constant predictor")
    slope, intercept = _linear_fit(x, y)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    dy = y - y.mean()
    ss_tot = float(dy @ dy)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    n = x.size
    s = np.sqrt(ss_res / (n - 2)) if n > 2 else 0.0
    half = float(stats.t.ppf(0.975, n - 2) * s * np.sqrt(1.0 + 1.0 / n))
    return RegressionSummary(slope, intercept, r2, half, n, float(s))


@dataclass(frozen=True)
class BlandAltmanReport:
    mean_difference: float
    sd_difference: float
    lower: float
    upper: float
    coverage: float
    n: int


def bland_altman(mapped, mos_values) -> BlandAltmanReport:
    # two points are enough for a sample SD
    a, b = _pair(mapped, mos_values, 2)
    d = a - b
    mean_d = float(d.mean())
    sd = float(d.std(ddof=1))
    lower, upper = mean_d - LOA_Z * sd, mean_d + LOA_Z * sd
    coverage = float(np.mean((d >= lower) & (d <= upper)))
    return BlandAltmanReport(mean_d, sd, lower, upper, coverage, d.size)


# --------------------------------------------------------------------------
# full evaluation


@dataclass
class EvalReport:
    metric: str
    n: int
    plcc: float
    srocc: float
    rmse: float
    r2: float
    fit: FitResult
    regression: RegressionSummary
    bland_altman: BlandAltmanReport
    warnings: list[str] = field(default_factory=list)
    mapped: np.ndarray = field(default=None, repr=False)
    mos: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        ba = self.bland_altman
        return {
            "metric": self.metric,
            "n": self.n,
            "plcc": self.plcc,
            "srocc": self.srocc,
            "rmse": self.rmse,
            "r2": self.r2,
            "beta": self.fit.params.as_list(),
            "converged": self.fit.converged,
            "fit_rmse": self.fit.residual_rmse,
            "iterations": self.fit.iterations,
            "band_width": self.regression.band_width,
            "bland_altman": {
                "mean_difference": ba.mean_difference,
                "sd_difference": ba.sd_difference,
                "lower": ba.lower,
                "upper": ba.upper,
                "coverage": ba.coverage,
            },
            "conventions": "srocc on raw scores; plcc, rmse, r2 on logistic-mapped scores",
            "warnings": list(self.warnings),
        }


def evaluate(metric_scores: Mapping[str, float], mos_values: Mapping[str, float],
             metric: str = "") -> EvalReport:
    """Join metric values with MOS by image id and compute the agreement report."""
    common = sorted(set(metric_scores) & set(mos_values))
    notes = []
    unmatched = len(set(metric_scores) ^ set(mos_values))
    if unmatched:
        notes.append(f"{unmatched} image ids present in only one input")
    if len(common) < MIN_FIT_SAMPLES:
        raise EvaluationError(f"insufficient overlap: {len(common)} common images")
    x = np.array([metric_scores[k] for k in common], dtype=float)
    y = np.array([mos_values[k] for k in common], dtype=float)
    if np.all(x == x[0]):
        raise EvaluationError("constant metric")
    fit = fit_logistic(x, y)
    mapped = np.asarray(map_quality(x, fit.params), dtype=float)
    if not fit.converged:
        notes.append("logistic fit hit the evaluation limit")
    reg = regression_summary(mapped, y) if np.ptp(mapped) > 0 else None
    if reg is None:
        raise EvaluationError("mapped scores are constant")
    return EvalReport(
        metric=metric, n=len(common),
        plcc=plcc(mapped, y), srocc=srocc(x, y), rmse=rmse(mapped, y), r2=reg.r2,
        fit=fit, regression=reg, bland_altman=bland_altman(mapped, y),
        warnings=notes, mapped=mapped, mos=y,
    )
