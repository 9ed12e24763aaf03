"""Leave-one-out harness, classification/regression metrics, estimation
errors, and correlation analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata, t as t_dist

from .errors import PhonassessError

POSITIVE_CLASS = "PD"


@dataclass(frozen=True)
class ClinicalScale:
    """A clinical rating scale: id plus theoretical range [0, max].

    max is None for unbounded quantities (disease duration, medication
    dose), for which the max-normalized estimation error is undefined.
    """

    id: str
    theoretical_max: float | None
    theoretical_min: float = 0.0

    @property
    def bounded(self) -> bool:
        return self.theoretical_max is not None


SCALES: dict[str, ClinicalScale] = {
    s.id: s
    for s in (
        ClinicalScale("duration", None),
        ClinicalScale("updrs3", 108),
        ClinicalScale("updrs4", 23),
        ClinicalScale("rbdsq", 13),
        ClinicalScale("fog", 24),
        ClinicalScale("nmss", 360),
        ClinicalScale("bdi", 63),
        ClinicalScale("mmse", 30),
        ClinicalScale("acer", 100),
        ClinicalScale("led", None),
    )
}


def round_half_away(x: float, decimals: int = 2) -> float:
    """Round half away from zero, the tables' convention."""
    factor = 10**decimals
    return math.copysign(math.floor(abs(x) * factor + 0.5) / factor, x)


@dataclass
class ClassificationMetrics:
    acc: float  # percent
    sen: float  # percent
    spe: float  # percent
    tss: float  # dimensionless, in [1, 2]


def trade_off_sen_spe(sen_fraction: float, spe_fraction: float) -> float:
    """2 ** (sin(pi SEN / 2) sin(pi SPE / 2)) with SEN, SPE as fractions."""
    return 2.0 ** (math.sin(math.pi * sen_fraction / 2.0) * math.sin(math.pi * spe_fraction / 2.0))


def classification_metrics(pred, truth, positive: str = POSITIVE_CLASS) -> ClassificationMetrics:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if len(pred) != len(truth) or len(truth) == 0:
        raise PhonassessError("prediction/truth length mismatch")
    pos = truth == positive
    neg = ~pos
    if not pos.any() or not neg.any():
        raise PhonassessError("both classes must be present in the truth labels")
    tp = np.sum(pos & (pred == positive))
    fn = np.sum(pos & (pred != positive))
    tn = np.sum(neg & (pred != positive))
    fp = np.sum(neg & (pred == positive))
    sen = tp / (tp + fn)
    spe = tn / (tn + fp)
    acc = (tp + tn) / len(truth)
    return ClassificationMetrics(
        acc=100.0 * acc, sen=100.0 * sen, spe=100.0 * spe,
        tss=trade_off_sen_spe(sen, spe),
    )


def regression_metrics(pred, truth) -> tuple[float, float]:
    """(mae, pearson rho); rho is NaN when the truth is constant."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if len(pred) != len(truth) or len(truth) < 3:
        raise PhonassessError("need >= 3 prediction/truth pairs")
    mae = float(np.mean(np.abs(pred - truth)))
    if np.std(truth) == 0 or np.std(pred) == 0:
        return mae, float("nan")
    rho = float(np.corrcoef(pred, truth)[0, 1])
    return mae, rho


def estimation_errors(mae: float, scale: ClinicalScale, observed_range: float) -> tuple[float, float | None]:
    """(ee1, ee2) as percentages; ee2 is None for unbounded scales.

    ee1 normalizes by the observed score range of the evaluated subjects;
    ee2 by the scale's theoretical maximum.
    """
    if mae < 0:
        raise PhonassessError("mae must be non-negative")
    if observed_range <= 0:
        raise PhonassessError("observed score range must be positive")
    ee1 = 100.0 * mae / observed_range
    ee2 = 100.0 * mae / scale.theoretical_max if scale.bounded else None
    return ee1, ee2


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation with average ranks; p via the t approximation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    n = len(x)
    if n < 5:
        raise PhonassessError("need >= 5 complete pairs for rank correlation")
    if np.std(x) == 0 or np.std(y) == 0:
        raise PhonassessError("constant input: rank correlation undefined")
    rx = rankdata(x)
    ry = rankdata(y)
    rho = float(np.corrcoef(rx, ry)[0, 1])
    if abs(rho) >= 1.0:
        return float(np.sign(rho)), 0.0
    t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(t_dist.sf(abs(t_stat), n - 2))
    return rho, p


@dataclass
class CorrelationPanel:
    feature_values: np.ndarray
    clinical_values: np.ndarray
    coefficients: tuple[float, float, float]  # quadratic, linear, constant
    rho: float
    p: float


def correlation_graph_data(feature_values, clinical_values) -> CorrelationPanel:
    """Scatter points with a least-squares quadratic fit plus (rho, p)."""
    x = np.asarray(feature_values, dtype=np.float64)
    y = np.asarray(clinical_values, dtype=np.float64)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 5:
        raise PhonassessError("need >= 5 pairs for the correlation panel")
    if np.ptp(x) == 0:
        raise PhonassessError("degenerate design matrix: constant feature")
    coeffs = np.polyfit(x, y, 2)
    rho, p = spearman(x, y)
    return CorrelationPanel(
        feature_values=x, clinical_values=y,
        coefficients=(float(coeffs[0]), float(coeffs[1]), float(coeffs[2])),
        rho=rho, p=p,
    )


@dataclass
class LooResult:
    predictions: np.ndarray
    failed_folds: list[int] = field(default_factory=list)
    n_dropped: int = 0


def loo_validate(X, y, train_fn, predict_fn, seed: int = 0) -> LooResult:
    """Leave-one-out: for each row i, train on the others and predict i.

    ``train_fn(X, y, seed)`` returns a model; ``predict_fn(model, row)`` a
    prediction. Deterministic given the seed (each fold derives its own
    stream). Folds whose training fails are recorded and predict NaN.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise PhonassessError("need >= 3 rows for leave-one-out")
    y = np.asarray(y)
    preds = np.empty(n, dtype=object)
    failed = []
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        try:
            model = train_fn(X[mask], y[mask], seed + i)
            preds[i] = predict_fn(model, X[i])
        except PhonassessError:
            failed.append(i)
            preds[i] = float("nan")
        mask[i] = True
    if np.issubdtype(y.dtype, np.number):
        preds = preds.astype(np.float64)
    return LooResult(predictions=preds, failed_folds=failed)
