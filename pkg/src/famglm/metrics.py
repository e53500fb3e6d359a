"""Classification and regression metrics, plus ROC / PR curve points."""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import CutoffOutOfRange, EmptyInput, OneClassOnly, ShapeMismatch, ZeroVarianceTruth


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationMetrics:
    counts: ConfusionCounts
    ca: float
    kappa: float
    sensitivity: float
    f1: float


def _ratio(num, den):
    # 0/0 is reported as 0
    return num / den if den else 0.0


def _pair(y_true, other):
    y = np.asarray(y_true, dtype=np.float64).ravel()
    s = np.asarray(other, dtype=np.float64).ravel()
    if y.size == 0:
        raise EmptyInput("no observations")
    if y.shape != s.shape:
        raise ShapeMismatch(f"length mismatch: {y.size} labels vs {s.size} predictions")
    return y, s


def confusion_counts(y_true, p_hat, cutoff=0.5):
    y, p = _pair(y_true, p_hat)
    if not 0.0 <= cutoff <= 1.0:
        raise CutoffOutOfRange(f"cutoff {cutoff} outside [0, 1]")
    pos = y == 1
    pred = p >= cutoff
    tp = int(np.sum(pos & pred))
    fp = int(np.sum(~pos & pred))
    tn = int(np.sum(~pos & ~pred))
    fn = int(np.sum(pos & ~pred))
    return ConfusionCounts(tp, fp, tn, fn)


def confusion_metrics(y_true, p_hat, cutoff=0.5):
    """Accuracy, Cohen's kappa, sensitivity and F1 at a probability cutoff.

    A prediction is positive when ``p_hat >= cutoff``. Ratios with a zero
    denominator are 0, and kappa is 0 when chance agreement is 1.
    """
    c = confusion_counts(y_true, p_hat, cutoff)
    N = c.total
    ca = (c.tp + c.tn) / N
    sens = _ratio(c.tp, c.tp + c.fn)
    prec = _ratio(c.tp, c.tp + c.fp)
    f1 = _ratio(2 * prec * sens, prec + sens)
    p_e = ((c.tp + c.fn) * (c.tp + c.fp) + (c.tn + c.fp) * (c.tn + c.fn)) / N**2
    kappa = 0.0 if p_e == 1 else (ca - p_e) / (1 - p_e)
    return ClassificationMetrics(c, ca, kappa, sens, f1)


def _classes(y_true, scores):
    y, s = _pair(y_true, scores)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("both classes must be present")
    return pos, s, n_pos, n_neg


def auc(y_true, scores):
    """Mann-Whitney estimate of P(score of a positive > score of a negative), ties count 1/2."""
    pos, s, n_pos, n_neg = _classes(y_true, scores)
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _threshold_counts(pos, s):
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    pos_sorted = pos[order]
    tp = np.cumsum(pos_sorted)
    fp = np.cumsum(~pos_sorted)
    # keep the last index of each run of equal scores
    last = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    return tp[last], fp[last]


def roc_points(y_true, scores):
    """(fpr, tpr) at every distinct threshold, descending, framed by (0, 0) and (1, 1)."""
    pos, s, n_pos, n_neg = _classes(y_true, scores)
    tp, fp = _threshold_counts(pos, s)
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    return np.column_stack([fpr, tpr])


def pr_points(y_true, scores):
    """(recall, precision) at every distinct threshold, descending."""
    pos, s, n_pos, _ = _classes(y_true, scores)
    tp, fp = _threshold_counts(pos, s)
    return np.column_stack([tp / n_pos, tp / (tp + fp)])


def trapezoid_area(points):
    pts = np.asarray(points, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def _evaluate_curve(x, y, grid, side):
    # side="left": value arriving at g (first point with x == g); "right": value leaving g
    idx = np.searchsorted(x, grid, side=side)
    if side == "right":
        idx = idx - 1
    idx = np.clip(idx, 0, len(x) - 1)
    exact = x[idx] == grid
    out = y[idx].copy()
    # between two breakpoints: linear interpolation on the enclosing segment
    a = np.searchsorted(x, grid, side="right") - 1
    a = np.clip(a, 0, len(x) - 2)
    b = a + 1
    t = (grid - x[a]) / np.where(x[b] > x[a], x[b] - x[a], 1.0)
    interp = y[a] + t * (y[b] - y[a])
    out[~exact] = interp[~exact]
    return out


def average_curves(curves):
    """Pointwise mean of piecewise-linear curves with nondecreasing x.

    Each curve is evaluated on the union of all breakpoints. At an x where some
    curve jumps vertically, both the value arriving at x and the value leaving
    x are kept, so the averaged curve's trapezoidal area equals the mean of the
    individual areas.
    """
    curves = [np.asarray(c, dtype=np.float64) for c in curves]
    if not curves:
        raise EmptyInput("no curves to average")
    grid = np.unique(np.concatenate([c[:, 0] for c in curves]))
    lo = np.zeros_like(grid)
    hi = np.zeros_like(grid)
    for c in curves:
        lo += _evaluate_curve(c[:, 0], c[:, 1], grid, "left")
        hi += _evaluate_curve(c[:, 0], c[:, 1], grid, "right")
    lo /= len(curves)
    hi /= len(curves)
    xs = np.repeat(grid, 2)
    ys = np.column_stack([lo, hi]).ravel()
    keep = np.r_[True, (np.diff(xs) != 0) | (np.diff(ys) != 0)]
    return np.column_stack([xs[keep], ys[keep]])


@dataclass(frozen=True)
class RegressionMetrics:
    rmse: float
    mae: float
    nmse: float


def regression_metrics(y_true, y_hat):
    """RMSE, MAE and NMSE (MSE over the sample variance of ``y_true``, divisor N - 1).

    NMSE is NaN, with a :class:`ZeroVarianceTruth` warning, when ``y_true`` is
    constant or has a single entry.
    """
    y, yh = _pair(y_true, y_hat)
    err = yh - y
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    var = float(np.var(y, ddof=1)) if y.size > 1 else 0.0
    if var == 0:
        warnings.warn("truth has zero sample variance; NMSE undefined", ZeroVarianceTruth, stacklevel=2)
        nmse = math.nan
    else:
        nmse = mse / var
    return RegressionMetrics(math.sqrt(mse), mae, nmse)


def winning_percentage(ca_a, ca_b):
    """Fraction of replicates where method A's accuracy strictly beats method B's."""
    a = np.asarray(ca_a, dtype=np.float64)
    b = np.asarray(ca_b, dtype=np.float64)
    if a.size == 0:
        raise EmptyInput("no replicates")
    if a.shape != b.shape:
        raise ShapeMismatch("accuracy sequences differ in length")
    return float(np.mean(a > b))


CLASSIFICATION_METRICS = ("ca", "kappa", "sensitivity", "f1", "auc")
REGRESSION_METRICS = ("rmse", "mae", "nmse")


def evaluate(family, y_true, prediction, cutoff=0.5):
    """Metric bundle for one family as a plain dict.

    ``prediction`` is the predicted mean (a probability for binomial).
    """
    if family == "binomial":
        cm = confusion_metrics(y_true, prediction, cutoff)
        return {"ca": cm.ca, "kappa": cm.kappa, "sensitivity": cm.sensitivity, "f1": cm.f1,
                "auc": auc(y_true, prediction)}
    rm = regression_metrics(y_true, prediction)
    return {"rmse": rm.rmse, "mae": rm.mae, "nmse": rm.nmse}
