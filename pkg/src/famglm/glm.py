"""Canonical-link GLMs fitted by iteratively reweighted least squares.

Three families are supported: ``gaussian`` (identity link), ``binomial``
(logit) and ``poisson`` (log). The design passed to :func:`fit_glm` never
contains the intercept column; it is prepended internally.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .errors import InvalidResponse, ShapeMismatch, SingularDesign, WrongFamily

FAMILIES = ("gaussian", "binomial", "poisson")

MAX_ITER = 100
MAX_HALVINGS = 30
DEVIANCE_TOL = 1e-8
SEPARATION_BOUND = 1e4
MU_CLAMP = 1e-10
ETA_CLAMP = 30.0
RIDGE_FACTOR = 1e-10
# relative residual norm below which a design column counts as aliased
ALIAS_TOL = 1e-11
# fitted probabilities this close to 0 or 1 are reported in the notes
BOUNDARY_PROB = 1e-8
# pivot^2 / max diagonal below this marks the weighted normal matrix as singular
PIVOT_RTOL = 1e-13


def check_family(family):
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


def inverse_link(family, eta):
    eta = np.asarray(eta, dtype=np.float64)
    if family == "gaussian":
        return eta
    if family == "binomial":
        # split by sign so exp never overflows
        out = np.empty_like(eta)
        pos = eta >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        e = np.exp(eta[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    if family == "poisson":
        return np.exp(eta)
    raise ValueError(f"unknown family {family!r}")


def link(family, mu):
    mu = np.asarray(mu, dtype=np.float64)
    if family == "gaussian":
        return mu
    if family == "binomial":
        return np.log(mu / (1.0 - mu))
    if family == "poisson":
        return np.log(mu)
    raise ValueError(f"unknown family {family!r}")


def _xlogy_ratio(y, mu):
    # y * log(y / mu) with 0 log 0 = 0
    out = np.zeros_like(y)
    nz = y > 0
    out[nz] = y[nz] * np.log(y[nz] / mu[nz])
    return out


def deviance(family, y, mu):
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if family == "gaussian":
        return float(np.sum((y - mu) ** 2))
    if family == "binomial":
        return float(2.0 * np.sum(_xlogy_ratio(y, mu) + _xlogy_ratio(1.0 - y, 1.0 - mu)))
    if family == "poisson":
        return float(2.0 * np.sum(_xlogy_ratio(y, mu) - (y - mu)))
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class GlmFit:
    """Fitted coefficients and diagnostics.

    ``coef`` holds every slope (scores first, then covariates); ``alpha`` and
    ``beta`` split it at ``n_scores``.
    """

    family: str
    gamma: float
    coef: np.ndarray
    n_scores: int
    deviance: float
    iterations: int
    converged: bool
    deviance_history: tuple = ()
    notes: tuple = field(default=())
    aliased: tuple = ()

    @property
    def alpha(self):
        return self.coef[: self.n_scores]

    @property
    def beta(self):
        return self.coef[self.n_scores :]

    @property
    def n_features(self):
        return self.coef.shape[0]


def _validate_response(family, y):
    if not np.all(np.isfinite(y)):
        raise InvalidResponse("response has NaN or infinite values")
    if family == "binomial" and not np.all((y == 0) | (y == 1)):
        raise InvalidResponse("binomial responses must be 0 or 1")
    if family == "poisson" and not (np.all(y >= 0) and np.all(y == np.floor(y))):
        raise InvalidResponse("poisson responses must be nonnegative integers")


def _solve_normal(A, b, notes):
    """Solve ``A x = b`` for symmetric PSD ``A``, adding a small ridge only if singular."""
    d = A.shape[0]
    maxdiag = float(np.max(np.diag(A)))
    try:
        L = np.linalg.cholesky(A)
        singular = float(np.min(np.diag(L))) ** 2 < PIVOT_RTOL * maxdiag
    except np.linalg.LinAlgError:
        singular = True
    if singular:
        ridge = RIDGE_FACTOR * float(np.trace(A)) / d
        if not ridge > 0:
            raise SingularDesign("weighted normal matrix is zero")
        if "ridge" not in notes:
            notes.append("ridge")
            warnings.warn(f"singular weighted normal system; ridge {ridge:.3e} added", RuntimeWarning, stacklevel=3)
        try:
            L = np.linalg.cholesky(A + ridge * np.eye(d))
        except np.linalg.LinAlgError:
            raise SingularDesign("weighted normal system is rank-deficient beyond the ridge guard") from None
    return cho_solve((L, True), b)


def independent_columns(D, tol=ALIAS_TOL):
    """Indices of columns kept by in-order Gram-Schmidt.

    A column is aliased (dropped) when its residual after projecting out the
    kept columns is below ``tol`` times its own norm. Earlier columns win, so
    the intercept is always kept first.
    """
    n, d = D.shape
    Q = np.empty((n, min(n, d)))
    kept = []
    for j in range(d):
        if len(kept) == n:
            break
        col = D[:, j]
        norm = np.linalg.norm(col)
        if norm == 0:
            continue
        r = col.copy()
        if kept:
            Qk = Q[:, : len(kept)]
            for _ in range(2):
                r -= Qk @ (Qk.T @ r)
        rn = np.linalg.norm(r)
        if rn > tol * norm:
            Q[:, len(kept)] = r / rn
            kept.append(j)
    return np.array(kept, dtype=np.int64)


def _mean_and_weights(family, eta):
    if family == "gaussian":
        return eta, np.ones_like(eta)
    if family == "binomial":
        mu = np.clip(inverse_link("binomial", eta), MU_CLAMP, 1.0 - MU_CLAMP)
        return mu, mu * (1.0 - mu)
    mu = np.exp(np.clip(eta, -ETA_CLAMP, ETA_CLAMP))
    return mu, mu


def fit_glm(design, y, family, n_scores=None, singular="drop"):
    """Maximum-likelihood fit of a canonical-link GLM with an intercept.

    Parameters
    ----------
    design : array (n, d)
        Feature rows, without an intercept column. ``d`` may be 0.
    y : array (n,)
        Responses; 0/1 for binomial, nonnegative integers for poisson.
    family : {"gaussian", "binomial", "poisson"}
    n_scores : int, optional
        How many leading columns are factor scores (``alpha``); the rest are
        covariates (``beta``). Defaults to all of them.
    singular : {"drop", "ridge"}
        How a rank-deficient design is handled. ``"drop"`` removes aliased
        columns in column order and reports their coefficients as 0;
        ``"ridge"`` keeps every column and relies on the ridge guard in the
        weighted normal equations.
    """
    family = check_family(family)
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if y.shape != (n,):
        raise ShapeMismatch(f"design has {n} rows but response has shape {y.shape}")
    if n == 0:
        raise ShapeMismatch("no observations")
    if not np.all(np.isfinite(X)):
        raise ShapeMismatch("design has NaN or infinite entries")
    _validate_response(family, y)
    n_scores = d if n_scores is None else int(n_scores)
    if singular not in ("drop", "ridge"):
        raise ValueError(f"singular must be 'drop' or 'ridge', got {singular!r}")
    full = np.hstack([np.ones((n, 1)), X])
    notes = []
    keep = np.arange(d + 1)
    if singular == "drop" and d + 1 > 1:
        keep = independent_columns(full)
        if keep.size < d + 1:
            notes.append("aliased")
    aliased = tuple(int(j) - 1 for j in np.setdiff1d(np.arange(d + 1), keep))
    D = full[:, keep]

    def result(theta, dev, it, converged, history):
        coef = np.zeros(d + 1)
        coef[keep] = theta
        return GlmFit(family, float(coef[0]), coef[1:], n_scores, float(dev), it, converged, tuple(history),
                      tuple(notes), aliased)

    if family == "gaussian":
        theta = _solve_normal(D.T @ D, D.T @ y, notes)
        dev = deviance(family, y, D @ theta)
        return result(theta, dev, 1, True, (dev,))

    if family == "binomial":
        mu = (y + 0.5) / 2.0
    else:
        mu = y + 0.1
    eta = link(family, mu)
    dev_old = deviance(family, y, mu)
    history = []
    theta_old = None
    converged = False
    it = 0

    def irls_step(eta):
        mu, w = _mean_and_weights(family, eta)
        z = eta + (y - mu) / w
        Dw = D * w[:, None]
        theta = _solve_normal(D.T @ Dw, Dw.T @ z, notes)
        eta = D @ theta
        return theta, eta, deviance(family, y, _mean_and_weights(family, eta)[0])

    for it in range(1, MAX_ITER + 1):
        theta, eta, dev = irls_step(eta)
        if theta_old is not None:
            halvings = 0
            # deviance increases at round-off level are not divergence
            slack = 1e-12 * (abs(dev_old) + 0.1)
            while not (dev <= dev_old + slack) and halvings < MAX_HALVINGS:
                theta = 0.5 * (theta + theta_old)
                eta = D @ theta
                dev = deviance(family, y, _mean_and_weights(family, eta)[0])
                halvings += 1
            if not (dev <= dev_old + slack):
                # no descent direction left; keep the previous iterate
                theta, dev = theta_old, dev_old
                eta = D @ theta
                history.append(dev)
                converged = True
                notes.append("step-halving exhausted")
                break
        history.append(dev)
        if np.max(np.abs(theta[1:]), initial=0.0) > SEPARATION_BOUND:
            notes.append("separation")
            break
        if abs(dev - dev_old) / (abs(dev) + 0.1) <= DEVIANCE_TOL:
            converged = True
            # The deviance test stops one Newton step early: the coefficients can still
            # be ~1e-8 off. One more step squares that error away.
            theta_p, eta_p, dev_p = irls_step(eta)
            if dev_p <= dev + 1e-12 * (abs(dev) + 0.1) and np.all(np.isfinite(theta_p)):
                theta, eta, dev = theta_p, eta_p, dev_p
                history.append(dev)
            break
        dev_old = dev
        theta_old = theta
    if "separation" in notes:
        converged = False
    if family == "binomial":
        mu = inverse_link(family, D @ theta)
        if np.any((mu < BOUNDARY_PROB) | (mu > 1.0 - BOUNDARY_PROB)):
            notes.append("fitted probabilities 0 or 1")
    return result(theta, dev, it, converged, history)


def linear_predictor(fit, design):
    X = np.asarray(design, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != fit.n_features:
        raise ShapeMismatch(f"design rows have {X.shape[1]} entries, fit expects {fit.n_features}")
    eta = fit.gamma + X @ fit.coef
    return float(eta[0]) if single else eta


def predict(fit, design, output="mean"):
    """Linear predictor or mean response for one design row or a stack of rows."""
    eta = linear_predictor(fit, design)
    if output == "linear":
        return eta
    if output != "mean":
        raise ValueError(f"output must be 'linear' or 'mean', got {output!r}")
    mu = inverse_link(fit.family, np.atleast_1d(eta))
    return float(mu[0]) if np.ndim(eta) == 0 else mu


def classify(fit, design, cutoff=0.5):
    """1 where the predicted probability is at least ``cutoff``."""
    if fit.family != "binomial":
        raise WrongFamily(f"classification needs a binomial fit, got {fit.family}")
    mu = predict(fit, design, "mean")
    if np.ndim(mu) == 0:
        return int(mu >= cutoff)
    return (mu >= cutoff).astype(int)


def logit(p):
    return math.log(p / (1.0 - p))
