"""Simulation scenarios, cross-validation and replicated experiments.

Random streams
--------------
Every random draw comes from a Philox generator keyed by ``seed ^ replicate``
and jumped ``component`` times (each jump skips 2**128 draws), so each data
component has its own stream::

    0  ground-truth loadings          5-8  validation set (same order as 1-4)
    1  latent factors vec(Z)          9    fold assignment
    2  noise matrices E
    3  covariates v
    4  responses

Within a stream samples are drawn in index order, so a dataset of size n is
an exact prefix of the dataset of size n' > n for the same replicate.
Normals come from numpy's ziggurat sampler and uniforms from the 53-bit
mantissa mapping. Replicate ``r`` can be regenerated on its own.
"""
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import metrics as mt
from .dataset import Dataset
from .errors import ConfigMismatch, FamGLMError, FoldTooSmall
from .glm import FAMILIES, inverse_link, logit
from .linalg import cholesky, unvec_stack
from .model import FamGLM, VecGLM

SCENARIOS = ("goodnessOfFit", "threeFamily", "covidLike")

TRUTH, LATENT, NOISE, COVARIATES, RESPONSE = range(5)
VALIDATION_OFFSET = 4
FOLDS_STREAM = 9

TRUE_RANKS = (3, 3)


def substream(seed, replicate, component):
    bitgen = np.random.Philox(key=(int(seed) ^ int(replicate)) & (2**64 - 1))
    return np.random.Generator(bitgen.jumped(component) if component else bitgen)


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting. Supply exactly one of ``n`` and ``rho``."""

    scenario: str
    p1: int
    p2: int
    n: int = None
    rho: float = None
    family: str = "binomial"
    seed: int = 0
    replicates: int = 100
    folds: int = 5
    ranks: tuple = None
    center: bool = False
    fixed_truth: bool = False

    @classmethod
    def defaults(cls, scenario, **overrides):
        base = {
            "goodnessOfFit": dict(p1=12, p2=10, n=150, family="binomial"),
            "threeFamily": dict(p1=20, p2=20, rho=1.0, family="gaussian"),
            "covidLike": dict(p1=150, p2=150, n=746, family="binomial"),
        }
        if scenario not in base:
            raise ConfigMismatch(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
        kw = dict(base[scenario])
        if overrides.get("n") is not None or overrides.get("rho") is not None:
            kw.pop("n", None)
            kw.pop("rho", None)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(scenario=scenario, **kw)
        cfg.validate()
        return cfg

    @property
    def sample_size(self):
        if self.n is not None:
            return int(self.n)
        return math.ceil(self.rho * self.p1 * self.p2)

    @property
    def uses_cv(self):
        return self.scenario != "goodnessOfFit"

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigMismatch(f"unknown scenario {self.scenario!r}")
        if (self.n is None) == (self.rho is None):
            raise ConfigMismatch("give exactly one of n and rho")
        if self.p1 < 1 or self.p2 < 1 or self.sample_size < 2:
            raise ConfigMismatch("p1, p2 must be positive and the sample size at least 2")
        if self.replicates < 1:
            raise ConfigMismatch("replicates must be at least 1")
        if self.uses_cv and not 2 <= self.folds <= self.sample_size:
            raise ConfigMismatch(f"folds must lie in [2, n], got {self.folds}")
        if self.family not in FAMILIES:
            raise ConfigMismatch(f"unknown family {self.family!r}")
        if self.scenario != "threeFamily" and self.family != "binomial":
            raise ConfigMismatch(f"{self.scenario} only generates binomial responses")
        if self.ranks is not None:
            k1, k2 = self.ranks
            if not (1 <= k1 <= self.p1 and 1 <= k2 <= self.p2):
                raise ConfigMismatch(f"ranks {self.ranks} do not fit a {self.p1}x{self.p2} predictor")
        if not 0 <= self.seed < 2**64:
            raise ConfigMismatch("seed must be an unsigned 64-bit integer")
        return self

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "ranks":
                value = f"{value[0]},{value[1]}"
            elif isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, **overrides):
        """Parse ``key=value`` lines (``#`` comments allowed); keyword overrides win."""
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigMismatch(f"line {lineno}: expected key=value")
            raw[key.strip().replace("-", "_")] = value.strip()
        if "scenario" not in raw:
            raise ConfigMismatch("config has no scenario key")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigMismatch(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            parsed = {k: _parse_field(k, v) for k, v in raw.items() if k != "scenario"}
        except ValueError as exc:
            raise ConfigMismatch(str(exc)) from None
        parsed.update({k: v for k, v in overrides.items() if v is not None})
        if overrides.get("n") is not None:
            parsed.pop("rho", None)
        if overrides.get("rho") is not None:
            parsed.pop("n", None)
        return cls.defaults(raw["scenario"], **parsed)


def _parse_field(key, value):
    if key in ("p1", "p2", "n", "seed", "replicates", "folds"):
        return int(value)
    if key == "rho":
        return float(value)
    if key == "ranks":
        return parse_ranks(value)
    if key in ("center", "fixed_truth"):
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {value!r}")
        return value.lower() in ("true", "1", "yes")
    return value


def parse_ranks(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"ranks must look like k1,k2, got {text!r}")
    return int(parts[0]), int(parts[1])


@dataclass(frozen=True)
class GroundTruth:
    R0: np.ndarray
    C0: np.ndarray
    gamma0: float
    alpha0: np.ndarray
    beta0: np.ndarray
    phi0: np.ndarray
    Sigma0: np.ndarray

    @property
    def ranks(self):
        return self.R0.shape[1], self.C0.shape[1]


def ar1_covariance(k, rho=0.5):
    idx = np.arange(k)
    return rho ** np.abs(np.subtract.outer(idx, idx))


def draw_truth(config, rng):
    """Loadings with iid ``U(-sqrt(p), sqrt(p))`` entries plus the scenario's fixed coefficients."""
    k1, k2 = TRUE_RANKS
    k = k1 * k2
    R0 = rng.uniform(-math.sqrt(config.p1), math.sqrt(config.p1), size=(config.p1, k1))
    C0 = rng.uniform(-math.sqrt(config.p2), math.sqrt(config.p2), size=(config.p2, k2))
    Sigma0 = ar1_covariance(k)
    if config.scenario == "goodnessOfFit":
        gamma = 1.0
        alpha = np.r_[1.0, -1.0, 0.5 * np.ones(4), -0.5 * np.ones(3)]
        beta = np.zeros(0)
        phi = np.zeros(k)
    else:
        alpha = np.r_[2.0, -2.0, np.ones(3), -np.ones(4)]
        if config.scenario == "threeFamily":
            gamma = 1.0
            beta = np.ones(3)
            phi = np.zeros(k)
        else:
            phi = np.array([1, 0.5, 1, -0.5, 1, 0.5, 1, -0.5, 1.0])
            gamma = logit(0.47) - float(alpha @ phi)
            beta = np.zeros(0)
    return GroundTruth(R0, C0, gamma, alpha, beta, phi, Sigma0)


def generate_dataset(config, truth, seed, replicate, n=None, validation=False, noise=True):
    """Draw one dataset for ``replicate`` from the scenario's generating process.

    ``noise=False`` zeroes the noise matrices (used to test exact recovery).
    """
    n = config.sample_size if n is None else n
    if truth.R0.shape[0] != config.p1 or truth.C0.shape[0] != config.p2:
        raise ConfigMismatch("ground-truth loadings do not match (p1, p2)")
    k1, k2 = truth.ranks
    if truth.alpha0.shape != (k1 * k2,):
        raise ConfigMismatch("alpha0 length must equal k1*k2")
    off = VALIDATION_OFFSET if validation else 0
    stream = lambda c: substream(seed, replicate, c + off)  # noqa: E731

    L = cholesky(truth.Sigma0)
    vecZ = stream(LATENT).standard_normal((n, k1 * k2)) @ L.T + truth.phi0
    Z = unvec_stack(vecZ, k1, k2)
    X = truth.R0 @ Z @ truth.C0.T
    if noise:
        X += stream(NOISE).standard_normal((n, config.p1, config.p2))
    mu = truth.gamma0 + vecZ @ truth.alpha0
    v = None
    if truth.beta0.size:
        v = stream(COVARIATES).standard_normal((n, truth.beta0.size))
        mu = mu + v @ truth.beta0
    y = draw_response(config.family, mu, stream(RESPONSE))
    return Dataset(X, y, v, Z)


def draw_response(family, mu, rng):
    if family == "binomial":
        return (rng.random(mu.shape[0]) < inverse_link("binomial", mu)).astype(np.float64)
    if family == "gaussian":
        return mu + rng.standard_normal(mu.shape[0])
    # the rate floor of 1 keeps tiny means away from the generator
    return rng.poisson(poisson_rate(mu)).astype(np.float64)


def poisson_rate(mu):
    with np.errstate(over="ignore"):
        return np.maximum(np.exp(mu), 1.0)


# -- methods ------------------------------------------------------------------


def _fit_famglm(train, family, config):
    return FamGLM.fit(train.X, train.y, family, v=train.v, ranks=config.ranks, center=config.center,
                      record_error=False)


def _fit_vecglm(train, family, config):
    return VecGLM.fit(train.X, train.y, family, v=train.v)


METHODS = {"famglm": _fit_famglm, "vecglm": _fit_vecglm}


def register_method(name, fitter):
    """Add a comparison method.

    ``fitter(train: Dataset, family: str, config: ScenarioConfig)`` must
    return an object with ``predict(X, v, output="mean")``.
    """
    METHODS[name] = fitter


def default_methods(config):
    if config.scenario == "goodnessOfFit":
        return ("famglm", "vecglm")
    return ("famglm",)


# -- cross-validation -----------------------------------------------------------


def make_folds(y, folds, stratified, rng):
    """Fold index per sample; with ``stratified`` each class is dealt round-robin."""
    y = np.asarray(y)
    n = y.shape[0]
    if not 2 <= folds <= n:
        raise FoldTooSmall(f"cannot split {n} samples into {folds} folds")
    assign = np.empty(n, dtype=np.int64)
    if stratified:
        offset = 0
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            idx = idx[rng.permutation(idx.size)]
            assign[idx] = (offset + np.arange(idx.size)) % folds
            offset += idx.size
    else:
        perm = rng.permutation(n)
        assign[perm] = np.arange(n) % folds
    return assign


@dataclass
class CVResult:
    predictions: np.ndarray
    fold: np.ndarray
    ranks: list = field(default_factory=list)


def cross_validate(dataset, folds, family, stratified, rng, method="famglm", config=None, clock=None):
    """Out-of-fold mean predictions; every fold's model sees only its training part."""
    config = config or ScenarioConfig("threeFamily", dataset.X.shape[1], dataset.X.shape[2], n=dataset.n,
                                      family=family)
    assign = make_folds(dataset.y, folds, stratified, rng)
    pred = np.empty(dataset.n)
    ranks = []
    for f in range(folds):
        test = np.flatnonzero(assign == f)
        train = np.flatnonzero(assign != f)
        model = METHODS[method](dataset.subset(train), family, config)
        held = dataset.subset(test)
        pred[test] = model.predict(held.X, held.v, output="mean")
        if hasattr(model, "loadings"):
            ranks.append((f, model.loadings.k1, model.loadings.k2))
    return CVResult(pred, assign, ranks)


# -- replicated experiments -----------------------------------------------------


@dataclass
class ReplicateResult:
    replicate: int
    metrics: dict
    ranks: list
    curves: dict
    failures: dict
    durations: dict
    positive_rate: float


def replicate_truth(config, replicate):
    return draw_truth(config, substream(config.seed, 0 if config.fixed_truth else replicate, TRUTH))


def run_replicate(config, replicate, methods=None, clock=time.perf_counter):
    """Generate, fit and score one replicate; a failing method is recorded, not raised."""
    methods = tuple(methods or default_methods(config))
    truth = replicate_truth(config, replicate)
    data = generate_dataset(config, truth, config.seed, replicate)
    holdout = None
    if not config.uses_cv:
        holdout = generate_dataset(config, truth, config.seed, replicate, validation=True)
    out = ReplicateResult(replicate, {}, [], {}, {}, {}, float(np.mean(data.y)))
    for method in methods:
        start = clock()
        try:
            if holdout is not None:
                model = METHODS[method](data, config.family, config)
                y_true = holdout.y
                pred = model.predict(holdout.X, holdout.v, output="mean")
                if hasattr(model, "loadings"):
                    out.ranks.append((method, 0, model.loadings.k1, model.loadings.k2))
            else:
                rng = substream(config.seed, replicate, FOLDS_STREAM)
                cv = cross_validate(data, config.folds, config.family, config.family == "binomial", rng,
                                    method=method, config=config)
                y_true = data.y
                pred = cv.predictions
                out.ranks.extend((method, f, k1, k2) for f, k1, k2 in cv.ranks)
        except (FamGLMError, np.linalg.LinAlgError, FloatingPointError) as exc:
            out.failures[method] = f"{type(exc).__name__}: {exc}"
            continue
        out.durations[method] = clock() - start
        out.metrics[method] = mt.evaluate(config.family, y_true, pred)
        if config.family == "binomial":
            out.curves[method] = (mt.roc_points(y_true, pred), mt.pr_points(y_true, pred))
    return out


def _run_one(args):
    config, replicate, methods = args
    return run_replicate(config, replicate, methods)


def run_replicates(config, methods=None, jobs=1):
    config.validate()
    methods = tuple(methods or default_methods(config))
    for m in methods:
        if m not in METHODS:
            raise ConfigMismatch(f"unknown method {m!r}; registered: {', '.join(METHODS)}")
    tasks = [(config, r, methods) for r in range(config.replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    methods: tuple
    replicates: list
    table: list
    curves: dict

    def metric_values(self, method, metric):
        return [r.metrics[method][metric] for r in self.replicates if method in r.metrics]

    def row(self, method, metric):
        for row in self.table:
            if row[0] == method and row[1] == metric:
                return row
        raise KeyError((method, metric))

    def mean(self, method, metric):
        return self.row(method, metric)[2]


def _mean_stderr(values):
    values = [v for v in values if not math.isnan(v)]
    if not values:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, math.nan
    return mean, statistics.stdev(values) / math.sqrt(len(values))


def aggregate(config, methods, replicates):
    """Mean and standard error per (method, metric), plus winning percentage and failures."""
    table = []
    names = mt.CLASSIFICATION_METRICS if config.family == "binomial" else mt.REGRESSION_METRICS
    for method in methods:
        for metric in names:
            vals = [r.metrics[method][metric] for r in replicates if method in r.metrics]
            table.append((method, metric, *_mean_stderr(vals)))
        failed = sum(method in r.failures for r in replicates)
        table.append((method, "failed_replicates", float(failed), 0.0))
    if config.scenario == "goodnessOfFit" and "famglm" in methods and "vecglm" in methods:
        both = [r for r in replicates if "famglm" in r.metrics and "vecglm" in r.metrics]
        if both:
            wp = mt.winning_percentage([r.metrics["famglm"]["ca"] for r in both],
                                       [r.metrics["vecglm"]["ca"] for r in both])
            table.append(("famglm", "wp", wp, math.sqrt(wp * (1 - wp) / len(both))))
    if config.family == "binomial":
        table.append(("data", "positive_rate", *_mean_stderr([r.positive_rate for r in replicates])))
    curves = {}
    for method in methods:
        got = [r.curves[method] for r in replicates if method in r.curves]
        if got:
            curves[method] = (mt.average_curves([c[0] for c in got]), mt.average_curves([c[1] for c in got]))
    return table, curves


def run_experiment(config, methods=None, jobs=1):
    methods = tuple(methods or default_methods(config))
    reps = run_replicates(config, methods, jobs=jobs)
    table, curves = aggregate(config, methods, reps)
    return ExperimentResult(config, methods, reps, table, curves)


def median_durations(replicates, methods):
    out = {}
    for m in methods:
        d = [r.durations[m] for r in replicates if m in r.durations]
        out[m] = statistics.median(d) if d else math.nan
    return out


def timing_harness(config, methods=None, clock=time.perf_counter):
    """Median wall-clock seconds per replicate for fitting and predicting; data generation is excluded."""
    config.validate()
    methods = tuple(methods or default_methods(config))
    reps = [run_replicate(config, r, methods, clock=clock) for r in range(config.replicates)]
    return median_durations(reps, methods)
