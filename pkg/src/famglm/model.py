"""End-to-end FamGLM model and the conventional vectorised GLM baseline.

A fitted :class:`FamGLM` can be written to and read from a small binary
bundle: a text header of ``key=value`` lines followed by little-endian float64
matrix blocks.
"""
from dataclasses import dataclass

import numpy as np

from .errors import BundleFormatError, ShapeMismatch
from .factor import FactorLoadings, as_corpus, extract_scores, fit_loadings, reconstruction_error
from .glm import GlmFit, check_family, fit_glm, predict
from .linalg import vec_stack

BUNDLE_MAGIC = "FAMGLM-BUNDLE"
BUNDLE_VERSION = 1


def _covariates(v, n):
    if v is None:
        return np.zeros((n, 0))
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != n:
        raise ShapeMismatch(f"{v.shape[0]} covariate rows for {n} samples")
    return v


@dataclass(frozen=True)
class FamGLM:
    loadings: FactorLoadings
    glm: GlmFit
    target_size: tuple = None
    train_error: float = float("nan")

    @classmethod
    def fit(cls, X, y, family, v=None, ranks=None, center=False, target_size=None, record_error=True):
        """Spectral loadings, factor scores, then a GLM on ``[vec(Z) | v]``.

        ``ranks=None`` selects (k1, k2) by the eigenvalue-ratio rule.
        ``record_error`` stores the training reconstruction error on the model.
        """
        check_family(family)
        X = as_corpus(X)
        loadings = fit_loadings(X, ranks=ranks, center=center)
        return cls.fit_with_loadings(loadings, X, y, family, v=v, target_size=target_size,
                                     record_error=record_error)

    @classmethod
    def fit_with_loadings(cls, loadings, X, y, family, v=None, target_size=None, record_error=True):
        X = as_corpus(X)
        Z = extract_scores(loadings, X)
        design = np.hstack([vec_stack(Z), _covariates(v, X.shape[0])])
        glm = fit_glm(design, y, family, n_scores=loadings.k1 * loadings.k2)
        err = reconstruction_error(X, loadings, Z) if record_error else float("nan")
        return cls(loadings, glm, None if target_size is None else tuple(target_size), err)

    @property
    def family(self):
        return self.glm.family

    @property
    def n_covariates(self):
        return self.glm.n_features - self.glm.n_scores

    def scores(self, X):
        return extract_scores(self.loadings, X)

    def design(self, X, v=None):
        X = as_corpus(X)
        return np.hstack([vec_stack(self.scores(X)), _covariates(v, X.shape[0])])

    def predict(self, X, v=None, output="mean"):
        return predict(self.glm, self.design(X, v), output)

    def to_bytes(self):
        R, C = self.loadings.R, self.loadings.C
        g = self.glm
        h = self.target_size or (0, 0)
        header = {
            "version": BUNDLE_VERSION,
            "family": g.family,
            "p1": self.loadings.p1,
            "p2": self.loadings.p2,
            "k1": self.loadings.k1,
            "k2": self.loadings.k2,
            "m": self.n_covariates,
            "gamma": g.gamma.hex(),
            "target_height": h[0],
            "target_width": h[1],
            "train_error": float(self.train_error).hex(),
            "deviance": float(g.deviance).hex(),
            "iterations": g.iterations,
            "converged": int(g.converged),
            "notes": ";".join(g.notes),
            "blocks": "R,C,row_eigenvalues,col_eigenvalues,coef",
        }
        text = f"{BUNDLE_MAGIC} {BUNDLE_VERSION}\n" + "".join(f"{k}={v}\n" for k, v in header.items()) + "end\n"
        blocks = [R, C, self.loadings.row_eigenvalues, self.loadings.col_eigenvalues, g.coef]
        body = b"".join(np.ascontiguousarray(b, dtype="<f8").tobytes() for b in blocks)
        return text.encode("ascii") + body

    @classmethod
    def from_bytes(cls, data):
        first, sep, rest = data.partition(b"\n")
        parts = first.decode("ascii", "replace").split()
        if len(parts) != 2 or parts[0] != BUNDLE_MAGIC:
            raise BundleFormatError("not a FamGLM model bundle")
        if parts[1] != str(BUNDLE_VERSION):
            raise BundleFormatError(f"bundle version {parts[1]} unsupported (expected {BUNDLE_VERSION})")
        header = {}
        while True:
            line, sep, rest = rest.partition(b"\n")
            if not sep:
                raise BundleFormatError("truncated header")
            line = line.decode("ascii")
            if line == "end":
                break
            key, _, value = line.partition("=")
            header[key] = value
        try:
            p1, p2, k1, k2, m = (int(header[k]) for k in ("p1", "p2", "k1", "k2", "m"))
            sizes = [p1 * k1, p2 * k2, p1, p2, k1 * k2 + m]
        except (KeyError, ValueError) as exc:
            raise BundleFormatError(f"bad header: {exc}") from None
        if len(rest) != 8 * sum(sizes):
            raise BundleFormatError(f"expected {8 * sum(sizes)} bytes of matrix data, found {len(rest)}")
        flat = np.frombuffer(rest, dtype="<f8").astype(np.float64)
        arrays = np.split(flat, np.cumsum(sizes)[:-1])
        loadings = FactorLoadings(arrays[0].reshape(p1, k1), arrays[1].reshape(p2, k2), arrays[2], arrays[3])
        glm = GlmFit(
            family=header["family"],
            gamma=float.fromhex(header["gamma"]),
            coef=arrays[4],
            n_scores=k1 * k2,
            deviance=float.fromhex(header["deviance"]),
            iterations=int(header["iterations"]),
            converged=bool(int(header["converged"])),
            notes=tuple(n for n in header.get("notes", "").split(";") if n),
        )
        th, tw = int(header["target_height"]), int(header["target_width"])
        return cls(loadings, glm, (th, tw) if th else None, float.fromhex(header["train_error"]))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def equals(self, other):
        """Field-wise equality (arrays compared exactly)."""
        a, b = self, other
        same = lambda x, y: np.array_equal(np.asarray(x), np.asarray(y))  # noqa: E731
        return (
            same(a.loadings.R, b.loadings.R)
            and same(a.loadings.C, b.loadings.C)
            and same(a.loadings.row_eigenvalues, b.loadings.row_eigenvalues)
            and same(a.loadings.col_eigenvalues, b.loadings.col_eigenvalues)
            and a.glm.family == b.glm.family
            and a.glm.gamma == b.glm.gamma
            and same(a.glm.coef, b.glm.coef)
            and a.glm.n_scores == b.glm.n_scores
            and a.target_size == b.target_size
            and (a.train_error == b.train_error or (np.isnan(a.train_error) and np.isnan(b.train_error)))
        )


@dataclass(frozen=True)
class VecGLM:
    """Conventional GLM on the column-stacked matrix predictor plus covariates."""

    glm: GlmFit
    shape: tuple

    @classmethod
    def fit(cls, X, y, family, v=None):
        X = as_corpus(X)
        design = np.hstack([vec_stack(X), _covariates(v, X.shape[0])])
        return cls(fit_glm(design, y, family, n_scores=X.shape[1] * X.shape[2]), X.shape[1:])

    def predict(self, X, v=None, output="mean"):
        X = as_corpus(X)
        design = np.hstack([vec_stack(X), _covariates(v, X.shape[0])])
        return predict(self.glm, design, output)
