from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Matrix predictors ``X`` (n, p1, p2), responses ``y`` and optional covariates ``v`` (n, m).

    ``Z`` carries the true latent factors for simulated data; ``paths`` the
    source files for ingested images.
    """

    X: np.ndarray
    y: np.ndarray
    v: np.ndarray = None
    Z: np.ndarray = None
    paths: tuple = None

    @property
    def n(self):
        return self.X.shape[0]

    def subset(self, idx):
        return Dataset(
            self.X[idx],
            self.y[idx],
            None if self.v is None else self.v[idx],
            None if self.Z is None else self.Z[idx],
            None if self.paths is None else tuple(self.paths[i] for i in idx),
        )
