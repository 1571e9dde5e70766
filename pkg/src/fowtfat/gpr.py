"""Gaussian process regression with constant mean and isotropic RBF kernel.

The estimator follows the scikit-learn fit/predict convention but carries
its own marginal-likelihood machinery so the gradient of the training
objective is available in closed form:

    L(theta) = log|K + sigma^2 I| + y^T (K + sigma^2 I)^{-1} y

with k(x, x') = s exp(-||x - x'||^2 / (2 l^2)) and theta = (sigma, s, l)
optimized in log space by multi-start L-BFGS-B.  The prior mean C is fixed
to the sample mean of the targets.  Inputs are standardized internally so a
single length scale is meaningful for (Hs, Tp) pairs.  Predictive standard
deviations are latent (noise-free).
"""

from __future__ import annotations

import json

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_X_y

from .errors import NumericalError

JITTER_START = 1e-10
JITTER_MAX = 1e-6

# log-space hyperparameter box, relative to target scale (sigma, s) and in
# standardized input units (l); guards against degenerate optima on 8-point
# initial designs
SIGMA_BOUNDS = (1e-6, 1.0)      # x std(y)
SIGNAL_BOUNDS = (1e-4, 1e2)     # x var(y)
LENGTH_BOUNDS = (0.05, 10.0)


def _sq_dists(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    diff = xa[:, None, :] - xb[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def nlml_and_grad(log_theta: np.ndarray, x: np.ndarray, y_centered: np.ndarray,
                  jitter: float = 0.0) -> tuple[float, np.ndarray]:
    """Negative log marginal likelihood (up to constants) and its gradient.

    ``log_theta`` holds (log sigma, log s, log l); the gradient is taken
    with respect to the log-parameters via

        dL/dp = tr(Kh^-1 dKh/dp) - a^T (dKh/dp) a,   a = Kh^-1 y.
    """
    sigma, s, length = np.exp(log_theta)
    d2 = _sq_dists(x, x)
    k = s * np.exp(-0.5 * d2 / length ** 2)
    kh = k + (sigma ** 2 + jitter) * np.eye(x.shape[0])
    try:
        low = cholesky(kh, lower=True)
    except np.linalg.LinAlgError:
        raise NumericalError("kernel matrix factorization failed") from None
    alpha = cho_solve((low, True), y_centered)
    value = 2.0 * np.log(np.diag(low)).sum() + float(y_centered @ alpha)

    kh_inv = cho_solve((low, True), np.eye(x.shape[0]))
    # dKh/d log sigma = 2 sigma^2 I; dKh/d log s = K; dKh/d log l = K d2/l^2
    # tr(Kh^-1 dK) = sum(Kh^-1 * dK) elementwise since both are symmetric
    grads = np.empty(3)
    for idx, dk in enumerate((2.0 * sigma ** 2 * np.eye(x.shape[0]),
                              k,
                              k * d2 / length ** 2)):
        grads[idx] = float(np.sum(kh_inv * dk)) - float(alpha @ dk @ alpha)
    return value, grads


class GaussianProcess(BaseEstimator, RegressorMixin):
    """Constant-mean RBF Gaussian process regressor.

    Parameters
    ----------
    restarts : int
        Number of seeded multi-start points for the hyperparameter search
        (in addition to a fixed heuristic start).
    seed : int
        Seed of the deterministic restart design; identical data and seed
        reproduce the fit exactly.
    standardize : bool
        Standardize inputs to zero mean / unit variance before kerneling.
    """

    def __init__(self, restarts: int = 8, seed: int = 0,
                 standardize: bool = True):
        self.restarts = restarts
        self.seed = seed
        self.standardize = standardize

    # -- fitting -----------------------------------------------------------

    def fit(self, X, y, warm_start_theta: np.ndarray | None = None):
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[0] < 2:
            raise ValueError("need at least 2 training points")
        self.X_train_ = X.astype(float)
        self.y_train_ = y.astype(float)
        if self.standardize:
            self.x_mean_ = self.X_train_.mean(axis=0)
            self.x_scale_ = np.maximum(self.X_train_.std(axis=0), 1e-9)
        else:
            self.x_mean_ = np.zeros(X.shape[1])
            self.x_scale_ = np.ones(X.shape[1])
        self.prior_mean_ = float(self.y_train_.mean())
        z = self._standardized(self.X_train_)
        y_c = self.y_train_ - self.prior_mean_

        y_std = max(float(y_c.std()), 1e-12 * max(abs(self.prior_mean_), 1.0),
                    1e-300)
        lo = np.log([SIGMA_BOUNDS[0] * y_std, SIGNAL_BOUNDS[0] * y_std ** 2,
                     LENGTH_BOUNDS[0]])
        hi = np.log([SIGMA_BOUNDS[1] * y_std, SIGNAL_BOUNDS[1] * y_std ** 2,
                     LENGTH_BOUNDS[1]])
        bounds = list(zip(lo, hi))

        starts = [np.log([0.05 * y_std, y_std ** 2, 1.0])]
        rng = np.random.default_rng(self.seed)
        starts.extend(rng.uniform(lo, hi) for _ in range(self.restarts))
        if warm_start_theta is not None:
            starts.append(np.clip(warm_start_theta, lo, hi))
        starts = [np.clip(t, lo, hi) for t in starts]

        best = None
        for theta0 in starts:
            result = self._minimize_from(theta0, z, y_c, bounds)
            if result is not None and (best is None or result.fun < best.fun):
                best = result
        if best is None:
            raise NumericalError(
                "all hyperparameter restarts failed to factorize")
        self.log_theta_ = np.asarray(best.x)
        self.nlml_ = float(best.fun)
        self._finalize(z, y_c)
        return self

    def _minimize_from(self, theta0, z, y_c, bounds):
        jitter = 0.0
        while True:
            try:
                return minimize(nlml_and_grad, theta0, args=(z, y_c, jitter),
                                jac=True, method="L-BFGS-B", bounds=bounds)
            except NumericalError:
                jitter = JITTER_START if jitter == 0.0 else jitter * 100.0
                if jitter > JITTER_MAX:
                    return None

    def _finalize(self, z, y_c) -> None:
        sigma, s, length = np.exp(self.log_theta_)
        k = s * np.exp(-0.5 * _sq_dists(z, z) / length ** 2)
        jitter = 0.0
        while True:
            try:
                kh = k + (sigma ** 2 + jitter) * np.eye(z.shape[0])
                self.chol_ = cho_factor(kh, lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = JITTER_START if jitter == 0.0 else jitter * 100.0
                if jitter > JITTER_MAX:
                    raise NumericalError(
                        "kernel factorization failed at the optimum despite "
                        f"jitter escalation to {JITTER_MAX}") from None
        self.jitter_ = jitter
        self.alpha_ = cho_solve(self.chol_, y_c)
        self.z_train_ = z

    def _standardized(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.x_mean_) / self.x_scale_

    # -- inference ---------------------------------------------------------

    @property
    def hyperparams(self) -> dict:
        sigma, s, length = np.exp(self.log_theta_)
        return {"noise_sd": float(sigma), "signal_scale": float(s),
                "length_scale": float(length), "prior_mean": self.prior_mean_}

    def predict(self, X, return_std: bool = False):
        X = check_array(X)
        z = self._standardized(X)
        sigma, s, length = np.exp(self.log_theta_)
        k_star = s * np.exp(-0.5 * _sq_dists(z, self.z_train_) / length ** 2)
        mean = self.prior_mean_ + k_star @ self.alpha_
        if not return_std:
            return mean
        v = cho_solve(self.chol_, k_star.T)
        var = s - np.einsum("ij,ji->i", k_star, v)
        return mean, np.sqrt(np.clip(var, 0.0, None))

    def add_point(self, x_new, y_new) -> "GaussianProcess":
        """New estimator refitted on the training set plus one point.

        The previous optimum seeds the hyperparameter search (warm start)
        alongside the usual restart design.
        """
        if not hasattr(self, "log_theta_"):
            raise NumericalError("add_point requires a fitted model")
        x_all = np.vstack([self.X_train_, np.atleast_2d(np.asarray(x_new, float))])
        y_all = np.append(self.y_train_, y_new)
        model = GaussianProcess(restarts=self.restarts, seed=self.seed,
                                standardize=self.standardize)
        return model.fit(x_all, y_all, warm_start_theta=self.log_theta_)

    # -- persistence -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "hyperparams": self.hyperparams,
            "log_theta": self.log_theta_.tolist(),
            "nlml": self.nlml_,
            "x_mean": self.x_mean_.tolist(),
            "x_scale": self.x_scale_.tolist(),
            "X": self.X_train_.tolist(),
            "y": self.y_train_.tolist(),
            "params": {"restarts": self.restarts, "seed": self.seed,
                       "standardize": self.standardize},
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "GaussianProcess":
        model = cls(**payload["params"])
        model.X_train_ = np.asarray(payload["X"], dtype=float)
        model.y_train_ = np.asarray(payload["y"], dtype=float)
        model.x_mean_ = np.asarray(payload["x_mean"], dtype=float)
        model.x_scale_ = np.asarray(payload["x_scale"], dtype=float)
        model.prior_mean_ = float(model.y_train_.mean())
        model.log_theta_ = np.asarray(payload["log_theta"], dtype=float)
        model.nlml_ = float(payload["nlml"])
        model._finalize(model._standardized(model.X_train_),
                        model.y_train_ - model.prior_mean_)
        return model

    @classmethod
    def load(cls, path) -> "GaussianProcess":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))
