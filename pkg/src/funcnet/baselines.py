"""Reference estimators: penalized functional linear model and a vector net.

The linear model expands the intercept and every coefficient surface in
B-splines and solves the discretized least-squares problem in closed
form.  The vector network flattens the predictor curves and runs a
standard dense net, exposing the same forward/backward/parameters
surface as the functional networks so the shared training loop applies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .activations import Activation
from .bsplines import BSplineBasis, laplacian_penalty_matrix
from .grids import Grid

SCHEMA_VERSION = 1


@dataclass
class FflmModel:
    """Linear model Y(t) = alpha(t) + sum_r ∫ beta_r(s,t) X_r(s) ds."""

    alpha_coef: np.ndarray
    beta_coef: np.ndarray  # (R, C, D): C on the s axis, D on the t axis
    intercept_basis: BSplineBasis
    pred_basis: BSplineBasis
    resp_basis: BSplineBasis
    x_grid: Grid
    y_grid: Grid
    lam: float = 0.0
    _design_cache: dict = field(default_factory=dict, repr=False)

    def _designs(self):
        if not self._design_cache:
            self._design_cache["vi"] = self.intercept_basis.design(self.y_grid.points)
            self._design_cache["vp"] = self.pred_basis.design(self.x_grid.points)
            self._design_cache["vr"] = self.resp_basis.design(self.y_grid.points)
        c = self._design_cache
        return c["vi"], c["vp"], c["vr"]

    def features(self, x) -> np.ndarray:
        """Z[i, r, c] = trapezoid of basis c against predictor r of sample i."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 3 or x.shape[1] != self.beta_coef.shape[0]:
            raise ValueError(
                f"expected (n, {self.beta_coef.shape[0]}, {self.x_grid.m}) input"
            )
        _, vp, _ = self._designs()
        return np.tensordot(x * self.x_grid.trapezoid_weights, vp, axes=([2], [0]))

    def predict(self, x) -> np.ndarray:
        vi, _, vr = self._designs()
        z = self.features(x)
        mixed = np.tensordot(z, self.beta_coef, axes=([1, 2], [0, 1]))  # (n, D)
        return mixed @ vr.T + vi @ self.alpha_coef

    def intercept_values(self) -> np.ndarray:
        vi, _, _ = self._designs()
        return vi @ self.alpha_coef

    def beta_surface(self, r: int = 0) -> np.ndarray:
        """Coefficient surface on the (m, m_y) grid, s along rows."""
        _, vp, vr = self._designs()
        return vp @ self.beta_coef[r] @ vr.T

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "fflm",
            "x_m": self.x_grid.m,
            "y_m": self.y_grid.m,
            "lam": self.lam,
            "intercept_basis": [self.intercept_basis.num_basis, self.intercept_basis.order],
            "pred_basis": [self.pred_basis.num_basis, self.pred_basis.order],
            "resp_basis": [self.resp_basis.num_basis, self.resp_basis.order],
            "alpha_coef": self.alpha_coef.tolist(),
            "beta_coef": self.beta_coef.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FflmModel":
        if doc.get("kind") != "fflm":
            raise ValueError(f"not an fflm document: kind={doc.get('kind')!r}")
        return cls(
            np.asarray(doc["alpha_coef"], dtype=float),
            np.asarray(doc["beta_coef"], dtype=float),
            BSplineBasis(*doc["intercept_basis"]),
            BSplineBasis(*doc["pred_basis"]),
            BSplineBasis(*doc["resp_basis"]),
            Grid(doc["x_m"]),
            Grid(doc["y_m"]),
            lam=float(doc["lam"]),
        )


def fflm_fit(data, num_intercept_basis: int = 15, num_pred_basis: int = 15,
             num_resp_basis: int = 15, lam: float = 0.0, order: int = 4) -> FflmModel:
    """Closed-form penalized least squares for the linear model.

    Minimizes mean ∫(Y - Yhat)^2 dt + lam * sum_r ∫∫(Δbeta_r)^2, where the
    roughness kernel is the same Gram form used by the basis network.
    The intercept is unpenalized.  Raises if the normal matrix is not
    positive definite (under-determined at lam=0).
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    x = np.asarray(data.x, dtype=float)
    y = np.asarray(data.y, dtype=float)
    n, r_count, _ = x.shape
    if n < 1:
        raise ValueError("need at least one sample")

    model = FflmModel(
        np.zeros(num_intercept_basis),
        np.zeros((r_count, num_pred_basis, num_resp_basis)),
        BSplineBasis(num_intercept_basis, order),
        BSplineBasis(num_pred_basis, order),
        BSplineBasis(num_resp_basis, order),
        data.x_grid,
        data.y_grid,
        lam=lam,
    )
    vi, _, vr = model._designs()
    z = model.features(x)  # (n, R, C)
    q = data.y_grid.trapezoid_weights
    qvi = q[:, None] * vi
    qvr = q[:, None] * vr

    b = num_intercept_basis
    cd = num_pred_basis * num_resp_basis
    size = b + r_count * cd
    m = np.empty((size, size))
    rhs = np.empty(size)

    g_ii = vi.T @ qvi
    g_ir = vi.T @ qvr  # (B, D)
    g_rr = vr.T @ qvr  # (D, D)
    z_mean = z.mean(axis=0)  # (R, C)
    ybar = y.mean(axis=0)

    m[:b, :b] = g_ii
    rhs[:b] = qvi.T @ ybar
    yqv = y @ qvr  # (n, D)
    for r in range(r_count):
        sl = slice(b + r * cd, b + (r + 1) * cd)
        cross = np.kron(z_mean[r][None, :], g_ir)  # (B, C*D)
        m[:b, sl] = cross
        m[sl, :b] = cross.T
        rhs[sl] = (z[:, r, :].T @ yqv).reshape(cd) / n
        for r2 in range(r_count):
            s_rr = z[:, r, :].T @ z[:, r2, :] / n  # (C, C)
            m[sl, slice(b + r2 * cd, b + (r2 + 1) * cd)] = np.kron(s_rr, g_rr)
    if lam > 0:
        pen = laplacian_penalty_matrix(model.pred_basis, model.resp_basis)
        for r in range(r_count):
            sl = slice(b + r * cd, b + (r + 1) * cd)
            m[sl, sl] += lam * pen

    try:
        coef = linalg.cho_solve(linalg.cho_factor(m), rhs)
    except linalg.LinAlgError as exc:
        raise linalg.LinAlgError(
            "normal matrix is not positive definite; increase lam or reduce "
            "the basis sizes"
        ) from exc
    model.alpha_coef = coef[:b]
    model.beta_coef = coef[b:].reshape(r_count, num_pred_basis, num_resp_basis)
    return model


def fflm_tune_lambda(data, lam_grid, k: int = 5, seed: int = 0,
                     num_intercept_basis: int = 15, num_pred_basis: int = 15,
                     num_resp_basis: int = 15, order: int = 4) -> float:
    """K-fold choice of the surface penalty for the linear model.

    Refits per fold at each candidate and scores mean validation loss;
    ties go to the larger (smoother) value.
    """
    lams = sorted(float(v) for v in lam_grid)
    if not lams:
        raise ValueError("lambda grid is empty")
    if k < 2 or k > data.n:
        raise ValueError(f"need 2 <= k <= {data.n}")
    from .training import quadratic_loss

    perm = np.random.default_rng(seed).permutation(data.n)
    folds = [np.sort(part) for part in np.array_split(perm, k)]
    best_lam, best_score = None, np.inf
    for lam in lams:
        scores = []
        for val_idx in folds:
            train_idx = np.setdiff1d(np.arange(data.n), val_idx)
            model = fflm_fit(
                data.subset(train_idx),
                num_intercept_basis, num_pred_basis, num_resp_basis,
                lam=lam, order=order,
            )
            pred = model.predict(data.x[val_idx])
            scores.append(quadratic_loss(pred, data.y[val_idx], data.y_grid))
        score = float(np.mean(scores))
        if score <= best_score:
            best_score, best_lam = score, lam
    return best_lam


class VectorNN:
    """Dense net from flattened predictor curves to the response vector.

    Implements the trainable interface used by the training loops; the
    output vector is read as a curve on the response grid, so the same
    integrated quadratic loss applies.
    """

    kind = "vnn"

    def __init__(self, weights, biases, input_count: int, in_grid: Grid,
                 out_grid: Grid, activation: Activation):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need matching, non-empty weight/bias lists")
        dims_in = input_count * in_grid.m
        for w_arr, b_arr in zip(weights, biases):
            if w_arr.ndim != 2 or b_arr.shape != (w_arr.shape[0],):
                raise ValueError("layer shapes inconsistent")
            if w_arr.shape[1] != dims_in:
                raise ValueError(
                    f"layer expects {w_arr.shape[1]} inputs, previous layer "
                    f"provides {dims_in}"
                )
            dims_in = w_arr.shape[0]
        if dims_in != out_grid.m:
            raise ValueError("last layer must match the response grid")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(v, dtype=float) for v in biases]
        self.input_count = input_count
        self.in_grid = in_grid
        self.out_grid = out_grid
        self.activation = activation

    @property
    def output_grid(self) -> Grid:
        return self.out_grid

    def _flatten(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 3 or x.shape[1] != self.input_count or x.shape[2] != self.in_grid.m:
            raise ValueError(
                f"expected input (n, {self.input_count}, {self.in_grid.m}), "
                f"got {x.shape}"
            )
        return x.reshape(x.shape[0], -1)

    def forward(self, x):
        h = self._flatten(x)
        cache = []
        last = len(self.weights) - 1
        for idx, (w_arr, b_arr) in enumerate(zip(self.weights, self.biases)):
            a = h @ w_arr.T + b_arr
            cache.append((h, a))
            h = a if idx == last else self.activation(a)
        return h, cache

    def predict(self, x):
        return self.forward(x)[0]

    def backward(self, cache, residuals):
        n = residuals.shape[0]
        delta = (2.0 / n) * residuals * self.out_grid.trapezoid_weights
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        for idx in range(len(self.weights) - 1, -1, -1):
            h_in, _ = cache[idx]
            grads[2 * idx] = delta.sum(axis=0)
            grads[2 * idx + 1] = delta.T @ h_in
            if idx > 0:
                upstream = delta @ self.weights[idx]
                delta = upstream * self.activation.deriv(cache[idx - 1][1])
        return grads

    def parameters(self) -> list[np.ndarray]:
        out = []
        for b_arr, w_arr in zip(self.biases, self.weights):
            out.append(b_arr)
            out.append(w_arr)
        return out

    def set_parameters(self, values):
        for target, src in zip(self.parameters(), values):
            target[...] = src

    def penalty(self, lam_b: float, lam_w: float):
        if lam_b or lam_w:
            raise ValueError("the vector network has no roughness penalty")
        return 0.0, [np.zeros_like(p) for p in self.parameters()]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "input_count": self.input_count,
            "in_m": self.in_grid.m,
            "out_m": self.out_grid.m,
            "activation": self.activation.name,
            "weights": [w.tolist() for w in self.weights],
            "biases": [v.tolist() for v in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VectorNN":
        if doc.get("kind") != cls.kind:
            raise ValueError(f"not a {cls.kind} document: kind={doc.get('kind')!r}")
        return cls(
            [np.asarray(w, dtype=float) for w in doc["weights"]],
            [np.asarray(v, dtype=float) for v in doc["biases"]],
            doc["input_count"],
            Grid(doc["in_m"]),
            Grid(doc["out_m"]),
            Activation(doc["activation"]),
        )


def vnn_init(input_count: int, m: int, m_y: int, hidden=(128, 128),
             activation: str = "tanh", seed=0) -> VectorNN:
    """He-scaled random dense net; the final (identity) layer maps to m_y."""
    rng = np.random.default_rng(seed)
    dims = [input_count * m, *hidden, m_y]
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        weights.append(np.sqrt(2.0 / fan_in) * rng.standard_normal((fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return VectorNN(weights, biases, input_count, Grid(m), Grid(m_y),
                    Activation(activation))


def vnn_fit(train, val, input_count: int, m: int, m_y: int, hidden=(128, 128),
            activation: str = "tanh", cfg=None, seed=0):
    """Train a fresh vector net with early stopping; returns (model, FitResult)."""
    from .training import TrainConfig, train_early_stopping

    if cfg is None:
        cfg = TrainConfig()
    model = vnn_init(input_count, m, m_y, hidden, activation, seed)
    result = train_early_stopping(model, train, val, cfg)
    return model, result


def vnn_predict(model: VectorNN, x) -> np.ndarray:
    return model.predict(x)
