"""Training objective, analytic gradients, and the Adam loop.

The regularized least-squares objective is

    (1/n) sum_i (f(x_i) - y_i)^2
        + lambda1 (|a|^2 - |v|^2)^2          # keeps the two factors balanced
        + lambda2 |a|_1,

with f the model forward pass.  Gradients are exact for the smooth part;
the L1 term contributes sign(a_i), taken as 0 at a_i = 0.  Everything is
deterministic for a fixed config seed: shuffling uses a seeded permutation
and gradient reductions run in fixed index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .model import (
    BASELINE_ACTIVATIONS,
    BaselineRfModel,
    FeatureBank,
    RflafModel,
)
from .basis import ActivationGrid

__all__ = [
    "TrainConfig",
    "AdamState",
    "LossBreakdown",
    "EpochStats",
    "init_adam",
    "adam_step",
    "new_rflaf_model",
    "new_baseline_model",
    "predict_batch",
    "loss",
    "grad",
    "grad_check",
    "train",
    "train_baseline",
]

# Basis-matrix entries materialized per chunk (rows * M * N cells).
_CHUNK_CELLS = 16_000_000


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the regularized objective and the Adam loop."""

    lambda1: float = 1e-3
    lambda2: float = 1e-4
    learning_rate: float = 1e-3
    epochs: int = 5
    batch_size: int = 256
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularizer weights must be nonnegative")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise ValueError("Adam epsilon must be positive")


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators for one flat parameter vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int


@dataclass(frozen=True)
class LossBreakdown:
    """Objective split into its three terms; total is their exact sum."""

    mse: float
    balance: float
    l1: float
    total: float


@dataclass(frozen=True)
class EpochStats:
    """Per-epoch history row; train metrics are running means over batches."""

    epoch: int
    train_total: float
    train_mse: float
    train_balance: float
    train_l1: float
    test_mse: float


def init_adam(n_params: int) -> AdamState:
    return AdamState(
        first_moment=np.zeros(n_params),
        second_moment=np.zeros(n_params),
        step=0,
    )


def adam_step(
    state: AdamState,
    params: np.ndarray,
    grads: np.ndarray,
    cfg: TrainConfig,
) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns the new state and parameters."""
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"state {state.first_moment.shape}"
        )
    t = state.step + 1
    m = cfg.adam_beta1 * state.first_moment + (1.0 - cfg.adam_beta1) * grads
    s = cfg.adam_beta2 * state.second_moment + (1.0 - cfg.adam_beta2) * grads * grads
    m_hat = m / (1.0 - cfg.adam_beta1**t)
    s_hat = s / (1.0 - cfg.adam_beta2**t)
    new_params = params - cfg.learning_rate * m_hat / (np.sqrt(s_hat) + cfg.adam_eps)
    return AdamState(first_moment=m, second_moment=s, step=t), new_params


def new_rflaf_model(bank: FeatureBank, grid: ActivationGrid, seed: int) -> RflafModel:
    """Balanced Gaussian init: |a| and |v| both start near 1."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(grid.n_basis) / math.sqrt(grid.n_basis)
    v = rng.standard_normal(bank.n_features) / math.sqrt(bank.n_features)
    return RflafModel(bank=bank, grid=grid, a=a, v=v)


def new_baseline_model(bank: FeatureBank, activation_kind: str, seed: int) -> BaselineRfModel:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(bank.n_features) / math.sqrt(bank.n_features)
    return BaselineRfModel(bank=bank, activation_kind=activation_kind, v=v)


def _chunk_rows(model: RflafModel, n: int) -> int:
    cells = model.bank.n_features * model.grid.n_basis
    return max(1, min(n, _CHUNK_CELLS // max(1, cells)))


def _basis_flat(model: RflafModel, X: np.ndarray) -> np.ndarray:
    """(rows * M, N) basis responses for the flattened pre-activations.

    Built with in-place elementwise passes; the z and center values are
    pre-scaled by 1/(sqrt(2) h) so the exponent is just the squared gap.
    """
    k = 1.0 / (math.sqrt(2.0) * model.grid.width)
    z = (X @ model.bank.weights.T).reshape(-1)
    z *= k
    buf = np.subtract(z[:, None], k * model.grid.centers[None, :])
    buf *= buf
    np.negative(buf, out=buf)
    return np.exp(buf, out=buf)


def predict_batch(model: RflafModel, X: np.ndarray) -> np.ndarray:
    """Vectorized forward over rows, chunked to bound memory.

    Agrees with the row-by-row forward pass to floating-point reassociation
    tolerance (~1e-15 relative); use model.forward_batch when bit-level
    agreement with the scalar path matters.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    m = model.bank.n_features
    out = np.empty(n)
    step = _chunk_rows(model, n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        act = (_basis_flat(model, X[lo:hi]) @ model.a).reshape(hi - lo, m)
        out[lo:hi] = act @ model.v / m
    return out


def _regularizers(model: RflafModel, cfg: TrainConfig) -> tuple[float, float, float]:
    """(balance, l1, norm gap |a|^2 - |v|^2)."""
    gap = float(model.a @ model.a) - float(model.v @ model.v)
    balance = cfg.lambda1 * gap * gap
    l1 = cfg.lambda2 * float(np.sum(np.abs(model.a)))
    return balance, l1, gap


def loss(model: RflafModel, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> LossBreakdown:
    """Objective value split into mean squared error, balance, and L1 terms."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],) or X.shape[0] < 1:
        raise ValueError(f"inconsistent data shapes X {X.shape}, y {y.shape}")
    resid = predict_batch(model, X) - y
    mse = float(resid @ resid) / X.shape[0]
    balance, l1, _ = _regularizers(model, cfg)
    return LossBreakdown(mse=mse, balance=balance, l1=l1, total=mse + balance + l1)


def _loss_and_grad(
    model: RflafModel,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Objective and its exact (a, v) gradient in one pass over the data."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],) or X.shape[0] < 1:
        raise ValueError(f"inconsistent data shapes X {X.shape}, y {y.shape}")
    n = X.shape[0]
    m = model.bank.n_features
    g_a = np.zeros(model.grid.n_basis)
    g_v = np.zeros(m)
    sq_resid = 0.0
    step = _chunk_rows(model, n)
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        e = _basis_flat(model, X[lo:hi])  # (rows * M, N)
        act = (e @ model.a).reshape(hi - lo, m)
        resid = act @ model.v / m - y[lo:hi]
        sq_resid += float(resid @ resid)
        g_v += resid @ act
        g_a += e.T @ (resid[:, None] * model.v[None, :]).reshape(-1)
    scale = 2.0 / (n * m)
    g_a *= scale
    g_v *= scale
    balance, l1, gap = _regularizers(model, cfg)
    g_a += 4.0 * cfg.lambda1 * gap * model.a + cfg.lambda2 * np.sign(model.a)
    g_v += -4.0 * cfg.lambda1 * gap * model.v
    mse = sq_resid / n
    breakdown = LossBreakdown(mse=mse, balance=balance, l1=l1, total=mse + balance + l1)
    return breakdown, g_a, g_v


def grad(
    model: RflafModel,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of the objective in (a, v); L1 subgradient 0 at a_i = 0."""
    _, g_a, g_v = _loss_and_grad(model, X, y, cfg)
    return g_a, g_v


def grad_check(
    model: RflafModel,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    step: float = 1e-5,
) -> float:
    """Worst relative disagreement between analytic and central-difference gradients.

    Relative error per coordinate is |g - fd| / max(|g| + |fd|, 1e-8).  When
    the L1 weight is active, every a_i must sit at least 10*step away from
    the kink at zero; violations raise instead of silently passing.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if cfg.lambda2 > 0 and np.min(np.abs(model.a)) <= 10.0 * step:
        raise ValueError(
            "some |a_i| <= 10*step: central differences straddle the L1 kink"
        )
    g_a, g_v = grad(model, X, y, cfg)
    worst = 0.0

    def _probe(analytic: float, rebuild) -> float:
        up = loss(rebuild(+step), X, y, cfg).total
        dn = loss(rebuild(-step), X, y, cfg).total
        fd = (up - dn) / (2.0 * step)
        return abs(analytic - fd) / max(abs(analytic) + abs(fd), 1e-8)

    for i in range(model.grid.n_basis):
        def bump_a(eps, i=i):
            a = model.a.copy()
            a[i] += eps
            return RflafModel(bank=model.bank, grid=model.grid, a=a, v=model.v)

        worst = max(worst, _probe(g_a[i], bump_a))
    for j in range(model.bank.n_features):
        def bump_v(eps, j=j):
            v = model.v.copy()
            v[j] += eps
            return RflafModel(bank=model.bank, grid=model.grid, a=model.a, v=v)

        worst = max(worst, _probe(g_v[j], bump_v))
    return worst


def _epoch_batches(n_train: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n_train)
    for lo in range(0, n_train, batch_size):
        yield order[lo : lo + batch_size]


def train(model: RflafModel, dataset: Dataset, cfg: TrainConfig) -> tuple[RflafModel, list[EpochStats]]:
    """Adam on (a, v) over the dataset's train split.

    Returns the trained model and one EpochStats row per epoch; train metrics
    are size-weighted running means over the epoch's batches, test_mse is a
    full pass at the end of each epoch.  Two runs with equal seeds produce
    identical parameter trajectories.
    """
    x_train = dataset.X[dataset.train_idx]
    y_train = dataset.y[dataset.train_idx]
    x_test = dataset.X[dataset.test_idx]
    y_test = dataset.y[dataset.test_idx]
    n_basis = model.grid.n_basis
    params = np.concatenate([model.a, model.v])
    state = init_adam(params.shape[0])
    rng = np.random.default_rng(cfg.seed)
    history: list[EpochStats] = []
    current = model
    for epoch in range(cfg.epochs):
        sums = np.zeros(4)  # total, mse, balance, l1 weighted by batch size
        seen = 0
        for idx in _epoch_batches(y_train.shape[0], cfg.batch_size, rng):
            xb, yb = x_train[idx], y_train[idx]
            lb, g_a, g_v = _loss_and_grad(current, xb, yb, cfg)
            state, params = adam_step(state, params, np.concatenate([g_a, g_v]), cfg)
            current = RflafModel(
                bank=model.bank, grid=model.grid, a=params[:n_basis], v=params[n_basis:]
            )
            sums += idx.shape[0] * np.array([lb.total, lb.mse, lb.balance, lb.l1])
            seen += idx.shape[0]
        test_resid = predict_batch(current, x_test) - y_test
        test_mse = float(test_resid @ test_resid) / max(1, y_test.shape[0])
        history.append(
            EpochStats(
                epoch=epoch,
                train_total=sums[0] / seen,
                train_mse=sums[1] / seen,
                train_balance=sums[2] / seen,
                train_l1=sums[3] / seen,
                test_mse=test_mse,
            )
        )
    return current, history


def train_baseline(
    model: BaselineRfModel,
    dataset: Dataset,
    cfg: TrainConfig,
) -> tuple[BaselineRfModel, list[EpochStats]]:
    """Adam on v for a fixed-activation baseline; plain MSE objective."""
    act = BASELINE_ACTIVATIONS[model.activation_kind]
    x_train = dataset.X[dataset.train_idx]
    y_train = dataset.y[dataset.train_idx]
    x_test = dataset.X[dataset.test_idx]
    y_test = dataset.y[dataset.test_idx]
    phi_train = act(x_train @ model.bank.weights.T)  # (n_train, width)
    phi_test = act(x_test @ model.bank.weights.T)
    width = model.width
    v = model.v.copy()
    state = init_adam(width)
    rng = np.random.default_rng(cfg.seed)
    history: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        total = 0.0
        seen = 0
        for idx in _epoch_batches(y_train.shape[0], cfg.batch_size, rng):
            pb = phi_train[idx]
            resid = pb @ v / width - y_train[idx]
            mse = float(resid @ resid) / idx.shape[0]
            g_v = (2.0 / (idx.shape[0] * width)) * (resid @ pb)
            state, v = adam_step(state, v, g_v, cfg)
            total += mse * idx.shape[0]
            seen += idx.shape[0]
        test_resid = phi_test @ v / width - y_test
        test_mse = float(test_resid @ test_resid) / max(1, y_test.shape[0])
        train_mse = total / seen
        history.append(
            EpochStats(
                epoch=epoch,
                train_total=train_mse,
                train_mse=train_mse,
                train_balance=0.0,
                train_l1=0.0,
                test_mse=test_mse,
            )
        )
    return BaselineRfModel(bank=model.bank, activation_kind=model.activation_kind, v=v), history
