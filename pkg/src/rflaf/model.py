"""Finite-width random feature models.

The main model scores a point x as (1/M) a^T B(x) v, where B(x) is the
N x M matrix of basis responses B_k(w_m . x) over a frozen Gaussian
feature bank {w_m}.  Fixed-activation baselines share the bank mechanics
but apply a single scalar activation per feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ActivationGrid, build_grid

__all__ = [
    "FeatureBank",
    "RflafModel",
    "BaselineRfModel",
    "BASELINE_ACTIVATIONS",
    "sample_features",
    "feature_matrix",
    "forward",
    "forward_batch",
    "baseline_forward",
    "baseline_forward_batch",
    "single_basis_forward",
    "save_model",
    "load_model",
]

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class FeatureBank:
    """Frozen matrix of Gaussian feature directions, reproducible from its seed."""

    weights: np.ndarray
    dim: int
    n_features: int
    seed: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n_features, self.dim):
            raise ValueError(f"weights shape {w.shape} != ({self.n_features}, {self.dim})")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class RflafModel:
    """Feature bank, activation grid, and the two learnable weight vectors."""

    bank: FeatureBank
    grid: ActivationGrid
    a: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if a.shape != (self.grid.n_basis,):
            raise ValueError(f"a has shape {a.shape}, expected ({self.grid.n_basis},)")
        if v.shape != (self.bank.n_features,):
            raise ValueError(f"v has shape {v.shape}, expected ({self.bank.n_features},)")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _rbf1(z: np.ndarray) -> np.ndarray:
    return np.exp(-(z * z) / (2.0 * 0.5**2))


def _rbf2(z: np.ndarray) -> np.ndarray:
    return np.exp(-((z - 1.5) ** 2) / (2.0 * 0.5**2))


BASELINE_ACTIVATIONS = {
    "relu": _relu,
    "tanh": np.tanh,
    "rbf1": _rbf1,
    "rbf2": _rbf2,
}


@dataclass(frozen=True)
class BaselineRfModel:
    """Fixed-activation random feature model used for comparisons."""

    bank: FeatureBank
    activation_kind: str
    v: np.ndarray

    def __post_init__(self):
        if self.activation_kind not in BASELINE_ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation_kind!r}; "
                f"expected one of {sorted(BASELINE_ACTIVATIONS)}"
            )
        v = np.asarray(self.v, dtype=float)
        if v.shape != (self.bank.n_features,):
            raise ValueError(f"v has shape {v.shape}, expected ({self.bank.n_features},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "v", v)

    @property
    def width(self) -> int:
        return self.bank.n_features


def sample_features(dim: int, n_features: int, seed: int) -> FeatureBank:
    """Draw the feature bank: n_features i.i.d. standard Gaussian rows in R^dim."""
    if dim < 1 or n_features < 1:
        raise ValueError(f"dim and n_features must be >= 1, got {dim}, {n_features}")
    rng = np.random.default_rng(seed)
    return FeatureBank(
        weights=rng.standard_normal((n_features, dim)),
        dim=dim,
        n_features=n_features,
        seed=int(seed),
    )


def feature_matrix(grid: ActivationGrid, bank: FeatureBank, x: np.ndarray) -> np.ndarray:
    """N x M matrix with entry (k, m) = exp(-(w_m.x - c_k)^2 / (2 h^2))."""
    x = np.asarray(x, dtype=float)
    if x.shape != (bank.dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({bank.dim},)")
    z = bank.weights @ x
    d = z[None, :] - grid.centers[:, None]
    return np.exp(-(d * d) / (2.0 * grid.width * grid.width))


def forward(model: RflafModel, x: np.ndarray) -> float:
    """Model output (1/M) a^T B(x) v."""
    b = feature_matrix(model.grid, model.bank, x)
    return float(model.a @ (b @ model.v)) / model.bank.n_features


def forward_batch(model: RflafModel, X: np.ndarray) -> np.ndarray:
    """Row-wise forward; bit-identical to looping forward over the rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.bank.dim:
        if X.shape == (0,):
            return np.empty(0)
        raise ValueError(f"X has shape {X.shape}, expected (n, {model.bank.dim})")
    return np.array([forward(model, row) for row in X])


def baseline_forward(model: BaselineRfModel, x: np.ndarray) -> float:
    """Baseline output (1/width) sum_m act(w_m.x) v_m."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.bank.dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({model.bank.dim},)")
    act = BASELINE_ACTIVATIONS[model.activation_kind]
    return float(act(model.bank.weights @ x) @ model.v) / model.width


def baseline_forward_batch(model: BaselineRfModel, X: np.ndarray) -> np.ndarray:
    """Vectorized baseline forward over the rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.bank.dim:
        raise ValueError(f"X has shape {X.shape}, expected (n, {model.bank.dim})")
    act = BASELINE_ACTIVATIONS[model.activation_kind]
    return act(X @ model.bank.weights.T) @ model.v / model.width


def save_model(model: RflafModel, path) -> None:
    """Checkpoint holding the bank seed, dimensions, grid geometry, and weights.

    The bank matrix itself is not stored; it is regenerated from the seed on
    load, so a round trip reproduces forward outputs bit-exactly.
    """
    np.savez(
        path,
        format_version=np.int64(CHECKPOINT_VERSION),
        bank_seed=np.int64(model.bank.seed),
        dim=np.int64(model.bank.dim),
        n_features=np.int64(model.bank.n_features),
        support_lo=np.float64(model.grid.support_lo),
        support_hi=np.float64(model.grid.support_hi),
        n_basis=np.int64(model.grid.n_basis),
        width=np.float64(model.grid.width),
        a=model.a,
        v=model.v,
    )


def load_model(path) -> RflafModel:
    """Rebuild a model from a checkpoint written by save_model."""
    with np.load(path, allow_pickle=False) as data:
        try:
            version = int(data["format_version"])
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            bank = sample_features(int(data["dim"]), int(data["n_features"]), int(data["bank_seed"]))
            grid = build_grid(
                float(data["support_lo"]),
                float(data["support_hi"]),
                int(data["n_basis"]),
                float(data["width"]),
            )
            return RflafModel(bank=bank, grid=grid, a=data["a"], v=data["v"])
        except KeyError as exc:
            raise ValueError(f"checkpoint missing field {exc}") from exc


def single_basis_forward(grid: ActivationGrid, bank: FeatureBank, v: np.ndarray, k: int, x: np.ndarray) -> float:
    """(1/M) sum_m B_k(w_m.x) v_m: the width-M model with one active basis."""
    z = bank.weights @ np.asarray(x, dtype=float)
    ck = grid.centers[k]
    b = np.exp(-((z - ck) ** 2) / (2.0 * grid.width * grid.width))
    return float(b @ v) / bank.n_features
