"""RBF grid underlying the learnable activation function.

The activation is a weighted sum of N Gaussian bumps with shared width h,
centered on a uniform grid over a closed support interval.  Weights are
either learned or constructed by the quadrature rule a_i proportional to
the target activation sampled at the centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ActivationGrid",
    "ActivationWeights",
    "build_grid",
    "rbf_features",
    "rbf_features_batch",
    "eval_activation",
    "activation_curve",
    "quadrature_weights",
    "quadrature_norm_bounds",
    "approximation_schedule",
    "export_activation_table",
]


@dataclass(frozen=True)
class ActivationGrid:
    """Uniform RBF grid: N centers over [support_lo, support_hi], shared width."""

    support_lo: float
    support_hi: float
    n_basis: int
    centers: np.ndarray
    width: float

    def __post_init__(self):
        if not self.support_lo < self.support_hi:
            raise ValueError("support_lo must be strictly below support_hi")
        if self.width <= 0 or not math.isfinite(self.width):
            raise ValueError(f"width must be positive and finite, got {self.width}")
        c = np.asarray(self.centers, dtype=float)
        if c.ndim != 1 or c.shape[0] != self.n_basis:
            raise ValueError("centers must be a vector of length n_basis")
        if np.any(np.diff(c) <= 0):
            raise ValueError("centers must be strictly increasing")
        edges = np.linspace(self.support_lo, self.support_hi, self.n_basis + 1)
        if np.any(c < edges[:-1] - 1e-12) or np.any(c > edges[1:] + 1e-12):
            raise ValueError("each center must lie in its uniform partition cell")
        object.__setattr__(self, "centers", c)

    @property
    def spacing(self) -> float:
        return (self.support_hi - self.support_lo) / self.n_basis

    @property
    def support_len(self) -> float:
        return self.support_hi - self.support_lo


@dataclass(frozen=True)
class ActivationWeights:
    """Learnable coefficients of the RBF expansion."""

    a: np.ndarray = field()

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1:
            raise ValueError("weights must form a vector")
        if not np.all(np.isfinite(a)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "a", a)


def build_grid(support_lo: float, support_hi: float, n_basis: int, width: float) -> ActivationGrid:
    """Grid with centers at the right endpoints of the uniform partition.

    centers[i] = support_lo + (i+1) * (support_hi - support_lo) / n_basis,
    so the last center coincides with support_hi.
    """
    if not (math.isfinite(support_lo) and math.isfinite(support_hi)) or support_lo >= support_hi:
        raise ValueError(f"invalid support [{support_lo}, {support_hi}]")
    if n_basis < 2:
        raise ValueError(f"need at least 2 basis functions, got {n_basis}")
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    centers = support_lo + np.arange(1, n_basis + 1) * ((support_hi - support_lo) / n_basis)
    return ActivationGrid(
        support_lo=float(support_lo),
        support_hi=float(support_hi),
        n_basis=int(n_basis),
        centers=centers,
        width=float(width),
    )


def rbf_features(grid: ActivationGrid, z: float) -> np.ndarray:
    """Vector of basis responses exp(-(z - c_i)^2 / (2 h^2)), each in (0, 1]."""
    d = z - grid.centers
    return np.exp(-(d * d) / (2.0 * grid.width * grid.width))


def rbf_features_batch(grid: ActivationGrid, zs: np.ndarray) -> np.ndarray:
    """Row i holds rbf_features(grid, zs[i]); shape (len(zs), n_basis)."""
    zs = np.asarray(zs, dtype=float)
    d = zs[:, None] - grid.centers[None, :]
    return np.exp(-(d * d) / (2.0 * grid.width * grid.width))


def eval_activation(grid: ActivationGrid, weights: ActivationWeights, z: float) -> float:
    """Activation value: inner product of the weights with the basis responses."""
    if weights.a.shape[0] != grid.n_basis:
        raise ValueError(
            f"weight length {weights.a.shape[0]} does not match grid size {grid.n_basis}"
        )
    return float(weights.a @ rbf_features(grid, z))


def activation_curve(grid: ActivationGrid, weights: ActivationWeights, zs: np.ndarray) -> np.ndarray:
    """Activation evaluated on a vector of points."""
    if weights.a.shape[0] != grid.n_basis:
        raise ValueError(
            f"weight length {weights.a.shape[0]} does not match grid size {grid.n_basis}"
        )
    return rbf_features_batch(grid, zs) @ weights.a


def quadrature_weights(grid: ActivationGrid, sigma_at_centers: np.ndarray) -> ActivationWeights:
    """Constructive weights reproducing a target activation on the grid.

    a_i = |K| / (sqrt(2 pi) h N) * sigma(c_i), the Riemann-sum weights of the
    Gaussian-smoothed target; the resulting expansion approximates the target
    in sup norm, improving as N grows and h shrinks together.
    """
    s = np.asarray(sigma_at_centers, dtype=float)
    if s.shape != (grid.n_basis,):
        raise ValueError(f"expected {grid.n_basis} samples, got shape {s.shape}")
    scale = grid.support_len / (math.sqrt(2.0 * math.pi) * grid.width * grid.n_basis)
    return ActivationWeights(a=scale * s)


def quadrature_norm_bounds(grid: ActivationGrid, sigma_sup: float) -> tuple[float, float]:
    """Guaranteed (sum |a_i|, sum a_i^2) bounds for quadrature weights.

    For any target with sup norm sigma_sup:
        sum |a_i|  <= sigma_sup |K| / (sqrt(2 pi) h)
        sum a_i^2  <= sigma_sup^2 |K|^2 / (2 pi h^2 N)
    """
    if sigma_sup < 0:
        raise ValueError("sigma_sup must be nonnegative")
    k = grid.support_len
    l1 = sigma_sup * k / (math.sqrt(2.0 * math.pi) * grid.width)
    l2 = sigma_sup**2 * k**2 / (2.0 * math.pi * grid.width**2 * grid.n_basis)
    return l1, l2


def approximation_schedule(
    epsilon: float,
    lipschitz_sigma: float,
    radius: float,
    sigma_sup: float,
    support_len: float,
) -> tuple[float, float]:
    """Sufficient (width, grid spacing) upper bounds for a target sup-norm error.

    Diagnostic calculator only: returns (h_max, spacing_max) such that any
    h <= h_max and |K|/N <= spacing_max guarantee the constructed activation
    approximates the target within epsilon.  The bounds are conservative
    sufficient conditions, not recommended operating points.
    """
    for name, v in [
        ("epsilon", epsilon),
        ("lipschitz_sigma", lipschitz_sigma),
        ("radius", radius),
        ("sigma_sup", sigma_sup),
        ("support_len", support_len),
    ]:
        if v <= 0 or not math.isfinite(v):
            raise ValueError(f"{name} must be positive and finite, got {v}")
    lr = lipschitz_sigma * radius
    h_max = epsilon / (4.0 * math.sqrt(2.0) * lr * math.sqrt(math.log(16.0 * sigma_sup * radius / epsilon)))
    log_term = math.log(
        8.0 * sigma_sup * support_len * radius / (math.sqrt(2.0 * math.pi) * epsilon * h_max**2)
    )
    spacing_max = min(
        epsilon * h_max * math.sqrt(math.pi * math.e) / (16.0 * math.sqrt(2.0) * sigma_sup * radius * log_term),
        epsilon / (4.0 * lr),
    )
    return h_max, spacing_max


def export_activation_table(
    path,
    grid: ActivationGrid,
    weights: ActivationWeights,
    n_points: int = 401,
) -> np.ndarray:
    """Write a two-column text table (z, activation) over the support."""
    zs = np.linspace(grid.support_lo, grid.support_hi, n_points)
    vals = activation_curve(grid, weights, zs)
    with open(path, "w") as f:
        f.write("z\tactivation\n")
        for z, v in zip(zs, vals):
            f.write(f"{z:.17g}\t{v:.17g}\n")
    return vals
