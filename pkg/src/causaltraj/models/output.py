"""Model output containers, bivariate-Gaussian sampling, trajectory decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..grad import Array


@dataclass
class GaussianParams:
    """Per pedestrian, per future step: means, scales, and correlation.

    The exponential/tanh link functions upstream guarantee sigma > 0 and
    |rho| < 1 for arbitrary parameter values.
    """

    mu: Array      # (N, T, 2)
    sigma: Array   # (N, T, 2)
    rho: Array     # (N, T, 1)

    def validate(self) -> None:
        if np.any(self.sigma.data <= 0.0):
            raise ContractError("sigma entries must be strictly positive")
        if np.any(np.abs(self.rho.data) >= 1.0):
            raise ContractError("|rho| must be < 1")


def sample_bivariate(mu_x: float, mu_y: float, sigma_x: float, sigma_y: float,
                     rho: float, rng: np.random.Generator) -> tuple[float, float]:
    """Draw one point from the bivariate normal via Cholesky of the covariance."""
    z1, z2 = rng.standard_normal(2)
    x = mu_x + sigma_x * z1
    y = mu_y + sigma_y * (rho * z1 + np.sqrt(1.0 - rho * rho) * z2)
    return float(x), float(y)


def sample_gaussian_displacements(gauss: GaussianParams,
                                  rng: np.random.Generator) -> np.ndarray:
    """Vectorized per-step draws: one (N, T, 2) displacement field."""
    mu = gauss.mu.data
    sigma = gauss.sigma.data
    rho = gauss.rho.data[..., 0]
    z = rng.standard_normal(mu.shape)
    x = mu[..., 0] + sigma[..., 0] * z[..., 0]
    y = mu[..., 1] + sigma[..., 1] * (rho * z[..., 0]
                                      + np.sqrt(1.0 - rho * rho) * z[..., 1])
    return np.stack([x, y], axis=-1)


def decode_trajectory(displacements: np.ndarray, last_observed: np.ndarray) -> np.ndarray:
    """Cumulative summation of displacements from each pedestrian's last position."""
    displacements = np.asarray(displacements, dtype=np.float64)
    last_observed = np.asarray(last_observed, dtype=np.float64)
    if displacements.ndim != 3 or displacements.shape[2] != 2:
        raise ContractError(f"displacements must be (N, T, 2); got {displacements.shape}")
    if last_observed.shape != (displacements.shape[0], 2):
        raise ContractError(
            f"anchors {last_observed.shape} do not match displacements "
            f"{displacements.shape}")
    return last_observed[:, None, :] + np.cumsum(displacements, axis=1)
