"""Random frequency-selective channel realizations.

Taps are independent circularly-symmetric complex Gaussians whose variances
follow an exponentially decaying power delay profile, so tap magnitudes are
Rayleigh. Users are placed uniformly between 3 and 20 m from the receiver
and the profile scale follows the inverse-square law 0.3 / d^2.

All sampling goes through an explicitly passed ``numpy.random.Generator``
(PCG64 via ``numpy.random.default_rng``), so every draw is replayable from
its seed.
"""

from dataclasses import dataclass

import numpy as np

from .params import NetworkParams

DISTANCE_RANGE_M = (3.0, 20.0)
PATHLOSS_COEFF = 0.3


@dataclass(frozen=True)
class ChannelRealization:
    """One user's tap vector plus its distance-derived variance scale."""

    taps: np.ndarray
    distance: float
    variance_scale: float

    def __post_init__(self):
        if self.taps.ndim != 1 or len(self.taps) < 2:
            raise ValueError("taps must be a 1-D vector with at least 2 entries")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("taps must be finite")
        if self.variance_scale <= 0.0:
            raise ValueError("variance_scale must be positive")

    @property
    def gain(self) -> float:
        """Total channel energy, the squared norm of the tap vector."""
        return float(np.sum(np.abs(self.taps) ** 2))


def apdp_variance(path_index: int, paths: int, pdp_ratio: float,
                  scale: float = 1.0) -> float:
    """Average power of tap ``path_index`` under the exponential profile.

    Args:
        path_index: 1-based tap index, 1 <= path_index <= paths.
        paths: number of taps L, at least 2.
        pdp_ratio: first-to-last tap variance ratio (linear, >= 1).
        scale: variance of the first tap.

    Returns:
        scale * pdp_ratio ** (-(path_index - 1) / (paths - 1)),
        non-increasing in path_index.
    """
    if paths < 2:
        raise ValueError("paths must be at least 2")
    if not 1 <= path_index <= paths:
        raise ValueError(f"path_index {path_index} outside [1, {paths}]")
    if pdp_ratio < 1.0:
        raise ValueError("pdp_ratio must be >= 1")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    return scale * pdp_ratio ** (-(path_index - 1) / (paths - 1))


def apdp_profile(paths: int, pdp_ratio: float, scale: float = 1.0) -> np.ndarray:
    """Vector of per-tap variances for taps 1..paths."""
    if paths < 2:
        raise ValueError("paths must be at least 2")
    if pdp_ratio < 1.0:
        raise ValueError("pdp_ratio must be >= 1")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    exponents = -np.arange(paths) / (paths - 1)
    return scale * pdp_ratio ** exponents


def sample_distance(rng: np.random.Generator) -> float:
    """User-to-receiver distance, uniform on [3, 20] meters."""
    lo, hi = DISTANCE_RANGE_M
    return float(rng.uniform(lo, hi))


def sample_channel(rng: np.random.Generator, params: NetworkParams,
                   distance: float) -> ChannelRealization:
    """Draw one channel realization at the given distance.

    Each tap l is an independent CN(0, v_l) variable with
    v_l = (0.3 / distance^2) * pdp_ratio ** (-(l-1)/(L-1)). Real and
    imaginary parts carry v_l / 2 each. Deterministic given (rng state,
    params, distance).
    """
    if distance <= 0.0:
        raise ValueError("distance must be positive")
    scale = PATHLOSS_COEFF / distance**2
    variances = apdp_profile(params.paths, params.pdp_ratio, scale)
    z = rng.standard_normal((2, params.paths))
    taps = np.sqrt(variances / 2.0) * (z[0] + 1j * z[1])
    return ChannelRealization(taps=taps, distance=float(distance),
                              variance_scale=scale)


def sample_cell(rng: np.random.Generator, params: NetworkParams) -> list:
    """Draw all K users of a cell, distances included."""
    return [sample_channel(rng, params, sample_distance(rng))
            for _ in range(params.users)]
