"""Scalar system constants for an IR-UWB uplink cell."""

from dataclasses import dataclass, replace
import math


def fingers_from_ratio(rake_ratio: float, paths: int) -> int:
    """Number of Rake fingers P = round(rake_ratio * paths), rounding half up."""
    return int(math.floor(rake_ratio * paths + 0.5))


@dataclass(frozen=True)
class NetworkParams:
    """All scalar constants describing the uplink.

    Attributes:
        users: number of simultaneous transmitters K.
        frames: pulses per information symbol Nf.
        chips: pulse positions per frame Nc.
        paths: channel taps L (at least 2).
        rake_ratio: fraction of taps combined by the partial Rake, in (0, 1].
            The receiver uses round(rake_ratio * paths) fingers (half up).
        pdp_ratio: first-to-last tap variance ratio of the exponential power
            delay profile, linear (>= 1; 1 means a flat profile).
        noise_variance: AWGN variance at the receiver, watts.
        p_max: transmit power cap, watts.
        rate: transmission rate, bits/second.
        info_bits: information bits per packet.
        total_bits: total bits per packet (>= info_bits).
    """

    users: int = 8
    frames: int = 20
    chips: int = 50
    paths: int = 200
    rake_ratio: float = 0.1
    pdp_ratio: float = 10.0
    noise_variance: float = 5e-16
    p_max: float = 1e-6
    rate: float = 1e5
    info_bits: int = 100
    total_bits: int = 100

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("users must be a positive integer")
        if self.frames < 1:
            raise ValueError("frames must be a positive integer")
        if self.chips < 1:
            raise ValueError("chips must be a positive integer")
        if self.paths < 2:
            raise ValueError("paths must be at least 2")
        if not 0.0 < self.rake_ratio <= 1.0:
            raise ValueError("rake_ratio must lie in (0, 1]")
        if self.pdp_ratio < 1.0:
            raise ValueError("pdp_ratio must be >= 1 (linear scale)")
        if self.noise_variance <= 0.0:
            raise ValueError("noise_variance must be positive")
        if self.p_max <= 0.0:
            raise ValueError("p_max must be positive")
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")
        if self.info_bits < 1:
            raise ValueError("info_bits must be a positive integer")
        if self.total_bits < self.info_bits:
            raise ValueError("total_bits must be >= info_bits")
        if not 1 <= self.fingers <= self.paths:
            raise ValueError("rake_ratio * paths rounds outside [1, paths]")

    @property
    def processing_gain(self) -> int:
        """Spreading factor N = frames * chips."""
        return self.frames * self.chips

    @property
    def load(self) -> float:
        """Chips-to-paths ratio Nc / L."""
        return self.chips / self.paths

    @property
    def fingers(self) -> int:
        return fingers_from_ratio(self.rake_ratio, self.paths)

    def with_frames(self, frames: int) -> "NetworkParams":
        return replace(self, frames=frames)

    def with_rake_ratio(self, rake_ratio: float) -> "NetworkParams":
        return replace(self, rake_ratio=rake_ratio)
