"""Per-node local clocks: constant drift, adjustable offset, optional stamp noise.

A clock reads C(t) = theta + (1 + rho) * t. To keep noiseless scenarios exact
down to single nanoseconds, rho is stored as an integer number of parts per
billion and the drift term rho * t is computed in exact integer arithmetic,
rounded to the nearest nanosecond with ties to even. 1 ppm = 1000 ppb.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from wsnsync.kernel import TrueTime

LocalTime = int  # nanoseconds on one node's own clock; only same-node readings compare

PPB = 1_000_000_000
_INT64_MAX = 2**63 - 1

# TCXO-class parts; anything past 1000 ppm is a scenario typo, not a clock.
MAX_DRIFT_PPB = 1_000_000


class ClockOverflowError(OverflowError):
    """A local reading left the signed 64-bit range; the scenario is misconfigured."""


def round_ratio_half_even(numerator: int, denominator: int) -> int:
    """Round numerator/denominator to the nearest integer, ties to even.

    Exact for arbitrary ints; denominator must be positive.
    """
    q, r = divmod(numerator, denominator)
    twice = 2 * r
    if twice > denominator or (twice == denominator and q % 2 != 0):
        return q + 1
    return q


@dataclass(frozen=True)
class ClockState:
    """Offset theta (ns) and drift rho (ppb) defining C(t) = theta + (1+rho)*t."""

    theta_ns: int = 0
    drift_ppb: int = 0
    last_correction_at: TrueTime = 0

    def __post_init__(self):
        if abs(self.drift_ppb) > MAX_DRIFT_PPB:
            raise ValueError(f"drift {self.drift_ppb} ppb outside sanity bound of {MAX_DRIFT_PPB}")

    @property
    def rho(self) -> float:
        """Dimensionless drift rate, e.g. 1.5e-6 for 1.5 ppm."""
        return self.drift_ppb / PPB


def drift_ppb_from_ppm(ppm: float) -> int:
    return round(ppm * 1000)


@dataclass(frozen=True)
class TimestampNoise:
    """Zero-mean Gaussian stamp jitter, clipped at 4 sigma; 0 means exact stamps."""

    stddev_ns: float = 0.0

    def __post_init__(self):
        if self.stddev_ns < 0:
            raise ValueError("noise stddev must be >= 0")

    def draw(self, rng) -> int:
        if self.stddev_ns == 0:
            return 0
        limit = 4.0 * self.stddev_ns
        value = rng.gauss(0.0, self.stddev_ns)
        value = max(-limit, min(limit, value))
        return round(value)


NO_NOISE = TimestampNoise(0.0)


def local_time(clock: ClockState, t: TrueTime) -> LocalTime:
    """Clock reading at true time t: theta + t + round(rho * t), ties to even."""
    reading = clock.theta_ns + t + round_ratio_half_even(clock.drift_ppb * t, PPB)
    if abs(reading) > _INT64_MAX:
        raise ClockOverflowError(f"local reading {reading} exceeds 64-bit nanoseconds")
    return reading


def timestamp_event(clock: ClockState, t: TrueTime, noise: TimestampNoise, rng) -> LocalTime:
    """Physical-layer stamp of an event at true time t: one noise draw on top
    of the exact reading. With stddev 0 no draw is made and the stamp is exact."""
    if noise.stddev_ns == 0:
        return local_time(clock, t)
    return local_time(clock, t) + noise.draw(rng)


def apply_offset_correction(clock: ClockState, delta_hat_ns: int, at: TrueTime) -> ClockState:
    """Subtract the estimated offset-to-master from theta.

    Drift is left untouched: the protocol corrects offset only, so error
    re-accumulates between synchronization cycles.
    """
    return replace(clock, theta_ns=clock.theta_ns - delta_hat_ns, last_correction_at=at)
