"""Synchronization messages, exchange records, and offset/delay estimators.

One exchange is the classic four-message two-way sequence: the master
broadcasts sync then follow_up (carrying the sync departure stamp), the slave
answers with delay_request, and the master closes with delay_response
(carrying the request's arrival stamp). A passive listener in range of both
sides overhears all four and synchronizes to the master without transmitting.

Sign convention everywhere: offset(A, B) = A's reading minus B's reading at
the same true instant. A follower's estimate is therefore its own offset
relative to its master, and corrections subtract the estimate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from wsnsync.clocks import LocalTime


class MessageKind(enum.Enum):
    SYNC = "sync"
    FOLLOW_UP = "follow_up"
    DELAY_REQUEST = "delay_request"
    DELAY_RESPONSE = "delay_response"


# follow_up carries the sync departure stamp, delay_response the request
# arrival stamp; the other two carry nothing.
_CARRIES_TIMESTAMP = {MessageKind.FOLLOW_UP, MessageKind.DELAY_RESPONSE}


class EstimateMethod(enum.Enum):
    TWO_WAY_1588 = "two_way_1588"
    PBS = "pbs"


@dataclass(frozen=True)
class SyncMessage:
    kind: MessageKind
    origin: str  # transmitting node
    exchange_id: int
    slave: str  # which master-slave pair this exchange belongs to
    carried_timestamp: Optional[LocalTime] = None
    level: int = 0  # hierarchy level, for message counting
    cycle_index: int = 0  # sync cycle the exchange started in

    def __post_init__(self):
        carries = self.carried_timestamp is not None
        if carries != (self.kind in _CARRIES_TIMESTAMP):
            raise ValueError(f"{self.kind.value} message timestamp field is wrong: {self}")


@dataclass
class ExchangeRecord:
    """The stamps of one exchange as seen by the slave and, when overheard,
    by a listener. t1/t4 are master-clock stamps, t2/t3 slave-clock stamps,
    and the listener fields are the listener's own arrival stamps of the
    sync and delay_request transmissions."""

    exchange_id: int
    t1_master: Optional[LocalTime] = None
    t2_slave: Optional[LocalTime] = None
    t3_slave: Optional[LocalTime] = None
    t4_master: Optional[LocalTime] = None
    t2_listener: Optional[LocalTime] = None
    t4_listener: Optional[LocalTime] = None

    @property
    def slave_complete(self) -> bool:
        return None not in (self.t1_master, self.t2_slave, self.t3_slave, self.t4_master)

    @property
    def pbs_complete(self) -> bool:
        return None not in (self.t1_master, self.t2_listener, self.t4_master, self.t4_listener)


@dataclass(frozen=True)
class SyncEstimate:
    """One exchange's offset and propagation-delay estimates, in nanoseconds.

    delta_remainder / d_remainder hold the bit lost to the documented
    truncate-toward-zero halving in the two-way formulas (always 0 for PBS).
    A negative delay is kept but flagged; it only happens under noise.
    """

    delta_hat: int
    d_hat: int
    method: EstimateMethod
    exchange_id: int
    delta_remainder: int = 0
    d_remainder: int = 0

    @property
    def suspect(self) -> bool:
        return self.d_hat < 0


class IncompleteRecordError(ValueError):
    """Estimator called on a record missing required stamps."""


def _halve_toward_zero(value: int) -> tuple[int, int]:
    # Python's // floors; make the halving truncate toward zero instead and
    # hand back the lost remainder (-1, 0, or 1).
    if value >= 0:
        half = value // 2
    else:
        half = -((-value) // 2)
    return half, value - 2 * half


def estimate_twoway(rec: ExchangeRecord) -> SyncEstimate:
    """Standard two-way estimates from a slave-complete record.

    offset = ((t2 - t1) - (t4 - t3)) / 2, delay = ((t2 - t1) + (t4 - t3)) / 2,
    both halvings truncating toward zero.
    """
    if not rec.slave_complete:
        raise IncompleteRecordError(f"exchange {rec.exchange_id} is not slave-complete: {rec}")
    forward = rec.t2_slave - rec.t1_master
    backward = rec.t4_master - rec.t3_slave
    delta_hat, delta_rem = _halve_toward_zero(forward - backward)
    d_hat, d_rem = _halve_toward_zero(forward + backward)
    return SyncEstimate(
        delta_hat=delta_hat,
        d_hat=d_hat,
        method=EstimateMethod.TWO_WAY_1588,
        exchange_id=rec.exchange_id,
        delta_remainder=delta_rem,
        d_remainder=d_rem,
    )


def pbs_offset(t4_listener: LocalTime, t4_master: LocalTime) -> int:
    """Listener-vs-master offset from the two arrival stamps of the same
    delay_request transmission. Exact when both arrivals are simultaneous."""
    return t4_listener - t4_master


def pbs_delay(t2_listener: LocalTime, t1_master: LocalTime, delta_hat: int) -> int:
    """Master-to-listener propagation delay: sync flight time seen by the
    listener, with the already-estimated offset removed."""
    return t2_listener - t1_master - delta_hat


def compose_offsets(delta_listener_slave: int, delta_slave_master: int) -> int:
    """Offsets chain: listener-vs-master = listener-vs-slave + slave-vs-master."""
    return delta_listener_slave + delta_slave_master


def pbs_estimate(rec: ExchangeRecord) -> SyncEstimate:
    """Offset and delay for a listener from a pbs-complete record."""
    if not rec.pbs_complete:
        raise IncompleteRecordError(f"exchange {rec.exchange_id} is not pbs-complete: {rec}")
    delta_hat = pbs_offset(rec.t4_listener, rec.t4_master)
    d_hat = pbs_delay(rec.t2_listener, rec.t1_master, delta_hat)
    return SyncEstimate(
        delta_hat=delta_hat,
        d_hat=d_hat,
        method=EstimateMethod.PBS,
        exchange_id=rec.exchange_id,
    )


def asymmetry_residual(rec: ExchangeRecord, delta_hat: int) -> int:
    """(listener arrival - master arrival) minus the offset estimate.

    In noiseless runs this equals the slave-to-listener minus slave-to-master
    propagation delay: a direct measure of how badly the equal-arrival
    assumption behind the listener estimate is violated.
    """
    if rec.t4_listener is None or rec.t4_master is None:
        raise IncompleteRecordError(f"exchange {rec.exchange_id} lacks the paired arrival stamps")
    return (rec.t4_listener - rec.t4_master) - delta_hat
