"""Master, slave, and listener state machines for the four-message exchange.

Ports hold protocol state only; the scenario runtime stamps messages at the
physical layer and moves them through the medium. A listener port has no
send path at all, which is what makes the overhearing mode free on the
transmit side.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from wsnsync.clocks import LocalTime
from wsnsync.estimators import (
    ExchangeRecord,
    MessageKind,
    SyncEstimate,
    SyncMessage,
    estimate_twoway,
    pbs_estimate,
)
from wsnsync.kernel import TrueTime


class NodeRole(enum.Enum):
    MASTER = "master"
    SLAVE_1588 = "slave_1588"
    PBS_LISTENER = "pbs_listener"


@dataclass(frozen=True)
class SendDelayRequest:
    """Slave decision to answer a follow_up; the runtime picks the send slot."""

    exchange_id: int


class MasterPort:
    """Runs exchanges toward each of its slaves, one pending per slave."""

    def __init__(self, node: str, level: int):
        self.node = node
        self.level = level
        self.next_exchange_id = 0
        self.pending: Dict[str, int] = {}  # slave -> exchange awaiting its request
        self.aborted_count = 0
        self.stray_count = 0

    def start_exchange(
        self, slave: str, t1_stamp: LocalTime, cycle_index: int
    ) -> Tuple[SyncMessage, SyncMessage]:
        """Open a new exchange: a sync stamped on transmission, then the
        follow_up carrying that stamp. Starting over a still-pending exchange
        aborts the stale one."""
        if slave in self.pending:
            self.aborted_count += 1
        exchange_id = self.next_exchange_id
        self.next_exchange_id += 1
        self.pending[slave] = exchange_id
        sync = SyncMessage(
            MessageKind.SYNC, self.node, exchange_id, slave, level=self.level, cycle_index=cycle_index
        )
        follow_up = SyncMessage(
            MessageKind.FOLLOW_UP,
            self.node,
            exchange_id,
            slave,
            carried_timestamp=t1_stamp,
            level=self.level,
            cycle_index=cycle_index,
        )
        return sync, follow_up

    def on_delay_request(self, msg: SyncMessage, t4_stamp: LocalTime) -> Optional[SyncMessage]:
        """Close the exchange and answer with the request's arrival stamp."""
        if self.pending.get(msg.origin) != msg.exchange_id:
            self.stray_count += 1
            return None
        del self.pending[msg.origin]
        return SyncMessage(
            MessageKind.DELAY_RESPONSE,
            self.node,
            msg.exchange_id,
            msg.origin,
            carried_timestamp=t4_stamp,
            level=msg.level,
            cycle_index=msg.cycle_index,
        )


class SlavePort:
    """Follows one master; keeps at most one exchange in flight."""

    def __init__(self, node: str, master: str, level: int):
        self.node = node
        self.master = master
        self.level = level
        self.record: Optional[ExchangeRecord] = None
        self.record_started_at: TrueTime = 0
        self.awaiting_request_send: Optional[int] = None
        self.discarded_count = 0

    def _discard(self):
        if self.record is not None:
            self.discarded_count += 1
        self.record = None
        self.awaiting_request_send = None

    def expire_older_than(self, t: TrueTime, max_age_ns: int) -> None:
        if self.record is not None and t - self.record_started_at > max_age_ns:
            self._discard()

    def on_message(self, msg: SyncMessage, rx_stamp: LocalTime, now: TrueTime):
        """Feed one received message through the state machine.

        Returns a SendDelayRequest after a follow_up, a SyncEstimate after a
        delay_response that completes the record, and None otherwise.
        Anything out of order discards the exchange.
        """
        if msg.origin != self.master or msg.slave != self.node:
            return None
        if msg.kind is MessageKind.SYNC:
            self._discard()
            self.record = ExchangeRecord(exchange_id=msg.exchange_id, t2_slave=rx_stamp)
            self.record_started_at = now
            return None
        if self.record is None or self.record.exchange_id != msg.exchange_id:
            self._discard()
            return None
        if msg.kind is MessageKind.FOLLOW_UP:
            if self.record.t1_master is not None:
                self._discard()
                return None
            self.record.t1_master = msg.carried_timestamp
            self.awaiting_request_send = msg.exchange_id
            return SendDelayRequest(msg.exchange_id)
        if msg.kind is MessageKind.DELAY_RESPONSE:
            if self.record.t3_slave is None:
                self._discard()
                return None
            self.record.t4_master = msg.carried_timestamp
            record, self.record = self.record, None
            return estimate_twoway(record)
        return None

    def note_request_sent(self, exchange_id: int, t3_stamp: LocalTime) -> Optional[SyncMessage]:
        """Stamp the delay_request on actual transmission; None if the
        exchange was displaced while waiting for the slot."""
        if (
            self.awaiting_request_send != exchange_id
            or self.record is None
            or self.record.exchange_id != exchange_id
        ):
            return None
        self.record.t3_slave = t3_stamp
        self.awaiting_request_send = None
        return SyncMessage(
            MessageKind.DELAY_REQUEST,
            self.node,
            exchange_id,
            self.node,
            level=self.level,
            cycle_index=0,  # rewritten by the runtime from the exchange context
        )


class ListenerPort:
    """Overhears one master-slave pair and synchronizes without transmitting."""

    def __init__(self, node: str, master: str, paired_slave: str, level: int):
        self.node = node
        self.master = master
        self.paired_slave = paired_slave
        self.level = level
        self.records: Dict[int, ExchangeRecord] = {}
        self.records_started_at: Dict[int, TrueTime] = {}
        self.discarded_count = 0

    def _drop(self, exchange_id: int, incomplete: bool):
        self.records.pop(exchange_id, None)
        self.records_started_at.pop(exchange_id, None)
        if incomplete:
            self.discarded_count += 1

    def expire_older_than(self, t: TrueTime, max_age_ns: int) -> None:
        for exchange_id, started in list(self.records_started_at.items()):
            if t - started > max_age_ns:
                self._drop(exchange_id, incomplete=True)

    def on_message(self, msg: SyncMessage, rx_stamp: LocalTime, now: TrueTime) -> Optional[SyncEstimate]:
        """Collect the overheard stamps; emit a PBS estimate when the fourth
        message of the pair's exchange lands. Never produces a transmission."""
        if msg.slave != self.paired_slave:
            return None
        if msg.kind is MessageKind.DELAY_REQUEST:
            if msg.origin != self.paired_slave:
                return None
        elif msg.origin != self.master:
            return None

        record = self.records.get(msg.exchange_id)
        if msg.kind is MessageKind.SYNC:
            # a fresh exchange for this pair obsoletes anything unfinished
            for stale in [eid for eid in self.records if eid < msg.exchange_id]:
                self._drop(stale, incomplete=True)
            self.records[msg.exchange_id] = ExchangeRecord(
                exchange_id=msg.exchange_id, t2_listener=rx_stamp
            )
            self.records_started_at[msg.exchange_id] = now
            return None
        if record is None:
            return None  # joined mid-exchange; wait for the next sync
        if msg.kind is MessageKind.FOLLOW_UP:
            record.t1_master = msg.carried_timestamp
        elif msg.kind is MessageKind.DELAY_REQUEST:
            record.t4_listener = rx_stamp
        elif msg.kind is MessageKind.DELAY_RESPONSE:
            record.t4_master = msg.carried_timestamp
            complete = record.pbs_complete
            self._drop(msg.exchange_id, incomplete=not complete)
            if complete:
                return pbs_estimate(record)
        return None
