"""Deterministic discrete-event simulator for hierarchical WSN clock synchronization.

A simulation kernel, drifting local clocks with physical-layer timestamping,
master/slave/listener synchronization state machines, a broadcast radio medium
with TDMA slotting, per-node energy accounting, and a scenario harness that
emits CSV time series and comparison reports.
"""

from wsnsync.kernel import Event, PastEventError, Scheduler
from wsnsync.clocks import ClockState, TimestampNoise, apply_offset_correction, local_time, timestamp_event
from wsnsync.estimators import (
    EstimateMethod,
    ExchangeRecord,
    IncompleteRecordError,
    MessageKind,
    SyncEstimate,
    SyncMessage,
    asymmetry_residual,
    compose_offsets,
    estimate_twoway,
    pbs_delay,
    pbs_offset,
)

__version__ = "0.1.0"
