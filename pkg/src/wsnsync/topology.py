"""Hierarchical topology, broadcast radio medium, and TDMA slot schedule.

The network is one concentrator, a ring of routers around it, and a cluster
of leaves fanned outward behind each router. Placement is deterministic from
the counts and distances alone. Link delays come from distance at 2/3 c
(5 ns per metre) unless a scenario pins them explicitly per ordered pair,
which is how directional asymmetries are modelled.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from wsnsync.estimators import SyncMessage
from wsnsync.kernel import Scheduler, TrueTime

NS_PER_METRE = 5  # propagation at 2/3 c


class Level(enum.Enum):
    CONCENTRATOR = "concentrator"
    ROUTER = "router"
    LEAF = "leaf"


class SlotViolationError(RuntimeError):
    """A node transmitted outside its owned TDMA slot: a protocol bug."""


@dataclass(frozen=True)
class NodeInfo:
    name: str
    level: Level
    parent: Optional[str]
    position: Tuple[float, float]


@dataclass
class Topology:
    nodes: Dict[str, NodeInfo]
    groups: Dict[str, List[str]]  # router -> its leaves, in id order
    concentrator: str
    radio_range_m: float

    @property
    def routers(self) -> List[str]:
        return sorted(self.groups)

    @property
    def node_names(self) -> List[str]:
        return sorted(self.nodes, key=_node_sort_key)

    def distance(self, a: str, b: str) -> float:
        ax, ay = self.nodes[a].position
        bx, by = self.nodes[b].position
        return math.hypot(ax - bx, ay - by)

    def in_range(self, a: str, b: str) -> bool:
        return in_range(self, a, b)


def _node_sort_key(name: str):
    return (name[0], int(name[1:]))


def router_name(i: int) -> str:
    return f"r{i + 1}"


def leaf_name(i: int) -> str:
    return f"n{i + 1}"


def build_hierarchy(
    routers: int = 8,
    leaves_per_router: int = 8,
    radio_range_m: float = 75.0,
    router_distance_m: float = 74.0,
    leaf_offset_m: float = 2.5,
    leaf_spacing_m: float = 1.0,
    placement: str = "ring",
) -> Topology:
    """Deterministic layout: concentrator at the origin, routers on a circle
    of radius router_distance_m, leaves stepped radially outward so they sit
    behind their router, just out of the concentrator's range.

    placement="isolated" multiplies the router circle by 10x the radio range
    to cut every inter-group and concentrator link; used by scenarios that
    need groups to hear only their own traffic.
    """
    if routers < 1:
        raise ValueError("at least one router is required")
    if leaves_per_router < 1:
        raise ValueError("at least one leaf per router is required")
    if placement not in ("ring", "isolated"):
        raise ValueError(f"unknown placement {placement!r}")

    distance = router_distance_m
    if placement == "isolated":
        distance = max(distance, 10 * radio_range_m * routers)

    nodes: Dict[str, NodeInfo] = {
        "c0": NodeInfo("c0", Level.CONCENTRATOR, None, (0.0, 0.0))
    }
    groups: Dict[str, List[str]] = {}
    leaf_index = 0
    for i in range(routers):
        angle = 2 * math.pi * i / routers
        direction = (math.cos(angle), math.sin(angle))
        router = router_name(i)
        nodes[router] = NodeInfo(
            router, Level.ROUTER, "c0", (distance * direction[0], distance * direction[1])
        )
        members = []
        for j in range(leaves_per_router):
            radial = distance + leaf_offset_m + j * leaf_spacing_m
            leaf = leaf_name(leaf_index)
            leaf_index += 1
            nodes[leaf] = NodeInfo(
                leaf, Level.LEAF, router, (radial * direction[0], radial * direction[1])
            )
            members.append(leaf)
        groups[router] = members
    return Topology(nodes=nodes, groups=groups, concentrator="c0", radio_range_m=radio_range_m)


def in_range(topology: Topology, a: str, b: str) -> bool:
    """Symmetric range predicate from positions and the configured radius."""
    ax, ay = topology.nodes[a].position
    bx, by = topology.nodes[b].position
    dx, dy = ax - bx, ay - by
    return dx * dx + dy * dy <= topology.radio_range_m * topology.radio_range_m


@dataclass(frozen=True)
class TdmaSchedule:
    slot_assignment: Dict[str, int]
    frame_slots: int
    slot_ns: int

    @property
    def frame_ns(self) -> int:
        return self.frame_slots * self.slot_ns

    def slot_index_at(self, t: TrueTime) -> int:
        return (t // self.slot_ns) % self.frame_slots

    def owns(self, node: str, t: TrueTime) -> bool:
        return self.slot_index_at(t) == self.slot_assignment[node]

    def next_owned_start(self, node: str, t: TrueTime) -> TrueTime:
        """First start of a slot owned by node at or after t."""
        slot = self.slot_assignment[node]
        frame_start = (t // self.frame_ns) * self.frame_ns
        candidate = frame_start + slot * self.slot_ns
        if candidate < t:
            candidate += self.frame_ns
        return candidate


def assign_tdma_slots(
    topology: Topology,
    slot_us: int = 1000,
    frame_slots: Optional[int] = None,
    spatial_reuse: bool = False,
) -> TdmaSchedule:
    """Deterministic slot assignment.

    Conservative default: every node gets its own slot, which is always
    collision-free. With spatial_reuse, nodes whose transmissions can never
    meet at a common receiver share slots (greedy colouring in id order).
    """
    names = topology.node_names
    if not spatial_reuse:
        assignment = {name: i for i, name in enumerate(names)}
        needed = len(names)
    else:
        reach = {
            name: {other for other in names if in_range(topology, name, other)}
            for name in names
        }
        assignment = {}
        for name in names:
            taken = {
                assignment[other]
                for other in names
                if other in assignment and reach[name] & reach[other]
            }
            colour = 0
            while colour in taken:
                colour += 1
            assignment[name] = colour
        needed = max(assignment.values()) + 1
    slots = frame_slots if frame_slots is not None else needed
    if slots < needed:
        raise ValueError(f"frame of {slots} slots cannot fit {needed} assignments")
    return TdmaSchedule(slot_assignment=assignment, frame_slots=slots, slot_ns=slot_us * 1000)


@dataclass
class LinkModel:
    """Per-ordered-pair base delay plus optional delivery jitter and loss."""

    delays_ns: Dict[Tuple[str, str], int]
    jitter_stddev_ns: Callable[[str, str], float] = lambda a, b: 0.0
    loss_probability: float = 0.0

    def base_delay(self, sender: str, receiver: str) -> int:
        return self.delays_ns[(sender, receiver)]


def delays_from_distance(topology: Topology) -> Dict[Tuple[str, str], int]:
    delays = {}
    for a in topology.node_names:
        for b in topology.node_names:
            if a != b and in_range(topology, a, b):
                delays[(a, b)] = round(topology.distance(a, b) * NS_PER_METRE)
    return delays


def uniform_delays(topology: Topology, delay_ns: int) -> Dict[Tuple[str, str], int]:
    delays = {}
    for a in topology.node_names:
        for b in topology.node_names:
            if a != b and in_range(topology, a, b):
                delays[(a, b)] = delay_ns
    return delays


class Medium:
    """Broadcast radio: one transmission fans out to every in-range receiver.

    Enforces TDMA slot ownership on transmit and per-link FIFO on delivery
    (a later send never overtakes an earlier one on the same ordered link).
    Energy charges happen here: one tx charge per transmission, one rx charge
    per non-lost delivery.
    """

    def __init__(
        self,
        topology: Topology,
        schedule: TdmaSchedule,
        link_model: LinkModel,
        kernel: Scheduler,
        ledger,
        deliver: Callable[[str, SyncMessage, TrueTime], None],
        counter=None,
    ):
        self.topology = topology
        self.schedule = schedule
        self.link_model = link_model
        self.kernel = kernel
        self.ledger = ledger
        self.deliver = deliver
        self.counter = counter
        self._last_arrival: Dict[Tuple[str, str], TrueTime] = {}
        self._receivers: Dict[str, List[str]] = {
            name: [
                other
                for other in topology.node_names
                if other != name and in_range(topology, name, other)
            ]
            for name in topology.node_names
        }

    def receivers_of(self, sender: str) -> List[str]:
        return self._receivers[sender]

    def broadcast(self, sender: str, msg: SyncMessage, t: TrueTime) -> List[Tuple[str, TrueTime]]:
        if not self.schedule.owns(sender, t):
            raise SlotViolationError(
                f"{sender} transmitted at {t} ns in slot {self.schedule.slot_index_at(t)}, "
                f"owns slot {self.schedule.slot_assignment[sender]}"
            )
        if not self.ledger.charge_tx(sender):
            return []  # dead nodes stop transmitting
        if self.counter is not None:
            self.counter.count(msg)
        deliveries = []
        for receiver in self._receivers[sender]:
            if self.link_model.loss_probability > 0:
                if self.kernel.rng.random() < self.link_model.loss_probability:
                    continue
            if not self.ledger.charge_rx(receiver):
                continue  # dead nodes stop receiving
            latency = self.link_model.base_delay(sender, receiver)
            stddev = self.link_model.jitter_stddev_ns(sender, receiver)
            if stddev > 0:
                jitter = self.kernel.rng.gauss(0.0, stddev)
                jitter = max(-4 * stddev, min(4 * stddev, jitter))
                latency = max(0, latency + round(jitter))
            arrival = t + latency
            link = (sender, receiver)
            arrival = max(arrival, self._last_arrival.get(link, 0))  # per-link FIFO
            self._last_arrival[link] = arrival
            self.kernel.schedule_at(
                arrival,
                receiver,
                lambda r=receiver, m=msg, a=arrival: self.deliver(r, m, a),
            )
            deliveries.append((receiver, arrival))
        return deliveries
