"""Per-node energy accounting against a finite battery budget.

Default cost model charges a flat amount per message (tx 7, rx 4.5, in
millijoule-equivalent units) against a 2700 J budget, the coin-cell class
battery the comparison scenarios assume. A power-times-duration mode exists
for physically consistent studies; both reduce to a constant charge per
message so conservation identities stay exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, List, Optional


class CostMode(enum.Enum):
    PER_MESSAGE = "per_message"
    POWER_TIMES_DURATION = "power_times_duration"


@dataclass(frozen=True)
class RadioCostModel:
    mode: CostMode = CostMode.PER_MESSAGE
    tx_cost_mj: float = 7.0
    rx_cost_mj: float = 4.5
    tx_power_mw: float = 0.0
    rx_power_mw: float = 0.0
    message_duration_us: float = 0.0

    def __post_init__(self):
        for name in ("tx_cost_mj", "rx_cost_mj", "tx_power_mw", "rx_power_mw", "message_duration_us"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def tx_charge_mj(self) -> float:
        if self.mode is CostMode.PER_MESSAGE:
            return self.tx_cost_mj
        return self.tx_power_mw * self.message_duration_us * 1e-6

    @property
    def rx_charge_mj(self) -> float:
        if self.mode is CostMode.PER_MESSAGE:
            return self.rx_cost_mj
        return self.rx_power_mw * self.message_duration_us * 1e-6


@dataclass
class NodeEnergy:
    budget_mj: float
    consumed_tx_mj: float = 0.0
    consumed_rx_mj: float = 0.0
    tx_count: int = 0
    rx_count: int = 0
    dead: bool = False

    @property
    def consumed_mj(self) -> float:
        return self.consumed_tx_mj + self.consumed_rx_mj

    @property
    def remaining_mj(self) -> float:
        return self.budget_mj - self.consumed_mj


class EnergyLedger:
    """Tracks every node's consumption; owned by exactly one simulation run.

    A node that cannot afford the next charge is marked dead and stops both
    transmitting and receiving; charges against dead nodes are refused and
    tallied in dead_charge_attempts.
    """

    def __init__(self, node_names: List[str], cost_model: RadioCostModel, budget_j: float = 2700.0):
        self.cost_model = cost_model
        self.nodes: Dict[str, NodeEnergy] = {
            name: NodeEnergy(budget_mj=budget_j * 1000.0) for name in node_names
        }
        self.dead_charge_attempts = 0

    def alive(self, node: str) -> bool:
        return not self.nodes[node].dead

    def _charge(self, node: str, amount_mj: float, is_tx: bool) -> bool:
        entry = self.nodes[node]
        if entry.dead:
            self.dead_charge_attempts += 1
            return False
        if entry.consumed_mj + amount_mj > entry.budget_mj:
            entry.dead = True
            self.dead_charge_attempts += 1
            return False
        if is_tx:
            entry.consumed_tx_mj += amount_mj
            entry.tx_count += 1
        else:
            entry.consumed_rx_mj += amount_mj
            entry.rx_count += 1
        return True

    def charge_tx(self, node: str) -> bool:
        return self._charge(node, self.cost_model.tx_charge_mj, is_tx=True)

    def charge_rx(self, node: str) -> bool:
        return self._charge(node, self.cost_model.rx_charge_mj, is_tx=False)

    def consumed_delta(self, node_a: str, node_b: str) -> float:
        """Total consumed by a minus total consumed by b, in mJ."""
        return self.nodes[node_a].consumed_mj - self.nodes[node_b].consumed_mj

    def total_tx_count(self) -> int:
        return sum(entry.tx_count for entry in self.nodes.values())

    def total_rx_count(self) -> int:
        return sum(entry.rx_count for entry in self.nodes.values())

    def total_consumed_mj(self) -> float:
        return sum(entry.consumed_mj for entry in self.nodes.values())

    def conservation_holds(self) -> bool:
        """Total consumed equals counts times per-message charges, exactly."""
        expected = (
            self.total_tx_count() * self.cost_model.tx_charge_mj
            + self.total_rx_count() * self.cost_model.rx_charge_mj
        )
        return self.total_consumed_mj() == expected
