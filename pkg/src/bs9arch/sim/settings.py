"""Named simulation settings and the stored schedules they use.

=============  ===========================================================
``blackbox``   ideal gauge readout, one depolarizing step per data qubit
               per cycle, readout flips with ``meas_ratio * p``
``steane``     encoded-ancilla extraction, every gate fails with ``p``,
               waiting ancillas fail with ``p_idle``
``native``     optimal no-DD schedule over the device gates, bare idles
``native+dd``  decoupled schedule, decoupled idles
=============  ===========================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

from ..circuits import Circuit, build_bs9_extraction
from ..model import DATA_DIR, Layout, NoiseTable, default_layout
from ..schedule import Schedule
from .program import Program, build_blackbox_program, build_native_program, build_steane_program

SETTINGS = ("blackbox", "steane", "native", "native+dd")

SCHEDULE_FILES = {
    "native": "schedule_bs9_opt.json",
    "hand": "schedule_bs9_hand.json",
    "native+dd": "schedule_bs9_dd.json",
}


def load_schedule(path, layout: Layout | None = None) -> Schedule:
    """Read a schedule file; the circuit is embedded or rebuilt."""
    with open(path) as fh:
        doc = json.load(fh)
    if "circuit" in doc:
        circuit = Circuit.from_dict(doc["circuit"])
    else:
        circuit = build_bs9_extraction(layout or default_layout())
    return Schedule.from_dict(doc, circuit)


@lru_cache(maxsize=None)
def stored_schedule(name: str) -> Schedule:
    """One of the schedules shipped in the package data directory."""
    if name not in SCHEDULE_FILES:
        raise KeyError(f"no stored schedule {name!r}; choose from {sorted(SCHEDULE_FILES)}")
    return load_schedule(DATA_DIR / SCHEDULE_FILES[name])


@dataclass(frozen=True)
class Setting:
    """Everything except ``p`` needed to build a simulation program."""

    name: str
    biased: bool = False
    meas_ratio: float = 0.0
    p_idle: float = 0.0
    rounds_per_cycle: int = 2
    schedule: Schedule | None = field(default=None, compare=False, hash=False)
    layout: Layout | None = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.name not in SETTINGS:
            raise ValueError(f"unknown setting {self.name!r}; choose from {SETTINGS}")

    @property
    def c(self) -> int:
        """Slope of the crossover line ``P_EC(p) = c p``."""
        return 4 if self.biased else 1

    def program(self, p: float) -> Program:
        if self.name == "blackbox":
            return build_blackbox_program(p, self.meas_ratio * p, self.rounds_per_cycle)
        if self.name == "steane":
            return build_steane_program(p, self.p_idle, self.rounds_per_cycle)
        sched = self.schedule or stored_schedule(self.name)
        noise = NoiseTable(p, self.biased)
        return build_native_program(sched, self.layout or default_layout(), noise, self.rounds_per_cycle)

    def to_dict(self) -> dict:
        return {
            "setting": self.name,
            "biased": self.biased,
            "meas_ratio": self.meas_ratio,
            "p_idle": self.p_idle,
            "rounds_per_cycle": self.rounds_per_cycle,
        }
