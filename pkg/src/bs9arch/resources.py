"""Classical-electronics calculators: routing reach of a CMOS block and the
number of serial cryostat interconnects.

The routing model treats each DQD as occupying an *effective span* of
1.125 um along the block (1 um DQD plus half of the 250 nm gap).  That
span is inferred, not stated: it is the single value for which every cell
of the published accessibility table comes out exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .model import TECH_NODES, TechNode

CONTROL_BITS_PER_DQD = 8


@dataclass(frozen=True)
class RoutingModel:
    dqd_width: float = 1.0
    dqd_spacing: float = 0.25
    effective_span: float = 1.125
    lines_per_dqd: int = 17
    shareable_lines: int = 5

    def __post_init__(self) -> None:
        if not self.dqd_width < self.effective_span <= self.dqd_width + self.dqd_spacing:
            raise ValueError("effective_span must lie in (width, width + spacing]")


def accessible_dqds(node: TechNode, shared: int = 0, model: RoutingModel = RoutingModel()) -> int:
    """Largest number of DQDs one CMOS block can route to.

    Without sharing every DQD needs its own ``lines_per_dqd`` tracks.  With
    ``shared`` common signals those lines are routed once and each DQD adds
    only its private lines.
    """
    if shared not in (0, model.shareable_lines):
        raise ValueError(f"shared must be 0 or {model.shareable_lines}")
    capacity = Fraction(str(node.routes_per_micron)) * Fraction(str(model.effective_span))
    if capacity < model.lines_per_dqd:
        warnings.warn(f"{node.name}: node cannot reach one DQD", RuntimeWarning, stacklevel=2)
        return 0
    if shared == 0:
        return math.floor(capacity / model.lines_per_dqd)
    private = model.lines_per_dqd - shared
    return max(0, math.floor((capacity - shared) / private))


def table2(model: RoutingModel = RoutingModel(), nodes=TECH_NODES) -> list[dict]:
    return [
        {
            "technology": n.name,
            "routes_per_um": n.routes_per_micron,
            "no_common": accessible_dqds(n, 0, model),
            "common5": accessible_dqds(n, model.shareable_lines, model),
        }
        for n in nodes
    ]


def interconnect_lines(n_dqd: int, ratio: float) -> int:
    """Serial lines needed so that all control bits for the next gate step
    arrive during the current one.

    ``ratio`` is gate time over serial clock period.
    """
    if n_dqd < 1:
        raise ValueError("n_dqd must be at least 1")
    r = Fraction(str(ratio))
    if r <= 0:
        raise ValueError("ratio must be positive")
    return math.ceil(CONTROL_BITS_PER_DQD * n_dqd / r)


def interconnect_sweep(dqds, ratios) -> list[dict]:
    return [
        {"dqds": n, "ratio": r, "lines": interconnect_lines(n, r)} for r in ratios for n in dqds
    ]
