import json

import pytest

from bs9arch.model import (
    BARE_IDLE_RATE,
    DD_IDLE_RATE,
    TECH_NODES,
    GateKind,
    Layout,
    NoiseTable,
    Role,
    TechNode,
    default_layout,
    gate_duration,
    gate_fault_prob,
    validate_layout,
)
from bs9arch.resources import RoutingModel, accessible_dqds, interconnect_lines, table2

# [PAPER] gate durations in 30 ns ticks
DURATIONS = [
    (GateKind.PREP_ONE, 1),
    (GateKind.MEASURE_Z, 1),
    (GateKind.PHASE_HALF, 1),
    (GateKind.PHASE_FULL, 2),
    (GateKind.X_HALF, 3),
    (GateKind.X_FULL, 4),
    (GateKind.CPHASE, 4),
    (GateKind.IDLE, 1),
    (GateKind.BARE_IDLE, 1),
]


@pytest.mark.parametrize("kind, ticks", DURATIONS)
def test_gate_duration(kind, ticks):
    assert gate_duration(kind) == ticks


# [PAPER] biased multiples; measurement and preparation at p/30 in both modes
@pytest.mark.parametrize(
    "kind, unbiased, biased",
    [
        (GateKind.PREP_ONE, 1 / 30, 1 / 30),
        (GateKind.MEASURE_Z, 1 / 30, 1 / 30),
        (GateKind.PHASE_HALF, 1, 1),
        (GateKind.PHASE_FULL, 1, 2),
        (GateKind.X_HALF, 1, 4),
        (GateKind.X_FULL, 1, 4),
        (GateKind.CPHASE, 1, 4),
    ],
)
def test_fault_multiples(kind, unbiased, biased):
    p = 1e-3
    assert gate_fault_prob(kind, NoiseTable.dpn(p)) == pytest.approx(unbiased * p)
    assert gate_fault_prob(kind, NoiseTable.biased_dpn(p)) == pytest.approx(biased * p)


def test_idle_rates_do_not_scale_with_p():
    # [PAPER] decoupled and bare idle rates are constants
    for p in (0.0, 1e-4, 1e-2):
        n = NoiseTable(p)
        assert n.rate(GateKind.IDLE) == DD_IDLE_RATE == 5e-7
        assert n.rate(GateKind.BARE_IDLE) == BARE_IDLE_RATE == 9.99e-3


@pytest.mark.parametrize("biased, c", [(False, 1), (True, 4)])
def test_c_factor(biased, c):
    assert NoiseTable(1e-3, biased).c_factor == c


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_noise_rejects_bad_p(p):
    with pytest.raises(ValueError):
        NoiseTable(p)


def test_biased_rejects_rates_above_one():
    with pytest.raises(ValueError):
        NoiseTable(0.3, biased=True)


def test_noise_roundtrip():
    n = NoiseTable(2e-4, True, overrides={GateKind.CPHASE: 1e-3})
    assert NoiseTable.from_dict(json.loads(json.dumps(n.to_dict()))) == n


def test_noise_rejects_unknown_field():
    with pytest.raises(ValueError, match="unknown"):
        NoiseTable.from_dict({"p": 0.1, "bogus": 1})


def test_default_layout_is_valid(layout):
    assert validate_layout(layout) == []
    # [TRIVIAL] BS9(21): 9 data, 6 Z-ancillas, 6 X-ancillas
    assert len(layout.by_role(Role.DATA)) == 9
    assert len(layout.by_role(Role.Z_ANCILLA)) == 6
    assert len(layout.by_role(Role.X_ANCILLA)) == 6


def test_layout_roundtrip(layout, tmp_path):
    path = tmp_path / "layout.json"
    path.write_text(json.dumps(layout.to_dict()))
    assert Layout.load(path) == layout


def test_layout_rejects_unknown_field(layout):
    doc = layout.to_dict()
    doc["extra"] = 1
    with pytest.raises(ValueError, match="unknown"):
        Layout.from_dict(doc)


def test_validate_layout_flags_problems(layout):
    doc = layout.to_dict()
    doc["blocks"][0]["members"].append(doc["blocks"][1]["members"][0])
    doc["couplings"].append({"qubits": ["d11", "d55"], "side": "left"})
    problems = validate_layout(Layout.from_dict(doc))
    assert any("belongs to blocks" in p for p in problems)
    assert any("non-adjacent" in p for p in problems)


def test_every_block_at_most_three():
    assert all(len(b.members) <= 3 for b in default_layout().blocks)


# ---------------------------------------------------------------------------
# resources

# [PAPER] accessible DQDs per CMOS block
TABLE2 = {
    "130nm": (1, 1),
    "90nm": (1, 2),
    "65nm": (2, 3),
    "10nm": (30, 42),
    "1nm": (308, 436),
}


@pytest.mark.parametrize("node", TECH_NODES, ids=lambda n: n.name)
@pytest.mark.parametrize("shared", [0, 5])
def test_table2_cells(node, shared):
    expected = TABLE2[node.name][0 if shared == 0 else 1]
    assert accessible_dqds(node, shared) == expected


def test_table2_rows():
    rows = table2()
    assert {r["technology"]: (r["no_common"], r["common5"]) for r in rows} == TABLE2


def test_node_below_one_dqd_warns():
    with pytest.warns(RuntimeWarning, match="cannot reach"):
        assert accessible_dqds(TechNode("toy", 10)) == 0


def test_routing_model_span_bounds():
    with pytest.raises(ValueError):
        RoutingModel(effective_span=1.0)
    with pytest.raises(ValueError):
        RoutingModel(effective_span=1.3)


def test_sharing_rejects_other_counts():
    with pytest.raises(ValueError):
        accessible_dqds(TECH_NODES[0], 3)


@pytest.mark.parametrize(
    "n, ratio, lines",
    [
        (21, 30, 6),  # [DERIVED] ceil(168 / 30)
        (1, 8, 1),  # [TRIVIAL] exactly fits
        (1, 0.5, 16),  # [DERIVED] sub-unit ratio
        (3, 1, 24),  # [DERIVED] one bit per line per step
    ],
)
def test_interconnect_lines(n, ratio, lines):
    assert interconnect_lines(n, ratio) == lines


@pytest.mark.parametrize("n, ratio", [(0, 1), (1, 0), (1, -2)])
def test_interconnect_rejects(n, ratio):
    with pytest.raises(ValueError):
        interconnect_lines(n, ratio)


def test_interconnect_monotone():
    ratios = [0.5, 1, 2, 4, 8, 16, 30, 64]
    for n in (1, 5, 21, 100):
        lines = [interconnect_lines(n, r) for r in ratios]
        assert lines == sorted(lines, reverse=True)
    for r in ratios:
        lines = [interconnect_lines(n, r) for n in range(1, 40)]
        assert lines == sorted(lines)


def test_accessible_monotone_and_sharing_dominates():
    prev = (0, 0)
    for routes in range(16, 500, 7):
        node = TechNode("x", routes)
        cur = (accessible_dqds(node, 0), accessible_dqds(node, 5))
        assert cur[0] >= prev[0] and cur[1] >= prev[1]
        assert cur[1] >= cur[0]
        prev = cur
