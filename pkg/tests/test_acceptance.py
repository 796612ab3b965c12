"""Acceptance criteria 1-9, each checked at its stated tolerance.

Every test records a one-line verdict that is printed in the terminal
summary.  Criteria the reconstruction does not meet are marked
``xfail(strict=True)``: they still run and assert the real target, so an
unexpected pass is reported as an error.  The analysis behind each lives
in the decisions ledger.
"""

import json
import math

import pytest
from conftest import brute_min_idle, brute_min_makespan, random_instance, record_verdict

from bs9arch.circuits import build_bs9_extraction, gate_census
from bs9arch.cli import MANIFEST, run
from bs9arch.compile import SUPPORTED, TARGETS, compile_to_native, equal_up_to_phase, verify
from bs9arch.model import TECH_NODES, Role
from bs9arch.resources import accessible_dqds
from bs9arch.schedule import validate_schedule
from bs9arch.sim import estimate_pec, run_faults
from bs9arch.sim.frame import PauliFrame, decode_bs9, gauge_outcomes, logical_failure
from bs9arch.sim.program import N_CHOICES
from bs9arch.sim.settings import Setting, stored_schedule
from bs9arch.solver import minimize_idle, minimize_makespan
from bs9arch.threshold import find_threshold

MANIFEST_DOC = json.loads(MANIFEST.read_text())


def _threshold_rows(target, trials=None, budget=None):
    spec = MANIFEST_DOC[target]
    out = []
    for row in spec["rows"]:
        setting = Setting(row["setting"], row.get("noise") == "biased", row.get("meas_ratio", 0.0), row.get("p_idle", 0.0))
        res = find_threshold(
            setting,
            trials_per_point=trials or spec["trials_per_point"],
            seed=spec["seed"],
            budget=budget or spec["budget"],
        )
        out.append((row, res))
    return out


def _fmt(res):
    return f"{res.p_th:.3g}" if res.has_threshold else "NoThreshold"


# ---------------------------------------------------------------------------


def test_criterion_1_routing_table():
    # [PAPER] accessible DQDs per block, no sharing / 5 shared lines
    expected = {k: (v["no_common"], v["common5"]) for k, v in MANIFEST_DOC["table2"]["expected"].items()}
    got = {n.name: (accessible_dqds(n, 0), accessible_dqds(n, 5)) for n in TECH_NODES}
    ok = got == expected
    record_verdict(1, ok, f"10 cells exact: {got}")
    assert ok


@pytest.mark.xfail(strict=True, reason="decoupled census differs from the published one; see ledger")
def test_criterion_2_census(layout):
    spec = MANIFEST_DOC["table6"]
    plain = gate_census(build_bs9_extraction(layout))
    dd = gate_census(stored_schedule("native+dd"))
    got_plain = {k: plain[k] for k in spec["without_dd"]}
    got_dd = {k: dd.get(k, 0) for k in spec["with_dd"]}
    ok_plain = got_plain == spec["without_dd"]
    ok_dd = got_dd == spec["with_dd"]
    record_verdict(
        2,
        ok_plain and ok_dd,
        f"without DD {'exact' if ok_plain else got_plain}; with DD x={got_dd['x']} idle={got_dd['idle']} "
        f"(target x={spec['with_dd']['x']} idle={spec['with_dd']['idle']})",
    )
    assert ok_plain
    assert ok_dd


def test_criterion_3_scheduler(bs9, layout):
    res = minimize_idle(bs9, layout, 28, sweep=True, engine="cpsat")
    clean = validate_schedule(res.schedule, bs9, layout) == []
    idle = res.report.total
    mismatches = 0
    for seed in range(60):
        circuit, small = random_instance(seed)
        H = brute_min_makespan(circuit, small)
        best = brute_min_idle(circuit, small, H)
        for engine in ("cpsat", "bnb"):
            mismatches += minimize_makespan(circuit, small, engine=engine).makespan != H
            mismatches += minimize_idle(circuit, small, H, engine=engine).report.total != best
    ok = clean and idle <= 129 and idle == 95 and mismatches == 0
    record_verdict(
        3,
        ok,
        f"validator clean={clean}, idle {idle} at makespan {res.schedule.makespan} (<=129, target 95), "
        f"brute force 60 instances x 2 engines, {mismatches} mismatches",
    )
    assert ok


def test_criterion_4_pec_at_zero():
    spec = MANIFEST_DOC["pec0"]
    est = estimate_pec(Setting(spec["setting"]).program(0.0), spec["trials"], spec["seed"])
    lo, hi = spec["range"]
    ok = lo <= est.estimate <= hi
    record_verdict(4, ok, f"P_EC(0) = {est.estimate:.4f} +- {est.ci95:.4f} over {est.trials} trials, range [{lo}, {hi}]")
    assert ok


@pytest.mark.xfail(strict=True, reason="black-box crossings sit above the published values; see ledger")
def test_criterion_5_blackbox():
    rows = _threshold_rows("table4-blackbox")
    parts, ok = [], True
    for row, res in rows:
        hit = res.has_threshold and abs(res.p_th - row["p_th"]) <= row["abs_tol"]
        ok &= hit
        parts.append(f"{row['label']}: {_fmt(res)} (target {row['p_th']} +- {row['abs_tol']})")
    record_verdict(5, ok, "; ".join(parts))
    assert ok


@pytest.mark.xfail(strict=True, reason="Steane crossings below the published band; see ledger")
def test_criterion_6_steane():
    rows = _threshold_rows("table4-steane")
    parts, ok = [], True
    for row, res in rows:
        hit = res.has_threshold and abs(res.p_th - row["p_th"]) <= row["abs_tol"]
        ok &= hit
        parts.append(f"{row['label']}: {_fmt(res)} (target {row['p_th']} +- {row['abs_tol']})")
    record_verdict(6, ok, "; ".join(parts))
    assert ok


@pytest.mark.xfail(strict=True, reason="decoupled crossings sit below the published decade; see ledger")
def test_criterion_7_decoupling_smoke():
    # reduced-trial version: 1e5 trials per point, no escalation; the
    # crossover must land in the published decade, the biased threshold
    # below the unbiased one, and the undecoupled settings must have none
    rows = _threshold_rows("table4-dd", trials=100_000, budget=100_000)
    found, parts, ok = {}, [], True
    for row, res in rows:
        if row["p_th"] == "NoThreshold":
            hit = not res.has_threshold
        else:
            hit = res.has_threshold and math.floor(math.log10(res.p_th)) == math.floor(math.log10(row["p_th"]))
            found[row["label"]] = res.p_th if res.has_threshold else None
        ok &= hit
        parts.append(f"{row['label']}: {_fmt(res)} (target {row['p_th']})")
    a, b = (found.get(k) for k in MANIFEST_DOC["table4-dd"]["ordering"])
    ordered = a is not None and b is not None and a < b
    ok &= ordered
    record_verdict(7, ok, "smoke 1e5/point; " + "; ".join(parts) + f"; biased < unbiased: {ordered}")
    assert ok


def test_criterion_8_property_suites(layout):
    data = [q.id for q in layout.by_role(Role.DATA)]
    corrected = 0
    for q in data:
        for p in "XYZ":
            frame = PauliFrame.empty(layout.qubit_ids).apply(q, p)
            dec = decode_bs9([gauge_outcomes(frame, layout)] * 2, layout)
            for cq, cp in dec.corrections:
                frame = frame.apply(cq, cp)
            corrected += logical_failure(frame, layout) == (False, False)
    single = {}
    for name in ("blackbox", "steane", "native"):
        prog = Setting(name).program(1e-3)
        fails = 0
        for loc in range(2 * prog.n_ops):
            op = loc % prog.n_ops
            if prog.op_class[op] < 0:
                continue
            n = N_CHOICES[prog.ops[op][0]]
            for code in range(1, n + 1) if n > 1 else (0,):
                fails += run_faults(prog, [loc], [code]).failed
        single[name] = fails
    compiled = all(
        verify(c) and (g == "M_X" or equal_up_to_phase(c.unitary(), TARGETS[g], atol=1e-10))
        for g in SUPPORTED
        for c in [compile_to_native(g)]
    )
    prog = Setting("native").program(3e-3)
    one = estimate_pec(prog, 3 * 4096, seed=2, workers=1).to_dict()
    two = estimate_pec(prog, 3 * 4096, seed=2, workers=2).to_dict()
    ok = corrected == 27 and not any(single.values()) and compiled and one == two
    record_verdict(
        8,
        ok,
        f"distance-3 {corrected}/27; single-fault failures {single}; compile oracle {compiled}; workers 1 vs 2 identical {one == two}",
    )
    assert ok


def test_criterion_9_determinism(tmp_path):
    same = {}
    for target in ("table2", "pec0"):
        a, b = tmp_path / f"{target}_a.json", tmp_path / f"{target}_b.json"
        run(["reproduce", target, "--out", str(a)])
        run(["reproduce", target, "--out", str(b)])
        same[target] = a.read_bytes() == b.read_bytes()
    ok = all(same.values())
    record_verdict(9, ok, f"byte-identical reruns: {same}")
    assert ok
