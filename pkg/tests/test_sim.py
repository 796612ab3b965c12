import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bs9arch.model import NoiseTable, Role
from bs9arch.sim import (
    CHUNK,
    binomial_interval,
    build_blackbox_program,
    build_native_program,
    estimate_pec,
    run_ec_trial,
    run_faults,
    sample_faults,
)
from bs9arch.sim import backend
from bs9arch.sim.frame import PauliFrame, decode_bs9, fold_gauges, gauge_outcomes, logical_failure
from bs9arch.sim.program import N_CHOICES
from bs9arch.sim.settings import Setting, stored_schedule

SETTINGS = ["blackbox", "steane", "native"]


def _data_frame(layout, faults):
    frame = PauliFrame.empty(layout.qubit_ids)
    for q, p in faults:
        frame = frame.apply(q, p)
    return frame


def _decode_and_correct(frame, layout, rounds=2):
    dec = decode_bs9([gauge_outcomes(frame, layout)] * rounds, layout)
    assert not dec.defer
    for q, p in dec.corrections:
        frame = frame.apply(q, p)
    return frame


# ---------------------------------------------------------------------------
# code and decoder


def test_every_single_data_pauli_is_corrected(layout):
    # [DERIVED] distance 3: all 27 weight-one data errors are corrected
    data = [q.id for q in layout.by_role(Role.DATA)]
    for q in data:
        for p in "XYZ":
            frame = _decode_and_correct(_data_frame(layout, [(q, p)]), layout)
            assert logical_failure(frame, layout) == (False, False), (q, p)
            # the residual may be a gauge but carries no stabilizer syndrome
            assert not fold_gauges(gauge_outcomes(frame, layout)).any()


def test_some_weight_two_error_fails(layout):
    # [DERIVED] X errors on two data qubits of one row flag the remaining
    # column; the correction completes a logical X
    frame = _decode_and_correct(_data_frame(layout, [("d11", "X"), ("d15", "X")]), layout)
    assert logical_failure(frame, layout)[0]


def test_disagreeing_rounds_defer(layout):
    a = gauge_outcomes(_data_frame(layout, [("d11", "X")]), layout)
    b = np.zeros(12, dtype=np.uint8)
    dec = decode_bs9([a, b], layout)
    assert dec.defer and dec.corrections == ()
    assert decode_bs9([b, b], layout).corrections == ()


def test_fold_gauges_shape():
    with pytest.raises(ValueError):
        fold_gauges(np.zeros(11))
    assert fold_gauges(np.ones(12)).tolist() == [[1, 1, 1, 1]]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.sampled_from("XYZ")), max_size=6))
def test_logical_failure_is_gauge_invariant(layout, faults):
    # multiplying by a gauge never changes the logical verdict
    data = [q.id for q in layout.by_role(Role.DATA)]
    frame = _data_frame(layout, [(data[i], p) for i, p in faults])
    ref = logical_failure(frame, layout)
    ops = [("X", "d11", "d31"), ("Z", "d11", "d13"), ("X", "d33", "d53"), ("Z", "d53", "d55")]
    for p, a, b in ops:
        assert logical_failure(frame.apply(a, p).apply(b, p), layout) == ref


# ---------------------------------------------------------------------------
# fault tolerance by enumeration


def _single_faults(prog):
    for loc in range(2 * prog.n_ops):
        op = loc % prog.n_ops
        if prog.op_class[op] < 0:
            continue
        n = N_CHOICES[prog.ops[op][0]]
        for code in range(1, n + 1) if n > 1 else (0,):
            yield loc, code


@pytest.mark.parametrize("name", SETTINGS)
def test_no_single_fault_fails(name):
    # [DERIVED] every single fault anywhere in two cycles is corrected
    prog = Setting(name).program(1e-3)
    failures = [(loc, c) for loc, c in _single_faults(prog) if run_faults(prog, [loc], [c]).failed]
    assert failures == []


def test_noiseless_program_never_fails():
    prog = Setting("native").program(1e-3).noiseless()
    assert estimate_pec(prog, 2000, seed=3).failures == 0


def test_run_faults_rejects_out_of_range():
    prog = build_blackbox_program(1e-2)
    with pytest.raises(ValueError):
        run_faults(prog, [2 * prog.n_ops], [1])


@pytest.mark.parametrize(
    "cycle, relative, failed",
    [
        # [DERIVED] X on both ends of a row: the decoder completes a logical X
        (1, True, True),
        (1, False, True),
        (0, False, True),
        # the first cycle's logical flip is the reference the last one is
        # judged against, so it does not count under the relative verdict
        (0, True, False),
    ],
)
def test_two_faults_in_a_row(cycle, relative, failed):
    prog = build_blackbox_program(1e-2)
    base = cycle * prog.n_ops
    # ops 0..8 are the data idles; 0 and 2 are the ends of row 0, code 1 is X
    out = run_faults(prog, [base, base + 2], [1, 1], relative=relative)
    assert out.faults == 2
    assert out.failed == failed
    assert out.logical_z_failure is False


# ---------------------------------------------------------------------------
# sampling and reproducibility


@pytest.fixture(scope="module")
def native_prog(layout):
    return build_native_program(stored_schedule("native"), layout, NoiseTable(3e-3))


@pytest.mark.skipif("compiled" not in backend.available(), reason="extension not built")
@pytest.mark.parametrize("name", SETTINGS)
def test_kernels_agree_bit_for_bit(name):
    prog = Setting(name).program(2e-2 if name == "blackbox" else 2e-3)
    a = estimate_pec(prog, 3 * CHUNK // 2, seed=11, kernel="python")
    b = estimate_pec(prog, 3 * CHUNK // 2, seed=11, kernel="compiled")
    assert (a.failures, a.x_failures, a.z_failures) == (b.failures, b.x_failures, b.z_failures)


def test_single_trials_match_batch(native_prog):
    n = 300
    batch = estimate_pec(native_prog, n, seed=5, kernel="python")
    singles = sum(run_ec_trial(native_prog, 5, t).failed for t in range(n))
    assert singles == batch.failures


def test_result_independent_of_workers(native_prog):
    trials = 3 * CHUNK
    one = estimate_pec(native_prog, trials, seed=2, workers=1)
    two = estimate_pec(native_prog, trials, seed=2, workers=2)
    assert one.to_dict() == two.to_dict()


def test_seed_determinism(native_prog):
    a = estimate_pec(native_prog, 5000, seed=9)
    assert a.to_dict() == estimate_pec(native_prog, 5000, seed=9).to_dict()
    assert a.failures != estimate_pec(native_prog, 5000, seed=10).failures or a.failures == 0


def test_sample_faults_is_pure_and_has_expected_count(layout):
    sched = stored_schedule("native")
    noise = NoiseTable(1e-2)
    assert sample_faults(sched, noise, 4) == sample_faults(sched, noise, 4)
    prog = build_native_program(sched, layout, noise, rounds_per_cycle=1)
    mean = prog.expected_faults()
    counts = [len(sample_faults(sched, noise, s)) for s in range(400)]
    # [DERIVED] Poisson-binomial mean; 5 standard errors
    assert abs(np.mean(counts) - mean) < 5 * np.sqrt(mean / len(counts))


def test_pec_increases_with_p():
    lo = estimate_pec(build_blackbox_program(5e-3), 20000, seed=1)
    hi = estimate_pec(build_blackbox_program(5e-2), 20000, seed=1)
    assert lo.interval[1] < hi.interval[0]


def test_measurement_noise_hurts():
    a = estimate_pec(build_blackbox_program(2e-2), 20000, seed=1)
    b = estimate_pec(build_blackbox_program(2e-2, 2e-2), 20000, seed=1)
    assert a.interval[1] < b.interval[0]


# ---------------------------------------------------------------------------
# intervals


@pytest.mark.parametrize("k, n", [(0, 100), (5, 100), (50, 100), (100, 100), (3000, 10000)])
def test_interval_contains_estimate(k, n):
    lo, hi = binomial_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_interval_zero_failures():
    # [DERIVED] Clopper-Pearson upper bound for 0/n is 1 - (alpha/2)^(1/n)
    lo, hi = binomial_interval(0, 1000)
    assert lo == 0 and hi == pytest.approx(1 - 0.025 ** (1 / 1000))


def test_interval_rejects_empty():
    with pytest.raises(ValueError):
        binomial_interval(0, 0)
