from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wignerbox.agents import InferenceRow, InferenceTable
from wignerbox.amplitude import ExactReal
from wignerbox.engine import (
    MaxRoundsExceeded,
    RunConfig,
    SplitMix64,
    branch_reports,
    categorical,
    collapse_run,
    compile_schedule,
    detect_violations,
    evolve_round,
    iter_states,
    observer_presentation,
    outcome_distribution,
    reduced_density,
    run,
    run_seed,
    sample_many,
    sample_runs,
)
from wignerbox.engine.checkpoints import check_checkpoints
from wignerbox.engine.dense import DenseSimulator
from wignerbox.protocol import CHECKPOINTS, Infer, Measure, TimeStamp

F12 = Fraction(1, 12)


def test_norm_exactly_one_after_every_step(compiled_fr):
    for _, psi in iter_states(compiled_fr, "exact"):
        assert psi.norm_squared() == 1


def test_dense_oracle_agrees_step_by_step(compiled_fr, fr):
    dense = DenseSimulator(fr)
    sparse = [psi for cs, psi in iter_states(compiled_fr, "float") if cs is not None]
    for psi, d in zip(sparse, dense.states()):
        terms = dense.to_terms(d)
        assert set(terms) == set(psi.terms)
        for key, amp in psi.items():
            assert abs(amp - terms[key]) < 1e-12


def test_float_and_exact_checkpoints_agree(compiled_fr):
    _, exact = evolve_round(compiled_fr, "exact", CHECKPOINTS)
    _, flt = evolve_round(compiled_fr, "float", CHECKPOINTS)
    for t in CHECKPOINTS:
        assert exact[t].to_float().close_to(flt[t], atol=1e-9)


def test_compiled_operators_are_isometries(compiled_fr):
    ops = [cs.operator for cs in compiled_fr.steps if cs.operator is not None]
    assert len(ops) == 8
    for op in ops:
        assert op.isometry_defects() == []


def test_f_memory_marginal_unchanged_by_wbar_measurement(compiled_fr):
    states = list(iter_states(compiled_fr, "exact"))
    i = next(k for k, (cs, _) in enumerate(states) if cs is not None and cs.step.at == TimeStamp(0, 20))
    before, after = states[i - 1][1], states[i][1]
    for regs in (("FMem",), ("S", "FMem")):
        assert reduced_density(before, regs) == reduced_density(after, regs)
    # Wbar's own lab does change
    assert reduced_density(before, ("R", "FbarMem")) != reduced_density(after, ("R", "FbarMem"))


def test_snapshot_is_state_after_steps_up_to_time(compiled_fr):
    _, snaps = evolve_round(compiled_fr, "exact", [TimeStamp(0, 12), TimeStamp(0, 13), TimeStamp(0, 59)])
    states = [psi for cs, psi in iter_states(compiled_fr) if cs is not None]
    by_at = {cs.step.at: k for k, cs in enumerate(compiled_fr.steps)}
    assert snaps[TimeStamp(0, 12)] == states[by_at[TimeStamp(0, 11)]]
    assert snaps[TimeStamp(0, 13)] == states[by_at[TimeStamp(0, 13)]]
    assert snaps[TimeStamp(0, 59)] == states[-1]


def test_outcome_distribution(compiled_fr):
    final, _ = evolve_round(compiled_fr)
    dist = outcome_distribution(compiled_fr, final)
    assert dist == {
        ("failbar", "fail"): Fraction(3, 4),
        ("failbar", "ok"): F12,
        ("okbar", "fail"): F12,
        ("okbar", "ok"): F12,
    }


def test_merged_final_amplitudes(compiled_fr):
    final, _ = evolve_round(compiled_fr)
    shown, bases = observer_presentation(compiled_fr, final)
    assert [b.name for b in bases] == ["L", "Lbar"]
    amp = {(lab["Lbar"], lab["L"]): a for lab, a in ((shown.labels(k), a) for k, a in shown.items())}
    assert amp[("failbar", "fail")] == ExactReal(0, 0, Fraction(1, 2))
    assert amp[("failbar", "ok")] == ExactReal(0, 0, Fraction(1, 6))
    assert amp[("okbar", "ok")] == ExactReal(0, 0, Fraction(1, 6))
    assert amp[("okbar", "fail")] == -ExactReal(0, 0, Fraction(1, 6))


def test_single_violation(compiled_fr):
    final, _ = evolve_round(compiled_fr)
    (v,) = detect_violations(compiled_fr, final)
    assert v.probability == F12
    assert v.labels["WMem"] == "cert_fail+ok"
    ((a, b),) = v.rule_s_violations
    assert {a.value, b.value} == {"ok", "fail"} and a.variable == b.variable == "w"
    assert len(branch_reports(compiled_fr, final)) == 4


def test_no_violation_before_w_measures(compiled_fr):
    _, snaps = evolve_round(compiled_fr, "exact", [TimeStamp(0, 2), TimeStamp(0, 28)])
    for psi in snaps.values():
        assert detect_violations(compiled_fr, psi) == []


def test_no_violation_without_w_measurement(fr):
    cut = compile_schedule(fr.without(lambda s: isinstance(s, Measure) and s.agent == "W"))
    final, _ = evolve_round(cut)
    assert detect_violations(cut, final) == []


def test_observation_offset_zero_compares_at_n30(compiled_fr):
    final, _ = evolve_round(compiled_fr)
    assert detect_violations(compiled_fr, final, observation_offset=0) == []


def test_collapse_contrast(compiled_fr):
    dist = collapse_run(compiled_fr)
    assert dist[("okbar", "ok")] == Fraction(1, 4)
    assert sum(dist.values(), ExactReal()) == 1
    assert all(p == Fraction(1, 4) for p in dist.values())


def test_run_report_json(compiled_fr):
    report = run(compiled_fr, RunConfig("exact", seed=3, checkpoints=(TimeStamp(0, 2),)))
    data = report.to_json()
    assert data["distribution"]["okbar,ok"] == {"exact": "1/12", "float": pytest.approx(1 / 12)}
    assert len(data["checkpoints"]) == 1 and len(data["checkpoints"][0]["state"]) == 3
    assert data["sampling"]["halting_round"] == len(data["sampling"]["draws"])


def test_run_config_rejects_bad_mode():
    with pytest.raises(ValueError):
        RunConfig("quantum")


# -- sampling -------------------------------------------------------------


def test_splitmix_reference_vectors():
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(2)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4]
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(3)] == [6457827717110365317, 3203168211198807973, 9817491932198370423]


def test_run_seed_is_stream_of_parent():
    parent = SplitMix64(99)
    assert [run_seed(99, i) for i in range(4)] == [parent.next_u64() for _ in range(4)]


@given(st.integers(0, 2**64 - 1))
def test_uniform_in_unit_interval(seed):
    u = SplitMix64(seed).uniform()
    assert 0.0 <= u < 1.0


def test_categorical_respects_cumulative():
    rng = SplitMix64(5)
    draws = [categorical(rng, ["a", "b"], [0.25, 1.0]) for _ in range(4000)]
    assert 0.2 < draws.count("a") / 4000 < 0.3


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 50))
def test_sampling_is_deterministic(compiled_fr, seed, index):
    cfg = RunConfig(seed=seed)
    a = sample_runs(compiled_fr, cfg, index)
    b = sample_runs(compiled_fr, cfg, index)
    assert a == b
    assert a.draws[-1] == ("okbar", "ok")
    assert ("okbar", "ok") not in a.draws[:-1]


def test_sampling_requires_seed(compiled_fr):
    with pytest.raises(ValueError):
        sample_runs(compiled_fr, RunConfig())


def test_max_rounds_exceeded(compiled_fr):
    cfg = RunConfig(seed=1, max_rounds=1)
    with pytest.raises(MaxRoundsExceeded) as info:
        sample_many(compiled_fr, cfg, 50)
    assert info.value.result.halting_round is None
    stats = sample_many(compiled_fr, cfg, 50, allow_partial=True)
    assert len(stats.runs) == 50
    assert any(h is None for h in stats.halting_rounds)


def test_float_mode_sampling_matches_exact(compiled_fr):
    exact = sample_many(compiled_fr, RunConfig(seed=11), 30)
    flt = sample_many(compiled_fr, RunConfig("float", seed=11), 30)
    assert exact.halting_rounds == flt.halting_rounds


# -- checkpoints ------------------------------------------------------------


def test_checkpoints_pass(fr):
    results = check_checkpoints(fr)
    assert [r.at.label for r in results] == ["n:02", "n:12", "n:14", "n:24", "n:28", "n:31"]
    assert all(r.passed for r in results)


def test_corrupted_f_table_fails_at_n14(fr):
    step = next(s for s in fr.steps if isinstance(s, Infer) and s.at == TimeStamp(0, 13))
    table = step.table
    bad_table = InferenceTable(table.agent, table.source, table.dest, (InferenceRow("up_tails", "up_fail2", table.rows[0].conclusions),))
    bad = fr.replacing(step, Infer(step.at, step.agent, bad_table))
    results = check_checkpoints(bad)
    first = next(r for r in results if not r.passed)
    assert first.at == TimeStamp(0, 14)
    assert all(r.passed for r in results if r.at < TimeStamp(0, 14))
    # the bad token also leaves F's lab outside the span of W's basis
    assert any("engine error at n:30" in n for n in results[-1].notes)


COIN = [
    (Fraction(1, 3), Fraction(2, 3)),
    (Fraction(1, 2), Fraction(1, 2)),
    (Fraction(1, 4), Fraction(3, 4)),
    (Fraction(3, 4), Fraction(1, 4)),
    (Fraction(1), Fraction(0)),
]


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(COIN), st.booleans())
def test_variant_coins_keep_norm_and_match_dense(fr, pair, flip):
    from dataclasses import replace

    from wignerbox.amplitude import from_sqrt
    from wignerbox.protocol import NamedState, make_ket

    a, b = (from_sqrt(p) for p in pair)
    ket = make_ket({k: v for k, v in {("heads",): a, ("tails",): -b if flip else b}.items() if v != 0})
    variant = replace(fr, states=(NamedState("init_R", ("R",), ket),) + fr.states[1:])
    compiled = compile_schedule(variant)
    dense = DenseSimulator(variant)
    for (cs, psi), d in zip(list(iter_states(compiled))[1:], dense.states()):
        assert psi.norm_squared() == 1
        terms = dense.to_terms(d)
        assert set(terms) == set(psi.terms)
        assert all(abs(float(amp) - terms[k]) < 1e-12 for k, amp in psi.items())
    final, _ = evolve_round(compiled)
    dist = outcome_distribution(compiled, final)
    assert abs(dense.halt_probability(dense.evolve()) - float(dist.get(("okbar", "ok"), 0))) < 1e-12
