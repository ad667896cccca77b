from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wignerbox.amplitude import ONE, ZERO, ExactReal, UnrepresentableRadical, from_sqrt
from wignerbox.hilbert import (
    BasisMapOperator,
    DestNotReady,
    IsometryViolation,
    MeasurementBasis,
    NonOrthonormalBasis,
    RegisterSpace,
    StateVector,
    SupportLeakage,
    UnknownToken,
    ZeroProbabilityOutcome,
    apply,
    born_distribution,
    project,
    project_unnormalized,
    record_measurement,
    rewrite_in_basis,
    state_to_json,
    undo_rewrite,
)

H = from_sqrt(Fraction(1, 2))
SPACE = RegisterSpace.of(A=("0", "1"), B=("0", "1"), M=("ready", "x", "y"))
HADAMARD = MeasurementBasis("had", ("A",), (("p", {("0",): H, ("1",): H}), ("m", {("0",): H, ("1",): -H})))
BELL = MeasurementBasis(
    "bell",
    ("A", "B"),
    (
        ("phi+", {("0", "0"): H, ("1", "1"): H}),
        ("phi-", {("0", "0"): H, ("1", "1"): -H}),
    ),
)


def ket(**amps):
    return StateVector(SPACE, {tuple(k.split("_")): v for k, v in amps.items()})


def bell_state():
    return StateVector(SPACE, {("0", "0", "ready"): H, ("1", "1", "ready"): H})


def test_canonical_form_merges_and_drops_zeros():
    psi = StateVector(SPACE, [(("0", "0", "ready"), H), (("0", "0", "ready"), -H), (("1", "0", "x"), ONE)])
    assert psi.terms == {("1", "0", "x"): ONE}
    assert psi == StateVector.product(SPACE, {"A": "1", "B": "0", "M": "x"})


def test_unknown_token_rejected():
    with pytest.raises(UnknownToken):
        StateVector.product(SPACE, {"A": "2", "B": "0", "M": "ready"})


def test_apply_permutation_and_identity_elsewhere():
    flip = BasisMapOperator.from_map(("A",), {("0",): ("1",), ("1",): ("0",)}, "X")
    psi = bell_state()
    out = apply(flip, psi)
    assert out == StateVector(SPACE, {("1", "0", "ready"): H, ("0", "1", "ready"): H})
    assert out.norm_squared() == 1


def test_apply_partial_map_rejects_collisions():
    # 0 -> 1 but 1 is unlisted: a state with weight on 1 collides
    op = BasisMapOperator.from_map(("A",), {("0",): ("1",)}, "bad")
    with pytest.raises(IsometryViolation):
        apply(op, bell_state())


def test_non_orthonormal_operator_fails_check():
    op = BasisMapOperator(("A",), ((("0",), {("0",): ONE}), (("1",), {("0",): H, ("1",): H})), "skew")
    assert op.isometry_defects()
    with pytest.raises(IsometryViolation):
        op.check()


def test_born_distribution_and_projection():
    psi = StateVector.product(SPACE, {"A": "0", "B": "0", "M": "ready"})
    dist = born_distribution(psi, HADAMARD)
    assert dist == {"p": Fraction(1, 2), "m": Fraction(1, 2)}
    p, post = project(psi, HADAMARD, "m")
    assert p == Fraction(1, 2)
    assert post == StateVector(SPACE, {("0", "0", "ready"): H, ("1", "0", "ready"): -H})


def test_zero_probability_outcome():
    with pytest.raises(ZeroProbabilityOutcome):
        project(bell_state(), BELL, "phi-")
    assert born_distribution(bell_state(), BELL)["phi-"] == ZERO


def test_partial_basis_support_leakage():
    psi = StateVector.product(SPACE, {"A": "0", "B": "1", "M": "ready"})
    with pytest.raises(SupportLeakage):
        born_distribution(psi, BELL)


def test_non_orthonormal_basis():
    skew = MeasurementBasis("skew", ("A",), (("a", {("0",): ONE}), ("b", {("0",): H, ("1",): H})))
    with pytest.raises(NonOrthonormalBasis):
        born_distribution(bell_state(), skew)


def test_record_measurement_entangles_without_collapse():
    psi = StateVector.product(SPACE, {"A": "0", "B": "0", "M": "ready"})
    out = record_measurement(psi, HADAMARD, "M", {"p": "x", "m": "y"})
    expected = StateVector(
        SPACE,
        {
            ("0", "0", "x"): Fraction(1, 2) * ONE,
            ("1", "0", "x"): Fraction(1, 2) * ONE,
            ("0", "0", "y"): Fraction(1, 2) * ONE,
            ("1", "0", "y"): -Fraction(1, 2) * ONE,
        },
    )
    assert out == expected
    assert out.norm_squared() == 1


def test_record_measurement_requires_ready_dest():
    psi = StateVector.product(SPACE, {"A": "0", "B": "0", "M": "x"})
    with pytest.raises(DestNotReady):
        record_measurement(psi, HADAMARD, "M", {"p": "x", "m": "y"})


def test_record_measurement_with_prior_token_map():
    psi = StateVector.product(SPACE, {"A": "0", "B": "0", "M": "x"})
    out = record_measurement(psi, MeasurementBasis.computational("A", ("0", "1")), "M", {("x", "0"): "y"})
    assert out == StateVector.product(SPACE, {"A": "0", "B": "0", "M": "y"})


def test_record_measurement_non_injective():
    with pytest.raises(IsometryViolation):
        record_measurement(bell_state(), HADAMARD, "M", {"p": "x", "m": "x"})


def test_rewrite_and_undo():
    psi = bell_state()
    shown = rewrite_in_basis(psi, BELL)
    assert shown.space.names == ("bell", "M")
    assert shown.terms == {("phi+", "ready"): ONE}
    assert undo_rewrite(shown, BELL, SPACE) == psi


def test_state_to_json_rows_sorted():
    rows = state_to_json(bell_state())
    assert [r["labels"]["A"] for r in rows] == ["0", "1"]
    assert rows[0]["amplitude_exact"] == "1/2*sqrt2"
    assert abs(rows[0]["amplitude_float"] - 2 ** -0.5) < 1e-15


def test_float_mode_agrees():
    psi = bell_state()
    f = psi.to_float()
    assert not f.exact
    assert f.close_to(psi.to_float())
    assert abs(f.norm_squared() - 1) < 1e-12
    _, post = project(f, HADAMARD, "p")
    assert abs(post.norm_squared() - 1) < 1e-12


labels = st.tuples(st.sampled_from("01"), st.sampled_from("01"))


@given(st.permutations([("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]), st.sampled_from(["ready", "x", "y"]))
def test_permutations_preserve_norm(perm, mem):
    op = BasisMapOperator.from_map(("A", "B"), dict(zip([("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")], perm)))
    psi = StateVector(SPACE, {("0", "0", mem): H, ("1", "1", mem): H})
    out = apply(op, psi)
    assert out.norm_squared() == 1
    assert out.inner(out) == 1


@given(st.sampled_from(["p", "m"]), st.sampled_from(["0", "1"]))
def test_projectors_are_idempotent(outcome, a):
    psi = StateVector.product(SPACE, {"A": a, "B": "0", "M": "ready"})
    once = project_unnormalized(psi, HADAMARD, outcome)
    assert project_unnormalized(once, HADAMARD, outcome) == once
    assert sum(born_distribution(psi, HADAMARD).values(), ZERO) == 1


def test_register_space_replace_keeps_position():
    space = SPACE.replace(("A", "B"), "AB", ("u", "v"))
    assert space.names == ("AB", "M")
    assert space.dimension == 6


# -- the protocol's own states ------------------------------------------------

from wignerbox.engine import evolve_round  # noqa: E402
from wignerbox.protocol import TimeStamp  # noqa: E402


def test_init_state_distribution_and_projection(fr):
    space = RegisterSpace.of(R=("heads", "tails"))
    init = StateVector(space, dict(fr.state("init_R").ket))
    coin = MeasurementBasis.computational("R", ("heads", "tails"))
    assert born_distribution(init, coin) == {"heads": Fraction(1, 3), "tails": Fraction(2, 3)}
    p, post = project(init, coin, "tails")
    assert p == Fraction(2, 3) and post == StateVector.product(space, {"R": "tails"})


def test_spin_distribution_at_n12(compiled_fr, fr):
    _, snaps = evolve_round(compiled_fr, "exact", [TimeStamp(0, 12)])
    dist = born_distribution(snaps[TimeStamp(0, 12)], fr.basis("zbasis"))
    assert dist == {"up": Fraction(1, 3), "down": Fraction(2, 3)}


def test_probability_one_recording_stays_product():
    psi = StateVector.product(SPACE, {"A": "1", "B": "0", "M": "ready"})
    out = record_measurement(psi, MeasurementBasis.computational("A", ("0", "1")), "M", {"0": "x", "1": "y"})
    assert out == StateVector.product(SPACE, {"A": "1", "B": "0", "M": "y"})


def test_swap_is_an_involution():
    swap = BasisMapOperator.from_map(("M",), {("x",): ("y",), ("y",): ("x",)})
    psi = StateVector(SPACE, {("0", "0", "x"): H, ("1", "1", "y"): -H})
    assert apply(swap, apply(swap, psi)) == psi
    assert apply(BasisMapOperator.identity(("A", "B")), psi) == psi


def test_projections_recombine(compiled_fr, fr):
    final, _ = evolve_round(compiled_fr)
    basis = fr.basis("L")
    dist = born_distribution(final, basis)
    parts = {o: project_unnormalized(final, basis, o) for o in dist}
    assert all(parts[o].norm_squared() == dist[o] for o in dist)
    assert sum(dist.values(), ZERO) == 1
    # 5/6 has no square root in the ring; the float path still renormalizes
    with pytest.raises(UnrepresentableRadical):
        project(final, basis, "fail")
    for outcome in dist:
        prob, post = project(final.to_float(), basis, outcome)
        assert abs(prob - float(dist[outcome])) < 1e-12
        assert abs(post.norm_squared() - 1) < 1e-12
