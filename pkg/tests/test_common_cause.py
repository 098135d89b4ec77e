import random
from fractions import Fraction as F

import pytest

from bellscope.classical_rep import (
    as_conditional,
    build_conditional_rep,
    build_kolmogorov_rep,
    check_admissibility,
    is_nonsignaling,
)
from bellscope.common_cause import (
    DETERMINISTIC,
    INDETERMINISTIC,
    PROPENSITY,
    PROPERTY,
    build_propensity_explanation,
    build_property_explanation,
    decompose_deterministic,
    decompose_indeterministic,
    extract_kolmogorov_from_property,
    kolmogorov_vector,
    verify_screening,
)
from bellscope.errors import (
    InfeasibleError,
    NonDeterministicError,
    NotAPartitionError,
    NotIndependenceVectorError,
    OutsidePolytopeError,
    SignalingError,
)
from bellscope.polytope import membership, random_rational_vector
from bellscope.scenario import classical_vertex, convex_combination, max_abs_difference, two_event_scenario

from conftest import SHARED_WEIGHTS, vec


def weights_by_eps(dec):
    return {v.epsilon: w for w, v in zip(dec.weights, dec.vectors)}


def test_deterministic_weights(inside_vector):
    dec = decompose_deterministic(inside_vector)
    assert dec.kind == DETERMINISTIC
    assert weights_by_eps(dec) == {(1, 1): F(1, 5), (1, 0): F(1, 5), (0, 1): F(1, 5), (0, 0): F(2, 5)}
    assert convex_combination(list(dec.weights), list(dec.vectors)) == inside_vector


def test_deterministic_vertex():
    dec = decompose_deterministic(vec(["1", "1"], ["1"]))
    assert dec.weights == (1,)


def test_deterministic_outside(outside_vector):
    with pytest.raises(OutsidePolytopeError) as info:
        decompose_deterministic(outside_vector)
    assert info.value.certificate.value == F(17, 15)


def test_indeterministic_keyed(components):
    p = vec([0.4, 0.4], [0.2])
    dec = decompose_indeterministic(p, components)
    assert dec.kind == INDETERMINISTIC
    for eps, w in zip(components, dec.weights):
        assert w == pytest.approx(SHARED_WEIGHTS[eps], abs=1e-9)


def test_indeterministic_unkeyed(components):
    # the four targets span only a 3-dimensional affine set, so any valid expansion will do
    p = vec([0.4, 0.4], [0.2])
    dec = decompose_indeterministic(p, list(components.values()))
    assert sum(dec.weights) == pytest.approx(1, abs=1e-9)
    assert max_abs_difference(convex_combination(list(dec.weights), list(dec.vectors)), p) <= 1e-9


def test_indeterministic_single_target(inside_vector):
    with pytest.raises(InfeasibleError):
        decompose_indeterministic(inside_vector, [vec(["1/2", "1/2"], ["1/4"])])


def test_indeterministic_rejects_correlated_target(inside_vector):
    with pytest.raises(NotIndependenceVectorError):
        decompose_indeterministic(inside_vector, [inside_vector])


def test_indeterministic_over_vertices(inside_vector):
    s = inside_vector.scenario
    targets = {eps: classical_vertex(s, eps) for eps in ((1, 1), (1, 0), (0, 1), (0, 0))}
    dec = decompose_indeterministic(inside_vector, targets)
    assert dec.kind == DETERMINISTIC
    assert weights_by_eps(dec) == weights_by_eps(decompose_deterministic(inside_vector))


@pytest.fixture
def kolmogorov_space(inside_vector):
    return build_kolmogorov_rep(inside_vector, membership(inside_vector).coefficients)


def test_screening_atom_cells(kolmogorov_space):
    cells = [{a} for a in kolmogorov_space.atoms]
    report = verify_screening(kolmogorov_space, ["A1", "A2"], cells, [(1, 2)])
    assert report.passed and report.max_residual == 0


def test_screening_trivial_partition(kolmogorov_space):
    report = verify_screening(kolmogorov_space, ["A1", "A2"], ["Omega"], [(1, 2)])
    assert not report.passed
    assert report.max_residual == F(1, 5) - F(4, 25)


def test_screening_not_a_partition(kolmogorov_space):
    atoms = kolmogorov_space.atoms
    with pytest.raises(NotAPartitionError):
        verify_screening(kolmogorov_space, ["A1", "A2"], [set(atoms[:2])], [(1, 2)])
    with pytest.raises(NotAPartitionError):
        verify_screening(kolmogorov_space, ["A1", "A2"], [set(atoms), {atoms[0]}], [(1, 2)])


def test_property_round_trip(inside_vector):
    rep = build_conditional_rep(inside_vector, nonsignaling=True)
    expl = build_property_explanation(inside_vector, rep)
    assert expl.kind == PROPERTY
    assert expl.screening.passed and expl.screening.conditional
    sp = expl.rep.space
    for cell in expl.partition.values():
        for i in (1, 2):
            assert sp.conditional(f"A{i}", [f"a{i}", cell]) in (0, 1)
    extracted = extract_kolmogorov_from_property(expl.rep, expl.partition)
    assert extracted.prob("C1") == F(2, 5)
    assert kolmogorov_vector(inside_vector.scenario, extracted) == inside_vector
    assert is_nonsignaling(expl.rep)


def test_property_on_vertex():
    p = vec(["1", "0"], ["0"])
    expl = build_property_explanation(p, build_conditional_rep(p, nonsignaling=True))
    extracted = extract_kolmogorov_from_property(expl.rep, expl.partition)
    assert len(extracted.atoms) == 1


def test_propensity_instance(components):
    p = vec([0.4, 0.4], [0.2])
    rep = build_conditional_rep(p, nonsignaling=True)
    expl = build_propensity_explanation(p, SHARED_WEIGHTS, components, rep)
    assert expl.kind == PROPENSITY
    assert expl.screening.passed
    assert expl.screening.max_residual <= 1e-9
    with pytest.raises(NonDeterministicError):
        extract_kolmogorov_from_property(expl.rep, expl.partition)


def test_signaling_rep_rejected(signaling_rep, outside_vector):
    with pytest.raises(SignalingError):
        build_propensity_explanation(outside_vector, {(0, 0): 1}, {(0, 0): classical_vertex(two_event_scenario(), (0, 0))}, signaling_rep)


def test_unconditional_rep_explanation(inside_vector, kolmogorov_space):
    rep = as_conditional(two_event_scenario(), kolmogorov_space)
    expl = build_property_explanation(inside_vector, rep)
    assert expl.screening.passed


def test_bell_violation_blocks_explanation_not_representation():
    rng = random.Random(8)
    found = 0
    while found < 10:
        p = random_rational_vector(two_event_scenario(), rng, 15)
        if membership(p).inside or not check_admissibility(p):
            continue
        found += 1
        assert build_conditional_rep(p) is not None
        with pytest.raises(OutsidePolytopeError):
            decompose_deterministic(p)


def test_explanation_json(inside_vector):
    expl = build_property_explanation(inside_vector, build_conditional_rep(inside_vector, nonsignaling=True))
    data = expl.to_json()
    assert data["kind"] == "property"
    assert data["screening"]["passed"] is True
    assert set(data["partition"]) == {"C[ε=11]", "C[ε=10]", "C[ε=01]", "C[ε=00]"}
