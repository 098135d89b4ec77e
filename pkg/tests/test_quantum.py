import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellscope.errors import (
    DimensionError,
    NotAPartitionError,
    QuantumValidationError,
    ZeroProbabilityError,
)
from bellscope.quantum import (
    CANONICAL_DIRECTIONS,
    I2,
    PAULI,
    SIGMA_Z,
    DensityOperator,
    ProjectionEvent,
    bell_operator_value,
    chsh_observables,
    commute,
    epr_conditional_rep,
    epr_correlation_vector,
    epr_probabilities,
    is_projection,
    local_pair,
    matrix_from_json,
    matrix_to_json,
    meet_projection,
    pauli_dot,
    quantum_common_cause_check,
    random_contraction,
    random_local_observables,
    random_product_state,
    random_pure_state,
    singlet_state,
    spectral_norm,
    spin_projection,
    trace_prob,
)
from bellscope.classical_rep import verify_conditional_rep
from bellscope.polytope import clauser_horne_value

from conftest import diagonal_model

Z = (0.0, 0.0, 1.0)
unit_vectors = st.tuples(
    st.floats(0, math.pi), st.floats(0, 2 * math.pi)
).map(lambda a: (math.sin(a[0]) * math.cos(a[1]), math.sin(a[0]) * math.sin(a[1]), math.cos(a[0])))


def test_trace_prob_maximally_mixed():
    rho = DensityOperator(np.eye(4) / 4)
    P = ProjectionEvent(np.diag([1, 1, 0, 0]))
    assert trace_prob(rho, P) == pytest.approx(0.5)


def test_trace_prob_dimension_mismatch():
    with pytest.raises(DimensionError):
        trace_prob(DensityOperator(np.eye(2) / 2), ProjectionEvent(np.eye(4)))


def test_density_validation():
    with pytest.raises(QuantumValidationError):
        DensityOperator(np.eye(2))
    with pytest.raises(QuantumValidationError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(QuantumValidationError):
        DensityOperator(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(QuantumValidationError):
        ProjectionEvent(np.eye(2) / 2)


def test_singlet_properties():
    rho = singlet_state().matrix
    assert np.trace(rho).real == pytest.approx(1)
    assert np.allclose(rho @ rho, rho)
    assert np.trace(rho @ np.kron(SIGMA_Z, SIGMA_Z)).real == pytest.approx(-1)
    psi = np.array([0, 1, -1, 0]) / math.sqrt(2)
    assert np.allclose(rho @ psi, psi)


@given(unit_vectors)
def test_singlet_single_probability(a):
    assert trace_prob(singlet_state(), spin_projection(a, "left")) == pytest.approx(0.5, abs=1e-12)
    assert trace_prob(singlet_state(), spin_projection(a, "right")) == pytest.approx(0.5, abs=1e-12)


def test_spin_projection():
    P = spin_projection(Z, "left")
    assert np.allclose(P.matrix, np.diag([1, 1, 0, 0]))
    assert P.rank == 2
    with pytest.raises(QuantumValidationError):
        spin_projection((0, 0, 2))
    with pytest.raises(ValueError):
        spin_projection(Z, "middle")


@given(unit_vectors, unit_vectors)
def test_left_right_commute_and_product_formula(a, b):
    L, R = spin_projection(a, "left"), spin_projection(b, "right")
    assert commute(L, R)
    expected = np.kron(I2 + pauli_dot(a), I2 + pauli_dot(b)) / 4
    assert np.allclose(L.matrix @ R.matrix, expected)
    assert np.allclose(meet_projection(L, R).matrix, expected)


def test_meet_examples():
    P = ProjectionEvent(np.diag([1, 1, 0, 0]))
    Q = ProjectionEvent(np.diag([0, 1, 1, 0]))
    assert np.allclose(meet_projection(P, Q).matrix, np.diag([0, 1, 0, 0]))
    assert np.allclose(meet_projection(P, P).matrix, P.matrix)
    up = ProjectionEvent((I2 + SIGMA_Z) / 2)
    plus = ProjectionEvent((I2 + PAULI[0]) / 2)
    assert np.allclose(meet_projection(up, plus).matrix, 0)


def test_meet_noncommuting_nontrivial():
    e = np.eye(4)
    v = (e[1] + e[2]) / math.sqrt(2)
    P = ProjectionEvent(np.outer(e[0], e[0]) + np.outer(e[1], e[1]))
    Q = ProjectionEvent(np.outer(e[0], e[0]) + np.outer(v, v))
    assert not commute(P, Q)
    assert np.allclose(meet_projection(P, Q).matrix, np.outer(e[0], e[0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_meet_outputs_are_projections(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, _ = np.linalg.qr(g)
    P = ProjectionEvent(q[:, :3] @ q[:, :3].conj().T)
    Q = ProjectionEvent(q[:, 1:] @ q[:, 1:].conj().T)
    M = meet_projection(P, Q)
    assert is_projection(M.matrix)
    assert M.rank == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_prob_sums_over_partition(seed):
    rng = np.random.default_rng(seed)
    rho = random_pure_state(4, rng)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    cells = [ProjectionEvent(np.outer(q[:, k], q[:, k].conj())) for k in range(4)]
    assert sum(trace_prob(rho, c) for c in cells) == pytest.approx(1, abs=1e-9)


def test_epr_canonical():
    p = epr_correlation_vector(*CANONICAL_DIRECTIONS)
    assert p.singles == (0.5, 0.5, 0.5, 0.5)
    assert clauser_horne_value(p) == pytest.approx(-(1 + math.sqrt(2)) / 2, abs=1e-12)


def test_epr_45_degrees():
    probs = epr_probabilities(Z, Z, (math.sin(math.pi / 4), 0, math.cos(math.pi / 4)), Z)
    assert probs.pairs_trace[(1, 3)] == pytest.approx(0.5 * math.sin(math.pi / 8) ** 2, abs=1e-12)
    assert probs.pairs_trace[(1, 3)] == pytest.approx(0.0732233, abs=1e-7)


def test_epr_parallel_and_antiparallel():
    same = epr_correlation_vector(Z, Z, Z, Z)
    assert same.pairs == (0.0, 0.0, 0.0, 0.0)
    minus = (0.0, 0.0, -1.0)
    opposite = epr_probabilities(Z, Z, minus, minus)
    assert all(v == pytest.approx(0.5, abs=1e-12) for v in opposite.pairs_trace.values())
    assert opposite.max_discrepancy <= 1e-12


def test_epr_non_unit():
    with pytest.raises(QuantumValidationError):
        epr_correlation_vector(Z, Z, Z, (1, 1, 0))


def test_epr_conditional_rep_reproduces_vector():
    p = epr_correlation_vector(*CANONICAL_DIRECTIONS)
    assert verify_conditional_rep(epr_conditional_rep(*CANONICAL_DIRECTIONS), p).agree


def test_common_cause_trivial_partition_on_singlet():
    rho = singlet_state()
    events = [spin_projection(Z, "left"), spin_projection(Z, "right")]
    report = quantum_common_cause_check(rho, events, [ProjectionEvent(np.eye(4))], [(1, 2)])
    assert not report.screening_passed
    assert report.screening[(1, 2, 1)] == pytest.approx(0 - 0.25)
    assert report.all_commuting


def test_common_cause_diagonal_model():
    rng = np.random.default_rng(4)
    rho, events, partition, pairs = diagonal_model(rng)
    report = quantum_common_cause_check(rho, events, partition, pairs)
    assert report.screening_passed and report.all_commuting
    assert report.max_difference <= 1e-9
    assert report.reconstructed_inside


def test_common_cause_merged_cells_fail():
    rng = np.random.default_rng(5)
    rho, events, partition, pairs = diagonal_model(rng, grouping=[0, 0, 0])
    assert len(partition) == 1
    report = quantum_common_cause_check(rho, events, partition, pairs)
    assert not report.screening_passed


def test_common_cause_noncommuting_flag():
    rho = singlet_state()
    events = [spin_projection(Z, "left"), spin_projection(Z, "right")]
    plus = (I2 + PAULI[0]) / 2
    cells = [ProjectionEvent(np.kron(plus, I2)), ProjectionEvent(np.kron(I2 - plus, I2))]
    report = quantum_common_cause_check(rho, events, cells, [(1, 2)])
    assert report.commuting == {(1, 2): False}


def test_common_cause_errors():
    rho = DensityOperator(np.diag([1.0, 0, 0, 0]))
    events = [ProjectionEvent(np.diag([1, 0, 0, 0])), ProjectionEvent(np.diag([1, 1, 0, 0]))]
    with pytest.raises(NotAPartitionError):
        quantum_common_cause_check(rho, events, [ProjectionEvent(np.diag([1, 1, 0, 0]))], [(1, 2)])
    with pytest.raises(NotAPartitionError):
        quantum_common_cause_check(rho, events, [ProjectionEvent(np.eye(4)), ProjectionEvent(np.diag([1, 0, 0, 0]))], [(1, 2)])
    cells = [ProjectionEvent(np.diag([1, 1, 0, 0])), ProjectionEvent(np.diag([0, 0, 1, 1]))]
    with pytest.raises(ZeroProbabilityError):
        quantum_common_cause_check(rho, events, cells, [(1, 2)])


def test_bell_identity():
    one = np.eye(4)
    assert bell_operator_value(singlet_state(), one, one, one, one) == pytest.approx(1)


def test_bell_chsh_optimum():
    assert bell_operator_value(singlet_state(), *chsh_observables()) == pytest.approx(math.sqrt(2), abs=1e-9)


def test_bell_validation():
    a1, a2, b1, b2 = chsh_observables()
    with pytest.raises(QuantumValidationError):
        bell_operator_value(singlet_state(), 2 * a1, a2, b1, b2)
    noncommuting = np.kron(PAULI[0], I2)
    with pytest.raises(QuantumValidationError):
        bell_operator_value(singlet_state(), a1, a2, noncommuting, b2)
    with pytest.raises(DimensionError):
        bell_operator_value(singlet_state(), np.eye(2), a2, b1, b2)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bell_bounds(seed):
    rng = np.random.default_rng(seed)
    ops = random_local_observables(rng)
    assert abs(bell_operator_value(random_pure_state(4, rng), *ops)) <= math.sqrt(2) + 1e-9
    assert abs(bell_operator_value(random_product_state(rng), *ops)) <= 1 + 1e-9


def test_bell_accepts_state_vector():
    psi = np.array([0, 1, -1, 0]) / math.sqrt(2)
    assert bell_operator_value(psi, *chsh_observables()) == pytest.approx(math.sqrt(2))


def test_spectral_norm_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = random_contraction(4, rng)
        assert spectral_norm(m) == pytest.approx(np.linalg.norm(m, 2), abs=1e-8)


def test_local_pair_commute():
    rng = np.random.default_rng(1)
    a, b = local_pair(random_contraction(2, rng), random_contraction(2, rng))
    assert commute(a, b)


def test_matrix_json_round_trip():
    rho = singlet_state().matrix
    assert np.allclose(matrix_from_json(matrix_to_json(rho)), rho)
    with pytest.raises(DimensionError):
        matrix_from_json([[1, 0]])
