"""Finite-dimensional quantum probability: trace formula, the singlet EPR-Bohm
set-up, quantum common-cause screening and Bell-operator values.

All arithmetic is complex floating point; tolerances are the module
constants below and are echoed in the reports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classical_rep import ConditionalRep
from .errors import (
    DimensionError,
    NotAPartitionError,
    QuantumValidationError,
    ZeroProbabilityError,
)
from .polytope import membership
from .probspace import FiniteProbSpace, bits
from .scenario import (
    FLOAT,
    CorrelationVector,
    Scenario,
    clauser_horne_scenario,
)

TOL = 1e-10
#: singular values below this count as zero when intersecting subspaces
MEET_SVD_TOL = 1e-8
#: closed form vs trace evaluation of EPR probabilities
EPR_CROSSCHECK_TOL = 1e-12
SCREENING_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

CANONICAL_DIRECTIONS = (
    (0.0, 1.0, 0.0),
    (1.0, 0.0, 0.0),
    (1 / math.sqrt(2), 1 / math.sqrt(2), 0.0),
    (-1 / math.sqrt(2), 1 / math.sqrt(2), 0.0),
)


def _frozen(matrix) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    m.setflags(write=False)
    return m


def _square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")


def is_hermitian(m, tol: float = TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=tol, rtol=0)


def is_projection(m, tol: float = TOL) -> bool:
    m = np.asarray(m)
    return is_hermitian(m, tol) and np.allclose(m @ m, m, atol=tol, rtol=0)


def is_psd(m, tol: float = TOL) -> bool:
    return is_hermitian(m, tol) and np.linalg.eigvalsh(np.asarray(m)).min() >= -tol


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        _square(m)
        if not is_hermitian(m):
            raise QuantumValidationError("density operator is not Hermitian")
        if not is_psd(m):
            raise QuantumValidationError("density operator has a negative eigenvalue")
        if abs(np.trace(m).real - 1) > TOL or abs(np.trace(m).imag) > TOL:
            raise QuantumValidationError(f"density operator has trace {np.trace(m)}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class ProjectionEvent:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        _square(m)
        if not is_projection(m):
            raise QuantumValidationError("matrix is not an orthogonal projection")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def complement(self) -> "ProjectionEvent":
        return ProjectionEvent(np.eye(self.dim) - self.matrix)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, (DensityOperator, ProjectionEvent)):
        return x.matrix
    return np.asarray(x, dtype=complex)


def trace_prob(rho: DensityOperator, event: ProjectionEvent, tol: float = TOL) -> float:
    """``Tr(rho P)``, checked to be real and within [-tol, 1+tol], then clipped."""
    r, p = _as_matrix(rho), _as_matrix(event)
    if r.shape != p.shape:
        raise DimensionError(f"state is {r.shape}, event is {p.shape}")
    value = np.trace(r @ p)
    if abs(value.imag) > tol:
        raise QuantumValidationError(f"trace has imaginary part {value.imag}")
    if not -tol <= value.real <= 1 + tol:
        raise QuantumValidationError(f"trace {value.real} is not a probability")
    return min(max(float(value.real), 0.0), 1.0)


def commute(a, b, tol: float = TOL) -> bool:
    a, b = _as_matrix(a), _as_matrix(b)
    return np.allclose(a @ b, b @ a, atol=tol, rtol=0)


def meet_projection(P: ProjectionEvent, Q: ProjectionEvent) -> ProjectionEvent:
    """Projection onto range(P) & range(Q).

    Commuting inputs give ``PQ``. Otherwise the intersection is the kernel
    of ``2 - P - Q``, taken from an SVD with threshold ``MEET_SVD_TOL``.
    """
    p, q = _as_matrix(P), _as_matrix(Q)
    if p.shape != q.shape:
        raise DimensionError("projections act on different spaces")
    if commute(p, q):
        pq = p @ q
        return ProjectionEvent((pq + pq.conj().T) / 2)
    d = p.shape[0]
    _, s, vh = np.linalg.svd(2 * np.eye(d) - p - q)
    basis = vh[s <= MEET_SVD_TOL].conj().T
    return ProjectionEvent(basis @ basis.conj().T)


def singlet_state() -> DensityOperator:
    """``(1/4)(1 x 1 - sum_k sigma_k x sigma_k)``."""
    m = np.kron(I2, I2) - sum(np.kron(s, s) for s in PAULI)
    return DensityOperator(m / 4)


def _unit(direction, tol: float = TOL) -> np.ndarray:
    v = np.asarray(direction, dtype=float).ravel()
    if v.shape != (3,):
        raise DimensionError(f"direction must be a 3-vector, got {direction!r}")
    if abs(np.linalg.norm(v) - 1) > tol:
        raise QuantumValidationError(f"direction {direction!r} is not a unit vector")
    return v


def pauli_dot(direction) -> np.ndarray:
    a = np.asarray(direction, dtype=float)
    return sum(x * s for x, s in zip(a, PAULI))


def spin_projection(direction, wing: str = "left") -> ProjectionEvent:
    """Spin-up along ``direction`` on one wing of a two-qubit system."""
    local = (I2 + pauli_dot(_unit(direction))) / 2
    if wing == "left":
        return ProjectionEvent(np.kron(local, I2))
    if wing == "right":
        return ProjectionEvent(np.kron(I2, local))
    raise ValueError(f"wing must be 'left' or 'right', got {wing!r}")


def angle_between(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b))


def singlet_pair_probability(a, b) -> float:
    """Closed form ``(1/2) sin^2(theta/2)`` for spin-up on both wings."""
    return 0.5 * math.sin(angle_between(a, b) / 2) ** 2


@dataclass(frozen=True)
class EPRProbabilities:
    directions: tuple
    singles_trace: tuple
    pairs_closed: dict
    pairs_trace: dict
    max_discrepancy: float

    def vector(self) -> CorrelationVector:
        scenario = clauser_horne_scenario()
        pairs = [self.pairs_closed[pair] for pair in scenario.pairs]
        return CorrelationVector(scenario, (0.5, 0.5, 0.5, 0.5), tuple(pairs), FLOAT)

    def trace_vector(self) -> CorrelationVector:
        scenario = clauser_horne_scenario()
        pairs = [self.pairs_trace[pair] for pair in scenario.pairs]
        return CorrelationVector(scenario, self.singles_trace, tuple(pairs), FLOAT)


def epr_probabilities(a1, a2, b3, b4) -> EPRProbabilities:
    """Singlet probabilities for left directions ``a1, a2`` (events 1, 2)
    and right directions ``b3, b4`` (events 3, 4), computed both from the
    closed form and from 4x4 trace evaluation."""
    dirs = tuple(tuple(float(x) for x in _unit(d)) for d in (a1, a2, b3, b4))
    rho = singlet_state()
    events = [spin_projection(dirs[k], "left" if k < 2 else "right") for k in range(4)]
    singles = tuple(trace_prob(rho, e) for e in events)
    closed, traced = {}, {}
    worst = max(abs(s - 0.5) for s in singles)
    for i, j in clauser_horne_scenario().pairs:
        closed[(i, j)] = singlet_pair_probability(dirs[i - 1], dirs[j - 1])
        traced[(i, j)] = trace_prob(rho, meet_projection(events[i - 1], events[j - 1]))
        worst = max(worst, abs(closed[(i, j)] - traced[(i, j)]))
    return EPRProbabilities(dirs, singles, closed, traced, worst)


def epr_correlation_vector(a1, a2, b3, b4) -> CorrelationVector:
    probs = epr_probabilities(a1, a2, b3, b4)
    if probs.max_discrepancy > EPR_CROSSCHECK_TOL:
        raise QuantumValidationError(
            f"closed form and trace evaluation differ by {probs.max_discrepancy}"
        )
    return probs.vector()


def epr_conditional_rep(a1, a2, b3, b4) -> ConditionalRep:
    """Operational reading of the EPR-Bohm numbers: one left and one right
    setting chosen uniformly, outcomes drawn from the singlet statistics."""
    dirs = [_unit(d) for d in (a1, a2, b3, b4)]
    rho = singlet_state()
    scenario = clauser_horne_scenario()
    weights = {}
    events = {f"{x}{k}": [] for k in range(1, 5) for x in ("a", "A")}
    for i, j in scenario.pairs:
        left = spin_projection(dirs[i - 1], "left")
        right = spin_projection(dirs[j - 1], "right")
        sigma = [0, 0, 0, 0]
        sigma[i - 1] = sigma[j - 1] = 1
        for x, y in itertools.product((1, 0), repeat=2):
            lp = left if x else left.complement()
            rp = right if y else right.complement()
            omega = [0, 0, 0, 0]
            omega[i - 1], omega[j - 1] = x, y
            label = f"σ={bits(sigma)}|ω={bits(omega)}"
            weights[label] = 0.25 * trace_prob(rho, lp.matrix @ rp.matrix)
            events[f"a{i}"].append(label)
            events[f"a{j}"].append(label)
            if x:
                events[f"A{i}"].append(label)
            if y:
                events[f"A{j}"].append(label)
    total = sum(weights.values())
    weights = {k: w / total for k, w in weights.items()}
    return ConditionalRep.standard(scenario, FiniteProbSpace.build(weights, events, mode=FLOAT))


# -- quantum common causes -------------------------------------------------

@dataclass(frozen=True)
class QuantumCommonCauseReport:
    direct: CorrelationVector
    reconstructed: CorrelationVector
    cause_weights: tuple
    cause_singles: tuple
    screening: dict
    commuting: dict
    max_difference: float
    reconstructed_inside: bool | None
    tol: float

    @property
    def screening_passed(self) -> bool:
        return all(abs(r) <= self.tol for r in self.screening.values())

    @property
    def all_commuting(self) -> bool:
        return all(self.commuting.values())

    def to_json(self) -> dict:
        return {
            "direct": self.direct.to_json(),
            "reconstructed": self.reconstructed.to_json(),
            "cause_weights": list(self.cause_weights),
            "cause_singles": [list(s) for s in self.cause_singles],
            "screening": {f"{i},{j}|{k}": r for (i, j, k), r in self.screening.items()},
            "screening_passed": self.screening_passed,
            "commuting": {f"{i},{j}": c for (i, j), c in self.commuting.items()},
            "max_difference": self.max_difference,
            "reconstructed_inside_c": self.reconstructed_inside,
            "tol": self.tol,
        }


def _clip(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def quantum_common_cause_check(
    rho: DensityOperator,
    events: Sequence[ProjectionEvent],
    partition: Sequence[ProjectionEvent],
    pairs: Sequence[tuple[int, int]],
    check_membership: bool = True,
    tol: float = SCREENING_TOL,
) -> QuantumCommonCauseReport:
    """Test whether ``partition`` is a joint quantum common cause for the
    pairs and compare ``p^c = sum_k c_k p^k`` with the direct vector."""
    n = len(events)
    scenario = Scenario(n, tuple(tuple(p) for p in pairs))
    d = rho.dim
    cells = [_as_matrix(c) for c in partition]
    total = sum(cells)
    if not np.allclose(total, np.eye(d), atol=TOL, rtol=0):
        raise NotAPartitionError("partition projections do not sum to the identity")
    for k, l in itertools.combinations(range(len(cells)), 2):
        if not np.allclose(cells[k] @ cells[l], 0, atol=TOL, rtol=0):
            raise NotAPartitionError(f"cells {k + 1} and {l + 1} are not orthogonal")

    meets = {(i, j): meet_projection(events[i - 1], events[j - 1]) for i, j in scenario.pairs}
    direct = CorrelationVector(
        scenario,
        tuple(trace_prob(rho, e) for e in events),
        tuple(trace_prob(rho, meets[p]) for p in scenario.pairs),
        FLOAT,
    )

    weights, singles, screening = [], [], {}
    for k, c in enumerate(cells, start=1):
        ck = trace_prob(rho, c)
        if ck <= TOL:
            raise ZeroProbabilityError(f"cell {k} has zero probability in this state")
        rho_k = c @ rho.matrix @ c / ck
        pk = [np.trace(rho_k @ e.matrix).real for e in events]
        for i, j in scenario.pairs:
            joint = np.trace(rho_k @ meets[(i, j)].matrix).real
            screening[(i, j, k)] = float(joint - pk[i - 1] * pk[j - 1])
        weights.append(ck)
        singles.append(tuple(float(x) for x in pk))

    commuting = {
        (i, j): all(commute(c, events[i - 1]) and commute(c, events[j - 1]) for c in cells)
        for i, j in scenario.pairs
    }
    rec_singles = [_clip(sum(w * s[i] for w, s in zip(weights, singles))) for i in range(n)]
    rec_pairs = [
        _clip(sum(w * s[i - 1] * s[j - 1] for w, s in zip(weights, singles)))
        for i, j in scenario.pairs
    ]
    reconstructed = CorrelationVector(scenario, tuple(rec_singles), tuple(rec_pairs), FLOAT)
    diff = max(abs(a - b) for a, b in zip(direct.entries, reconstructed.entries))
    inside = membership(reconstructed, "classical").inside if check_membership else None
    return QuantumCommonCauseReport(
        direct, reconstructed, tuple(weights), tuple(singles), screening, commuting, diff, inside, tol
    )


# -- Bell operators --------------------------------------------------------

def spectral_norm(m, tol: float = TOL, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on ``M^H M``."""
    m = _as_matrix(m)
    g = m.conj().T @ m
    d = g.shape[0]
    v = np.ones(d, dtype=complex) + 1j * np.arange(1, d + 1) / (d + 1)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = g @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        new = float(np.real(v.conj() @ g @ v))
        if abs(new - estimate) <= tol * max(1.0, new):
            return math.sqrt(max(new, 0.0))
        estimate = new
    # slow convergence (clustered top eigenvalues): fall back to a dense solve
    return float(np.linalg.norm(m, 2))


def _check_contraction(name, m, tol):
    if not is_hermitian(m, tol):
        raise QuantumValidationError(f"{name} is not Hermitian")
    norm = spectral_norm(m)
    if norm > 1 + tol:
        raise QuantumValidationError(f"{name} has operator norm {norm} > 1")


def bell_operator(A1, A2, B1, B2, tol: float = TOL) -> np.ndarray:
    """``(1/2)(A1 (B1 + B2) + A2 (B1 - B2))`` after validating the inputs."""
    mats = {name: _as_matrix(m) for name, m in zip(("A1", "A2", "B1", "B2"), (A1, A2, B1, B2))}
    shapes = {m.shape for m in mats.values()}
    if len(shapes) != 1:
        raise DimensionError("Bell operator inputs have different shapes")
    for name, m in mats.items():
        _check_contraction(name, m, tol)
    for a, b in itertools.product(("A1", "A2"), ("B1", "B2")):
        if not commute(mats[a], mats[b], tol):
            raise QuantumValidationError(f"{a} and {b} do not commute")
    a1, a2, b1, b2 = mats["A1"], mats["A2"], mats["B1"], mats["B2"]
    return (a1 @ (b1 + b2) + a2 @ (b1 - b2)) / 2


def bell_operator_value(state, A1, A2, B1, B2, tol: float = TOL) -> float:
    """``Tr(rho R)`` for the Bell operator R; ``state`` may be a
    DensityOperator, a density matrix or a state vector."""
    if isinstance(state, DensityOperator):
        rho = state
    else:
        arr = np.asarray(state, dtype=complex)
        rho = DensityOperator.from_vector(arr) if arr.ndim == 1 else DensityOperator(arr)
    r = bell_operator(A1, A2, B1, B2, tol)
    if r.shape != rho.matrix.shape:
        raise DimensionError("state and operators act on different spaces")
    value = np.trace(rho.matrix @ r)
    if abs(value.imag) > 1e-9:
        raise QuantumValidationError(f"Bell value has imaginary part {value.imag}")
    return float(value.real)


def local_pair(left, right):
    """``(L x 1, 1 x R)`` for local operators on two wings."""
    left, right = _as_matrix(left), _as_matrix(right)
    return np.kron(left, np.eye(right.shape[0])), np.kron(np.eye(left.shape[0]), right)


def chsh_observables():
    """Dichotomic observables reaching ``sqrt(2)`` on the singlet."""
    s = 1 / math.sqrt(2)
    a1 = np.kron(SIGMA_Z, I2)
    a2 = np.kron(SIGMA_X, I2)
    b1 = np.kron(I2, -s * (SIGMA_Z + SIGMA_X))
    b2 = np.kron(I2, -s * (SIGMA_Z - SIGMA_X))
    return a1, a2, b1, b2


# -- random sampling -------------------------------------------------------

def random_pure_state(dim: int, rng: np.random.Generator) -> DensityOperator:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DensityOperator.from_vector(psi)


def random_product_state(rng: np.random.Generator, dims=(2, 2)) -> DensityOperator:
    psi = np.ones(1, dtype=complex)
    for d in dims:
        factor = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi = np.kron(psi, factor / np.linalg.norm(factor))
    return DensityOperator.from_vector(psi)


def random_contraction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """A Hermitian matrix with operator norm at most one; half the draws are
    dichotomic (eigenvalues +-1)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (g + g.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    if rng.random() < 0.5:
        vals = np.sign(vals)
        vals[vals == 0] = 1
    else:
        vals = vals / np.abs(vals).max() * rng.uniform(0.5, 1.0)
    return (vecs * vals) @ vecs.conj().T


def random_local_observables(rng: np.random.Generator, dims=(2, 2)):
    a1, b1 = local_pair(random_contraction(dims[0], rng), random_contraction(dims[1], rng))
    a2, b2 = local_pair(random_contraction(dims[0], rng), random_contraction(dims[1], rng))
    return a1, a2, b1, b2


# -- serialisation ---------------------------------------------------------

def matrix_to_json(m) -> list:
    m = _as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    try:
        arr = np.array(
            [[complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z) for z in row] for row in data],
            dtype=complex,
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise DimensionError(f"malformed matrix: {exc}") from None
    _square(arr)
    return arr


def vector_from_json(data) -> np.ndarray:
    return np.array(
        [complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z) for z in data],
        dtype=complex,
    )
