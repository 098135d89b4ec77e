"""Common-cause explanations of (conditional) correlations.

Covers screening-off and no-conspiracy checks on finite spaces, convex
decompositions of a correlation vector into common-cause (independence)
vectors, the D-atom extension that turns a non-signaling conditional
representation into a property or propensity explanation, and the reverse
step that reads a Kolmogorovian space off a property explanation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .classical_rep import (
    ConditionalRep,
    is_nonsignaling,
    outcome_event,
    setting_event,
    verify_conditional_rep,
)
from .errors import (
    InfeasibleError,
    InvalidVectorError,
    ModeMismatchError,
    NonDeterministicError,
    NotAPartitionError,
    NotIndependenceVectorError,
    OutsidePolytopeError,
    ReconstructionError,
    ScreeningError,
    SignalingError,
    ZeroProbabilityError,
)
from .lp import solve_feasibility
from .polytope import membership
from .probspace import FiniteProbSpace, bits
from .scenario import (
    CLASSICAL,
    EXACT,
    FLOAT,
    CorrelationVector,
    Scenario,
    VertexVector,
    classical_vertex,
    classify_vertex,
    convex_combination,
    is_independence_vector,
    max_abs_difference,
)

#: residual tolerance used for float-mode screening checks
SCREENING_TOL = 1e-9

DETERMINISTIC = "deterministic"
INDETERMINISTIC = "indeterministic"


def _is_vertex(v: CorrelationVector) -> bool:
    return all(x in (0, 1) for x in v.entries) and classify_vertex(v) == CLASSICAL


@dataclass(frozen=True)
class CommonCauseDecomposition:
    """``target = sum_k weights[k] * vectors[k]`` with independence vectors."""

    target: CorrelationVector
    weights: tuple
    vectors: tuple

    @property
    def kind(self) -> str:
        return DETERMINISTIC if all(_is_vertex(v) for v in self.vectors) else INDETERMINISTIC

    def to_json(self) -> dict:
        fmt = str if self.target.mode == EXACT else float
        return {
            "target": self.target.to_json(),
            "kind": self.kind,
            "components": [
                {"weight": fmt(w), "vector": v.to_json()} for w, v in zip(self.weights, self.vectors)
            ],
        }


def decompose_deterministic(p: CorrelationVector) -> CommonCauseDecomposition:
    """Weights ``lambda_eps`` over the classical vertices with positive weight."""
    result = membership(p, "classical")
    if not result.inside:
        raise OutsidePolytopeError(f"{p} is outside c(n,S)", result.certificate)
    return CommonCauseDecomposition(
        p, tuple(result.coefficients.values()), tuple(result.coefficients)
    )


def decompose_indeterministic(p: CorrelationVector, targets) -> CommonCauseDecomposition:
    """Convex weights expressing ``p`` over the given independence vectors.

    ``targets`` is a sequence, or a mapping from epsilon tuples to vectors.
    For a mapping the classical-vertex coefficients ``lambda_eps`` of ``p``
    are tried first, since a set of common-cause vectors that shares them is
    the case of interest; otherwise (or if they do not fit) an LP picks the
    weights. Weights are returned for every target in order, zeros kept.
    """
    keyed = isinstance(targets, Mapping)
    vectors = list(targets.values()) if keyed else list(targets)
    if not vectors:
        raise InfeasibleError("empty target set")
    for t in vectors:
        if t.scenario != p.scenario:
            raise InvalidVectorError("target vector from a different scenario")
        if t.mode != p.mode:
            raise ModeMismatchError("targets and p must share one arithmetic mode")
        if not is_independence_vector(t):
            raise NotIndependenceVectorError(f"target {t} is not an independence vector")
    if keyed:
        weights = _shared_vertex_weights(p, targets)
        if weights is not None:
            return CommonCauseDecomposition(p, weights, tuple(vectors))
    A = [[1] * len(vectors)]
    for k in range(p.scenario.dim):
        A.append([t.entries[k] for t in vectors])
    result = solve_feasibility(A, [1, *p.entries], mode=p.mode)
    if not result.feasible:
        raise InfeasibleError(f"{p} is not a convex combination of the given targets")
    return CommonCauseDecomposition(p, tuple(result.x), tuple(vectors))


def _shared_vertex_weights(p, targets: Mapping):
    n = p.scenario.n
    result = membership(p, "classical")
    if not result.inside:
        return None
    lam = {v.epsilon: w for v, w in result.coefficients.items()}
    weights = tuple(lam.get(_epsilon_key(k, n), 0) for k in targets)
    tol = 0 if p.mode == EXACT else SCREENING_TOL
    if abs(sum(weights) - sum(lam.values())) > tol:
        return None  # some vertex with positive weight has no target
    rebuilt = convex_combination(list(weights), list(targets.values()))
    return weights if max_abs_difference(rebuilt, p) <= tol else None


# -- screening -------------------------------------------------------------

@dataclass(frozen=True)
class ScreeningReport:
    """Residuals of the factorisation (and no-conspiracy) equations.

    Keys are ``(i, j, cell)`` triples with 1-based ``i, j``.
    """

    screening: dict
    no_conspiracy: dict
    conditional: bool
    tol: float
    mode: str

    @property
    def passed(self) -> bool:
        residuals = list(self.screening.values()) + list(self.no_conspiracy.values())
        return all(abs(r) <= self.tol for r in residuals)

    @property
    def max_residual(self):
        residuals = list(self.screening.values()) + list(self.no_conspiracy.values())
        return max((abs(r) for r in residuals), default=0)

    def to_json(self) -> dict:
        fmt = str if self.mode == EXACT else float

        def key(t):
            return f"{t[0]},{t[1]}|{t[2]}"

        return {
            "form": "conditional" if self.conditional else "unconditional",
            "passed": self.passed,
            "tol": self.tol,
            "max_residual": fmt(self.max_residual),
            "screening": {key(t): fmt(r) for t, r in self.screening.items()},
            "no_conspiracy": {key(t): fmt(r) for t, r in self.no_conspiracy.items()},
        }


def _partition_cells(space: FiniteProbSpace, partition) -> dict[str, frozenset]:
    if isinstance(partition, Mapping):
        cells = {str(k): space.event(v) for k, v in partition.items()}
    else:
        cells = {}
        for k, v in enumerate(partition):
            cells[v if isinstance(v, str) else f"C{k + 1}"] = space.event(v)
    seen = set()
    for label, cell in cells.items():
        if cell & seen:
            raise NotAPartitionError(f"cell {label} overlaps another cell")
        seen |= cell
    if seen != set(space.atoms):
        raise NotAPartitionError("cells do not cover the atom set")
    for label, cell in cells.items():
        if space.prob(cell) == 0:
            raise ZeroProbabilityError(f"partition cell {label} has probability 0")
    return cells


def verify_screening(
    space: FiniteProbSpace,
    outcomes: Sequence[str],
    partition,
    pairs: Sequence[tuple[int, int]],
    settings: Sequence[str] | None = None,
    tol: float | None = None,
) -> ScreeningReport:
    """Check that every cell of ``partition`` screens off the pairs.

    Without ``settings``: ``p(A_i & A_j | C) = p(A_i | C) p(A_j | C)``.
    With ``settings`` the conditional form is checked,
    ``p(A_i & A_j | a_i & a_j & C) = p(A_i | a_i & C) p(A_j | a_j & C)``,
    together with no-conspiracy ``p(a_i & a_j & C) = p(a_i & a_j) p(C)``.
    """
    if tol is None:
        tol = 0 if space.mode == EXACT else SCREENING_TOL
    cells = _partition_cells(space, partition)
    screening, no_conspiracy = {}, {}
    for i, j in pairs:
        Ai, Aj = outcomes[i - 1], outcomes[j - 1]
        for label, cell in cells.items():
            if settings is None:
                r = space.conditional([Ai, Aj], cell) - (
                    space.conditional(Ai, cell) * space.conditional(Aj, cell)
                )
            else:
                ai, aj = settings[i - 1], settings[j - 1]
                r = space.conditional([Ai, Aj], [ai, aj, cell]) - (
                    space.conditional(Ai, [ai, cell]) * space.conditional(Aj, [aj, cell])
                )
                no_conspiracy[(i, j, label)] = space.prob(ai, aj, cell) - (
                    space.prob(ai, aj) * space.prob(cell)
                )
            screening[(i, j, label)] = r
    return ScreeningReport(screening, no_conspiracy, settings is not None, tol, space.mode)


# -- the D-atom extension --------------------------------------------------

PROPERTY = "property"
PROPENSITY = "propensity"


@dataclass(frozen=True, eq=False)
class CommonCauseExplanation:
    """A conditional representation on the extended (sigma, eps, omega) atoms
    together with the common-cause partition ``{C_eps}``."""

    target: CorrelationVector
    rep: ConditionalRep
    partition: dict
    weights: dict
    components: dict
    screening: ScreeningReport

    @property
    def kind(self) -> str:
        return PROPERTY if all(_is_vertex(v) for v in self.components.values()) else PROPENSITY

    def to_json(self) -> dict:
        fmt = str if self.target.mode == EXACT else float
        return {
            "kind": self.kind,
            "weights": {bits(e): fmt(w) for e, w in self.weights.items()},
            "components": {bits(e): v.to_json() for e, v in self.components.items()},
            "partition": {
                label: sorted(cell, key=self.rep.space.atoms.index)
                for label, cell in self.partition.items()
            },
            "screening": self.screening.to_json(),
            "space": self.rep.space.to_json(),
        }


def _epsilon_key(key, n) -> tuple[int, ...]:
    if isinstance(key, VertexVector):
        return key.epsilon
    if isinstance(key, str):
        key = key.replace("ε=", "")
    eps = tuple(int(e) for e in key)
    if len(eps) != n or any(e not in (0, 1) for e in eps):
        raise InvalidVectorError(f"bad epsilon key {key!r}")
    return eps


def setting_distribution(rep: ConditionalRep) -> dict[tuple[int, ...], object]:
    """``p(a_sigma)`` for every setting vector sigma (``a_i`` or its complement)."""
    out = {}
    for sigma in itertools.product((0, 1), repeat=rep.scenario.n):
        specs = [rep.a(i + 1) if s else "~" + rep.a(i + 1) for i, s in enumerate(sigma)]
        out[sigma] = rep.space.prob(*specs)
    return out


def _cell_label(eps) -> str:
    return f"C[ε={bits(eps)}]"


def build_propensity_explanation(
    p: CorrelationVector,
    coefficients: Mapping,
    components: Mapping,
    cond_rep: ConditionalRep,
) -> CommonCauseExplanation:
    """Extend a non-signaling conditional representation by common causes.

    ``coefficients`` are the classical-vertex weights ``lambda_eps`` of ``p``
    and ``components`` the matching independence vectors ``p^eps``
    (classical vertices give a property explanation). Atoms
    ``(sigma, eps, omega)`` get weight
    ``p(a_sigma) * lambda_eps * prod_i Bern(omega_i; sigma_i p^eps_i)``.
    """
    n = p.scenario.n
    mode = p.mode
    if not is_nonsignaling(cond_rep):
        raise SignalingError("signaling conditional representations admit no property explanation")
    lam = {_epsilon_key(k, n): w for k, w in coefficients.items()}
    comp = {}
    for k, v in components.items():
        eps = _epsilon_key(k, n)
        v = v.to_mode(mode) if isinstance(v, VertexVector) else v
        if v.mode != mode:
            raise ModeMismatchError("component vectors and p must share one arithmetic mode")
        if not is_independence_vector(v):
            raise NotIndependenceVectorError(f"component {v} is not an independence vector")
        comp[eps] = v
    if set(lam) != set(comp):
        raise InvalidVectorError("coefficients and components must be indexed by the same epsilons")
    if any(w < 0 for w in lam.values()):
        raise InvalidVectorError("negative coefficient")
    tol = 0 if mode == EXACT else SCREENING_TOL
    keys = sorted(lam)
    rebuilt = convex_combination([lam[e] for e in keys], [comp[e] for e in keys])
    if max_abs_difference(rebuilt, p) > tol or abs(sum(lam.values()) - 1) > tol:
        raise ReconstructionError("sum_eps lambda_eps p^eps does not reproduce p")

    rep_space = cond_rep.space.to_mode(mode)
    rep = ConditionalRep(cond_rep.scenario, rep_space, cond_rep.outcomes, cond_rep.settings)
    settings = setting_distribution(rep)

    weights = {}
    events = {name: [] for i in range(1, n + 1) for name in (setting_event(i), outcome_event(i))}
    cells = {}
    for sigma, p_sigma in settings.items():
        if not p_sigma:
            continue
        for eps in keys:
            if not lam[eps]:
                continue
            cell = cells.setdefault(_cell_label(eps), [])
            probs = [sigma[i] * comp[eps].singles[i] for i in range(n)]
            for omega in itertools.product((0, 1), repeat=n):
                w = p_sigma * lam[eps]
                for bit, q in zip(omega, probs):
                    w *= q if bit else 1 - q
                if not w:
                    continue
                label = f"σ={bits(sigma)}|ε={bits(eps)}|ω={bits(omega)}"
                weights[label] = w
                cell.append(label)
                for i in range(n):
                    if sigma[i]:
                        events[setting_event(i + 1)].append(label)
                    if omega[i]:
                        events[outcome_event(i + 1)].append(label)
    if mode == FLOAT:
        total = sum(weights.values())
        weights = {a: w / total for a, w in weights.items()}
    else:
        weights = {a: Fraction(w) for a, w in weights.items()}
    events.update(cells)
    space = FiniteProbSpace.build(weights, events, mode=mode)
    extended = ConditionalRep.standard(p.scenario, space)
    partition = {label: frozenset(cell) for label, cell in cells.items()}
    report = verify_screening(
        space, extended.outcomes, partition, p.scenario.pairs, extended.settings
    )
    if not report.passed:
        raise ScreeningError(f"constructed partition fails screening (max residual {report.max_residual})")
    if not verify_conditional_rep(extended, p).agree:
        raise ReconstructionError("extended space does not reproduce p")
    return CommonCauseExplanation(
        p, extended, partition, {e: lam[e] for e in keys}, {e: comp[e] for e in keys}, report
    )


def build_property_explanation(
    p: CorrelationVector, cond_rep: ConditionalRep
) -> CommonCauseExplanation:
    """The D-atom construction with the classical vertices as components."""
    decomposition = decompose_deterministic(p)
    lam = {v.epsilon: w for v, w in zip(decomposition.vectors, decomposition.weights)}
    components = {eps: classical_vertex(p.scenario, eps) for eps in lam}
    return build_propensity_explanation(p, lam, components, cond_rep)


def extract_kolmogorov_from_property(
    rep: ConditionalRep,
    partition,
    values: Mapping | None = None,
    tol: float | None = None,
) -> FiniteProbSpace:
    """Unconditional space on the cells ``C_k`` with ``C_i = OR{C_k : p_i^k = 1}``.

    ``values[label][i-1]`` gives ``p(A_i | a_i & C_k)``; computed from ``rep``
    when omitted. The returned space has events ``C1..Cn``.
    """
    space = rep.space
    n = rep.scenario.n
    if tol is None:
        tol = 0 if space.mode == EXACT else SCREENING_TOL
    cells = _partition_cells(space, partition)
    report = verify_screening(space, rep.outcomes, cells, rep.scenario.pairs, rep.settings, tol)
    if not report.passed:
        raise ScreeningError(f"partition fails screening / no-conspiracy (max residual {report.max_residual})")
    if values is None:
        values = {
            label: [space.conditional(rep.A(i), [rep.a(i), cell]) for i in range(1, n + 1)]
            for label, cell in cells.items()
        }
    bits_of = {}
    for label in cells:
        row = values[label]
        det = []
        for v in row:
            if abs(v) <= tol:
                det.append(0)
            elif abs(v - 1) <= tol:
                det.append(1)
            else:
                raise NonDeterministicError(f"cell {label} has non-0/1 value {v}")
        bits_of[label] = det
    weights = {label: space.prob(cell) for label, cell in cells.items()}
    if space.mode == FLOAT:
        total = sum(weights.values())
        weights = {k: w / total for k, w in weights.items()}
    events = {
        f"C{i}": [label for label in cells if bits_of[label][i - 1]] for i in range(1, n + 1)
    }
    out = FiniteProbSpace.build(weights, events, mode=space.mode)
    target = rep.conditional_vector()
    for i in range(1, n + 1):
        if abs(out.prob(f"C{i}") - target.single(i)) > tol:
            raise ReconstructionError(f"p(C{i}) differs from p(A{i}|a{i})")
    for i, j in rep.scenario.pairs:
        if abs(out.prob(f"C{i}", f"C{j}") - target.pair(i, j)) > tol:
            raise ReconstructionError(f"p(C{i} & C{j}) differs from p(A{i}&A{j}|a{i}&a{j})")
    return out


def kolmogorov_vector(scenario: Scenario, space: FiniteProbSpace, prefix: str = "C") -> CorrelationVector:
    """Read ``(p(X_i); p(X_i & X_j))`` off a space with events ``X1..Xn``."""
    singles = [space.prob(f"{prefix}{i}") for i in range(1, scenario.n + 1)]
    pairs = [space.prob(f"{prefix}{i}", f"{prefix}{j}") for i, j in scenario.pairs]
    if space.mode == FLOAT:
        singles = [min(max(v, 0.0), 1.0) for v in singles]
        pairs = [min(max(v, 0.0), 1.0) for v in pairs]
    return CorrelationVector(scenario, tuple(singles), tuple(pairs), space.mode)
