"""Membership in the correlation polytopes c(n,S), q(n,S), u(n,S).

Membership is decided by an LP over the vertex family; facet inequalities
are available for the two-event scenario and the Clauser-Horne scenario.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    NotIndependenceVectorError,
    ReconstructionError,
    UnsupportedScenarioError,
)
from .lp import solve_feasibility
from .scenario import (
    EXACT,
    FLOAT_TOL,
    CorrelationVector,
    Scenario,
    VertexVector,
    convex_combination,
    enumerate_classical_vertices,
    enumerate_vertices,
    is_independence_vector,
    max_abs_difference,
)

FAMILIES = ("classical", "quantum", "general")


def _dot(coeffs: Sequence, values: Sequence):
    return sum(c * v for c, v in zip(coeffs, values) if c)


def _fmt(value, mode):
    return str(value) if mode == EXACT else float(value)


@dataclass(frozen=True)
class FacetCheck:
    """One (possibly two-sided) facet inequality ``lower <= value <= upper``."""

    id: str
    coefficients: tuple
    value: object
    lower: object = None
    upper: object = None
    satisfied: bool = True

    def to_json(self, mode=EXACT) -> dict:
        return {
            "id": self.id,
            "value": _fmt(self.value, mode),
            "lower": None if self.lower is None else _fmt(self.lower, mode),
            "upper": None if self.upper is None else _fmt(self.upper, mode),
            "satisfied": self.satisfied,
        }


@dataclass(frozen=True)
class FacetReport:
    vector: CorrelationVector
    checks: tuple[FacetCheck, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def violated(self) -> list[FacetCheck]:
        return [c for c in self.checks if not c.satisfied]

    def __getitem__(self, facet_id: str) -> FacetCheck:
        for check in self.checks:
            if check.id == facet_id:
                return check
        raise KeyError(facet_id)

    def to_json(self) -> dict:
        mode = self.vector.mode
        return {
            "all_satisfied": self.all_satisfied,
            "checks": [c.to_json(mode) for c in self.checks],
        }


@dataclass(frozen=True)
class Certificate:
    """Separating functional for a vector outside a hull.

    ``functional . v <= bound`` for every vertex of the family while
    ``functional . p = value > bound``. ``facet`` names a violated facet
    inequality when the scenario has a known facet list.
    """

    functional: tuple
    bound: object
    value: object
    facet: FacetCheck | None = None

    def to_json(self, scenario: Scenario, mode=EXACT) -> dict:
        n = scenario.n
        return {
            "singles": [_fmt(c, mode) for c in self.functional[:n]],
            "pairs": {
                f"{i},{j}": _fmt(c, mode)
                for (i, j), c in zip(scenario.pairs, self.functional[n:])
            },
            "bound": _fmt(self.bound, mode),
            "value": _fmt(self.value, mode),
            "facet": None if self.facet is None else self.facet.to_json(mode),
        }


@dataclass(frozen=True)
class MembershipResult:
    vector: CorrelationVector
    family: str
    inside: bool
    coefficients: dict = field(default_factory=dict)
    certificate: Certificate | None = None
    interior: bool | None = None

    def to_json(self) -> dict:
        mode = self.vector.mode
        out = {"family": self.family, "inside": self.inside}
        if self.inside:
            out["coefficients"] = {v.label(): _fmt(w, mode) for v, w in self.coefficients.items()}
        else:
            out["certificate"] = self.certificate.to_json(self.vector.scenario, mode)
        if self.interior is not None:
            out["interior"] = self.interior
        return out


def membership(
    p: CorrelationVector, family: str = "classical", interior: bool = False
) -> MembershipResult:
    """Decide whether ``p`` lies in the convex hull of the ``family`` vertices.

    Inside: returns convex coefficients (positive weights only) that
    reconstruct ``p``. Outside: returns a separating functional read off the
    Phase-I dual. With ``interior=True`` also decides whether ``p`` is an
    interior point of the hull.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    vertices = enumerate_vertices(p.scenario, family)
    A = [[1] * len(vertices)]
    for k in range(p.scenario.dim):
        A.append([v.entries[k] for v in vertices])
    b = [1, *p.entries]
    result = solve_feasibility(A, b, mode=p.mode)

    if result.feasible:
        coefficients = {v: w for v, w in zip(vertices, result.x) if w > 0}
        _check_reconstruction(p, coefficients)
        flag = _is_interior(p, vertices) if interior else None
        return MembershipResult(p, family, True, coefficients, None, flag)

    functional = result.dual[1:]
    bound = max(_dot(functional, v.entries) for v in vertices)
    value = _dot(functional, p.entries)
    facet = None
    if family == "classical" and _has_facets(p.scenario):
        violated = evaluate_facets(p).violated
        if violated:
            facet = violated[0]
    cert = Certificate(tuple(functional), bound, value, facet)
    return MembershipResult(p, family, False, {}, cert, False if interior else None)


def _check_reconstruction(p: CorrelationVector, coefficients: Mapping) -> None:
    verts = [v.to_mode(p.mode) for v in coefficients]
    rebuilt = convex_combination(list(coefficients.values()), verts)
    tol = 0 if p.mode == EXACT else 1e-7
    weight = sum(coefficients.values())
    if max_abs_difference(rebuilt, p) > tol or abs(weight - 1) > tol:
        raise ReconstructionError(f"convex expansion does not reproduce {p}")


def _is_interior(p: CorrelationVector, vertices: Sequence[VertexVector]) -> bool:
    """Interior of a full-dimensional hull = some expansion has every weight
    positive. Writing weights as ``(1 + mu_v) / s`` gives the homogeneous
    system ``sum mu_v v - s p = -sum v``, ``sum mu_v - s = -|V|``."""
    dim = p.scenario.dim
    count = len(vertices)
    A = []
    b = []
    for k in range(dim):
        A.append([v.entries[k] for v in vertices] + [-p.entries[k]])
        b.append(-sum(v.entries[k] for v in vertices))
    A.append([1] * count + [-1])
    b.append(-count)
    return solve_feasibility(A, b, mode=p.mode).feasible


def _has_facets(scenario: Scenario) -> bool:
    return scenario.is_two_event() or scenario.is_clauser_horne()


def facet_functionals(scenario: Scenario) -> list[tuple[str, tuple, object, object]]:
    """``(id, coefficients, lower, upper)`` for every facet inequality of the
    supported scenarios; coefficients are aligned with the vector entries."""
    if not _has_facets(scenario):
        raise UnsupportedScenarioError(
            "facet inequalities are known only for n=2, S={(1,2)} and the Clauser-Horne scenario"
        )
    n = scenario.n

    def single(i):
        return i - 1

    def pair(i, j):
        return n + scenario.pair_index(i, j)

    def expr(terms):
        coeffs = [0] * scenario.dim
        for idx, c in terms:
            coeffs[idx] += c
        return tuple(coeffs)

    out = []
    for i, j in scenario.pairs:
        out.append((f"p{i}{j}>=0", expr([(pair(i, j), 1)]), 0, None))
        out.append((f"p{i}{j}<=p{i}", expr([(pair(i, j), 1), (single(i), -1)]), None, 0))
        out.append((f"p{i}{j}<=p{j}", expr([(pair(i, j), 1), (single(j), -1)]), None, 0))
    for i in range(1, n + 1):
        out.append((f"p{i}<=1", expr([(single(i), 1)]), None, 1))
    for i, j in scenario.pairs:
        out.append((
            f"p{i}+p{j}-p{i}{j}<=1",
            expr([(single(i), 1), (single(j), 1), (pair(i, j), -1)]),
            None,
            1,
        ))
    if scenario.is_clauser_horne():
        for i, i2 in ((1, 2), (2, 1)):
            for j, j2 in ((3, 4), (4, 3)):
                coeffs = expr([
                    (pair(i, j), 1), (pair(i2, j), 1), (pair(i, j2), 1),
                    (pair(i2, j2), -1), (single(i), -1), (single(j), -1),
                ])
                out.append((f"CH[i={i},i'={i2},j={j},j'={j2}]", coeffs, -1, 0))
    return out


def clauser_horne_value(p: CorrelationVector, i=1, i2=2, j=3, j2=4):
    """``p_ij + p_i'j + p_ij' - p_i'j' - p_i - p_j``."""
    return (
        p.pair(i, j) + p.pair(i2, j) + p.pair(i, j2) - p.pair(i2, j2)
        - p.single(i) - p.single(j)
    )


def evaluate_facets(p: CorrelationVector, tol: float | None = None) -> FacetReport:
    """Evaluate every facet inequality of the scenario on ``p``.

    Exact vectors are compared with zero tolerance, float vectors with
    ``tol`` (default 1e-9).
    """
    if tol is None:
        tol = 0 if p.mode == EXACT else FLOAT_TOL
    checks = []
    for facet_id, coeffs, lower, upper in facet_functionals(p.scenario):
        value = _dot(coeffs, p.entries)
        ok = (lower is None or value >= lower - tol) and (upper is None or value <= upper + tol)
        checks.append(FacetCheck(facet_id, coeffs, value, lower, upper, ok))
    return FacetReport(p, tuple(checks))


def product_expansion(p: CorrelationVector) -> dict[VertexVector, object]:
    """Coefficients ``lambda_eps = prod_i p*_i`` of an independence vector over
    the classical vertices (all 2**n of them, zeros included)."""
    if not is_independence_vector(p):
        raise NotIndependenceVectorError(f"{p} is not an independence vector")
    out = {}
    for vertex in enumerate_classical_vertices(p.scenario):
        weight = 1
        for e, pi in zip(vertex.epsilon, p.singles):
            weight *= pi if e else 1 - pi
        out[vertex] = weight
    _check_reconstruction(p, {v: w for v, w in out.items() if w})
    return out


def two_event_expansion(p: CorrelationVector) -> dict[VertexVector, object]:
    """Closed-form (unique) expansion over the four vertices of c(2,{(1,2)})."""
    if not p.scenario.is_two_event():
        raise UnsupportedScenarioError("closed form exists only for n=2, S={(1,2)}")
    p1, p2 = p.singles
    (p12,) = p.pairs
    weights = {(0, 0): 1 - p1 - p2 + p12, (0, 1): p2 - p12, (1, 0): p1 - p12, (1, 1): p12}
    return {v: weights[v.epsilon] for v in enumerate_classical_vertices(p.scenario)}


# -- sampling --------------------------------------------------------------

def random_rational_vector(scenario: Scenario, rng: random.Random, max_denominator: int = 60):
    entries = []
    for _ in range(scenario.dim):
        d = rng.randint(1, max_denominator)
        entries.append(Fraction(rng.randint(0, d), d))
    return CorrelationVector(scenario, tuple(entries[: scenario.n]), tuple(entries[scenario.n:]))


def random_near_classical(scenario: Scenario, rng: random.Random, max_denominator: int = 60):
    """A random rational point of c(n,S) pushed by a small random offset;
    rejected and redrawn until every entry is back in [0, 1]."""
    vertices = enumerate_classical_vertices(scenario)
    while True:
        raw = [rng.randint(0, 10) for _ in vertices]
        if not any(raw):
            continue
        total = sum(raw)
        base = convex_combination([Fraction(r, total) for r in raw], vertices)
        d = rng.randint(4, max_denominator)
        entries = [x + Fraction(rng.randint(-2, 2), d) for x in base.entries]
        if all(0 <= x <= 1 for x in entries):
            return CorrelationVector(scenario, tuple(entries[: scenario.n]), tuple(entries[scenario.n:]))


def sample_vectors(scenario: Scenario, count: int, seed: int = 0) -> list[CorrelationVector]:
    """Deterministic mix of uniform cube points and near-polytope points."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        if k % 2 == 0:
            out.append(random_rational_vector(scenario, rng))
        else:
            out.append(random_near_classical(scenario, rng))
    return out


@dataclass(frozen=True)
class EquivalenceReport:
    scenario: Scenario
    samples: int
    seed: int
    inside: int
    outside: int
    counterexamples: tuple

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "samples": self.samples,
            "seed": self.seed,
            "inside": self.inside,
            "outside": self.outside,
            "counterexamples": [v.to_json() for v in self.counterexamples],
        }


def facet_lp_equivalence_check(
    scenario: Scenario, samples: int, seed: int = 0, extra: Iterable[CorrelationVector] = ()
) -> EquivalenceReport:
    """Compare the LP membership verdict with the facet verdict on sampled
    vectors (plus ``extra``). ``counterexamples`` must come back empty."""
    if not _has_facets(scenario):
        raise UnsupportedScenarioError("no facet list for this scenario")
    vectors = sample_vectors(scenario, samples, seed) + list(extra)
    inside = 0
    bad = []
    for p in vectors:
        lp_inside = membership(p, "classical").inside
        facets_ok = evaluate_facets(p).all_satisfied
        inside += lp_inside
        if lp_inside != facets_ok:
            bad.append(p)
    return EquivalenceReport(scenario, len(vectors), seed, inside, len(vectors) - inside, tuple(bad))
