"""Kolmogorovian and conditional Kolmogorovian representations.

A Kolmogorovian representation realises ``p`` as ``p(A_i)`` and
``p(A_i & A_j)`` in one finite space. A conditional one realises it as
``p(A_i | a_i)`` and ``p(A_i & A_j | a_i & a_j)`` where the ``a_i`` are
measurement-setting events.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from .errors import (
    InadmissibleError,
    InfeasibleError,
    InvalidScenarioError,
    InvalidVectorError,
    ReconstructionError,
)
from .lp import solve_feasibility
from .probspace import FiniteProbSpace, bits
from .scenario import (
    EXACT,
    FLOAT,
    FLOAT_TOL,
    CorrelationVector,
    Scenario,
    VertexVector,
    classify_vertex,
    CLASSICAL,
)

#: the conditional builder's LP has 4**n unknowns
CONDITIONAL_CAP = 6


def outcome_event(i: int) -> str:
    return f"A{i}"


def setting_event(i: int) -> str:
    return f"a{i}"


@dataclass(frozen=True, eq=False)
class ConditionalRep:
    """A space with outcome events ``A_1..A_n`` and setting events ``a_1..a_n``."""

    scenario: Scenario
    space: FiniteProbSpace
    outcomes: tuple[str, ...]
    settings: tuple[str, ...]

    @classmethod
    def standard(cls, scenario: Scenario, space: FiniteProbSpace) -> "ConditionalRep":
        n = scenario.n
        return cls(
            scenario,
            space,
            tuple(outcome_event(i) for i in range(1, n + 1)),
            tuple(setting_event(i) for i in range(1, n + 1)),
        )

    @property
    def mode(self) -> str:
        return self.space.mode

    def A(self, i: int) -> str:
        return self.outcomes[i - 1]

    def a(self, i: int) -> str:
        return self.settings[i - 1]

    def conditional_vector(self) -> CorrelationVector:
        """The numbers ``p(A_i|a_i)`` and ``p(A_i & A_j | a_i & a_j)``."""
        sp = self.space
        singles = [sp.conditional(self.A(i), self.a(i)) for i in range(1, self.scenario.n + 1)]
        pairs = [
            sp.conditional([self.A(i), self.A(j)], [self.a(i), self.a(j)])
            for i, j in self.scenario.pairs
        ]
        if self.mode == FLOAT:
            singles = [min(max(v, 0.0), 1.0) for v in singles]
            pairs = [min(max(v, 0.0), 1.0) for v in pairs]
        return CorrelationVector(self.scenario, tuple(singles), tuple(pairs), self.mode)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "outcomes": list(self.outcomes),
            "settings": list(self.settings),
            "space": self.space.to_json(),
        }


def _epsilon_of(key) -> tuple[int, ...]:
    if isinstance(key, VertexVector):
        if classify_vertex(key) != CLASSICAL:
            raise InvalidVectorError(f"{key.label()} is not a classical vertex")
        return key.epsilon
    return tuple(int(e) for e in key)


def build_kolmogorov_rep(p: CorrelationVector, coefficients: Mapping) -> FiniteProbSpace:
    """Space on atoms ``eps`` with weight ``lambda_eps`` and ``A_i = {eps_i = 1}``.

    ``coefficients`` maps classical vertices (or epsilon tuples) to weights,
    e.g. ``membership(p).coefficients``. Zero-weight atoms are dropped.
    """
    n = p.scenario.n
    weights = {}
    for key, w in coefficients.items():
        eps = _epsilon_of(key)
        if len(eps) != n:
            raise InvalidVectorError(f"epsilon {eps} has the wrong length")
        if w < 0:
            raise InvalidVectorError("convex coefficients must be nonnegative")
        if w:
            weights[f"ε={bits(eps)}"] = w
    total = sum(weights.values())
    tol = 0 if p.mode == EXACT else 1e-9
    if abs(total - 1) > tol:
        raise InvalidVectorError(f"coefficients sum to {total}, not 1")
    if p.mode == FLOAT:
        weights = {a: float(w) / float(total) for a, w in weights.items()}
    events = {outcome_event(i): [] for i in range(1, n + 1)}
    for key, w in coefficients.items():
        eps = _epsilon_of(key)
        if w:
            for i in range(n):
                if eps[i]:
                    events[outcome_event(i + 1)].append(f"ε={bits(eps)}")
    space = FiniteProbSpace.build(weights, events, mode=p.mode)
    for i in range(1, n + 1):
        if abs(space.prob(outcome_event(i)) - p.single(i)) > tol:
            raise ReconstructionError(f"p(A{i}) does not reproduce p{i}")
    for i, j in p.scenario.pairs:
        if abs(space.prob(outcome_event(i), outcome_event(j)) - p.pair(i, j)) > tol:
            raise ReconstructionError(f"p(A{i} & A{j}) does not reproduce p{i}{j}")
    return space


def as_conditional(scenario: Scenario, space: FiniteProbSpace) -> ConditionalRep:
    """Read a Kolmogorovian space as a conditional one with every ``a_i = Omega``."""
    settings = {setting_event(i): space.atoms for i in range(1, scenario.n + 1)}
    return ConditionalRep.standard(scenario, space.with_events(**settings))


def check_admissibility(p: CorrelationVector) -> bool:
    """False iff some pair has (p_i = 0 or p_j = 0) with p_ij != 0, or
    p_i = p_j = 1 with p_ij != 1."""
    for (i, j), pij in zip(p.scenario.pairs, p.pairs):
        pi, pj = p.single(i), p.single(j)
        if (pi == 0 or pj == 0) and pij != 0:
            return False
        if pi == 1 and pj == 1 and pij != 1:
            return False
    return True


def _contexts(n):
    return list(itertools.product((0, 1), repeat=n))


def build_conditional_rep(p: CorrelationVector, nonsignaling: bool = False) -> ConditionalRep:
    """Construct a conditional Kolmogorovian representation of ``p``.

    Atoms are pairs (setting vector sigma, outcome vector omega). The joint
    weights ``x(sigma, omega)`` are the LP unknowns; the settings
    distribution is not fixed in advance. Every requirement is a homogeneous
    linear equation in ``x``:

        sum_{sigma_i=1} x * (omega_i - p_i) = 0
        sum_{sigma_i=sigma_j=1} x * (omega_i omega_j - p_ij) = 0

    and the strict positivity of ``p(a_i)`` and ``p(a_i & a_j)`` becomes
    ``>= 1`` after scaling; the solution is normalised at the end. With
    ``nonsignaling=True`` the pairwise non-signaling equalities are added.
    """
    scenario = p.scenario
    n = scenario.n
    if n > CONDITIONAL_CAP:
        raise InvalidScenarioError(f"conditional construction is capped at n <= {CONDITIONAL_CAP}")
    if not check_admissibility(p):
        raise InadmissibleError(f"{p} violates the admissibility conditions")

    configs = _contexts(n)
    atoms = [(s, w) for s in configs for w in configs]
    rows, rhs = [], []

    def add_balance(selector, indicator, target):
        rows.append([
            (indicator(w) - target) if selector(s) else 0 for s, w in atoms
        ])
        rhs.append(0)

    for i in range(n):
        add_balance(lambda s, i=i: s[i], lambda w, i=i: w[i], p.singles[i])
    for (i, j), pij in zip(scenario.pairs, p.pairs):
        i0, j0 = i - 1, j - 1
        add_balance(lambda s: s[i0] and s[j0], lambda w: w[i0] * w[j0], pij)
        if nonsignaling:
            add_balance(lambda s: s[i0] and s[j0], lambda w: w[i0], p.singles[i0])
            add_balance(lambda s: s[i0] and s[j0], lambda w: w[j0], p.singles[j0])

    positivity = [lambda s, i=i: s[i] for i in range(n)]
    positivity += [lambda s, i=i - 1, j=j - 1: s[i] and s[j] for i, j in scenario.pairs]
    n_eq = len(rows)
    n_slack = len(positivity)
    for row in rows:
        row.extend([0] * n_slack)
    for k, selector in enumerate(positivity):
        row = [1 if selector(s) else 0 for s, w in atoms] + [0] * n_slack
        row[len(atoms) + k] = -1
        rows.append(row)
        rhs.append(1)

    result = solve_feasibility(rows, rhs, mode=p.mode)
    if not result.feasible:
        raise InfeasibleError(
            f"no conditional representation found for admissible vector {p}; "
            f"Phase-I residual {result.phase1_value}, Farkas multipliers {list(result.dual[:n_eq])}"
        )
    x = result.x[: len(atoms)]
    total = sum(x)
    weights, events = {}, {}
    for i in range(1, n + 1):
        events[setting_event(i)] = []
        events[outcome_event(i)] = []
    for (s, w), xi in zip(atoms, x):
        if xi <= 0:
            continue
        label = f"σ={bits(s)}|ω={bits(w)}"
        weights[label] = xi / total
        for i in range(n):
            if s[i]:
                events[setting_event(i + 1)].append(label)
            if w[i]:
                events[outcome_event(i + 1)].append(label)
    if p.mode == FLOAT:
        norm = sum(weights.values())
        weights = {a: w / norm for a, w in weights.items()}
    space = FiniteProbSpace.build(weights, events, mode=p.mode)
    rep = ConditionalRep.standard(scenario, space)
    report = verify_conditional_rep(rep, p)
    if not report.agree:
        raise ReconstructionError(f"conditional representation does not reproduce {p}")
    return rep


@dataclass(frozen=True)
class ConditionalCheck:
    computed: CorrelationVector
    residuals: tuple
    agree: bool
    tol: float

    def to_json(self) -> dict:
        fmt = str if self.computed.mode == EXACT else float
        return {
            "computed": self.computed.to_json(),
            "residuals": dict(zip(self.computed.scenario.labels(), (fmt(r) for r in self.residuals))),
            "agree": self.agree,
            "tol": self.tol,
        }


def verify_conditional_rep(rep: ConditionalRep, p: CorrelationVector, tol=None) -> ConditionalCheck:
    """Recompute every conditional from the atoms and compare with ``p``."""
    if tol is None:
        tol = 0 if rep.mode == EXACT and p.mode == EXACT else FLOAT_TOL
    computed = rep.conditional_vector()
    residuals = tuple(c - t for c, t in zip(computed.entries, p.entries))
    agree = all(abs(r) <= tol for r in residuals)
    return ConditionalCheck(computed, residuals, agree, tol)


def check_nonsignaling(rep: ConditionalRep, tol=None) -> dict[tuple[int, int], bool]:
    """Per pair: ``p(A_i|a_i) = p(A_i|a_i & a_j)`` and the same for ``j``."""
    if tol is None:
        tol = 0 if rep.mode == EXACT else FLOAT_TOL
    sp = rep.space
    out = {}
    for i, j in rep.scenario.pairs:
        joint = [rep.a(i), rep.a(j)]
        left = sp.conditional(rep.A(i), rep.a(i)) - sp.conditional(rep.A(i), joint)
        right = sp.conditional(rep.A(j), rep.a(j)) - sp.conditional(rep.A(j), joint)
        out[(i, j)] = abs(left) <= tol and abs(right) <= tol
    return out


def is_nonsignaling(rep: ConditionalRep, tol=None) -> bool:
    return all(check_nonsignaling(rep, tol).values())
