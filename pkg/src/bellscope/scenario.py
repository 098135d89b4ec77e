"""Scenarios (n, S), correlation vectors and the three vertex-vector families.

Indices are 1-based everywhere a user can see them: ``Scenario.pairs`` holds
pairs like ``(1, 3)`` and ``CorrelationVector.pair(1, 3)`` looks them up.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Mapping, Sequence

from .errors import (
    CapExceededError,
    InvalidScenarioError,
    InvalidVectorError,
    ModeMismatchError,
)

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

#: enumeration is refused beyond 2**ENUMERATION_CAP_BITS vectors
ENUMERATION_CAP_BITS = 20

#: default tolerance for float-mode comparisons
FLOAT_TOL = 1e-9

CLASSICAL = "classical"
QUANTUM_ONLY = "quantum-only"
GENERAL_ONLY = "general-only"

CH_PAIRS = ((1, 3), (1, 4), (2, 3), (2, 4))


@dataclass(frozen=True)
class Scenario:
    """Index structure of R(n, S): ``n`` events and the pairs ``S`` whose
    conjunctions are recorded."""

    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise InvalidScenarioError(f"n must be a positive integer, got {self.n!r}")
        seen = set()
        for pair in self.pairs:
            i, j = pair
            if not (1 <= i < j <= self.n):
                raise InvalidScenarioError(f"invalid pair {pair} for n={self.n}")
            if pair in seen:
                raise InvalidScenarioError(f"duplicate pair {pair}")
            seen.add(pair)

    @property
    def dim(self) -> int:
        return self.n + len(self.pairs)

    def pair_index(self, i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        try:
            return self.pairs.index(key)
        except ValueError:
            raise KeyError(f"pair {key} not in S") from None

    def labels(self) -> list[str]:
        """Coordinate names, singles first: ``p1, ..., pn, p13, ...``."""
        return [f"p{i}" for i in range(1, self.n + 1)] + [
            f"p{i}{j}" if self.n < 10 else f"p{i},{j}" for i, j in self.pairs
        ]

    def is_two_event(self) -> bool:
        return self.n == 2 and self.pairs == ((1, 2),)

    def is_clauser_horne(self) -> bool:
        return self.n == 4 and self.pairs == CH_PAIRS

    def to_json(self) -> dict:
        return {"n": self.n, "S": [list(p) for p in self.pairs]}


def make_scenario(n: int, pairs: Iterable[Sequence[int]] = ()) -> Scenario:
    """Validate ``(n, S)``; pairs given as ``(j, i)`` are flipped to ``(i, j)``
    and the result is sorted."""
    normalized = []
    for pair in pairs:
        if len(pair) != 2:
            raise InvalidScenarioError(f"pair {pair!r} does not have two indices")
        i, j = (int(x) for x in pair)
        if i == j:
            raise InvalidScenarioError(f"invalid pair ({i},{j}): indices must differ")
        normalized.append((min(i, j), max(i, j)))
    if len(set(normalized)) != len(normalized):
        raise InvalidScenarioError("duplicate pairs in S")
    return Scenario(n, tuple(sorted(normalized)))


def two_event_scenario() -> Scenario:
    return Scenario(2, ((1, 2),))


def clauser_horne_scenario() -> Scenario:
    return Scenario(4, CH_PAIRS)


def parse_number(value, mode: str | None = None):
    """Turn ``value`` into a Fraction (exact) or float.

    Strings such as ``"2/5"`` or ``"0.125"`` are read as exact rationals.
    With ``mode=None`` the mode follows the Python type: floats stay floats.
    """
    if isinstance(value, bool):
        raise InvalidVectorError(f"boolean is not a probability: {value!r}")
    if isinstance(value, str):
        try:
            number = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidVectorError(f"cannot parse number {value!r}") from None
    elif isinstance(value, Rational):
        number = Fraction(value)
    elif isinstance(value, Real):
        number = float(value)
    else:
        raise InvalidVectorError(f"not a number: {value!r}")
    if mode == FLOAT:
        return float(number)
    if mode == EXACT and isinstance(number, float):
        if not math.isfinite(number):
            raise InvalidVectorError(f"non-finite value {value!r}")
        return Fraction(repr(number))
    return number


def _infer_mode(values) -> str:
    return FLOAT if any(isinstance(v, float) for v in values) else EXACT


@dataclass(frozen=True)
class CorrelationVector:
    """The numbers ``(p_1..p_n; p_ij for (i,j) in S)``.

    ``pairs`` is aligned with ``scenario.pairs``. Exact vectors hold
    Fractions (or ints), float vectors hold floats.
    """

    scenario: Scenario
    singles: tuple
    pairs: tuple
    mode: str = EXACT

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidVectorError(f"unknown arithmetic mode {self.mode!r}")
        if len(self.singles) != self.scenario.n:
            raise InvalidVectorError(
                f"expected {self.scenario.n} single probabilities, got {len(self.singles)}"
            )
        if len(self.pairs) != len(self.scenario.pairs):
            raise InvalidVectorError(
                f"expected {len(self.scenario.pairs)} pair probabilities, got {len(self.pairs)}"
            )
        for label, value in zip(self.scenario.labels(), self.entries):
            if self.mode == EXACT and isinstance(value, float):
                raise ModeMismatchError(f"float entry {label}={value!r} in an exact vector")
            if not (0 <= value <= 1):
                raise InvalidVectorError(f"{label}={value} is outside [0,1]")

    @classmethod
    def from_values(cls, scenario: Scenario, singles, pairs=(), mode: str | None = None):
        """Build a vector from loose inputs.

        ``pairs`` is a sequence aligned with ``scenario.pairs`` or a mapping
        keyed by ``(i, j)`` tuples or ``"i,j"`` strings.
        """
        if isinstance(pairs, Mapping):
            lookup = {}
            for key, value in pairs.items():
                if isinstance(key, str):
                    key = tuple(int(k) for k in key.replace(" ", "").split(","))
                i, j = key
                lookup[(min(i, j), max(i, j))] = value
            if set(lookup) != set(scenario.pairs):
                raise InvalidVectorError(
                    f"pair keys {sorted(lookup)} do not match S={list(scenario.pairs)}"
                )
            pairs = [lookup[p] for p in scenario.pairs]
        raw = [parse_number(v) for v in list(singles) + list(pairs)]
        if mode is None:
            mode = _infer_mode(raw)
        values = [parse_number(v, mode) for v in raw]
        n = scenario.n
        return cls(scenario, tuple(values[:n]), tuple(values[n:]), mode)

    @property
    def entries(self) -> tuple:
        return tuple(self.singles) + tuple(self.pairs)

    def single(self, i: int):
        return self.singles[i - 1]

    def pair(self, i: int, j: int):
        return self.pairs[self.scenario.pair_index(i, j)]

    def to_mode(self, mode: str) -> "CorrelationVector":
        if mode == self.mode:
            return self
        values = [parse_number(v, mode) for v in self.entries]
        n = self.scenario.n
        return CorrelationVector(self.scenario, tuple(values[:n]), tuple(values[n:]), mode)

    def label(self) -> str:
        def fmt(v):
            return str(v) if self.mode == EXACT else f"{v:.6g}"

        singles = ",".join(fmt(v) for v in self.singles)
        pairs = ",".join(fmt(v) for v in self.pairs)
        return f"({singles};{pairs})"

    def __str__(self):
        return self.label()

    def to_json(self) -> dict:
        fmt = str if self.mode == EXACT else repr
        return {
            "n": self.scenario.n,
            "S": [list(p) for p in self.scenario.pairs],
            "singles": [fmt(v) for v in self.singles],
            "pairs": {f"{i},{j}": fmt(v) for (i, j), v in zip(self.scenario.pairs, self.pairs)},
            "mode": self.mode,
        }


def vector_from_json(data, mode: str | None = None) -> CorrelationVector:
    """Parse the correlation-vector JSON format (a dict or a JSON string)."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise InvalidVectorError(f"malformed JSON: {exc}") from None
    if not isinstance(data, Mapping):
        raise InvalidVectorError("correlation vector JSON must be an object")
    try:
        scenario = make_scenario(data["n"], data.get("S", []))
        singles = data["singles"]
        pairs = data.get("pairs", {})
    except KeyError as exc:
        raise InvalidVectorError(f"missing field {exc}") from None
    if mode is None:
        mode = data.get("mode")
    return CorrelationVector.from_values(scenario, singles, pairs, mode)


def check_same_mode(*vectors: CorrelationVector) -> str:
    modes = {v.mode for v in vectors}
    if len(modes) > 1:
        raise ModeMismatchError(f"mixed arithmetic modes: {sorted(modes)}")
    return modes.pop()


class VertexVector(CorrelationVector):
    """A correlation vector with every entry in {0, 1}."""

    def __post_init__(self):
        super().__post_init__()
        if any(v not in (0, 1) for v in self.entries):
            raise InvalidVectorError(f"vertex vector entries must be 0 or 1: {self.entries}")

    @classmethod
    def from_bits(cls, scenario: Scenario, bits: Sequence[int]) -> "VertexVector":
        bits = tuple(int(b) for b in bits)
        n = scenario.n
        return cls(scenario, bits[:n], bits[n:], EXACT)

    @property
    def epsilon(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.singles)

    @property
    def kind(self) -> str:
        return classify_vertex(self)

    def label(self) -> str:
        return (
            "(" + ",".join(str(int(v)) for v in self.singles)
            + ";" + ",".join(str(int(v)) for v in self.pairs) + ")"
        )


def _check_cap(bits: int) -> None:
    if bits > ENUMERATION_CAP_BITS:
        raise CapExceededError(
            f"enumeration of 2**{bits} vectors exceeds the cap 2**{ENUMERATION_CAP_BITS}"
        )


def _bit_vectors(length: int):
    # first coordinate is the most significant bit
    return itertools.product((0, 1), repeat=length)


def classical_vertex(scenario: Scenario, epsilon: Sequence[int]) -> VertexVector:
    eps = tuple(int(e) for e in epsilon)
    if len(eps) != scenario.n or any(e not in (0, 1) for e in eps):
        raise InvalidVectorError(f"epsilon must be a 0/1 tuple of length {scenario.n}")
    pairs = tuple(eps[i - 1] * eps[j - 1] for i, j in scenario.pairs)
    return VertexVector(scenario, eps, pairs, EXACT)


def enumerate_classical_vertices(scenario: Scenario) -> list[VertexVector]:
    """All 2**n classical vertex vectors, epsilon counted in binary."""
    _check_cap(scenario.n)
    return [classical_vertex(scenario, eps) for eps in _bit_vectors(scenario.n)]


def enumerate_all_vertices(scenario: Scenario) -> list[VertexVector]:
    """All 2**(n+|S|) 0/1 vectors of R(n, S)."""
    _check_cap(scenario.dim)
    return [VertexVector.from_bits(scenario, bits) for bits in _bit_vectors(scenario.dim)]


def enumerate_quantum_vertices(scenario: Scenario) -> list[VertexVector]:
    """Vertex vectors with u_ij <= eps_i * eps_j, in the same order as
    :func:`enumerate_all_vertices`."""
    _check_cap(scenario.dim)
    out = []
    for eps in _bit_vectors(scenario.n):
        active = [eps[i - 1] * eps[j - 1] for i, j in scenario.pairs]
        choices = [(0, 1) if a else (0,) for a in active]
        for pairs in itertools.product(*choices):
            out.append(VertexVector(scenario, eps, pairs, EXACT))
    return out


_FAMILY_ENUMERATORS = {
    "classical": enumerate_classical_vertices,
    "quantum": enumerate_quantum_vertices,
    "general": enumerate_all_vertices,
}


@functools.lru_cache(maxsize=64)
def _cached_vertices(scenario: Scenario, family: str) -> tuple[VertexVector, ...]:
    return tuple(_FAMILY_ENUMERATORS[family](scenario))


def enumerate_vertices(scenario: Scenario, family: str) -> list[VertexVector]:
    """Vertices of one family; enumerations are memoised per scenario."""
    if family not in _FAMILY_ENUMERATORS:
        raise ValueError(f"unknown vertex family {family!r}")
    return list(_cached_vertices(scenario, family))


def classify_vertex(v: CorrelationVector) -> str:
    if any(x not in (0, 1) for x in v.entries):
        raise InvalidVectorError(f"non-binary entry in {v.entries}")
    strict = False
    for (i, j), u in zip(v.scenario.pairs, v.pairs):
        product = v.singles[i - 1] * v.singles[j - 1]
        if u > product:
            return GENERAL_ONLY
        if u < product:
            strict = True
    return QUANTUM_ONLY if strict else CLASSICAL


def is_independence_vector(p: CorrelationVector, tol: float | None = None) -> bool:
    """True iff p_ij = p_i p_j for all (i,j) in S (zero tolerance in exact mode)."""
    if tol is None:
        tol = 0 if p.mode == EXACT else FLOAT_TOL
    for (i, j), pij in zip(p.scenario.pairs, p.pairs):
        residual = pij - p.singles[i - 1] * p.singles[j - 1]
        if abs(residual) > tol:
            return False
    return True


def convex_combination(weights: Sequence, vectors: Sequence[CorrelationVector]) -> CorrelationVector:
    """``sum_k weights[k] * vectors[k]`` with validated nonnegative weights.

    The result keeps exact arithmetic when weights and vectors are exact.
    """
    if len(weights) != len(vectors) or not vectors:
        raise InvalidVectorError("need matching, non-empty weights and vectors")
    scenario = vectors[0].scenario
    if any(v.scenario != scenario for v in vectors):
        raise InvalidVectorError("vectors belong to different scenarios")
    mode = check_same_mode(*vectors)
    if mode == EXACT and any(isinstance(w, float) for w in weights):
        raise ModeMismatchError("float weights combined with exact vectors")
    if any(w < 0 for w in weights):
        raise InvalidVectorError("negative convex weight")
    total = [0] * scenario.dim
    for w, v in zip(weights, vectors):
        if w:
            for k, x in enumerate(v.entries):
                total[k] += w * x
    if mode == FLOAT:
        total = [min(max(float(x), 0.0), 1.0) for x in total]
    else:
        total = [Fraction(x) for x in total]
    return CorrelationVector(scenario, tuple(total[: scenario.n]), tuple(total[scenario.n:]), mode)


def max_abs_difference(p: CorrelationVector, q: CorrelationVector):
    if p.scenario != q.scenario:
        raise InvalidVectorError("vectors belong to different scenarios")
    return max(abs(a - b) for a, b in zip(p.entries, q.entries))
