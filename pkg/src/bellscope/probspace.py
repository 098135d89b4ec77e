"""Finite probability spaces with named events."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InvalidVectorError, ModeMismatchError, ZeroProbabilityError
from .scenario import EXACT, FLOAT

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteProbSpace:
    """Atoms with nonnegative weights summing to one, plus named events.

    Events are frozensets of atom labels. Anywhere an event is expected a
    name, a set of labels, or a list/tuple of those (read as a conjunction)
    is accepted.
    """

    atoms: tuple[str, ...]
    weights: Mapping[str, object]
    events: Mapping[str, frozenset]
    mode: str = EXACT

    def __post_init__(self):
        if len(set(self.atoms)) != len(self.atoms):
            raise InvalidVectorError("duplicate atom labels")
        if set(self.weights) != set(self.atoms):
            raise InvalidVectorError("weights must be given for exactly the atoms")
        for atom, w in self.weights.items():
            if self.mode == EXACT and isinstance(w, float):
                raise ModeMismatchError(f"float weight for atom {atom} in an exact space")
            if w < 0:
                raise InvalidVectorError(f"negative weight on atom {atom}")
        total = sum(self.weights.values())
        if self.mode == EXACT and total != 1:
            raise InvalidVectorError(f"atom weights sum to {total}, not 1")
        if self.mode == FLOAT and abs(total - 1) > WEIGHT_SUM_TOL:
            raise InvalidVectorError(f"atom weights sum to {total!r}, not 1")
        universe = set(self.atoms)
        for name, members in self.events.items():
            if not set(members) <= universe:
                raise InvalidVectorError(f"event {name} mentions unknown atoms")

    @classmethod
    def build(cls, weights: Mapping[str, object], events: Mapping[str, Iterable[str]], mode=None):
        if mode is None:
            mode = FLOAT if any(isinstance(w, float) for w in weights.values()) else EXACT
        conv = float if mode == FLOAT else Fraction
        atoms = tuple(weights)
        return cls(
            atoms,
            {a: conv(w) for a, w in weights.items()},
            {name: frozenset(m) for name, m in events.items()},
            mode,
        )

    @property
    def omega(self) -> frozenset:
        return frozenset(self.atoms)

    def event(self, spec) -> frozenset:
        if isinstance(spec, str):
            if spec == "Omega":
                return self.omega
            if spec.startswith("~"):
                return self.omega - self.event(spec[1:])
            try:
                return self.events[spec]
            except KeyError:
                raise KeyError(f"unknown event {spec!r}") from None
        if isinstance(spec, (list, tuple)):
            out = self.omega
            for part in spec:
                out = out & self.event(part)
            return out
        return frozenset(spec)

    def prob(self, *specs):
        """Probability of the conjunction of ``specs`` (Omega if none)."""
        members = self.event(list(specs)) if specs else self.omega
        zero = 0.0 if self.mode == FLOAT else Fraction(0)
        return sum((self.weights[a] for a in members), zero)

    def conditional(self, target, given):
        """``p(target | given)``; raises ZeroProbabilityError when p(given) = 0."""
        g = self.event(given)
        denominator = self.prob(g)
        if denominator == 0:
            raise ZeroProbabilityError(f"conditioning event {given!r} has probability 0")
        return self.prob(self.event(target) & g) / denominator

    def with_events(self, **events) -> "FiniteProbSpace":
        merged = dict(self.events)
        merged.update({k: frozenset(v) for k, v in events.items()})
        return FiniteProbSpace(self.atoms, self.weights, merged, self.mode)

    def to_mode(self, mode: str) -> "FiniteProbSpace":
        if mode == self.mode:
            return self
        conv = float if mode == FLOAT else (lambda w: Fraction(repr(w)))
        weights = {a: conv(w) for a, w in self.weights.items()}
        if mode == EXACT:
            # decimal round-off can leave the total a hair off 1
            last = self.atoms[-1]
            weights[last] += 1 - sum(weights.values())
        return FiniteProbSpace(self.atoms, weights, self.events, mode)

    def to_json(self) -> dict:
        fmt = str if self.mode == EXACT else float
        return {
            "mode": self.mode,
            "atoms": [{"label": a, "weight": fmt(self.weights[a])} for a in self.atoms],
            "events": {name: sorted(m, key=self.atoms.index) for name, m in self.events.items()},
        }


def bits(label_bits) -> str:
    return "".join(str(int(b)) for b in label_bits)
