"""``bellscope`` command line: classify, represent, explain, epr, bell-operator.

Every command prints one JSON report to stdout (or ``--out``). Exit codes:
0 success / inside, 3 outside or inadmissible, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical_rep import (
    as_conditional,
    build_conditional_rep,
    build_kolmogorov_rep,
    check_nonsignaling,
    verify_conditional_rep,
)
from .common_cause import (
    build_propensity_explanation,
    build_property_explanation,
    decompose_deterministic,
    decompose_indeterministic,
    extract_kolmogorov_from_property,
    kolmogorov_vector,
)
from .errors import (
    BellscopeError,
    InadmissibleError,
    InfeasibleError,
    OutsidePolytopeError,
    UnsupportedScenarioError,
)
from .polytope import FAMILIES, clauser_horne_value, evaluate_facets, membership
from .quantum import (
    CANONICAL_DIRECTIONS,
    EPR_CROSSCHECK_TOL,
    DensityOperator,
    bell_operator_value,
    chsh_observables,
    epr_conditional_rep,
    epr_probabilities,
    matrix_from_json,
    random_pure_state,
    random_product_state,
    singlet_state,
    vector_from_json as state_vector_from_json,
)
from .scenario import EXACT, FLOAT, MODES, parse_number, vector_from_json

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NEGATIVE = 3


class InputError(Exception):
    """Unreadable or malformed command input."""


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_json(raw: bytes, what: str):
    if not raw.strip():
        raise InputError(f"{what} is empty")
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{what} is not valid JSON: {exc}") from None


def _load_vector(raw: bytes, mode: str):
    return vector_from_json(_load_json(raw, "input file"), mode)


def _digest(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for chunk in chunks:
        h.update(len(chunk).to_bytes(8, "big"))
        h.update(chunk)
    return h.hexdigest()


# -- commands --------------------------------------------------------------

def cmd_classify(args, digest_parts):
    raw = _read(args.input)
    digest_parts.append(raw)
    p = _load_vector(raw, args.mode)
    families = FAMILIES if args.family == "all" else (args.family,)
    results = {"vector": p.to_json(), "membership": {}}
    inside_all = True
    for family in families:
        res = membership(p, family, interior=(family == "quantum"))
        results["membership"][family] = res.to_json()
        inside_all &= res.inside
    try:
        results["facets"] = evaluate_facets(p).to_json()
    except UnsupportedScenarioError as exc:
        results["facets"] = None
        results["notice"] = f"facet check skipped: {exc}"
        print(results["notice"], file=sys.stderr)
    return results, EXIT_OK if inside_all else EXIT_NEGATIVE


def cmd_represent(args, digest_parts):
    raw = _read(args.input)
    digest_parts.append(raw)
    p = _load_vector(raw, args.mode)
    results = {"vector": p.to_json(), "kind": args.kind}
    if args.kind == "kolmogorov":
        res = membership(p, "classical")
        if not res.inside:
            results["error"] = "outside-polytope"
            results["membership"] = res.to_json()
            return results, EXIT_NEGATIVE
        space = build_kolmogorov_rep(p, res.coefficients)
        recovered = kolmogorov_vector(p.scenario, space, prefix="A")
        rep = as_conditional(p.scenario, space)
        results["space"] = space.to_json()
        results["verification"] = {
            "recovered": recovered.to_json(),
            "agree": verify_conditional_rep(rep, p).agree,
        }
        return results, EXIT_OK
    try:
        rep = build_conditional_rep(p, nonsignaling=args.nonsignaling)
    except (InadmissibleError, InfeasibleError) as exc:
        results["error"] = "inadmissible" if isinstance(exc, InadmissibleError) else "infeasible"
        results["message"] = str(exc)
        return results, EXIT_NEGATIVE
    results["space"] = rep.space.to_json()
    results["verification"] = verify_conditional_rep(rep, p).to_json()
    results["nonsignaling"] = {f"{i},{j}": ok for (i, j), ok in check_nonsignaling(rep).items()}
    return results, EXIT_OK


def _load_components(raw: bytes, mode: str):
    data = _load_json(raw, "components file")
    if not isinstance(data, dict) or "components" not in data:
        raise InputError('components file must be an object with a "components" field')
    try:
        components = {key: vector_from_json(v, mode) for key, v in data["components"].items()}
        weights = data.get("weights")
        if weights is not None:
            weights = {key: parse_number(w, mode) for key, w in weights.items()}
    except AttributeError:
        raise InputError("components and weights must be objects keyed by epsilon") from None
    return components, weights


def cmd_explain(args, digest_parts):
    raw = _read(args.input)
    digest_parts.append(raw)
    p = _load_vector(raw, args.mode)
    results = {"vector": p.to_json(), "kind": args.kind}
    try:
        decompose_deterministic(p)
    except OutsidePolytopeError as exc:
        results["error"] = "outside-polytope"
        results["message"] = str(exc)
        return results, EXIT_NEGATIVE
    rep = build_conditional_rep(p, nonsignaling=True)
    if args.kind == "property":
        explanation = build_property_explanation(p, rep)
        extracted = extract_kolmogorov_from_property(explanation.rep, explanation.partition)
        recovered = kolmogorov_vector(p.scenario, extracted)
        results["explanation"] = explanation.to_json()
        results["extracted"] = {
            "space": extracted.to_json(),
            "recovered": recovered.to_json(),
            "agree": recovered.entries == p.entries
            if p.mode == EXACT
            else max(abs(a - b) for a, b in zip(recovered.entries, p.entries)) <= 1e-9,
        }
        return results, EXIT_OK
    if args.components is None:
        raise InputError("--kind propensity needs --components")
    craw = _read(args.components)
    digest_parts.append(craw)
    components, weights = _load_components(craw, p.mode)
    if weights is None:
        decomposition = decompose_indeterministic(p, components)
        weights = dict(zip(components, decomposition.weights))
        results["decomposition"] = decomposition.to_json()
    explanation = build_propensity_explanation(p, weights, components, rep)
    results["explanation"] = explanation.to_json()
    return results, EXIT_OK


def _parse_angles(text: str):
    try:
        values = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--angles must be 12 numbers, got {text!r}") from None
    if len(values) != 12:
        raise InputError(f"--angles must be 12 numbers (four 3-vectors), got {len(values)}")
    return [tuple(values[k:k + 3]) for k in range(0, 12, 3)]


def cmd_epr(args, digest_parts):
    if args.canonical:
        directions = CANONICAL_DIRECTIONS
        digest_parts.append(b"canonical")
    else:
        digest_parts.append(args.angles.encode())
        directions = _parse_angles(args.angles)
    probs = epr_probabilities(*directions)
    if probs.max_discrepancy > EPR_CROSSCHECK_TOL:
        raise BellscopeError(f"closed form and trace disagree by {probs.max_discrepancy}")
    p = probs.vector()
    rep = epr_conditional_rep(*directions)
    results = {
        "directions": [list(d) for d in probs.directions],
        "vector": p.to_json(),
        "trace_vector": probs.trace_vector().to_json(),
        "max_discrepancy": probs.max_discrepancy,
        "clauser_horne": {
            "closed_form": float(clauser_horne_value(p, 1, 2, 3, 4)),
            "trace": float(clauser_horne_value(probs.trace_vector(), 1, 2, 3, 4)),
        },
        "facets": evaluate_facets(p).to_json(),
        "membership": {
            "classical": membership(p, "classical").to_json(),
            "quantum": membership(p, "quantum", interior=True).to_json(),
        },
        "conditional_rep_nonsignaling": all(check_nonsignaling(rep).values()),
    }
    return results, EXIT_OK


def _load_operators(raw: bytes):
    data = _load_json(raw, "operator file")
    try:
        return [matrix_from_json(data[k]) for k in ("A1", "A2", "B1", "B2")]
    except (KeyError, TypeError) as exc:
        raise InputError(f"operator file needs matrices A1, A2, B1, B2 ({exc})") from None


def _load_states(raw: bytes):
    data = _load_json(raw, "state file")
    entries = data.get("states", data) if isinstance(data, dict) else data
    if not isinstance(entries, list) or not entries:
        raise InputError('state file must hold a non-empty list of {"vector": ...} or {"density": ...}')
    states = []
    for k, entry in enumerate(entries):
        if isinstance(entry, dict) and "vector" in entry:
            states.append(DensityOperator.from_vector(state_vector_from_json(entry["vector"])))
        elif isinstance(entry, dict) and "density" in entry:
            states.append(DensityOperator(matrix_from_json(entry["density"])))
        else:
            raise InputError(f"state {k} has neither 'vector' nor 'density'")
    return states


def cmd_bell_operator(args, digest_parts):
    if args.operators:
        raw = _read(args.operators)
        digest_parts.append(raw)
        ops = _load_operators(raw)
        source = "file"
    else:
        ops = chsh_observables()
        digest_parts.append(b"chsh")
        source = "chsh"
    states, labels, sampled = [], [], False
    if args.states:
        raw = _read(args.states)
        digest_parts.append(raw)
        states = _load_states(raw)
        labels = [f"state[{k}]" for k in range(len(states))]
    if args.singlet or not (args.states or args.random_pure or args.random_product):
        states.append(singlet_state())
        labels.append("singlet")
    rng = np.random.default_rng(args.seed)
    dim = ops[0].shape[0]
    for k in range(args.random_pure):
        states.append(random_pure_state(dim, rng))
        labels.append(f"pure[{k}]")
        sampled = True
    for k in range(args.random_product):
        if dim != 4:
            raise InputError("random product states need 4x4 operators")
        states.append(random_product_state(rng))
        labels.append(f"product[{k}]")
        sampled = True
    values = [bell_operator_value(s, *ops) for s in states]
    results = {
        "operators": source,
        "values": dict(zip(labels, values)),
        "max_abs": max(abs(v) for v in values),
    }
    return results, EXIT_OK, sampled


# -- plumbing --------------------------------------------------------------

def _default_seed() -> int:
    env = os.environ.get("BELLSCOPE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"BELLSCOPE_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=MODES, default=None,
                        help="arithmetic mode (exact for classical commands, quantum ones are always float)")
    common.add_argument("--seed", type=int, default=None, help="seed for sampling (default $BELLSCOPE_SEED or 0)")
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="bellscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bellscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="polytope membership and facet checks")
    p.add_argument("input")
    p.add_argument("--family", choices=(*FAMILIES, "all"), default="classical")

    p = sub.add_parser("represent", parents=[common], help="build a Kolmogorovian or conditional witness space")
    p.add_argument("input")
    p.add_argument("--kind", choices=("kolmogorov", "conditional"), default="kolmogorov")
    p.add_argument("--nonsignaling", action="store_true", help="require a non-signaling conditional rep")

    p = sub.add_parser("explain", parents=[common], help="common-cause explanation of a classical vector")
    p.add_argument("input")
    p.add_argument("--kind", choices=("property", "propensity"), default="property")
    p.add_argument("--components", help="JSON file with component vectors keyed by epsilon")

    p = sub.add_parser("epr", parents=[common], help="singlet EPR-Bohm correlation vector")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--canonical", action="store_true")
    group.add_argument("--angles", help="a1x,a1y,a1z,a2x,...,b4z (four unit vectors)")

    p = sub.add_parser("bell-operator", parents=[common], help="Bell-operator values on states")
    p.add_argument("--operators", help="JSON file with A1, A2, B1, B2 (default: CHSH observables)")
    p.add_argument("--states", help="JSON file with a list of states")
    p.add_argument("--singlet", action="store_true", help="include the singlet state")
    p.add_argument("--random-pure", type=int, default=0, metavar="N")
    p.add_argument("--random-product", type=int, default=0, metavar="N")
    return parser


COMMANDS = {
    "classify": cmd_classify,
    "represent": cmd_represent,
    "explain": cmd_explain,
    "epr": cmd_epr,
    "bell-operator": cmd_bell_operator,
}
QUANTUM_COMMANDS = ("epr", "bell-operator")


def run(argv=None) -> tuple[dict | None, int, str | None]:
    """Run a command; returns ``(report, exit code, out path)``. The report
    is None on input errors."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.command in QUANTUM_COMMANDS:
            if args.mode == EXACT:
                print("note: quantum commands always run in float mode", file=sys.stderr)
            args.mode = FLOAT
        elif args.mode is None:
            args.mode = EXACT
        parts = []
        out = COMMANDS[args.command](args, parts)
        results, code = out[0], out[1]
        sampled = out[2] if len(out) > 2 else False
    except (InputError, BellscopeError, ValueError) as exc:
        print(f"bellscope {args.command}: {exc}", file=sys.stderr)
        return None, EXIT_INPUT, None
    report = {
        "command": [args.command, *argv[1:]],
        "input_digest": _digest(*parts),
        "mode": args.mode,
        "results": results,
        "seed": args.seed if sampled else None,
        "version": __version__,
    }
    return report, code, args.out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        report, code, out = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    if report is None:
        return code
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
