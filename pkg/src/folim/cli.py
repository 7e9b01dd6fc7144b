"""Command-line interface.

Every subcommand writes one report (JSON by default) that embeds the run
manifest, so a report can be regenerated from itself.  Exit status: 0 on
success, 1 on a domain error (reported as a JSON error object), 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .convergence import (
    ball_type_distribution,
    check_fmtp,
    check_strong_fmtp,
    comb_decompose,
    convergence_report,
    dispersion_report,
    homogeneity_test,
    local_distance,
)
from .errors import FolimError
from .evaluation import (
    estimate_stone_pairing,
    models,
    profile,
    satisfying_set,
    stone_pairing,
)
from .homalg import QuantumGraph, canonical_formula, hom_count, hom_density, qg_corpus_norm, qg_evaluate
from .interpretation import apply_scheme, full_domain, load_scheme, transport_formula, verify_transport
from .logic import classify_fragment, gaifman_bounds, min_arity, parse_formula, quantifier_rank, read_formula_file, to_text
from .report import RunManifest, emit_report
from .structures import (
    connected_components,
    generate,
    is_vertex_transitive,
    load_structure,
    scattered_set,
    structure_to_dict,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input helpers


def _read(path: str | None, flag: str = "--structure") -> str:
    if path is None:
        raise UsageError(f"{flag} is required")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FolimError(f"cannot read {path}: {exc.strerror}") from None


def _structure(path: str | None, flag: str = "--structure"):
    text = _read(path, flag)
    try:
        return load_structure(text)
    except FolimError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _manifest_paths(path: str) -> list[str]:
    base = Path(path).parent
    out = []
    for line in _read(path).splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            p = Path(line)
            out.append(str(p if p.is_absolute() else base / p))
    if not out:
        raise FolimError(f"manifest {path} lists no structures")
    return out


def _formulas(args, signature=None):
    if args.formulas:
        return read_formula_file(_read(args.formulas), signature)
    if args.formula:
        return [(parse_formula(args.formula, signature), args.arity)]
    raise UsageError("give --formula or --formulas")


def _one_formula(args, signature=None):
    if not args.formula:
        raise UsageError("--formula is required")
    return parse_formula(args.formula, signature)


def _ints(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _pair_entry(res) -> dict:
    if res.value is not None:
        return {"formula": res.formula, "arity": res.arity, "exact": res.value}
    return {
        "formula": res.formula,
        "arity": res.arity,
        "estimate": res.point,
        "half_width": res.half_width,
        "confidence": res.confidence,
        "samples": res.samples,
        "seed": res.seed,
        "prng": res.prng,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args):
    A = _structure(args.structure)
    f = _one_formula(args, A.signature)
    values = _ints(args.assign)
    return {"formula": to_text(f), "assignment": values, "models": models(A, f, values)}


def cmd_pair(args):
    A = _structure(args.structure)
    f = _one_formula(args, A.signature)
    p = min_arity(f) if args.arity is None else args.arity
    if args.samples is not None and not args.exact:
        res = estimate_stone_pairing(A, f, p, args.samples, args.seed, args.confidence, args.structure)
    else:
        res = stone_pairing(A, f, p, args.cap_tuples, args.structure)
    return _pair_entry(res)


def cmd_sat(args):
    A = _structure(args.structure)
    f = _one_formula(args, A.signature)
    p = min_arity(f) if args.arity is None else args.arity
    tuples = satisfying_set(A, f, p, args.cap_tuples)
    return {"formula": to_text(f), "arity": p, "count": len(tuples), "tuples": [list(t) for t in tuples]}


def cmd_hom(args):
    F = _structure(args.pattern)
    G = _structure(args.structure)
    return {
        "hom": hom_count(F, G),
        "density": hom_density(F, G),
        "canonical_formula": to_text(canonical_formula(F)),
    }


def cmd_qg(args):
    try:
        Q = QuantumGraph.from_dict(json.loads(_read(args.qg, "--qg")))
    except json.JSONDecodeError as exc:
        raise FolimError(f"{args.qg}: parse error at line {exc.lineno}: {exc.msg}") from None
    out = {"quantum_graph": Q.to_dict()}
    if args.structure:
        out["value"] = qg_evaluate(Q, _structure(args.structure))
    if args.manifest:
        paths = _manifest_paths(args.manifest)
        norm, arg = qg_corpus_norm(Q, [_structure(p) for p in paths])
        out.update({"corpus_norm_lower_bound": norm, "attained_at": paths[arg], "corpus": paths})
    return out


def cmd_profile(args):
    A = _structure(args.structure)
    fs = _formulas(args, A.signature)
    values = profile(A, fs, args.cap_tuples)
    return {
        "entries": [
            {"formula": to_text(f), "arity": min_arity(f) if p is None else p, "exact": v}
            for (f, p), v in zip(fs, values)
        ]
    }


def cmd_converge(args):
    paths = _manifest_paths(args.manifest)
    seq = [_structure(p) for p in paths]
    fs = _formulas(args)
    window = args.window if args.window is not None else len(seq)
    rep = convergence_report(
        seq, fs, Fraction(args.epsilon), window, args.cap_tuples, sequence_id=args.manifest, formula_set_id=args.formulas
    )
    entries = []
    for e in rep.entries:
        entry = {
            "formula": e.formula,
            "arity": e.arity,
            "trace": e.values,
            "oscillation": e.oscillations,
            "window_stable": e.window_stable,
            "sentence": e.is_sentence,
        }
        if e.is_sentence:
            entry["eventually_constant_on_window"] = e.eventually_constant
        entries.append(entry)
    columns = ["index", "structure"] + [e.formula for e in rep.entries]
    rows = [[i, paths[i]] + [e.values[i] for e in rep.entries] for i in range(len(seq))]
    return {
        "epsilon": rep.epsilon,
        "window": rep.window,
        "sequence": paths,
        "formulas": entries,
        "table": {"columns": columns, "rows": rows},
    }


def cmd_local(args):
    A = _structure(args.structure)
    r = args.radius if args.radius is not None else 1
    if args.other:
        B = _structure(args.other)
        return {"radius": r, "tv_distance": local_distance(A, B, r)}
    dist = ball_type_distribution(A, r, structure_id=args.structure)
    return {"radius": r, "distribution": dist.masses}


def cmd_dispersion(args):
    paths = _manifest_paths(args.manifest)
    seq = [_structure(p) for p in paths]
    d_max = args.radius if args.radius is not None else 1
    table = dispersion_report(seq, d_max)
    return {
        "d_max": d_max,
        "sequence": paths,
        "ball_sup_measure": table,
        "table": {"columns": ["d"] + paths, "rows": [[d] + row for d, row in enumerate(table)]},
    }


def cmd_decompose(args):
    A = _structure(args.structure)
    comps = connected_components(A)
    parts = comb_decompose(A)
    return {
        "components": comps,
        "parts": [{"mass": m, "structure": structure_to_dict(S)} for S, m in parts],
    }


def cmd_fmtp(args):
    A = _structure(args.structure)
    if args.X is not None or args.Y is not None:
        v = check_strong_fmtp(A, _ints(args.X), _ints(args.Y), args.a, args.b)
        kind = "strong"
    else:
        if not args.phi or not args.psi:
            raise UsageError("fmtp needs --phi and --psi (or --X and --Y for the strong form)")
        v = check_fmtp(A, parse_formula(args.phi, A.signature), parse_formula(args.psi, A.signature), args.a, args.b)
        kind = "formula"
    return {
        "kind": kind,
        "a": args.a,
        "b": args.b,
        "premise_at_least": v.premise_at_least,
        "premise_at_most": v.premise_at_most,
        "premises_hold": v.premises_hold,
        "inequality_holds": v.inequality,
        "lhs": v.lhs,
        "rhs": v.rhs,
        "vacuous": v.vacuous,
        "verdict": v.verdict,
    }


def cmd_interpret(args):
    I = load_scheme(_read(args.scheme, "--scheme"))
    A = _structure(args.structure)
    B = apply_scheme(I, A, args.cap_tuples)
    out = structure_to_dict(B)
    if I.is_full:
        out["representatives"] = [list(t) for t in full_domain(I, A, args.cap_tuples)]
    return out


def cmd_transport(args):
    I = load_scheme(_read(args.scheme, "--scheme"))
    f = _one_formula(args, I.target)
    g = transport_formula(I, f)
    out = {"formula": to_text(f), "transported": to_text(g), "exponent": I.k}
    if args.structure:
        A = _structure(args.structure)
        check = verify_transport(I, A, f, args.arity, cap=args.cap_tuples)
        out["verification"] = {
            "ok": check.ok,
            "pointwise": check.pointwise,
            "tuples_checked": check.checked,
            "pairing_identity": check.pairing_identity,
            "interpreted_pairing": check.interpreted_pairing,
            "transported_pairing": check.transported_pairing,
            "counterexample": check.counterexample,
        }
    return out


def cmd_generate(args):
    params = {}
    if args.family == "disjoint_union":
        params["parts"] = [_structure(p) for p in (args.parts or [])]
    else:
        if args.n is not None:
            params["n"] = args.n
        if args.leaves is not None:
            params["leaves"] = args.leaves
        if args.colors is not None:
            params["colors"] = args.colors
        if args.family == "rooted_tree_random":
            params["seed"] = args.seed
    # top-level structure fields keep the report loadable as a --structure input
    return structure_to_dict(generate(args.family, **params))


def cmd_scattered(args):
    A = _structure(args.structure)
    found = scattered_set(A, args.distance, args.count)
    return {"distance": args.distance, "count": args.count, "found": found is not None, "vertices": list(found or [])}


def cmd_transitive(args):
    A = _structure(args.structure)
    return {"vertex_transitive": is_vertex_transitive(A, cap=args.cap)}


def cmd_gaifman_bounds(args):
    r, t, m = gaifman_bounds(args.q, args.n)
    return {"q": args.q, "n": args.n, "r_max": r, "t_max": t, "m_max": m}


def cmd_classify(args):
    f = _one_formula(args)
    info = classify_fragment(f)
    return {"formula": to_text(f), "quantifier_rank": quantifier_rank(f), "fragment": info.__dict__}


def cmd_homogeneity(args):
    A = _structure(args.structure)
    fs = [f for f, _ in _formulas(args, A.signature)]
    ok, witness = homogeneity_test(A, fs)
    return {"homogeneous": ok, "witness": list(witness) if witness else None}


COMMANDS = {
    "eval": cmd_eval,
    "pair": cmd_pair,
    "sat": cmd_sat,
    "hom": cmd_hom,
    "qg": cmd_qg,
    "profile": cmd_profile,
    "converge": cmd_converge,
    "local": cmd_local,
    "dispersion": cmd_dispersion,
    "decompose": cmd_decompose,
    "fmtp": cmd_fmtp,
    "interpret": cmd_interpret,
    "transport": cmd_transport,
    "generate": cmd_generate,
    "scattered": cmd_scattered,
    "transitive": cmd_transitive,
    "gaifman-bounds": cmd_gaifman_bounds,
    "classify": cmd_classify,
    "homogeneity": cmd_homogeneity,
}

INPUT_FLAGS = ("structure", "other", "pattern", "manifest", "formulas", "scheme", "qg")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--structure")
    common.add_argument("--manifest")
    common.add_argument("--formula")
    common.add_argument("--formulas")
    common.add_argument("--arity", type=int)
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--confidence", type=float, default=0.99)
    common.add_argument("--radius", type=int)
    common.add_argument("--epsilon", default="0")
    common.add_argument("--window", type=int)
    common.add_argument("--scheme")
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--cap-tuples", type=int, dest="cap_tuples")

    parser = _Parser(prog="folim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"folim {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    parsers = {name: sub.add_parser(name, parents=[common]) for name in COMMANDS}
    parsers["eval"].add_argument("--assign", help="vertices for x1..xp, comma separated")
    parsers["hom"].add_argument("--pattern", required=True)
    parsers["qg"].add_argument("--qg", required=True)
    parsers["local"].add_argument("--other")
    for name in ("fmtp",):
        p = parsers[name]
        p.add_argument("--phi")
        p.add_argument("--psi")
        p.add_argument("--X")
        p.add_argument("--Y")
        p.add_argument("-a", "--a", type=int, required=True)
        p.add_argument("-b", "--b", type=int, required=True)
    g = parsers["generate"]
    g.add_argument("--family", required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--leaves", type=int)
    g.add_argument("--colors")
    g.add_argument("--parts", nargs="*")
    s = parsers["scattered"]
    s.add_argument("--distance", type=int, required=True)
    s.add_argument("--count", type=int, required=True)
    parsers["transitive"].add_argument("--cap", type=int, default=12)
    gb = parsers["gaifman-bounds"]
    gb.add_argument("--q", type=int, required=True)
    gb.add_argument("--n", type=int, default=0)
    return parser


def _manifest(args) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items()) if v is not None and k not in ("command", "out") and v is not False}
    inputs = [getattr(args, k) for k in INPUT_FLAGS if getattr(args, k, None)]
    inputs += list(getattr(args, "parts", None) or [])
    return RunManifest(command=args.command, inputs=inputs, parameters=params, output=args.out)


def manifest_argv(manifest: dict) -> list[str]:
    """Command line that reproduces a report from its embedded manifest."""
    argv = [manifest["command"]]
    for key, value in sorted(manifest["parameters"].items()):
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, *map(str, value)]
        else:
            argv.append(f"{flag}={value}")
    if manifest.get("output"):
        argv.append(f"--out={manifest['output']}")
    return argv


def _write(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": "usage_error", "message": str(exc)}, sort_keys=True) + "\n")
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        result = COMMANDS[args.command](args)
        result["manifest"] = _manifest(args)
        _write(emit_report(result, args.format), args.out)
        return 0
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": "usage_error", "message": str(exc)}, sort_keys=True) + "\n")
        return 2
    except FolimError as exc:
        err = exc.to_dict()
        err["command"] = args.command
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 1
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        sys.stderr.write(
            json.dumps({"error": "invalid_input", "message": str(exc), "command": args.command}, sort_keys=True) + "\n"
        )
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
