"""Command-line front end.

Subcommands map one-to-one onto the library: generate quantum correlations,
check no-signaling, project to full correlators, run the non-signaling
simulator, enumerate producible vertices, decide membership and minimal
group size with certificates, lift and evaluate Bell-like expressions, and
run the bundled `reproduce` benchmark cases.

Exit codes for membership-style commands: 0 feasible, 2 infeasible,
3 unresolved, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import reproduce as repro
from .corrspace import (Scenario, correlation_to_dict, full_correlators,
                        is_no_signaling, load_correlation, save_correlation,
                        simulate_full_correlators, DeterministicResidueFunction)
from .membership import (EXIT_ERROR, decompose, fixed_partition_membership, mgs,
                         result_to_dict, verify_certificate)
from .polytope import (CapExceededError, MissingVertexDataError, Partition,
                       load_vertex_file, ns_vertices, producible_vertices,
                       save_vertex_set)
from .quantum import (born_correlation, builtin_state, load_measurements, load_state,
                      svetlichny_ghz3_measurements, tilted_xy_measurements,
                      xy_measurements, MeasurementSet, Observable, SIGMA_Z)
from .rationals import Q, qstr
from .witness import (builtin_expression, evaluate, expression_to_dict, facet_rank,
                      lift, load_expression, save_expression, zero_bound_form)


def _parse_scenario(text: str) -> Scenario:
    """"2,2;2,2" -> inputs (2,2), outputs (2,2)."""
    ins, outs = text.split(";")
    return Scenario(tuple(int(v) for v in ins.split(",")),
                    tuple(int(v) for v in outs.split(",")))


def _parse_state(text: str):
    if ":" in text:
        name, arg = text.split(":", 1)
        if name == "ghz":
            return builtin_state("ghz", n=int(arg))
        if name == "sec3c":
            return builtin_state("sec3c", v=float(arg))
        raise ValueError(f"unknown state {text!r}")
    if text == "sec3a":
        return builtin_state("sec3a")
    return load_state(text)


MEAS_BUILTINS = {
    "tilted-xy": lambda n: tilted_xy_measurements(n),
    "svet3": lambda n: svetlichny_ghz3_measurements(),
    "svet3+z": lambda n: MeasurementSet(
        svetlichny_ghz3_measurements().observables
        + ((Observable(SIGMA_Z), Observable(SIGMA_Z)),)),
    "xy": lambda n: xy_measurements(n),
}


def _parse_measurements(text: str, n: int) -> MeasurementSet:
    if text in MEAS_BUILTINS:
        return MEAS_BUILTINS[text](n)
    return load_measurements(text)


def _parse_expression(text: str):
    try:
        return builtin_expression(text)
    except Exception:
        if text.endswith(".json"):
            return load_expression(text)
        raise


def _load_external(paths):
    ext = {}
    for p in paths or ():
        vs = load_vertex_file(p)
        ext[vs.scenario] = list(vs)
    return ext or None


def _emit(args, payload: dict, summary: str):
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True, default=str))
    else:
        print(summary)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True, default=str)
            fh.write("\n")


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_gen_quantum(args) -> int:
    rho = _parse_state(args.state)
    meas = _parse_measurements(args.meas, rho.n_qubits)
    P = born_correlation(rho, meas)
    if args.out:
        save_correlation(P, args.out)
    rep = is_no_signaling(P, args.tol)
    summary = (f"generated {P.scenario.n}-party correlation "
               f"({P.scenario.inputs};{P.scenario.outputs}), "
               f"no-signaling deviation {rep.worst_deviation:.2e}")
    if args.json:
        print(json.dumps(correlation_to_dict(P), sort_keys=True))
    else:
        print(summary)
    return 0


def cmd_check_ns(args) -> int:
    P = load_correlation(args.correlation)
    rep = is_no_signaling(P, args.tol)
    payload = {"passed": rep.passed, "tolerance": rep.tol,
               "worst_deviation": rep.worst_deviation,
               "worst_subset": rep.worst_subset,
               "removed_party": rep.removed_party}
    _emit(args, payload, "no-signaling: PASS" if rep.passed else
          f"no-signaling: FAIL (subset {rep.worst_subset} moves by {rep.worst_deviation:.3e} "
          f"with party {rep.removed_party}'s input)")
    return 0 if rep.passed else 2


def cmd_correlators(args) -> int:
    P = load_correlation(args.correlation)
    table = full_correlators(P)
    rows = [[(qstr(v) if P.mode == "rational" else float(v)) for v in row]
            for row in table.values]
    payload = {"modulus": table.modulus, "values": rows}
    _emit(args, payload, f"full correlators mod {table.modulus}: {len(rows)} inputs")
    return 0


def cmd_simulate_fullcorr(args) -> int:
    sc = _parse_scenario(args.scenario)
    if args.residues == "random":
        rng = np.random.default_rng(args.seed)
        res = tuple(int(r) for r in rng.integers(0, sc.uniform_output_count(),
                                                 sc.n_joint_inputs))
    else:
        res = tuple(int(r) for r in args.residues.split(","))
    f = DeterministicResidueFunction(sc, res)
    P = simulate_full_correlators(f)
    if args.out:
        save_correlation(P, args.out)
    print(f"simulated non-signaling table for residues {','.join(map(str, res))}; "
          f"no-signaling: {is_no_signaling(P).passed}")
    return 0


def cmd_vertices(args) -> int:
    sc = _parse_scenario(args.scenario)
    if args.resource == "NS" and args.k is None and args.partition is None:
        vs = ns_vertices(sc)
    else:
        part = Partition.parse(args.partition) if args.partition else None
        k = args.k if args.k is not None else (part.max_block if part else 1)
        vs = producible_vertices(sc, args.resource, k, partition=part,
                                 external=_load_external(args.vertices))
    if args.out:
        save_vertex_set(vs, args.out)
    print(f"{len(vs)} vertices ({vs.raw_count} before dedup) for "
          f"{args.resource} k={vs.k}" + (f" partition {vs.partition}" if vs.partition else ""))
    return 0


def _membership_common(args, P, result, V):
    ver = verify_certificate(result, P, V)
    payload = result_to_dict(result, V)
    payload["verified"] = ver["ok"]
    if args.certificate:
        with open(args.certificate, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True, default=str)
            fh.write("\n")
    tail = "certificate verified" if ver["ok"] else "CERTIFICATE FAILED VERIFICATION"
    if result.feasible:
        summary = (f"FEASIBLE: {len(result.weights)} weights, residual "
                   f"{result.residual}; {tail}")
    else:
        summary = (f"INFEASIBLE: separating witness emitted (margin "
                   f"{result.farkas_margin}); {tail}")
    _emit(args, payload, summary)
    if not ver["ok"]:
        return EXIT_ERROR
    return result.exit_code()


def _prepare_table(args, P):
    if args.exact and P.mode == "real":
        P, err = P.to_rational(args.denominator)
        print(f"rationalized table (denominator bound {args.denominator}, "
              f"worst entry error {err:.2e})", file=sys.stderr)
    return P


def cmd_membership(args) -> int:
    P = _prepare_table(args, load_correlation(args.correlation))
    mode = "exact" if P.mode == "rational" else "real"
    ext = _load_external(args.vertices)
    if args.partition:
        part = Partition.parse(args.partition)
        result = fixed_partition_membership(P, args.resource, part, mode=mode,
                                            eps=Q(args.eps_num, args.eps_den),
                                            external=ext)
        V = producible_vertices(P.scenario, args.resource, part.max_block,
                                partition=part, external=ext)
    else:
        V = producible_vertices(P.scenario, args.resource, args.k, external=ext)
        result = decompose(P, V, mode=mode, eps=Q(args.eps_num, args.eps_den))
    return _membership_common(args, P, result, V)


def cmd_mgs(args) -> int:
    P = _prepare_table(args, load_correlation(args.correlation))
    mode = "exact" if P.mode == "rational" else "real"
    report = mgs(P, args.resource, args.k_max, mode=mode,
                 eps=Q(args.eps_num, args.eps_den), external=_load_external(args.vertices))
    levels = {}
    for k, res in report.levels.items():
        levels[str(k)] = res if isinstance(res, str) else res.status
    payload = {"resource": report.resource, "levels": levels,
               "mgs": report.mgs, "lower_bound": report.lower_bound}
    if report.mgs is not None:
        summary = f"MGS({args.resource}) = {report.mgs}"
    else:
        summary = (f"MGS({args.resource}) >= {report.lower_bound} "
                   f"(no feasible level up to k={report.k_max})")
    _emit(args, payload, summary)
    return report.exit_code()


def cmd_lift(args) -> int:
    expr = zero_bound_form(_parse_expression(args.ineq))
    s = [int(v) for v in args.settings.split(",")] if args.settings else []
    o = [int(v) for v in args.outcomes.split(",")] if args.outcomes else []
    lifted = lift(expr, args.h, s, o)
    payload = expression_to_dict(lifted)
    if args.out:
        save_expression(lifted, args.out)
    _emit(args, payload, f"lifted to {lifted.scenario.n} parties "
          f"(settings {s}, outcomes {o}), bound 0")
    return 0


def cmd_eval(args) -> int:
    expr = _parse_expression(args.ineq)
    P = load_correlation(args.correlation)
    val = evaluate(expr, P)
    violation = (val - expr.bound) if expr.bound != 0 else val
    payload = {"value": float(val) if isinstance(val, float) else qstr(val),
               "bound": qstr(expr.bound),
               "violation": float(violation) if isinstance(violation, float)
               else qstr(violation)}
    _emit(args, payload, f"value {val}  (bound {expr.bound}; above-bound part {violation})")
    return 0


def cmd_facet_rank(args) -> int:
    expr = _parse_expression(args.ineq)
    if args.vertex_file:
        V = load_vertex_file(args.vertex_file)
    else:
        V = producible_vertices(expr.scenario, args.resource, args.k)
    count, rank_, dim = facet_rank(expr, V)
    payload = {"saturating": count, "affine_rank": rank_, "dimension": dim,
               "facet": rank_ == dim - 1}
    _emit(args, payload, f"{count} saturating vertices, affine rank {rank_}, "
          f"polytope dimension {dim} -> {'facet' if rank_ == dim - 1 else 'not a facet'}")
    return 0


def cmd_reproduce(args) -> int:
    return repro.run_case(args.case, as_json=args.json, skip_slow=args.quick,
                          external=_load_external(args.vertices))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mgs",
        description="minimal group size toolbox: producible polytopes, LP "
                    "membership certificates, Bell-like witnesses")
    ap.add_argument("--threads", type=int, default=1,
                    help="accepted for interface stability; results never depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--json", action="store_true", help="machine-readable stdout")
        p.add_argument("--out", help="write the result payload to this path")

    p = sub.add_parser("gen-quantum", help="Born-rule correlation from a state + measurements")
    p.add_argument("--state", required=True, help="ghz:N | sec3a | sec3c:V | state.json")
    p.add_argument("--meas", required=True,
                   help="tilted-xy | svet3 | svet3+z | xy | measurements.json")
    p.add_argument("--tol", type=float, default=1e-9)
    add_common(p)
    p.set_defaults(fn=cmd_gen_quantum)

    p = sub.add_parser("check-ns", help="no-signaling check with worst-marginal report")
    p.add_argument("--correlation", required=True)
    p.add_argument("--tol", type=float, default=None)
    add_common(p)
    p.set_defaults(fn=cmd_check_ns)

    p = sub.add_parser("correlators", help="full-correlator projection of a correlation")
    p.add_argument("--correlation", required=True)
    add_common(p)
    p.set_defaults(fn=cmd_correlators)

    p = sub.add_parser("simulate-fullcorr",
                       help="non-signaling table realizing a deterministic residue function")
    p.add_argument("--scenario", required=True, help='e.g. "2,2;2,2"')
    p.add_argument("--residues", required=True,
                   help='comma list per joint input, or "random"')
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(fn=cmd_simulate_fullcorr)

    p = sub.add_parser("vertices", help="enumerate producible-polytope vertices")
    p.add_argument("--scenario", required=True)
    p.add_argument("--resource", default="NS", choices=("L", "NS", "S"))
    p.add_argument("--k", type=int)
    p.add_argument("--partition", help='e.g. "0,1|2,3"')
    p.add_argument("--vertices", action="append",
                   help="external group vertex file (repeatable)")
    add_common(p)
    p.set_defaults(fn=cmd_vertices)

    def add_lp_opts(p):
        p.add_argument("--exact", action="store_true",
                       help="rationalize a real table and certify exactly")
        p.add_argument("--denominator", type=int, default=10 ** 6,
                       help="denominator bound for --exact rationalization")
        p.add_argument("--tol", dest="eps", type=float, default=None,
                       help="real-mode feasibility tolerance (default 1e-8)")
        p.add_argument("--vertices", action="append",
                       help="external group vertex file (repeatable)")
        p.add_argument("--certificate", help="write the certificate JSON here")

    p = sub.add_parser("membership", help="LP membership with certificate")
    p.add_argument("--correlation", required=True)
    p.add_argument("--resource", required=True, choices=("L", "NS", "S"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--partition")
    add_lp_opts(p)
    add_common(p)
    p.set_defaults(fn=cmd_membership)

    p = sub.add_parser("mgs", help="minimal group size sweep")
    p.add_argument("--correlation", required=True)
    p.add_argument("--resource", required=True, choices=("L", "NS", "S"))
    p.add_argument("--k-max", type=int, default=None)
    add_lp_opts(p)
    add_common(p)
    p.set_defaults(fn=cmd_mgs)

    p = sub.add_parser("lift", help="lift an inequality to more parties")
    p.add_argument("--ineq", required=True,
                   help="chsh | svetlichny3 | ns3 | ineq10 | lifted(...) | file.json")
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--settings", default="")
    p.add_argument("--outcomes", default="")
    add_common(p)
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("eval", help="evaluate an inequality on a correlation")
    p.add_argument("--ineq", required=True)
    p.add_argument("--correlation", required=True)
    add_common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("facet-rank", help="saturation rank of a valid inequality")
    p.add_argument("--ineq", required=True)
    p.add_argument("--resource", default="L", choices=("L", "NS", "S"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--vertex-file")
    add_common(p)
    p.set_defaults(fn=cmd_facet_rank)

    p = sub.add_parser("reproduce", help="re-derive a published benchmark case")
    p.add_argument("case", choices=sorted(repro.CASES) + ["all"])
    p.add_argument("--quick", action="store_true",
                   help="skip the long LP checks inside a case")
    p.add_argument("--vertices", action="append",
                   help="optional external group vertex file (3+ party "
                        "non-signaling checks stay skipped without one)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # eps as exact rational (float tolerances become dyadic rationals)
    eps = getattr(args, "eps", None)
    if eps is None:
        args.eps_num, args.eps_den = 1, 10 ** 8
    else:
        from fractions import Fraction
        f = Fraction(eps).limit_denominator(10 ** 12)
        args.eps_num, args.eps_den = f.numerator, f.denominator
    try:
        return args.fn(args)
    except MissingVertexDataError as exc:
        print(f"unresolved: {exc}", file=sys.stderr)
        return 3
    except (CapExceededError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
