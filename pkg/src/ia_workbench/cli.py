"""Command-line entry point: ``ia-workbench <subcommand> [options]``.

Every JSON report carries a ``run`` section with the subcommand and its full
effective arguments; ``ia-workbench --replay report.json`` re-executes it.
Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from ._parallel import map_ordered
from .cj_alignment import build_beam_basis, build_interference_basis, verify_alignment
from .dof import (
    achieved_fraction,
    dof_report,
    fmt,
    mimo_x_dof,
    outer_bound_simo,
    scale_invariance_check,
)
from .feasibility import (
    LEAK_TOL,
    DofDemand,
    Verdict,
    properness,
    solve_spatial_ia,
)
from .network import NetworkConfig, draw_extended_channels, draw_spatial_channels
from .separability import (
    RANK_TOL,
    admissible_ms,
    assemble_F,
    choose_extension_length,
    draw_construction,
    rank_certificate,
    smallest_admissible_m,
    step1_specialization_check,
    step2_induction_trace,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_range(text: str) -> tuple[int, int]:
    lo, sep, hi = str(text).partition(":")
    try:
        a, b = int(lo), int(hi if sep else lo)
    except ValueError:
        raise UsageError(f"expected an integer or LO:HI range, got {text!r}") from None
    if a < 1 or b < a:
        raise UsageError(f"range {text!r} must satisfy 1 <= LO <= HI")
    return a, b


def _single(params: dict, key: str) -> int:
    lo, hi = _int_range(params[key])
    if lo != hi:
        raise UsageError(f"--{key} takes a single value unless --table is given")
    return lo


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _load_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc.msg} at line {exc.lineno}") from None


def _network_and_demand(params: dict) -> tuple[NetworkConfig, DofDemand]:
    if params.get("input"):
        doc = _load_json(params["input"])
        try:
            config = NetworkConfig.from_dict(doc["network"])
            demand = DofDemand(tuple(map(tuple, doc["demand"])))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"input needs 'network' and 'demand' entries ({exc})") from None
    else:
        missing = [k for k in ("M", "N", "A", "B", "d") if params.get(k) is None]
        if missing:
            raise UsageError("give --input or all of --M --N --A --B --d (missing: "
                             + ", ".join("--" + k for k in missing) + ")")
        config = NetworkConfig.symmetric(params["M"], params["N"], params["A"], params["B"])
        demand = DofDemand.symmetric(params["M"], params["N"], params["d"])
    demand.validate(config)
    return config, demand


# -- subcommands -----------------------------------------------------------
# each returns (result, exit_code, text) where text, if not None, replaces the JSON output

def cmd_dof(params: dict):
    if params["table"]:
        rows = []
        (m0, m1), (n0, n1), (r0, r1), (a0, a1) = (
            _int_range(params[k]) for k in ("M", "N", "R", "A"))
        for M in range(m0, m1 + 1):
            for N in range(n0, n1 + 1):
                for R in range(r0, r1 + 1):
                    for A in range(a0, a1 + 1):
                        rep = dof_report(A * M, N, A * R)
                        rows.append([M, N, R, A, fmt(rep.outer_bound), fmt(rep.achievable_limit)])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["M", "N", "R", "A", "outer", "achievable"])
        w.writerows(rows)
        return {"rows": len(rows)}, EXIT_OK, buf.getvalue()
    M, N, R, A = (_single(params, k) for k in ("M", "N", "R", "A"))
    scaled = dof_report(A * M, N, A * R, params["m"])
    result = {
        "network": {"M": M, "N": N, "tx_antennas": A, "rx_antennas": A * R},
        "report": scaled.to_dict(),
        "base_simo": dof_report(M, N, R).to_dict() if A > 1 else None,
        "scale_invariance": scale_invariance_check(M, N, R, A).to_dict(),
    }
    if R == 1:
        result["mimo_x_dof"] = fmt(mimo_x_dof(M, N, A))
    return result, EXIT_OK, None


def cmd_properness(params: dict):
    config, demand = _network_and_demand(params)
    return {"network": config.to_dict(), "demand": demand.to_list(),
            **properness(config, demand).to_dict()}, EXIT_OK, None


def cmd_cj_verify(params: dict):
    M, N, R = params["M"], params["N"], params["R"]
    m = params["m"] if params["m"] is not None else smallest_admissible_m(M, N, R)
    plan = choose_extension_length(M, N, R, m)
    channels = draw_extended_channels(NetworkConfig.simo(M, N, R), plan.n, params["seed"])
    receivers = range(N) if params["receiver"] is None else [params["receiver"]]
    reports = []
    for j in receivers:
        if not 0 <= j < N:
            raise UsageError(f"--receiver {j} out of range 0..{N - 1}")
        V = build_beam_basis(channels, j, m)
        I = build_interference_basis(channels, j, m)
        reports.append(verify_alignment(channels, V, j, I).to_dict())
        if params["dump_basis"]:
            prefix = f"{params['dump_basis']}.rx{j}"
            Path(prefix + ".json").write_text(json.dumps(V.to_dict()))
            Path(prefix + ".bin").write_bytes(V.column_bytes())
    ok = all(r["pass"] for r in reports)
    return {"plan": plan.to_dict(), "seed": params["seed"], "receivers": reports,
            "pass": ok}, (EXIT_OK if ok else EXIT_FAIL), None


def _separability_trial(M, N, R, m, seed, tol, step1, step2):
    con = draw_construction(M, N, R, m, seed)
    cert = rank_certificate(assemble_F(con), tol)
    p = con.plan
    row = {"config": {"M": M, "N": N, "R": R}, "m": m, "n": p.n,
           "counts": {"L": p.L, "signal_dim": p.signal_dim,
                      "interference_dim": p.interference_dim},
           "sigma_min": cert.sigma_min, "sigma_max": cert.sigma_max,
           "pass": cert.full_rank, "seed": seed}
    if step1:
        row["step1_pass"] = step1_specialization_check(con, tol_rel=tol).passed
        row["pass"] = row["pass"] and row["step1_pass"]
    if step2:
        trace = step2_induction_trace(con, tol_rel=tol)
        row["step2_pass"] = trace.all_full_rank and trace.matches_direct
        row["pass"] = row["pass"] and row["step2_pass"]
    return row


def cmd_separability(params: dict):
    M, N, R = params["M"], params["N"], params["R"]
    m = params["m"] if params["m"] is not None else smallest_admissible_m(M, N, R)
    choose_extension_length(M, N, R, m)
    if params["seeds"] < 1:
        raise UsageError("--seeds must be positive")
    seeds = range(params["seed"], params["seed"] + params["seeds"])
    rows = map_ordered(lambda s: _separability_trial(M, N, R, m, s, params["tol"],
                                                     params["step1"], params["step2"]), seeds)
    passed = sum(r["pass"] for r in rows)
    if params["csv"]:
        _write_csv(params["csv"], ["seed", "n", "sigma_min", "sigma_max", "ratio", "pass"],
                   [[r["seed"], r["n"], repr(r["sigma_min"]), repr(r["sigma_max"]),
                     repr(r["sigma_min"] / r["sigma_max"]), r["pass"]] for r in rows])
    ok = passed == len(rows)
    return {"trials": len(rows), "pass_count": passed, "pass": ok, "runs": rows}, \
        (EXIT_OK if ok else EXIT_FAIL), None


def cmd_ia_solve(params: dict):
    config, demand = _network_and_demand(params)
    channels = draw_spatial_channels(config, params["seed"])
    res = solve_spatial_ia(channels, demand, params["max_iters"], params["leak_tol"],
                           params["restarts"], params["seed"])
    if params["trace_csv"]:
        Path(params["trace_csv"]).write_text(res.trace.to_csv())
    out = {"network": config.to_dict(), "demand": demand.to_list(),
           "properness": properness(config, demand).to_dict(), **res.to_dict()}
    code = EXIT_OK
    expect = params.get("expect")
    if expect == "feasible" and res.verdict is not Verdict.FEASIBLE_EVIDENCE:
        code = EXIT_FAIL
    if expect == "infeasible" and res.verdict is not Verdict.INFEASIBLE_EVIDENCE:
        code = EXIT_FAIL
    return out, code, None


def cmd_sweep(params: dict):
    M, N, R = params["M"], params["N"], params["R"]
    ms = admissible_ms(M, N, R, params["count"], params["m_start"])
    limit = outer_bound_simo(M, N, R)
    rows = []
    for m in ms:
        plan = choose_extension_length(M, N, R, m)
        passes = 0
        for s in range(params["seed"], params["seed"] + params["seeds"]):
            con = draw_construction(M, N, R, m, s)
            passes += rank_certificate(assemble_F(con), params["tol"]).full_rank
        rows.append({"m": m, "n": plan.n, "signal_dim": plan.signal_dim,
                     "interference_dim": plan.interference_dim,
                     "achieved": fmt(achieved_fraction(M, N, R, m)), "limit": fmt(limit),
                     "pass_count": passes, "trials": params["seeds"]})
    if params["csv"]:
        keys = list(rows[0])
        _write_csv(params["csv"], keys, [[r[k] for k in keys] for r in rows])
    ok = all(r["pass_count"] == r["trials"] for r in rows)
    return {"rows": rows, "pass": ok}, (EXIT_OK if ok else EXIT_FAIL), None


COMMANDS = {
    "dof": cmd_dof,
    "properness": cmd_properness,
    "cj-verify": cmd_cj_verify,
    "separability": cmd_separability,
    "ia-solve": cmd_ia_solve,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(
        prog="ia-workbench", formatter_class=fmt_cls,
        description="DoF calculators and alignment/feasibility verifiers for MIMO X networks. "
                    "Parallelism is capped by IA_WORKBENCH_THREADS (default 1).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--replay", metavar="REPORT", help="re-run the configuration echoed in a JSON report")
    sub = p.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def simo_args(sp, m_help="degree cap m (default: smallest admissible)"):
        sp.add_argument("--M", type=int, required=True, help="transmitters")
        sp.add_argument("--N", type=int, required=True, help="receivers")
        sp.add_argument("--R", type=int, default=1, help="antennas per receiver")
        sp.add_argument("--m", type=int, default=None, help=m_help)

    def network_args(sp):
        sp.add_argument("--input", help="JSON file (or -) with {'network': {...}, 'demand': [[...]]}")
        for k, h in (("M", "transmitters"), ("N", "receivers"), ("A", "antennas per transmitter"),
                     ("B", "antennas per receiver"), ("d", "streams per message")):
            sp.add_argument(f"--{k}", type=int, default=None, help=h)

    sp = sub.add_parser("dof", formatter_class=fmt_cls,
                        help="outer bound, achievable limit and finite-m value")
    sp.add_argument("--M", required=True, help="transmitters (LO:HI with --table)")
    sp.add_argument("--N", required=True, help="receivers (LO:HI with --table)")
    sp.add_argument("--R", default="1", help="receive antennas of the base SIMO network")
    sp.add_argument("--A", default="1", help="spatial scaling factor")
    sp.add_argument("--m", type=int, default=None, help="degree cap for the achieved value")
    sp.add_argument("--table", action="store_true", help="sweep the ranges and emit CSV")

    sp = sub.add_parser("properness", formatter_class=fmt_cls, help="equation/variable counts")
    network_args(sp)

    sp = sub.add_parser("cj-verify", formatter_class=fmt_cls, help="exact alignment containment")
    simo_args(sp)
    sp.add_argument("--receiver", type=int, default=None, help="only this receiver (0-based)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dump-basis", metavar="PREFIX", default=None,
                    help="write PREFIX.rxJ.json descriptors and PREFIX.rxJ.bin column dumps")

    sp = sub.add_parser("separability", formatter_class=fmt_cls,
                        help="Monte-Carlo rank certificates of the signal-space matrix")
    simo_args(sp)
    sp.add_argument("--seeds", type=int, default=10, help="number of trials")
    sp.add_argument("--seed", type=int, default=0, help="first seed")
    sp.add_argument("--tol", type=float, default=RANK_TOL, help="relative singular-value tolerance")
    sp.add_argument("--step1", action="store_true", help="also run the block-diagonal specialization")
    sp.add_argument("--step2", action="store_true", help="also run the row/column induction")
    sp.add_argument("--csv", default=None, help="per-seed CSV output path")

    sp = sub.add_parser("ia-solve", formatter_class=fmt_cls,
                        help="alternating-minimization IA solver (feasibility evidence)")
    network_args(sp)
    sp.add_argument("--max-iters", type=int, default=2000)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--leak-tol", type=float, default=LEAK_TOL,
                    help="threshold on both raw and normalized leakage")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace-csv", default=None, help="write (restart, iteration, leakage) CSV")
    sp.add_argument("--expect", choices=["feasible", "infeasible"], default=None,
                    help="exit 1 unless the verdict matches")

    sp = sub.add_parser("sweep", formatter_class=fmt_cls,
                        help="achieved DoF and rank pass counts over admissible m")
    simo_args(sp, m_help="unused; see --m-start")
    sp.add_argument("--m-start", type=int, default=None, help="first m to consider")
    sp.add_argument("--count", type=int, default=3, help="number of admissible m values")
    sp.add_argument("--seeds", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=RANK_TOL)
    sp.add_argument("--csv", default=None, help="CSV output path")
    return p


def execute(subcommand: str, params: dict) -> tuple[dict, int, str | None]:
    result, code, text = COMMANDS[subcommand](params)
    report = {"run": {"subcommand": subcommand, "args": params, "version": __version__},
              "result": result}
    return report, code, text


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if ns.replay:
            doc = _load_json(ns.replay)
            try:
                subcommand, params = doc["run"]["subcommand"], doc["run"]["args"]
            except (KeyError, TypeError):
                raise UsageError(f"{ns.replay} has no 'run' section to replay") from None
            if subcommand not in COMMANDS:
                raise UsageError(f"unknown subcommand {subcommand!r} in {ns.replay}")
        elif ns.subcommand is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand (or --replay) is required")
        else:
            subcommand = ns.subcommand
            params = {k: v for k, v in vars(ns).items() if k not in ("out", "replay", "subcommand")}
        report, code, text = execute(subcommand, params)
    except (UsageError, ValueError) as exc:
        print(f"ia-workbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    body = text if text is not None else json.dumps(report, indent=2) + "\n"
    if ns.out:
        Path(ns.out).write_text(body)
    else:
        sys.stdout.write(body)
    return code


def main() -> None:
    sys.exit(run())
