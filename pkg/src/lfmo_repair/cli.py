"""Command-line front end.

Every subcommand reads a system, a subordinator and (where needed) a cost
model, either from one ``--spec`` run file or from separate ``--system``,
``--subordinator`` and ``--costs`` files.  The analytic commands (evaluate,
sweep, mttf, process-signature) accept ``--signature`` in place of, or on top
of, a system.  File names that do not exist on
disk are looked up among the bundled examples (``lfmo-repair list``).

Exit status: 0 on success, 1 on invalid input, 2 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from .errors import NumericInstabilityError, ValidationError
from .failure_chain import FailureChain
from .oracle import FullStateModel, cycle_metrics
from .policy import TABLE_COLUMNS, CostModel, evaluate_policy, process_signature, sweep_policies, system_mttf
from .simulate import QUANTILE_COLUMNS, SimulationConfig, convergence_study, write_csv
from .specs import RunSpec, bundled_names, load_json
from .structure import Signature, structural_signature, structure_from_json
from .subordinator import exponent_from_json, psi_table

__all__ = ["main", "build_parser"]

_HORIZON_NOTE = "Events at exactly the horizon are counted; later events are discarded."


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors: exit 1, keeping 2 for numerical failures
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, costs: bool = True, r: bool = False) -> None:
    p.add_argument("--spec", help="run spec file (system, subordinator, costs, policy, output)")
    p.add_argument("--system", help="system structure JSON file or bundled name")
    p.add_argument("--signature", help="signature JSON file or bundled name; overrides the system's own")
    p.add_argument("--subordinator", help="subordinator JSON file or bundled name")
    if costs:
        p.add_argument("--costs", help="cost model JSON file or bundled name")
    if r:
        p.add_argument("--r", type=int, help="repair threshold r (1..n)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--out", help="output path (default stdout)")


def _sim(p: argparse.ArgumentParser, many: bool) -> None:
    if many:
        p.add_argument("--horizons", type=float, nargs="+", default=[10.0, 100.0, 1000.0, 10000.0],
                       help="ascending simulation horizons (default 10 100 1000 10000)")
        p.add_argument("--all-r", action="store_true", help="run every threshold r = 1..n")
    else:
        p.add_argument("--horizon", type=float, help="simulation horizon (default 10000)")
    p.add_argument("--reps", type=int, help="replications (default 1000)")
    p.add_argument("--seed", type=int, help="64-bit seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lfmo-repair", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("signature", help="exact structural and minimal signatures")
    p.add_argument("--spec")
    p.add_argument("--system")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    _common(sub.add_parser("evaluate", help="evaluate one r-out-of-n:R policy"), r=True)
    _common(sub.add_parser("sweep", help="evaluate every threshold r = 1..n"))
    _common(sub.add_parser("mttf", help="mean time to system failure without repairs"), costs=False)
    _common(sub.add_parser("process-signature", help="failed count at system failure"), costs=False)
    _common(sub.add_parser("oracle", help="full-state Markov chain check (n <= 12)"), r=True)
    p = sub.add_parser("simulate", help="Monte Carlo estimators at one horizon", epilog=_HORIZON_NOTE)
    _common(p, r=True)
    _sim(p, many=False)
    p = sub.add_parser("convergence", help="quantile bands over several horizons", epilog=_HORIZON_NOTE)
    _common(p, r=True)
    _sim(p, many=True)
    sub.add_parser("list", help="list bundled example files")
    return parser


def _load_spec(args: argparse.Namespace, need_costs: bool) -> RunSpec:
    if args.spec:
        spec = RunSpec.load(args.spec)
        system, sub_, costs, r = spec.system, spec.subordinator, spec.costs, spec.r
        fmt, path, extra, sig = spec.format, spec.path, spec.extra, spec.signature
    else:
        system = sub_ = costs = r = path = sig = None
        fmt, extra = "csv", {}
    if args.system:
        system = structure_from_json(load_json(args.system))
    if getattr(args, "signature", None):
        sig = Signature.from_json(load_json(args.signature))
    if getattr(args, "subordinator", None):
        sub_ = exponent_from_json(load_json(args.subordinator))
    analytic = args.command in {"evaluate", "sweep", "mttf", "process-signature"}
    if system is None and not (analytic and sig is not None):
        raise ValidationError("a system is required (--system or --spec)")
    n = system.n if system is not None else sig.n
    if getattr(args, "costs", None):
        costs = CostModel.from_json(load_json(args.costs), n)
    if getattr(args, "r", None) is not None:
        r = args.r
    if getattr(args, "format", None):
        fmt = args.format
    if getattr(args, "out", None):
        path = args.out
    if sub_ is None and args.command != "signature":
        raise ValidationError("a subordinator is required (--subordinator or --spec)")
    if need_costs and costs is None:
        raise ValidationError("a cost model is required (--costs or --spec)")
    if sub_ is None:
        from .subordinator import PureDrift

        sub_ = PureDrift(1.0)
    if costs is not None and costs.n != n:
        raise ValidationError(f"costs have n = {costs.n} but the system has n = {n}")
    if r is not None and not 1 <= r <= n:
        raise ValidationError(f"r must be in 1..n (n = {n}), got {r}")
    return RunSpec(system, sub_, costs, r, fmt, path, extra, sig)


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(spec: RunSpec, rows: list[dict], columns: Sequence[str], payload: Any = None) -> None:
    if spec.format == "json":
        text = json.dumps(_jsonable(payload if payload is not None else rows), indent=2) + "\n"
    else:
        text = write_csv([{c: ("inf" if isinstance(v, float) and math.isinf(v) else v) for c, v in row.items()}
                          for row in rows], columns=columns)
    if spec.path:
        Path(spec.path).write_text(text)
    else:
        sys.stdout.write(text)


def _chain(spec: RunSpec) -> FailureChain:
    return FailureChain(psi_table(spec.subordinator, spec.n))


def _require_r(spec: RunSpec, command: str) -> int:
    if spec.r is None:
        raise ValidationError(f"`{command}` needs --r (or a policy with r in the spec)")
    return spec.r


def _run(args: argparse.Namespace) -> None:
    cmd = args.command
    if cmd == "list":
        for name in bundled_names():
            print(name)
        return
    spec = _load_spec(args, need_costs=cmd in {"evaluate", "sweep", "oracle", "simulate", "convergence"})

    if cmd == "signature":
        sig = structural_signature(spec.system)
        rows = [
            {"k": k, "s": str(sig.s[k - 1]), "s_float": float(sig.s[k - 1]), "sbar": str(sig.sbar[k]),
             "a": str(sig.a[k - 1])}
            for k in range(1, sig.n + 1)
        ]
        _emit(spec, rows, ("k", "s", "s_float", "sbar", "a"), sig.to_json())
        return

    if cmd == "oracle":
        model = FullStateModel(spec.system, psi_table(spec.subordinator, spec.n))
        rs = [spec.r] if spec.r is not None else range(1, spec.n + 1)
        out = []
        for r in rs:
            m = cycle_metrics(model, r, spec.costs)
            out.append({"r": r, "p": m.p, "E_T_rep": m.e_t_rep, "E_N_rep": m.e_n_rep, "E_C_rep": m.e_c_rep,
                        "LTMN": m.ltmn, "LTMC": m.ltmc, "n_rep_dist": [float(x) for x in m.n_rep_dist]})
        cols = ("r", "p", "E_T_rep", "E_N_rep", "E_C_rep", "LTMN", "LTMC")
        _emit(spec, [{c: row[c] for c in cols} for row in out], cols, out)
        return

    if cmd in {"simulate", "convergence"}:
        sim = spec.extra.get("simulation", {})
        reps = args.reps if args.reps is not None else int(sim.get("replications", 1000))
        seed = args.seed if args.seed is not None else int(sim.get("seed", 0))
        if cmd == "simulate":
            horizons = [args.horizon if args.horizon is not None else float(sim.get("horizon", 1e4))]
            rs = [_require_r(spec, cmd)]
        else:
            horizons = args.horizons
            rs = list(range(1, spec.n + 1)) if args.all_r or spec.r is None else [spec.r]
        cfg = SimulationConfig(spec.system, psi_table(spec.subordinator, spec.n), rs[0], spec.costs,
                               float(horizons[-1]), reps, seed)
        rows = convergence_study(cfg, horizons, rs)
        _emit(spec, rows, QUANTILE_COLUMNS)
        return

    sig = spec.signature if spec.signature is not None else structural_signature(spec.system)
    chain = _chain(spec)
    if cmd == "evaluate":
        ev = evaluate_policy(sig, chain, _require_r(spec, cmd), spec.costs)
        _emit(spec, [ev.as_row()], TABLE_COLUMNS, ev.to_json())
    elif cmd == "sweep":
        evs = sweep_policies(sig, chain, spec.costs)
        _emit(spec, [e.as_row() for e in evs], TABLE_COLUMNS, [e.to_json() for e in evs])
    elif cmd == "mttf":
        _emit(spec, [{"mttf": system_mttf(sig, chain)}], ("mttf",))
    elif cmd == "process-signature":
        q = process_signature(sig, chain)
        rows = [{"j": j, "q": float(q[j - 1]), "s": float(sig.s[j - 1])} for j in range(1, spec.n + 1)]
        _emit(spec, rows, ("j", "q", "s"))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericInstabilityError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
