"""Command line entry points: ``verify``, ``corona``, ``norm`` and ``fuzz``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
errors and malformed input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corona import build_corona, verify_corona_properties
from .instances import InstanceFormatError, InstanceSpec, generate_instance, load_instance
from .lattice import ExponentPair
from .norm import DEFAULT_ATOM_CAP, ResourceLimitError, theorem_sandwich_check
from .report import VerifyOptions, run_fuzz, run_verify, write_csv
from .testing_conditions import testing_report

log = logging.getLogger("twoweight")


def _p_values(values: list[str] | None, default: list[float]) -> list[float]:
    if not values:
        return default
    out = []
    for v in values:
        out.extend(float(x) for x in v.split(",") if x.strip())
    for p in out:
        ExponentPair(p)
    return out


def _arity(text: str):
    parts = [int(x) for x in text.split(",")]
    return parts[0] if len(parts) == 1 else parts


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=3, help="lattice depth for generated instances")
    common.add_argument("--arity", type=_arity, default=2, help="branching: int or comma list per level")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--p", action="append", metavar="P", help="exponent(s); repeat or comma-separate")
    common.add_argument("--out", type=Path, help="report JSON path (fuzz: output directory)")
    common.add_argument("--cap", type=int, default=DEFAULT_ATOM_CAP, help="atom cap for the dense p=2 norm")
    common.add_argument("--restarts", type=int, default=8, help="random restarts for the norm search")
    common.add_argument("-v", "--verbose", action="store_true")

    inst = argparse.ArgumentParser(add_help=False)
    inst.add_argument("--in", dest="instance", type=Path, help="instance JSON; generated from flags if omitted")
    inst.add_argument("--measure-model", default="log-uniform")
    inst.add_argument("--alpha-model", default="dense")
    inst.add_argument("--function-model", default="random")

    ap = argparse.ArgumentParser(prog="twoweight", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common, inst], help="run all checks on one instance")
    sub.add_parser("corona", parents=[common, inst], help="print the stopping-cube tree for f")
    sub.add_parser("norm", parents=[common, inst], help="testing and embedding constants")
    fz = sub.add_parser("fuzz", parents=[common], help="verify many generated instances")
    fz.add_argument("--count", type=int, default=100)
    fz.add_argument("--jobs", type=int, default=1, help="worker processes")
    fz.add_argument("--csv", type=Path, help="CSV path (default: <out>/fuzz.csv when --out is given)")
    return ap


def _instance(args):
    if args.instance is not None:
        return load_instance(args.instance)
    spec = InstanceSpec(
        depth=args.depth,
        arity=args.arity,
        seed=args.seed,
        measure_model=args.measure_model,
        alpha_model=args.alpha_model,
        function_model=args.function_model,
    )
    return generate_instance(spec)


def _write(obj, path: Path | None) -> None:
    text = json.dumps(obj, indent=1, default=float)
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")


def _cmd_verify(args) -> int:
    inst = _instance(args)
    p_list = _p_values(args.p, [2.0])
    opts = VerifyOptions(restarts=args.restarts, seed=args.seed, cap=args.cap)
    rep = run_verify(inst, p_list, opts)
    _write(rep, args.out)
    for key in p_list:
        k = repr(float(key))
        sw = rep["sandwich"][k]
        c1 = sw["c1_exact_p2"] if sw["c1_exact_p2"] is not None else sw["c1_lower"]
        print(f"p={key:g}  c2={sw['c2']:.6g}  c1={c1:.6g}  K(p)={sw['k_of_p']:.6g}")
    for name, ok in rep["pass"].items():
        print(f"{name:12s} {'PASS' if ok else 'FAIL'}")
    return 0 if rep["pass"]["all"] else 1


def _cmd_corona(args) -> int:
    inst = _instance(args)
    c = build_corona(inst.lattice, None, inst.mu, abs(inst.f))
    for line in c.tree_lines():
        print(line)
    props = verify_corona_properties(c, inst.mu, abs(inst.f))
    print(f"generations={len(c.generations)}  carleson_constant={props.carleson_constant:.6g}  ok={props.ok}")
    for msg in props.failures:
        print(f"  {msg}")
    _write({"corona": c.to_dict(), "properties": props.to_dict()}, args.out)
    return 0 if props.ok else 1


def _cmd_norm(args) -> int:
    inst = _instance(args)
    out = {}
    ok = True
    for p in _p_values(args.p, [2.0]):
        e = ExponentPair(p)
        tr = testing_report(inst.alpha, inst.mu, inst.nu, e)
        sw = theorem_sandwich_check(inst.alpha, inst.mu, inst.nu, e, restarts=args.restarts, seed=args.seed, cap=args.cap)
        print(
            f"p={p:g}  c2_forward={tr.c2_forward:.6g} ({tr.worst_cube_forward})  "
            f"c2_dual={tr.c2_dual:.6g} ({tr.worst_cube_dual})  c1_lower={sw.c1_lower:.6g}"
            + (f"  c1_exact={sw.c1_exact_p2:.6g}" if sw.c1_exact_p2 is not None else "")
            + f"  holds={sw.holds}"
        )
        out[repr(float(p))] = {"testing": tr.to_dict(), "sandwich": sw.to_dict()}
        ok &= sw.holds
    _write(out, args.out)
    return 0 if ok else 1


def _cmd_fuzz(args) -> int:
    p_list = _p_values(args.p, [2.0])
    opts = VerifyOptions(restarts=args.restarts, seed=args.seed, cap=args.cap)
    rep = run_fuzz(args.count, args.depth, args.seed, p_list, opts, jobs=args.jobs, arity=args.arity)
    csv_path = args.csv
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        _write(rep, args.out / "fuzz_report.json")
        csv_path = csv_path or args.out / "fuzz.csv"
    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as fh:
            write_csv(rep, fh)
    ratios = ", ".join(f"p={k}: {v:.4g}" for k, v in rep["max_observed_c1_over_c2"].items())
    print(f"instances={rep['count']}  failures={len(rep['failures'])}  max c1/c2: {ratios}")
    return 0 if rep["pass"] else 1


COMMANDS = {"verify": _cmd_verify, "corona": _cmd_corona, "norm": _cmd_norm, "fuzz": _cmd_fuzz}


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InstanceFormatError as exc:
        print(f"twoweight: malformed instance: {exc}", file=sys.stderr)
        return 2
    except (OSError, ResourceLimitError) as exc:
        print(f"twoweight: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"twoweight: invalid argument: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
