"""Command-line front end.

Every command writes one record, either as JSON::

    {"command": ..., "inputs": {...}, "outputs": {...},
     "variants": {"zhu_prefactor": ..., "kairouz_branch": ..., "bc_gaussian_form": ...},
     "version": ...}

or as CSV holding the ``outputs`` fields (one row per table row). Floats are
written with 17 significant digits; non-finite values as "inf", "-inf", "nan".

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from privcap import __version__
from privcap import accountant as acc
from privcap import dpconvert, noisechan, qif
from privcap.rdp import GaussParams, VmfParams, rdp_curve
from privcap.specfn import DomainError

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
SWEEP_OUTPUTS = ("epsilon_approach1", "epsilon_approach2", "epsilon_best", "winner",
                 "alpha_star", "log_capacity", "capacity")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_real(text: str) -> float:
    """A decimal or rational literal such as ``1/60000``."""
    try:
        if "/" in text:
            return float(Fraction(text.strip()))
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def parse_grid(text: str) -> List[float]:
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty grid")
    return [parse_real(t) for t in items]


def _real_field(value, name: str) -> float:
    if isinstance(value, str):
        try:
            return parse_real(value)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{name}: {exc}") from exc
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"{name} must be a number")
    return float(value)


# ---------------------------------------------------------------------------
# output


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _to_json(obj: Any) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt_float(x) if math.isfinite(x) else json.dumps(fmt_float(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_csv_cell(x) for x in v)
    return str(v)


def render(record: Dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return _to_json(record) + "\n"
    outputs = record["outputs"]
    rows = outputs["rows"] if "rows" in outputs else [outputs]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys()) if rows else []
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(row[k]) for k in header])
    return buf.getvalue()


def make_record(command: str, args, inputs: Dict[str, Any], outputs: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "variants": {
            "zhu_prefactor": args.variant_zhu,
            "kairouz_branch": args.variant_kairouz,
            "bc_gaussian_form": args.variant_bc,
        },
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# mechanism and scenario from flags


def _mechanism(args, need_p_for_gauss: bool = False):
    if args.mechanism == "vmf":
        if args.kappa is None or args.p is None:
            raise UsageError("vmf needs --p and --kappa")
        return VmfParams(args.p, args.kappa)
    if args.sigma is None:
        raise UsageError("gauss needs --sigma")
    if need_p_for_gauss and args.p is None:
        raise UsageError("gauss capacity needs --p")
    return GaussParams(args.sigma, p=args.p, radius=args.radius)


def _mech_inputs(args) -> Dict[str, Any]:
    d: Dict[str, Any] = {"mechanism": args.mechanism, "p": args.p}
    if args.mechanism == "vmf":
        d["kappa"] = args.kappa
    else:
        d["sigma"] = args.sigma
        d["radius"] = args.radius
    return d


def _variants(args) -> acc.Variants:
    return acc.Variants(zhu_prefactor=args.variant_zhu, kairouz_branch=args.variant_kairouz)


def _scenario(args) -> acc.AccountingScenario:
    if args.gamma is None or args.delta is None:
        raise UsageError("accounting needs --gamma and --delta")
    if args.epochs is None and args.steps is None:
        raise UsageError("accounting needs --epochs or --steps")
    return acc.AccountingScenario(gamma=args.gamma, epochs=args.epochs if args.epochs is not None else 1,
                                  delta=args.delta, steps=args.steps,
                                  composition_unit=args.composition_unit)


def _alphas(args) -> List[float]:
    if args.alpha_grid is not None:
        return args.alpha_grid
    if args.alpha is not None:
        return [args.alpha]
    raise UsageError("need --alpha or --alpha-grid")


def _account_outputs(res: acc.AccountingResult) -> Dict[str, Any]:
    return {
        "epsilon_approach1": res.epsilon_approach1,
        "epsilon_approach2": res.epsilon_approach2,
        "epsilon_best": res.epsilon_best,
        "winner": res.winner,
        "alpha_star": res.alpha_star,
        "compositions": res.compositions,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_rdp(args):
    curve = rdp_curve(_mechanism(args))
    rows = [{"alpha": a, "tau": curve(a)} for a in _alphas(args)]
    return {**_mech_inputs(args), "alphas": _alphas(args)}, {"rows": rows}


def cmd_convert(args):
    curve = rdp_curve(_mechanism(args))
    if (args.epsilon is None) == (args.delta is None):
        raise UsageError("convert needs exactly one of --epsilon and --delta")
    if args.epsilon is not None:
        g = dpconvert.delta_given_epsilon(curve, args.epsilon)
    else:
        g = dpconvert.epsilon_given_delta(curve, args.delta)
    inputs = {**_mech_inputs(args), "epsilon": args.epsilon, "delta": args.delta}
    return inputs, {"epsilon": g.epsilon, "delta": g.delta, "alpha_star": g.alpha_star}


def cmd_account(args):
    mech, sc = _mechanism(args), _scenario(args)
    res = acc.best_epsilon(mech, sc, _variants(args))
    inputs = {**_mech_inputs(args), "gamma": sc.gamma, "epochs": args.epochs,
              "steps": args.steps, "delta": sc.delta,
              "composition_unit": sc.composition_unit}
    return inputs, _account_outputs(res)


def cmd_capacity(args):
    cap = qif.mechanism_capacity(_mechanism(args, need_p_for_gauss=True), args.variant_bc)
    return _mech_inputs(args), {"log_capacity": cap.log_capacity, "capacity": cap.capacity}


def cmd_compare(args):
    if args.p is None or args.kappa is None or args.sigma is None:
        raise UsageError("compare needs --p, --kappa and --sigma")
    vmf = VmfParams(args.p, args.kappa)
    gauss = GaussParams(args.sigma, p=args.p, radius=args.radius)
    c_v = qif.bayes_capacity_vmf(args.p, args.kappa).log_capacity
    c_g = qif.bayes_capacity_gaussian(args.p, args.sigma, args.radius, args.variant_bc).log_capacity
    order = qif.compare_safety(vmf, gauss, args.variant_bc)
    inputs = {"p": args.p, "kappa": args.kappa, "sigma": args.sigma, "radius": args.radius}
    return inputs, {"log_capacity_vmf": c_v, "log_capacity_gauss": c_g, "vmf_vs_gauss": order.value}


def _load_sweep(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep spec: {exc}") from exc
    if not isinstance(spec, dict):
        raise UsageError("sweep spec must be an object")
    return spec


def cmd_sweep(args):
    spec = _load_sweep(args.spec)
    mech_name = spec.get("mechanism")
    if mech_name not in ("vmf", "gauss"):
        raise UsageError("sweep spec needs mechanism 'vmf' or 'gauss'")
    grid = spec.get("grid")
    if not isinstance(grid, list) or not grid:
        raise UsageError("sweep spec needs a nonempty 'grid' list")
    grid = [_real_field(g, "grid") for g in grid]
    outputs = spec.get("outputs")
    if not isinstance(outputs, list) or not outputs:
        raise UsageError("sweep spec needs a nonempty 'outputs' list")
    bad = [o for o in outputs if o not in SWEEP_OUTPUTS]
    if bad:
        raise UsageError(f"unknown outputs {bad}; choose from {list(SWEEP_OUTPUTS)}")
    p = spec.get("p")
    if p is not None and (isinstance(p, bool) or not isinstance(p, int)):
        raise UsageError("p must be an integer")
    radius = _real_field(spec.get("radius", 1.0), "radius")
    needs_acc = any(o.startswith("epsilon") or o in ("winner", "alpha_star") for o in outputs)
    scenario = None
    if needs_acc:
        try:
            scenario = acc.AccountingScenario(
                gamma=_real_field(spec["gamma"], "gamma"),
                epochs=_real_field(spec.get("epochs", 1), "epochs"),
                delta=_real_field(spec["delta"], "delta"),
                steps=spec.get("steps"),
                composition_unit=spec.get("composition_unit", "auto"))
        except KeyError as exc:
            raise UsageError(f"sweep spec missing {exc}") from exc
    variants = _variants(args)
    rows = []
    for i, value in enumerate(grid):
        mech = VmfParams(p, value) if mech_name == "vmf" else GaussParams(value, p=p, radius=radius)
        row: Dict[str, Any] = {"index": i, "kappa" if mech_name == "vmf" else "sigma": value}
        if scenario is not None:
            full = _account_outputs(acc.best_epsilon(mech, scenario, variants))
            row.update({k: full[k] for k in outputs if k in full})
        if "log_capacity" in outputs or "capacity" in outputs:
            cap = qif.mechanism_capacity(mech, args.variant_bc)
            if "log_capacity" in outputs:
                row["log_capacity"] = cap.log_capacity
            if "capacity" in outputs:
                row["capacity"] = cap.capacity
        rows.append(row)
    return {"spec": args.spec, **spec}, {"rows": rows}


def cmd_sample(args):
    if args.p is None or args.count is None:
        raise UsageError("sample needs --p and --count")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.mean is not None:
        mean = noisechan.normalize(parse_grid(args.mean))
        if mean.size != args.p:
            raise UsageError("--mean length differs from --p")
    else:
        mean = np.zeros(args.p)
        mean[0] = 1.0
    rng = np.random.default_rng(args.seed)
    if args.mechanism == "vmf":
        if args.kappa is None:
            raise UsageError("vmf sampling needs --kappa")
        ys = noisechan.vmf_sample(mean, args.kappa, rng, size=args.count)
    else:
        if args.sigma is None:
            raise UsageError("gauss sampling needs --sigma")
        ys = np.array([noisechan.gaussian_perturb(mean, args.sigma, 1.0, 1, rng)
                       for _ in range(args.count)])
    rows = [{"index": i, "norm": float(np.linalg.norm(y)), "vector": y.tolist()}
            for i, y in enumerate(ys)]
    inputs = {**_mech_inputs(args), "count": args.count, "seed": args.seed, "mean": mean.tolist()}
    return inputs, {"rows": rows}


def _load_matrix(path: str, name: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {name}: {exc}") from exc


def cmd_channel_capacity(args):
    C = _load_matrix(args.matrix, "channel matrix")
    try:
        cap = qif.bayes_capacity_channel(C)
        out: Dict[str, Any] = {"log_capacity": cap.log_capacity, "capacity": cap.capacity}
        if args.prior is not None:
            pi = _load_matrix(args.prior, "prior")
            out["prior_vulnerability"] = qif.prior_vulnerability(pi)
            out["posterior_vulnerability"] = qif.posterior_vulnerability(pi, C)
            out["leakage"] = qif.leakage(pi, C)
    except qif.ChannelError as exc:
        raise UsageError(str(exc)) from exc
    return {"matrix": args.matrix, "prior": args.prior}, out


COMMANDS = {
    "rdp": cmd_rdp,
    "convert": cmd_convert,
    "account": cmd_account,
    "capacity": cmd_capacity,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "sample": cmd_sample,
    "channel-capacity": cmd_channel_capacity,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mechanism", choices=("vmf", "gauss"), default="vmf")
    common.add_argument("--p", type=int)
    common.add_argument("--kappa", type=parse_real)
    common.add_argument("--sigma", type=parse_real)
    common.add_argument("--radius", type=parse_real, default=1.0)
    common.add_argument("--gamma", type=parse_real)
    common.add_argument("--epochs", type=parse_real)
    common.add_argument("--steps", type=int)
    common.add_argument("--composition-unit", choices=acc.COMPOSITION_UNITS, default="auto")
    common.add_argument("--delta", type=parse_real)
    common.add_argument("--epsilon", type=parse_real)
    common.add_argument("--alpha", type=parse_real)
    common.add_argument("--alpha-grid", type=parse_grid)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--variant-zhu", choices=acc.ZHU_PREFACTORS, default="orig")
    common.add_argument("--variant-kairouz", choices=acc.KAIROUZ_BRANCHES, default="orig")
    common.add_argument("--variant-bc", choices=qif.BC_FORMS, default="derivation")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")

    parser = argparse.ArgumentParser(prog="privcap", description="DP-SGD accounting and leakage tools")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("rdp", "convert", "account", "capacity", "compare"):
        sub.add_parser(name, parents=[common])
    sw = sub.add_parser("sweep", parents=[common])
    sw.add_argument("spec", help="JSON sweep specification")
    sa = sub.add_parser("sample", parents=[common])
    sa.add_argument("--count", type=int)
    sa.add_argument("--mean", help="comma-separated mean direction (default e_1)")
    cc = sub.add_parser("channel-capacity", parents=[common])
    cc.add_argument("--matrix", required=True, help="JSON array of channel rows")
    cc.add_argument("--prior", help="JSON array with the prior")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        inputs, outputs = COMMANDS[args.command](args)
    except (UsageError, DomainError, ValueError, TypeError) as exc:
        print(f"privcap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError, RuntimeError) as exc:
        print(f"privcap {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(make_record(args.command, args, inputs, outputs), args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
