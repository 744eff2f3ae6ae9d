"""Command-line front end: ``acoherence <command> [options]``.

Commands
--------
probs    detector probabilities P_n from one or more routes
ratio    R and R' with a label against the reference values
moments  normally ordered field moments, Q and count mean/variance
sample   Monte Carlo click record (CSV rows or JSON summary)
test     coherent-null test on a sampled or recorded click record
astro    chirp windows, bar rate and signal size for GW scenarios

Exit status is 0 on success, 2 for usage or validation errors and 3 when a
numerical validity check fails (for example a Fock truncation bound).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from acoherence import gw
from acoherence.core import DetectorCoupling, TruncationError, ValidityWarning
from acoherence.detectors import ROUTES, distribution
from acoherence.nulltest import FAMILIES, test_coherent_null
from acoherence.oracle import normal_ordered_moment
from acoherence.sampling import ClickExperiment, CountRecord, sample_clicks
from acoherence.states import (
    Custom,
    SqueezedVacuum,
    analytic_moments,
    make_state,
    mean_occupation,
    p_function,
    state_to_dict,
)
from acoherence.statistics import mandel_q, ratio_R, variance_counts

OUT_DIR_ENV = "ACOHERENCE_OUT_DIR"
OUTPUT_SCHEMA_VERSION = 1
DIGITS = 12
LABEL_RTOL = 0.02

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    return str(x)


def _round(obj):
    """Round every float to 12 significant digits; non-finite values become null."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.{DIGITS}g}") if math.isfinite(x) else None
    return obj


# ---------------------------------------------------------------------------
# argument handling


def _state(args):
    if not args.state:
        raise UsageError("--state is required")
    text = args.state
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    return make_state(text)


def _coupling(args, required=True):
    if args.kappa is not None:
        if args.gamma0 is not None or args.dt is not None:
            raise UsageError("give either --kappa or --gamma0 with --dt, not both")
        return DetectorCoupling.from_kappa(args.kappa, args.eta)
    if args.gamma0 is not None or args.dt is not None:
        if args.gamma0 is None or args.dt is None:
            raise UsageError("--gamma0 and --dt must be given together")
        return DetectorCoupling(args.gamma0, args.dt, args.eta)
    if required:
        raise UsageError("a coupling is required: --kappa, or --gamma0 with --dt")
    return None


def _methods(args, state):
    if args.methods:
        names = [m.strip() for m in args.methods.split(",") if m.strip()]
    else:
        names = ["exact" if p_function(state) is not None else "oracle"]
    for m in names:
        if m not in ROUTES:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(ROUTES)}")
    if "exact" in names and p_function(state) is None:
        raise UsageError(f"method 'exact' needs a closed-form P function, which a {state.kind} state lacks; "
                         "use oracle or gaussian")
    return names


def _coupling_dict(c: DetectorCoupling | None):
    if c is None:
        return None
    return {"gamma0": c.gamma0, "dt": c.dt, "eta": c.eta, "kappa": c.kappa}


def _envelope(command, config, result):
    return _round({"schema_version": OUTPUT_SCHEMA_VERSION, "command": command,
                   "config": config, "result": result})


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _emit(args, text: str):
    if args.out:
        path = args.out
        base = os.environ.get(OUT_DIR_ENV)
        if base and not os.path.isabs(path):
            os.makedirs(base, exist_ok=True)
            path = os.path.join(base, path)
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, doc):
    _emit(args, json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_probs(args):
    state = _state(args)
    coupling = _coupling(args)
    names = _methods(args, state)
    dists = {m: distribution(state, coupling, m, args.nmax) for m in names}
    width = max(len(d.probs) for d in dists.values())
    spread = []
    for n in range(width):
        vals = [d.probs[n] for d in dists.values() if n < len(d.probs)]
        spread.append(max(vals) - min(vals) if len(vals) > 1 else 0.0)
    if args.format == "csv":
        rows = [[n] + [d.probs[n] if n < len(d.probs) else None for d in dists.values()] + [spread[n]]
                for n in range(width)]
        _emit(args, _rows_csv(["n"] + names + ["max_abs_diff"], rows))
        return
    result = {"methods": {m: {"route": d.method, "probs": d.probs, "tail": d.tail} for m, d in dists.items()},
              "max_abs_diff": spread}
    _emit_json(args, _envelope("probs", {"state": state_to_dict(state), "coupling": _coupling_dict(coupling),
                                         "nmax": args.nmax}, result))


def ratio_label(r: float | None, state=None) -> str:
    """Nearest reference: 1 maximally classical, 2 thermal-like, 2 + coth^2 r squeezed-vacuum-like."""
    if r is None:
        return "undefined"
    if abs(r - 1.0) <= LABEL_RTOL:
        return "maximally classical"
    if abs(r - 2.0) <= 2.0 * LABEL_RTOL:
        return "thermal-like"
    if isinstance(state, SqueezedVacuum):
        ref = 2.0 + 1.0 / math.tanh(state.r) ** 2
        if abs(r - ref) <= LABEL_RTOL * ref:
            return "squeezed-vacuum-like"
    if r < 1.0:
        return "sub-Poissonian (nonclassical)"
    return "super-Poissonian"


def cmd_ratio(args):
    state = _state(args)
    coupling = _coupling(args)
    names = _methods(args, state)
    out = {}
    for m in names:
        res = ratio_R(distribution(state, coupling, m, 3))
        out[m] = {"R": res.r, "R_prime": res.r_prime, "label": ratio_label(res.r, state),
                  "R_undefined": res.r_reason, "R_prime_undefined": res.r_prime_reason}
    if args.format == "csv":
        rows = [[m, v["R"], v["R_prime"], v["label"], v["R_undefined"] or v["R_prime_undefined"] or ""]
                for m, v in out.items()]
        _emit(args, _rows_csv(["method", "R", "R_prime", "label", "undefined"], rows))
        return
    _emit_json(args, _envelope("ratio", {"state": state_to_dict(state), "coupling": _coupling_dict(coupling)},
                               {"methods": out}))


def cmd_moments(args):
    state = _state(args)
    coupling = _coupling(args, required=False)
    rows = []
    for j in range(1, 5):
        analytic = None if isinstance(state, Custom) else analytic_moments(state, j)
        rows.append({"j": j, "analytic": analytic, "oracle": normal_ordered_moment(state, j)})
    result = {"moments": rows, "mean_occupation": mean_occupation(state)}
    try:
        result["mandel_q"] = mandel_q(state)
    except ValueError:
        result["mandel_q"] = None
    if coupling is not None:
        s = coupling.transfer()
        result["mean_counts"] = s * result["mean_occupation"]
        result["variance_counts"] = variance_counts(state, coupling)
    if args.format == "csv":
        _emit(args, _rows_csv(["j", "analytic", "oracle"], [[r["j"], r["analytic"], r["oracle"]] for r in rows]))
        return
    _emit_json(args, _envelope("moments", {"state": state_to_dict(state), "coupling": _coupling_dict(coupling)},
                               result))


def _experiment(args):
    state = _state(args)
    if args.kappa is not None:
        raise UsageError("sampling takes --gamma0 and --dt (per step), not --kappa")
    if args.gamma0 is None or args.dt is None:
        raise UsageError("sampling needs --gamma0 and --dt")
    if args.windows is None or args.windows < 1:
        raise UsageError("--windows must be at least 1")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    return ClickExperiment(state, args.gamma0, args.dt, n_steps=args.steps, windows=args.windows,
                           seed=args.seed, mode=args.mode)


def cmd_sample(args):
    rec = sample_clicks(_experiment(args), workers=args.workers)
    if args.format == "csv":
        _emit(args, rec.to_csv())
        return
    _emit_json(args, _envelope("sample", rec.meta, rec.summary()))


def cmd_test(args):
    if args.counts:
        with open(args.counts) as fh:
            rec = CountRecord.from_csv(fh, {"source": args.counts})
    else:
        rec = sample_clicks(_experiment(args), workers=args.workers)
    alts = [a.strip() for a in args.alternatives.split(",") if a.strip()]
    for a in alts:
        if a not in FAMILIES:
            raise UsageError(f"unknown alternative {a!r}; choose from {', '.join(FAMILIES)}")
    rep = test_coherent_null(rec, alts, n_boot=args.nboot, alpha=args.alpha, seed=args.seed)
    doc = rep.as_dict()
    if args.format == "csv":
        rows = [[k, v] for k, v in doc.items() if not isinstance(v, dict)]
        for fam, d in doc["families"].items():
            rows += [[f"{fam}_statistic", d["statistic"]], [f"{fam}_shape", d["shape"]]]
        _emit(args, _rows_csv(["key", "value"], rows))
        return
    _emit_json(args, _envelope("test", rec.meta, {"report": doc, "record": rec.summary()}))


def cmd_astro(args):
    if args.scenario:
        chirps, bar, q, n_mean = gw.load_scenarios(args.scenario)
    else:
        names = args.preset or list(gw.PRESETS)
        for p in names:
            if p not in gw.PRESETS:
                raise UsageError(f"unknown preset {p!r}; choose from {', '.join(gw.PRESETS)}")
        chirps, bar, q, n_mean = [gw.PRESETS[p] for p in names], gw.REFERENCE_BAR, 1.0, gw.DEFAULT_OCCUPATION
    if args.Q is not None:
        q = args.Q
    if args.n_mean is not None:
        n_mean = args.n_mean
    rows = gw.evaluate(chirps, bar, q, n_mean)
    if args.format == "csv":
        _emit(args, gw.rows_to_csv(rows, _fmt))
        return
    config = {"bar": {"M_kg": bar.M, "L_m": bar.L, "omega_rad_s": bar.omega, "name": bar.name},
              "Q": q, "n_mean": n_mean}
    _emit_json(args, _envelope("astro", config, {"rows": [r.__dict__ for r in rows]}))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help=f"output file (relative paths go under ${OUT_DIR_ENV} when set)")
    common.add_argument("-v", "--verbose", action="store_true", help="report warnings on stderr")

    st = argparse.ArgumentParser(add_help=False)
    st.add_argument("--state", help="kind:params shorthand, a JSON object, or @file.json")
    st.add_argument("--kappa", type=float)
    st.add_argument("--gamma0", type=float)
    st.add_argument("--dt", type=float)
    st.add_argument("--eta", type=float, default=1.0)

    smp = argparse.ArgumentParser(add_help=False)
    smp.add_argument("--windows", type=int, default=1000)
    smp.add_argument("--steps", type=int, default=1, help="steps N per window")
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--mode", choices=("poisson", "binomial"), default="poisson")
    smp.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="acoherence", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("probs", "detector probabilities"), ("ratio", "R and R' ratio tests")):
        c = sub.add_parser(name, parents=[common, st], help=helptext)
        c.add_argument("--methods", help=f"comma list from {', '.join(ROUTES)}")
        c.add_argument("--nmax", type=int, default=3)
    sub.add_parser("moments", parents=[common, st], help="field moments")
    sub.add_parser("sample", parents=[common, st, smp], help="Monte Carlo click record")
    t = sub.add_parser("test", parents=[common, st, smp], help="coherent-null test")
    t.add_argument("--counts", help="CSV click record (window_index,j) instead of sampling")
    t.add_argument("--alternatives", default=",".join(FAMILIES))
    t.add_argument("--nboot", type=int, default=999)
    t.add_argument("--alpha", type=float, default=0.05)
    a = sub.add_parser("astro", parents=[common], help="gravitational-wave scenarios")
    a.add_argument("--preset", action="append", help=f"one of {', '.join(gw.PRESETS)} (repeatable)")
    a.add_argument("--scenario", help="scenario JSON file or string")
    a.add_argument("--Q", type=float)
    a.add_argument("--n-mean", dest="n_mean", type=float)
    return p


COMMANDS = {"probs": cmd_probs, "ratio": cmd_ratio, "moments": cmd_moments,
            "sample": cmd_sample, "test": cmd_test, "astro": cmd_astro}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ValidityWarning)
        try:
            COMMANDS[args.command](args)
        except TruncationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        except (UsageError, ValueError, OSError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
            print(f"numerical error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
    for w in caught:
        if args.verbose or issubclass(w.category, ValidityWarning):
            print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
