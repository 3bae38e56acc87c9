"""Command-line front end.

Exit codes: 0 success, 1 computation or verification failure, 2 usage error.
Any flag may also be given in a ``key = value`` file passed with ``--config``;
flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
from typing import Optional, Sequence

from . import frequency, phase, verify
from .errors import CoarseMetrologyError
from .kinds import ORACLE_MAX_QUBITS, Reference, StateKind

SEED_ENV = "COARSE_METROLOGY_SEED"
FREQ_HEADER = ("delta", "dw2_product_markov", "dw2_ghz_markov",
               "dw2_product_nonmarkov", "dw2_ghz_nonmarkov")

_ANGLE = re.compile(r"^\s*(?P<sign>-)?\s*(?:(?P<num>[0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>[0-9.eE+-]+))?\s*$")


class UsageError(Exception):
    pass


def parse_angle(text: str) -> float:
    """Float literal or a ``[k*]pi[/d]`` token such as ``pi/2`` or ``3pi/4``."""
    text = str(text).strip()
    m = _ANGLE.match(text)
    if m:
        value = math.pi * float(m.group("num") or 1) / float(m.group("den") or 1)
        return -value if m.group("sign") else value
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"expected integers or ranges like 1-8, got {text!r}") from None
    return out


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value) if not math.isfinite(value) else format(value, ".17g")
    return str(value)


def emit(rows: list[dict], fmt: str, path: Optional[str]) -> None:
    if fmt == "json":
        records = [{k: (v if not isinstance(v, float) or math.isfinite(v) else repr(v))
                    for k, v in row.items()} for row in rows]
        text = json.dumps(records, indent=2) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(rows[0].keys())
            for row in rows:
                writer.writerow(_fmt(v) for v in row.values())
        text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def read_config(path: str) -> dict[str, str]:
    """Plain-text ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return verify.DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# -- commands -----------------------------------------------------------------

def cmd_phase_fisher(args) -> int:
    if args.n is None:
        raise UsageError("phase-fisher requires --n")
    delta_list = _floats(args.delta)
    rows = []
    for n in _ints(args.n):
        for delta in delta_list:
            for token in str(args.phi).split(","):
                sc = phase.PhaseScenario.make(args.state, n, args.reference, delta,
                                              experiments=args.experiments)
                phi = phase.optimal_phase(sc) if token.strip() == "optimal" else parse_angle(token)
                f = phase.fisher_phase(sc, phi)
                rows.append({"n": n, "delta": delta, "phi": phi, "fisher": f,
                             "dphi": phase.resolution_phase(sc, phi)})
    emit(rows, args.format, args.output)
    return 0


def cmd_optimal_n(args) -> int:
    rows = []
    for delta in _floats(args.delta):
        best = phase.optimal_particles(args.reference, delta, args.n_max)
        sc = phase.PhaseScenario.make(StateKind.GHZ, best.n, args.reference, delta,
                                      experiments=args.experiments)
        rows.append({"reference": Reference(args.reference).value, "delta": delta,
                     "n_integer": best.n, "n_continuous": best.continuous,
                     "dphi_at_optimum": phase.resolution_phase(sc)})
        if best.at_boundary:
            logging.warning("optimum at n_max=%d for delta=%g; widen the scan", args.n_max, delta)
    emit(rows, args.format, args.output)
    return 0


def _fig1(args):
    return frequency.fig1_scenarios(args.n, args.gamma0, args.total_time)


def _delta_grid(args):
    if args.deltas:
        return sorted(set(_floats(args.deltas)))
    return list(frequency.default_delta_grid(frequency.DephasingModel(args.gamma0, 1),
                                             args.points))


def cmd_freq_curve(args) -> int:
    grid = _delta_grid(args)
    curves = {}
    for name, sc in _fig1(args).items():
        try:
            curves[name] = frequency.precision_curve(sc, grid, workers=args.workers)
        except frequency.CurveError as exc:
            print(f"error: curve {name} failed at delta={exc.delta!r}: {exc.cause}",
                  file=sys.stderr)
            return 1
    rows = []
    for i, d in enumerate(grid):
        row = {"delta": float(d)}
        for name in FREQ_HEADER[1:]:
            row[name] = float(curves[name].values[i])
        if args.scale_ghz_markov is not None:
            row["dw2_ghz_markov_scaled"] = float(curves["dw2_ghz_markov"].values[i]
                                                 * args.scale_ghz_markov)
        rows.append(row)
    emit(rows, args.format, args.output)
    return 0


def cmd_crossover(args) -> int:
    sc = _fig1(args)
    grid = _delta_grid(args)
    pairs = [
        ("ghz_nonmarkov>product_nonmarkov", "dw2_ghz_nonmarkov", "dw2_product_nonmarkov", 1.0),
        ("ghz_markov>product_markov", "dw2_ghz_markov", "dw2_product_markov", 1.0),
        (f"{args.scale_ghz_markov:g}*ghz_markov>product_markov", "dw2_ghz_markov",
         "dw2_product_markov", args.scale_ghz_markov),
    ]
    rows = []
    for label, a, b, scale in pairs:
        res = frequency.scan_crossover(sc[a], sc[b], grid, scale_a=scale)
        rows.append({"pair": label,
                     "delta_star": res.delta if res.found else math.nan,
                     "from_tie": res.from_tie,
                     "bracket_lo": res.bracket[0], "bracket_hi": res.bracket[1]})
    emit(rows, args.format, args.output)
    return 0


def cmd_oracle_verify(args) -> int:
    ns = _ints(args.n)
    over = [n for n in ns if n > ORACLE_MAX_QUBITS]
    if over:
        print(f"error: oracle is capped at n <= {ORACLE_MAX_QUBITS} (got {over})", file=sys.stderr)
        return 1
    devs = verify.oracle_deviations(ns, _floats(args.delta))
    rows = [{"state": d.kind.value, "reference": d.reference.value,
             "max_abs_deviation": d.max_abs_dev} for d in devs]
    emit(rows, args.format, args.output)
    bad = [d for d in devs if d.max_abs_dev > verify.ORACLE_TOL]
    for d in bad:
        n, delta, phi = d.worst
        print(f"error: {d.kind.value}/{d.reference.value} deviates by {d.max_abs_dev:.3e} "
              f"at n={n}, delta={delta}, phi={phi!r}", file=sys.stderr)
    return 1 if bad else 0


def cmd_mc_verify(args) -> int:
    if args.shots < 10_000 or args.repetitions < 100:
        raise UsageError("mc-verify needs --shots >= 10000 and --repetitions >= 100")
    seed = default_seed() if args.seed is None else args.seed
    cases = [verify.MonteCarloCase(n, d, Reference(args.reference))
             for n in _ints(args.n) for d in _floats(args.delta)]
    results = verify.run_monte_carlo(cases, args.shots, args.repetitions, seed)
    rows = [{"n": r.case.n, "delta": r.case.delta, "reference": r.case.reference.value,
             "shots": r.shots, "repetitions": r.repetitions, "seed": seed,
             "mle_variance": r.variance, "cramer_rao": r.cramer_rao, "ratio": r.ratio,
             "pass": r.within_band} for r in results]
    emit(rows, args.format, args.output)
    failed = [r for r in results if not r.within_band]
    for r in failed:
        print(f"error: n={r.case.n} delta={r.case.delta}: ratio {r.ratio:.4f} outside "
              f"{list(verify.MC_BAND)}", file=sys.stderr)
    return 1 if failed else 0


# -- parser -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="write here instead of stdout")


def _freq_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=frequency.FIG1_N)
    p.add_argument("--gamma0", type=float, default=frequency.FIG1_GAMMA0)
    p.add_argument("--total-time", type=float, default=frequency.FIG1_TOTAL_TIME)
    p.add_argument("--deltas", help="comma-separated jitter widths (default: built-in log grid)")
    p.add_argument("--points", type=int, default=60)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coarse-metrology",
        description="Phase and frequency precision limits under coarsened measurement references.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-fisher", help="Fisher information and phase resolution")
    _common(p)
    p.add_argument("--state", choices=[k.value for k in StateKind], default="ghz")
    p.add_argument("--reference", choices=[r.value for r in Reference], default="common")
    p.add_argument("--n", help="particle numbers, e.g. 4 or 1-8 or 2,4,6")
    p.add_argument("--delta", default="0", help="basis coarsening widths (comma-separated)")
    p.add_argument("--phi", default="optimal", help="phases, e.g. pi/2, 0.3 or 'optimal'")
    p.add_argument("--experiments", type=int, default=1)
    p.set_defaults(func=cmd_phase_fisher)

    p = sub.add_parser("optimal-n", help="optimal GHZ size for a coarsened basis")
    _common(p)
    p.add_argument("--reference", choices=("common", "independent"), default="common")
    p.add_argument("--delta", required=True)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--experiments", type=int, default=1)
    p.set_defaults(func=cmd_optimal_n)

    p = sub.add_parser("freq-curve", help="frequency variance versus time jitter (four curves)")
    _common(p)
    _freq_flags(p)
    p.add_argument("--scale-ghz-markov", type=float, default=None,
                   help="add a display-scaled copy of the GHZ Markovian column")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_freq_curve)

    p = sub.add_parser("crossover", help="jitter width where GHZ loses to the product probe")
    _common(p)
    _freq_flags(p)
    p.add_argument("--scale-ghz-markov", type=float, default=1e-8)
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("oracle-verify", help="statevector oracle versus closed forms")
    _common(p)
    p.add_argument("--n", default="1-8")
    p.add_argument("--delta", default="0,0.1,0.3")
    p.set_defaults(func=cmd_oracle_verify)

    p = sub.add_parser("mc-verify", help="Monte-Carlo MLE variance versus the Cramer-Rao bound")
    _common(p)
    p.add_argument("--n", default="1")
    p.add_argument("--delta", default="0,0.3")
    p.add_argument("--reference", choices=[r.value for r in Reference], default="common")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--repetitions", type=int, default=200)
    p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or built-in")
    p.set_defaults(func=cmd_mc_verify)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], args):
    if not getattr(args, "config", None):
        return args
    values = read_config(args.config)
    sub_parser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub_parser._actions}
    given = {a.dest for a in sub_parser._actions
             for opt in a.option_strings if any(t == opt or t.startswith(opt + "=") for t in argv)}
    for key, raw in values.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        if key in given:
            continue
        action = known[key]
        try:
            value = action.type(raw) if action.type else raw
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key}: {raw!r}") from None
        if action.choices and value not in action.choices:
            raise UsageError(f"{key} must be one of {sorted(action.choices)}")
        setattr(args, key, value)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _apply_config(parser, argv, args)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CoarseMetrologyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
