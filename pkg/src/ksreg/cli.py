"""Command-line front end: ``verify``, ``propagate``, ``map`` and ``sample``.

Exit codes: 0 success, 2 usage, 3 domain violation, 4 step collapse or
other integration failure, 5 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import maps
from .charts import (
    ANDOYER_COLUMNS,
    EULER_COLUMNS,
    SPHERICAL_COLUMNS,
    AndoyerChart,
    EulerChart,
    SphericalChart,
    andoyer_to_phase,
    euler_to_phase,
    phase_to_euler,
    polar_to_cartesian2,
    spherical_to_cartesian,
)
from .dynamics import HamiltonianSpec
from .errors import DomainError
from .flow import (
    FORMAT_VERSION,
    IntegrationFailure,
    IntegratorConfig,
    format_float,
    integrate,
    kepler_elements,
    propagate_regularized_kepler,
)
from .sampling import MANIFOLDS, PHASE_COLUMNS, sample
from .verify import ALIASES, SUITES, run

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_COLLAPSE, EXIT_MALFORMED = 0, 2, 3, 4, 5

SYSTEMS = ("osc4", "kepler3", "kepler2", "kepler3-regularized")
VIA = ("ks", "ks-inverse", "lc", "euler", "euler-inverse", "andoyer", "spherical", "polar")
LC_NAMES = {"1": 1.0, "-1": -1.0, "i": 1j, "-i": -1j}

KEPLER3_COLUMNS = ("x1", "x2", "x3", "y1", "y2", "y3")
LC_IN = ("q1", "q2", "p1", "p2")
LC_OUT = ("x1", "x2", "y1", "y2")
POLAR_IN = ("rho", "mu", "P", "M")

# (input columns, output columns) for each --via.
MAP_COLUMNS = {
    "ks": (PHASE_COLUMNS, KEPLER3_COLUMNS + ("real_defect",)),
    "ks-inverse": (KEPLER3_COLUMNS, PHASE_COLUMNS),
    "lc": (LC_IN, LC_OUT),
    "euler": (PHASE_COLUMNS, EULER_COLUMNS),
    "euler-inverse": (EULER_COLUMNS, PHASE_COLUMNS),
    "andoyer": (ANDOYER_COLUMNS, PHASE_COLUMNS),
    "spherical": (SPHERICAL_COLUMNS, KEPLER3_COLUMNS),
    "polar": (POLAR_IN, LC_OUT),
}


REQUIRED = {"propagate": "system", "map": "via", "sample": "manifold"}


class UsageError(Exception):
    pass


class MalformedInput(Exception):
    pass


# ------------------------------------------------------------------ parsing


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--print-config", action="store_true", help="print the resolved options as JSON and exit")
    p.add_argument("--out", help="output file (directory for verify); default stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ksreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run property suites and write JSON reports")
    _add_common(v)
    v.add_argument("--suite", default="all", choices=SUITES + tuple(ALIASES))
    v.add_argument("--samples", type=_positive_int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--convention", default="both", choices=("both", "corrected", "printed"))

    p = sub.add_parser("propagate", help="integrate a system and write its trajectory")
    _add_common(p)
    p.add_argument("--system", choices=SYSTEMS)
    p.add_argument("--ic", help="comma-separated initial state")
    p.add_argument("--ic-file", help="CSV file whose first data row is the initial state")
    p.add_argument("--span", type=_finite, help="integration length (default: one Kepler period)")
    p.add_argument("--revs", type=_finite, default=1.0, help="Kepler revolutions for kepler3-regularized")
    p.add_argument("--omega", type=_finite, default=1.0)
    p.add_argument("--mu", type=_finite, default=1.0)
    p.add_argument("--method", default="dopri5_adaptive", choices=("dopri5_adaptive", "rk4_fixed"))
    p.add_argument("--rel-tol", type=_finite, default=None,
                   help="default 1e-10, or 1e-14 for kepler3-regularized")
    p.add_argument("--abs-tol", type=_finite, default=None, help="default rel-tol / 100")
    p.add_argument("--step", type=_finite, default=1e-3)
    p.add_argument("--max-steps", type=_positive_int, default=1_000_000)
    p.add_argument("--gauge", type=_finite, default=0.0, help="fiber angle of the lift (kepler3-regularized)")
    p.add_argument("--samples", type=_positive_int, default=None,
                   help="equally spaced output points instead of every step")
    p.add_argument("--format", default="csv", choices=("csv", "jsonl"))

    m = sub.add_parser("map", help="apply a coordinate map to points")
    _add_common(m)
    m.add_argument("--via", choices=VIA)
    m.add_argument("--point", help="comma-separated input point")
    m.add_argument("--input", help="CSV file with a header row")
    m.add_argument("--dv", "--defining-vector", dest="dv", default="+k",
                   choices=("+i", "-i", "+j", "-j", "+k", "-k", "ks1965"))
    m.add_argument("--variant", default="1", choices=tuple(LC_NAMES))
    m.add_argument("--gauge", type=_finite, default=0.0)
    m.add_argument("--convention", default="calibrated", choices=("calibrated", "printed"))

    s = sub.add_parser("sample", help="seeded samples on a manifold")
    _add_common(s)
    s.add_argument("--manifold", choices=MANIFOLDS)
    s.add_argument("--count", type=_positive_int, default=10)
    s.add_argument("--seed", type=int, default=0)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv) -> argparse.Namespace:
    """Parse flags, layering them over values from ``--config``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(values, dict):
            parser.error("config must be a JSON object")
        sp = _subparser(parser, args.command)
        known = {a.dest: a for a in sp._actions}
        for key, val in values.items():
            dest = key.replace("-", "_")
            if dest not in known or dest in ("config", "help"):
                parser.error(f"unknown config key {key!r}")
            action = known[dest]
            if action.type is not None and val is not None and not isinstance(val, bool):
                try:
                    val = action.type(str(val))
                except argparse.ArgumentTypeError as exc:
                    parser.error(f"config key {key!r}: {exc}")
            if action.choices is not None and val not in action.choices:
                parser.error(f"config key {key!r}: {val!r} not in {list(action.choices)}")
            values[key] = val
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in values.items()})
        args = parser.parse_args(argv)
    # Required options may come from the config file, so they are checked here.
    need = REQUIRED.get(args.command)
    if need and getattr(args, need) is None:
        _subparser(parser, args.command).error(f"the following arguments are required: --{need}")
    return args


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("print_config",)}


# ------------------------------------------------------------------ io helpers


def _parse_row(text: str, n: int, where: str) -> np.ndarray:
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != n:
        raise MalformedInput(f"{where}: expected {n} values, got {len(parts)}")
    try:
        vals = np.array([float(t) for t in parts])
    except ValueError:
        raise MalformedInput(f"{where}: non-numeric value in {text!r}") from None
    if not np.all(np.isfinite(vals)):
        raise MalformedInput(f"{where}: non-finite value in {text!r}")
    return vals


def read_csv_rows(path: str, columns) -> tuple[list[tuple[int, np.ndarray]], list[str]]:
    """Rows of a headed CSV file, reordered to ``columns``.

    Returns ``(rows, problems)``; each row is ``(line_number, values)`` and
    each problem names its line.  ``#`` lines are comments.
    """
    rows, problems = [], []
    header = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = next(csv.reader([line]))
            if header is None:
                names = [f.strip() for f in fields]
                if sorted(names) != sorted(columns):
                    raise MalformedInput(
                        f"line {lineno}: header {','.join(names)!r} does not match {','.join(columns)!r}")
                header = [names.index(c) for c in columns]
                continue
            try:
                vals = _parse_row(",".join(fields), len(columns), f"line {lineno}")
            except MalformedInput as exc:
                problems.append(str(exc))
                continue
            rows.append((lineno, vals[header]))
    if header is None:
        raise MalformedInput(f"{path}: missing header row")
    return rows, problems


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def write_csv(fh, columns, rows):
    fh.write(f"# format_version={FORMAT_VERSION}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_float(v) for v in row])


# ------------------------------------------------------------------ commands


def cmd_verify(args) -> int:
    reports = run([args.suite], seed=args.seed, n=args.samples, convention=args.convention)
    out_dir = Path(args.out or "ksreg-reports")
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = True
    for rep in reports:
        (out_dir / f"{rep.suite}.json").write_text(rep.to_json())
        print(f"== {rep.suite} (seed {rep.seed}, n {rep.n}, {rep.runtime_s:.2f} s)")
        for prop in rep.properties:
            print(f"  {prop.line()}")
        ok &= rep.passed
    print(f"reports written to {out_dir}")
    return EXIT_OK if ok else 1


def _initial_state(args, n: int) -> np.ndarray:
    if bool(args.ic) == bool(args.ic_file):
        raise UsageError("give exactly one of --ic and --ic-file")
    if args.ic:
        return _parse_row(args.ic, n, "--ic")
    with open(args.ic_file, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) < 2:
        raise MalformedInput(f"{args.ic_file}: needs a header row and one data row")
    return _parse_row(lines[1], n, f"{args.ic_file} first data row")


def cmd_propagate(args) -> int:
    regularized = args.system == "kepler3-regularized"
    rel = args.rel_tol if args.rel_tol is not None else (1e-14 if regularized else 1e-10)
    abs_ = args.abs_tol if args.abs_tol is not None else rel * 1e-2
    try:
        cfg = IntegratorConfig(args.method, step=args.step, rel_tol=rel, abs_tol=abs_, max_steps=max(1, args.max_steps))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traj = None
    try:
        if regularized:
            s0 = _initial_state(args, 6)
            traj = propagate_regularized_kepler(s0[:3], s0[3:], args.mu, cfg, args.revs, args.gauge, args.samples)
        else:
            dim = {"osc4": 8, "kepler3": 6, "kepler2": 4}[args.system]
            s0 = _initial_state(args, dim)
            spec = HamiltonianSpec(args.system, omega=args.omega, grav_param=args.mu)
            span = args.span
            if span is None:
                if args.system == "osc4":
                    raise UsageError("--span is required for osc4")
                n = dim // 2
                x, y = np.zeros(3), np.zeros(3)
                x[:n], y[:n] = s0[:n], s0[n:]
                el = kepler_elements(x, y, args.mu)
                if "period" not in el:
                    raise UsageError("unbounded orbit: give --span")
                span = el["period"]
            s_eval = None if args.samples is None else np.linspace(0.0, span, args.samples)
            traj = integrate(spec, s0, (0.0, span), cfg, s_eval)
    except IntegrationFailure as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        if exc.partial is not None:
            _write_trajectory(exc.partial, args)
            _print_stats(exc.partial.stats)
        return EXIT_COLLAPSE
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise UsageError(str(exc)) from None
    _write_trajectory(traj, args)
    _print_stats(traj.stats, float(np.max(traj.drift)))
    return EXIT_OK


def _write_trajectory(traj, args):
    fh = _open_out(args.out)
    try:
        if args.format == "jsonl":
            traj.to_jsonl(fh)
        else:
            traj.to_csv(fh)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _print_stats(stats: dict, drift: float | None = None):
    parts = [f"{k}={v}" for k, v in stats.items()]
    if drift is not None:
        parts.append(f"max_energy_drift={drift:.3e}")
    print("stats: " + " ".join(parts), file=sys.stderr)


def _map_one(via: str, a: np.ndarray, args) -> np.ndarray:
    if via == "ks":
        img = maps.ks_map(a, maps.DefiningVector.parse(args.dv))
        return np.r_[img.x, img.y, img.real_defect]
    if via == "ks-inverse":
        return maps.ks_preimage(a[:3], a[3:], args.gauge)
    if via == "lc":
        x, y = maps.lc_map(a[:2], a[2:], LC_NAMES[args.variant])
        return np.r_[x, y]
    if via == "euler":
        return phase_to_euler(a).as_array()
    if via == "euler-inverse":
        return euler_to_phase(EulerChart.from_array(a))
    if via == "andoyer":
        return andoyer_to_phase(AndoyerChart.from_array(a), args.convention)
    if via == "spherical":
        return spherical_to_cartesian(SphericalChart.from_array(a)).as_array()
    if via == "polar":
        return polar_to_cartesian2(*a).as_array()
    raise UsageError(f"unknown map {via!r}")


def cmd_map(args) -> int:
    cols_in, cols_out = MAP_COLUMNS[args.via]
    if bool(args.point) == bool(args.input):
        raise UsageError("give exactly one of --point and --input")
    if args.point:
        rows = [(0, _parse_row(args.point, len(cols_in), "--point"))]
        problems: list[str] = []
    else:
        rows, problems = read_csv_rows(args.input, cols_in)
    out, domain = [], []
    for lineno, a in rows:
        try:
            out.append(_map_one(args.via, a, args))
        except DomainError as exc:
            where = f"line {lineno}" if lineno else "--point"
            domain.append(f"{where}: {exc} (coordinate {exc.coordinate})")
    fh = _open_out(args.out)
    try:
        write_csv(fh, cols_out, out)
    finally:
        if fh is not sys.stdout:
            fh.close()
    for msg in problems:
        print(f"malformed: {msg}", file=sys.stderr)
    for msg in domain:
        print(f"domain error: {msg}", file=sys.stderr)
    if problems:
        return EXIT_MALFORMED
    if domain:
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_sample(args) -> int:
    cols, rows = sample(args.manifold, args.count, args.seed)
    fh = _open_out(args.out)
    try:
        write_csv(fh, cols, rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "propagate": cmd_propagate, "map": cmd_map, "sample": cmd_sample}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    if args.print_config:
        print(json.dumps(_resolved(args), indent=2))
        return EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc} (coordinate {exc.coordinate})", file=sys.stderr)
        return EXIT_DOMAIN
    except MalformedInput as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
