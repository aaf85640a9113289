"""
Command-line interface.

Exit codes: 0 success, 1 fidelity below threshold, 2 bad arguments or
dimensions, 3 infeasible target.

Target grammar (``--target``)::

    cat:phi=<angle>                       (|n> + e^{i phi}|-n>)/sqrt2
    scs:s=5/2,theta=<angle>[,phi=<angle>] spin-coherent state
    scscat:sign=+|-|+i|-i                 (|S1> + c|S2>)/sqrt2
    fourier:k=<int>                       discrete Fourier state
    random:kind=real|complex,seed=<int>   seeded random state
    amps:[a1,a2,...]                      explicit amplitudes, e.g. 0.5-0.2i

Angles accept plain numbers or multiples of ``pi`` such as ``-pi/2`` or ``3pi/4``.
``amps`` lists of length ``n + 1`` cover the reachable sites in ascending order;
lists of length ``2n + 1`` cover every site ``-n..n``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .core import CoinParams, WalkerCoinState, evolve, fidelity, project_coin, basis_probabilities
from .core import estimate_fidelity_mc, simulate_counts
from .errors import (
    DimensionMismatchError,
    InfeasibleTargetError,
    InvalidParameterError,
    QuditWalkError,
    UnsupportedConfigurationError,
    ZeroProbabilityError,
)
from .optimizer import EngineeringProblem, OptimizerConfig, optimize
from .phasespace import FIELD_KINDS, STATES, SphericalGrid, integrate, state_field, write_csv
from .photonic import QPlateParams, circuit_table, circuit_to_dict, compile_walk, decompose_coin, simulate_physical
from .report import RunReport, complex_pairs, derive_seed, timestamp
from .targets import TargetSpec, build_target, gram_schmidt_basis, table1_catalog

__all__ = ["main", "build_parser", "parse_target", "parse_angle", "run_engineering", "OUTPUT_DIR_ENV"]

log = logging.getLogger("quditwalk")

OUTPUT_DIR_ENV = "QUDITWALK_OUTPUT_DIR"
REPORT_THRESHOLD = 0.999

EXIT_OK, EXIT_BELOW, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3

# seed-stream keys below the master seed
_KEY_TARGET, _KEY_SHOTS, _KEY_RESAMPLE = 0, 1, 2


class UsageError(InvalidParameterError):
    """Malformed command-line value."""


# ---------------------------------------------------------------- parsing

_PI_RE = re.compile(r"^([+-]?)(\d*\.?\d*(?:e[+-]?\d+)?)\*?pi(?:/(\d+\.?\d*))?$")


def parse_angle(text: str) -> float:
    """Radians from ``1.2``, ``pi``, ``-pi/2``, ``3pi/4`` or ``0.5*pi``."""
    t = text.strip().replace(" ", "").lower()
    m = _PI_RE.match(t)
    try:
        if m:
            sign = -1.0 if m.group(1) == "-" else 1.0
            coef = float(m.group(2)) if m.group(2) else 1.0
            den = float(m.group(3)) if m.group(3) else 1.0
            value = sign * coef * math.pi / den
        else:
            value = float(t)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse angle {text!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"angle must be finite, got {text!r}")
    return value


def _parse_fraction(text: str) -> float:
    try:
        if "/" in text:
            num, den = text.split("/")
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number {text!r}") from None


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {text!r}") from None


def _parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").lower().replace("i", "j")
    t = re.sub(r"(^|[+-])j", r"\g<1>1j", t)
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse amplitude {text!r}") from None


def _kv(body: str, allowed: set[str], required: set[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in allowed:
            raise UsageError(f"unknown parameter {k!r}; expected one of {sorted(allowed)}")
        out[k] = v.strip()
    missing = required - out.keys()
    if missing:
        raise UsageError(f"missing parameter(s) {sorted(missing)}")
    return out


def parse_target(text: str, n_steps: int) -> TargetSpec:
    """Translate the ``--target`` grammar into a :class:`TargetSpec`."""
    if ":" not in text:
        raise UsageError(f"target must look like kind:params, got {text!r}")
    kind, body = text.split(":", 1)
    kind = kind.strip().lower()
    if kind == "cat":
        kv = _kv(body, {"phi"}, set())
        return TargetSpec("extremal-cat", {"phi": parse_angle(kv.get("phi", "0"))}, n_steps)
    if kind == "scs":
        kv = _kv(body, {"s", "theta", "phi"}, {"theta"})
        s = _parse_fraction(kv.get("s", str(n_steps / 2)))
        params = {"s": s, "theta": parse_angle(kv["theta"]), "phi": parse_angle(kv.get("phi", "0"))}
        return TargetSpec("scs", params, n_steps)
    if kind == "scscat":
        kv = _kv(body, {"sign", "s"}, {"sign"})
        s = _parse_fraction(kv.get("s", str(n_steps / 2)))
        return TargetSpec("scs-superposition", {"sign": kv["sign"], "s": s}, n_steps)
    if kind == "fourier":
        kv = _kv(body, {"k"}, {"k"})
        return TargetSpec("fourier", {"k": _parse_int(kv["k"], "k")}, n_steps)
    if kind == "random":
        kv = _kv(body, {"kind", "seed"}, {"kind", "seed"})
        if kv["kind"] not in ("real", "complex"):
            raise UsageError(f"random kind must be real or complex, got {kv['kind']!r}")
        return TargetSpec(f"random-{kv['kind']}", {"seed": _parse_int(kv["seed"], "seed")}, n_steps)
    if kind == "amps":
        body = body.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise UsageError("amplitudes must be written as [a1,a2,...]")
        amps = [_parse_complex(x) for x in body[1:-1].split(",") if x.strip()]
        if len(amps) not in (n_steps + 1, 2 * n_steps + 1):
            raise DimensionMismatchError(
                f"{len(amps)} amplitudes for a {n_steps}-step walk; expected {n_steps + 1} or {2 * n_steps + 1}"
            )
        return TargetSpec("explicit", {"amplitudes": amps}, n_steps)
    raise UsageError(f"unknown target kind {kind!r}")


def _parse_coins(text: str) -> list[CoinParams]:
    """``theta,xi,zeta;theta,xi,zeta;...`` with angle syntax."""
    coins = []
    for step in filter(None, (s.strip() for s in text.split(";"))):
        parts = step.split(",")
        if len(parts) != 3:
            raise UsageError(f"each coin needs theta,xi,zeta; got {step!r}")
        coins.append(CoinParams(*(parse_angle(p) for p in parts)))
    if not coins:
        raise UsageError("no coins given")
    return coins


def _parse_grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m:
        raise UsageError(f"grid must look like AxB, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if a < 2 or b < 1:
        raise UsageError(f"grid needs at least 2 alpha and 1 beta samples, got {text!r}")
    return a, b


def _alpha0_list(text: str, n: int) -> list[QPlateParams]:
    values = [parse_angle(v) for v in text.split(",")]
    if len(values) == 1:
        values *= n
    if len(values) != n:
        raise UsageError(f"{len(values)} Q-plate orientations for {n} steps")
    return [QPlateParams(alpha0=a) for a in values]


def _output_path(given: str | None, default_name: str) -> Path:
    if given:
        return Path(given)
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".") / default_name


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# --------------------------------------------------------------- pipeline

def _measurement(state, basis, shots: int, master_seed: int, resamples: int) -> dict:
    counts = simulate_counts(state, basis, shots, derive_seed(master_seed, _KEY_SHOTS))
    resample_seed = derive_seed(master_seed, _KEY_RESAMPLE)
    f_hat, sigma = estimate_fidelity_mc(counts, 0, resamples, resample_seed)
    return {"shots": shots, "counts": [int(c) for c in counts], "fidelity": f_hat, "sigma": sigma,
            "resamples": resamples}


def _lattice_dict(n_steps: int, oam_step: int = 1) -> dict:
    return {"n_steps": n_steps, "oam_step": oam_step, "dimension": n_steps + 1,
            "sites": list(range(-n_steps, n_steps + 1, 2))}


def run_engineering(
    target_text: str,
    n_steps: int,
    seed: int,
    starts: int = 32,
    compile_optics: bool = False,
    alpha0: str = "-pi/4",
    shots: int = 0,
    resamples: int = 1000,
    maximize_probability: bool = False,
    max_iterations: int = 2000,
) -> RunReport:
    """Optimize coins for a target and collect everything the report records."""
    spec = parse_target(target_text, n_steps)
    target = build_target(spec)
    config = OptimizerConfig(multistarts=starts, seed=seed, maximize_probability=maximize_probability,
                             max_iterations=max_iterations)
    result = optimize(EngineeringProblem(n_steps, target), config)
    state, p = project_coin(evolve(WalkerCoinState.initial(), result.coins))
    basis = gram_schmidt_basis(target)

    circuit = physical = None
    if compile_optics:
        compiled = compile_walk(result.coins, _alpha0_list(alpha0, n_steps))
        phys_state, phys_p = simulate_physical(compiled)
        circuit = circuit_to_dict(compiled)
        physical = {"fidelity_to_ideal": fidelity(phys_state, state), "probability": phys_p,
                    "probability_difference": abs(phys_p - p)}

    return RunReport(
        tool_version=__version__,
        timestamp=timestamp(),
        master_seed=seed,
        target={"spec": target_text, "kind": spec.kind, "amplitudes": complex_pairs(target.amplitudes)},
        lattice=_lattice_dict(n_steps),
        engineering={
            "coins": [list(c.as_tuple()) for c in result.coins],
            "fidelity": result.fidelity,
            "probability": result.probability,
            "best_start_index": result.best_start_index,
            "iterations_used": result.iterations_used,
            "multistarts": starts,
            "seed": result.seed,
            "converged": result.converged,
            "maximize_probability": maximize_probability,
        },
        walker_state=complex_pairs(state.amplitudes),
        basis_probabilities=[float(x) for x in basis_probabilities(state, basis)],
        circuit=circuit,
        physical=physical,
        measurement=_measurement(state, basis, shots, seed, resamples) if shots else None,
    )


def _seed_or_new(seed: int | None) -> int:
    return seed if seed is not None else secrets.randbits(63)


def _log_coins(coins) -> None:
    for t, c in enumerate(coins, start=1):
        th, xi, ze = (math.degrees(v) for v in c)
        log.info("coin %d: theta=%.3f deg xi=%.3f deg zeta=%.3f deg", t, th, xi, ze)


# --------------------------------------------------------------- commands

def cmd_engineer(args) -> int:
    seed = _seed_or_new(args.seed)
    report = run_engineering(args.target, args.steps, seed, args.starts, args.compile, args.alpha0,
                             args.shots, args.resamples, args.maximize_probability, args.max_iter)
    out = _output_path(args.out, "engineer_report.json")
    _write_text(out, report.to_json())
    if args.plot:
        from .plotting import plot_basis_probabilities

        plot_basis_probabilities(report.basis_probabilities, args.plot, title=args.target)
    _log_coins(report.coins)
    eng = report.engineering
    line = f"fidelity={eng['fidelity']:.12f} probability={eng['probability']:.6f} seed={seed}"
    if report.measurement:
        line += f" measured={report.measurement['fidelity']:.4f}+-{report.measurement['sigma']:.4f}"
    print(line)
    print(f"report written to {out}")
    return EXIT_OK if eng["fidelity"] >= REPORT_THRESHOLD else EXIT_BELOW


def cmd_qfunc(args) -> int:
    n_alpha, n_beta = _parse_grid(args.grid)
    s = _parse_fraction(args.spin)
    grid = SphericalGrid.gauss(n_alpha, n_beta) if args.quadrature == "gauss" else SphericalGrid.uniform(n_alpha, n_beta)
    field = state_field(args.state, args.field, grid, s)
    out = _output_path(args.out, f"qfunc_{args.state}_{args.field}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        rows = write_csv(field, fh, polar=args.polar)
    masked = int(np.isnan(field.values).sum())
    msg = f"{rows} rows written to {out}"
    if masked:
        msg += f" ({masked} masked points)"
    if args.quadrature == "gauss" and args.field in ("q", "qinc"):
        msg += f"; normalization {integrate(field):.12f}"
    print(msg)
    return EXIT_OK


def _batch_one(task: tuple[int, str, str, int, int, int, bool]) -> RunReport:
    index, label, grammar, seed, starts, shots, mp = task
    return run_engineering(grammar, 5, seed, starts, compile_optics=True, shots=shots, maximize_probability=mp)


def _safe_name(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_") or "target"


def run_batch(master_seed: int, starts: int = 32, jobs: int = 1, shots: int = 0,
              maximize_probability: bool = False) -> list[tuple]:
    """Run the 32-target benchmark; returns ``(entry, report)`` pairs in catalog order."""
    catalog = table1_catalog()
    tasks = [(i, e.label, e.grammar, derive_seed(master_seed, _KEY_TARGET, i), starts, shots, maximize_probability)
             for i, e in enumerate(catalog)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_batch_one, tasks))
    else:
        reports = [_batch_one(t) for t in tasks]
    return list(zip(catalog, reports))


def cmd_batch(args) -> int:
    if args.suite != "table1":
        raise UsageError(f"unknown suite {args.suite!r}")
    seed = _seed_or_new(args.seed)
    out_dir = _output_path(args.out, "batch")
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_batch(seed, args.starts, args.jobs, args.shots, args.maximize_probability)

    failures = 0
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "target", "fidelity", "probability", "reference_probability",
                    "reference_fidelity", "passed", "seed", "report"])
        for i, (entry, rep) in enumerate(results):
            name = f"{i:02d}_{_safe_name(entry.label)}.json"
            _write_text(out_dir / name, rep.to_json())
            f, p = rep.engineering["fidelity"], rep.engineering["probability"]
            ok = f >= REPORT_THRESHOLD
            failures += not ok
            w.writerow([i, entry.label, f"{f:.17g}", f"{p:.17g}", entry.reference_probability,
                        entry.reference_fidelity, int(ok), rep.master_seed, name])
    if not args.no_plots:
        from .plotting import plot_batch_summary

        plot_batch_summary([e.label for e, _ in results], [r.engineering["fidelity"] for _, r in results],
                           [r.engineering["probability"] for _, r in results], out_dir / "summary.png",
                           [e.reference_probability for e, _ in results])
    print(f"{len(results) - failures}/{len(results)} targets reached fidelity >= {REPORT_THRESHOLD}; "
          f"summary in {out_dir / 'summary.csv'}")
    return EXIT_OK if failures == 0 else EXIT_BELOW


def _coins_from_args(args) -> list[CoinParams]:
    if args.coins and args.report:
        raise UsageError("give either --coins or --report, not both")
    if args.report:
        rep = RunReport.from_json(Path(args.report).read_text(encoding="utf-8"))
        return [CoinParams(*c) for c in rep.coins]
    if args.coins:
        return _parse_coins(args.coins)
    raise UsageError("one of --coins or --report is required")


def cmd_compile(args) -> int:
    coins = _coins_from_args(args)
    if args.single:
        if len(coins) != 1:
            raise UsageError("--single takes exactly one coin")
        from .core import coin_matrix

        plates = decompose_coin(coin_matrix(coins[0]))
        rows = [{"element": p.kind, "angle": p.angle} for p in plates]
        text = (json.dumps(rows, indent=2) + "\n") if args.format == "json" else \
            "element\tangle\n" + "".join(f"{r['element']}\t{r['angle']!r}\n" for r in rows)
    else:
        circuit = compile_walk(coins, _alpha0_list(args.alpha0, len(coins)))
        text = (json.dumps(circuit_to_dict(circuit), indent=2, sort_keys=True) + "\n") \
            if args.format == "json" else circuit_table(circuit)
    if args.out:
        _write_text(Path(args.out), text)
        print(f"circuit written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    coins = _coins_from_args(args)
    n = len(coins)
    seed = _seed_or_new(args.seed)
    if args.physical:
        state, p = simulate_physical(compile_walk(coins, _alpha0_list(args.alpha0, n)))
    else:
        state, p = project_coin(evolve(WalkerCoinState.initial(), coins))
    target_info = probs = measurement = None
    f = None
    if args.target:
        spec = parse_target(args.target, n)
        target = build_target(spec)
        f = fidelity(state, target)
        basis = gram_schmidt_basis(target)
        probs = [float(x) for x in basis_probabilities(state, basis)]
        target_info = {"spec": args.target, "kind": spec.kind, "amplitudes": complex_pairs(target.amplitudes)}
        if args.shots:
            measurement = _measurement(state, basis, args.shots, seed, args.resamples)
    report = RunReport(
        tool_version=__version__,
        timestamp=timestamp(),
        master_seed=seed,
        target=target_info,
        lattice=_lattice_dict(n),
        engineering={"coins": [list(c.as_tuple()) for c in coins], "fidelity": f, "probability": p,
                     "physical": bool(args.physical)},
        walker_state=complex_pairs(state.amplitudes),
        basis_probabilities=probs,
        measurement=measurement,
    )
    out = _output_path(args.out, "simulate_report.json")
    _write_text(out, report.to_json())
    print(f"probability={p:.12f}" + (f" fidelity={f:.12f}" if f is not None else "") + f"; report written to {out}")
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quditwalk", description=__doc__.split("\n\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("engineer", help="optimize coins for a target state")
    p.add_argument("--target", required=True, help="target spec, see the module help")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--seed", type=int, default=None, help="master seed (random and recorded if omitted)")
    p.add_argument("--starts", type=int, default=32, help="number of multistarts")
    p.add_argument("--max-iter", type=int, default=2000, help="iterations per local search")
    p.add_argument("--maximize-probability", action="store_true",
                   help="raise the success probability among fidelity-optimal solutions")
    p.add_argument("--compile", action="store_true", help="compile to waveplates and Q-plates and verify")
    p.add_argument("--alpha0", default="-pi/4", help="Q-plate orientation(s), one or one per step")
    p.add_argument("--shots", type=int, default=0, help="simulate this many detection events")
    p.add_argument("--resamples", type=int, default=1000, help="Monte Carlo resamples for sigma")
    p.add_argument("--out", help="report path (JSON)")
    p.add_argument("--plot", help="also render the basis probabilities to this image file")
    p.set_defaults(func=cmd_engineer)

    p = sub.add_parser("qfunc", help="export a phase-space field on a grid")
    p.add_argument("--state", choices=STATES, default="psi2")
    p.add_argument("--field", choices=FIELD_KINDS, default="q")
    p.add_argument("--grid", default="128x256", help="AxB samples in alpha and beta")
    p.add_argument("--spin", default="5/2")
    p.add_argument("--quadrature", choices=("uniform", "gauss"), default="uniform",
                   help="alpha sampling: equally spaced or Gauss-Legendre in cos(alpha)")
    p.add_argument("--polar", action="store_true", help="write x,y,z,value instead of alpha,beta,value")
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_qfunc)

    p = sub.add_parser("batch", help="run the 32-target benchmark")
    p.add_argument("--suite", default="table1")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--maximize-probability", action="store_true")
    p.add_argument("--no-plots", action="store_true", help="skip the summary figure")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_batch)

    for name, func, help_ in (("compile", cmd_compile, "coin sequence to optical elements"),
                              ("simulate", cmd_simulate, "run a given coin sequence")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--coins", help="theta,xi,zeta;... (radians or pi forms)")
        p.add_argument("--report", help="take the coins from an engineering report")
        p.add_argument("--alpha0", default="-pi/4", help="Q-plate orientation(s)")
        p.add_argument("--out")
        p.set_defaults(func=func)
        if name == "compile":
            p.add_argument("--format", choices=("table", "json"), default="table")
            p.add_argument("--single", action="store_true", help="decompose one coin into QWP-HWP-QWP only")
        else:
            p.add_argument("--target", help="compare against this target")
            p.add_argument("--physical", action="store_true", help="propagate through the compiled optics")
            p.add_argument("--shots", type=int, default=0)
            p.add_argument("--resamples", type=int, default=1000)
            p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleTargetError as exc:
        print(f"error: infeasible target: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidParameterError, DimensionMismatchError, UnsupportedConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ZeroProbabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BELOW
    except (OSError, QuditWalkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
