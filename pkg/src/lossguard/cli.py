"""Command-line front end.

Subcommands: verify, sweep-r, sweep-pt, chain, loop, resources, threshold.
All outputs are UTF-8 with LF line endings; floats are written with 17
significant digits so files are bit-stable under a fixed --seed.  Exit
codes: 0 success, 1 verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from lossguard import analytics, chainsim, losscode
from lossguard.analytics import TransponderParams
from lossguard.channel import MODE_AGGREGATE, MODES
from lossguard.losscode import OUTCOMES, RecoveryError, TableDerivationError
from lossguard.simcore import fidelity, partial_trace, random_state

DEFAULT_PARAMS = TransponderParams(
    alpha=1.0 / 30.0,
    d=10.0,
    n=160,
    eta=1.0 - 1e-5,
    p_one=1.0,
    p_spg=1.0,
    nu=2.0e5,
)

SWEEP_PT_ETAS = (1.0, 1.0 - 1e-6, 1.0 - 1e-5, 1.0 - 10.0**-4.5)
PT_REFERENCE = 0.75

_PARAM_FIELDS = tuple(f.name for f in dataclass_fields(TransponderParams))
_RUN_FIELDS = ("trials", "num_stages", "seed", "mode", "p_t_override", "max_cycles")


class CliError(Exception):
    """Usage or configuration problem; maps to exit code 2."""


# ---------------------------------------------------------------------------
# formatting


def _fmt(value: float) -> str:
    return "%.17g" % float(value)


def _jsonable(obj):
    """Round-trip-safe JSON tree: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(header: str, rows: list[tuple]) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _workers() -> int:
    raw = os.environ.get("LOSSGUARD_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise CliError(f"LOSSGUARD_THREADS must be an integer, got {raw!r}")


# ---------------------------------------------------------------------------
# config plumbing


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(
            f"config {path} is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}"
        )
    if not isinstance(raw, dict):
        raise CliError(f"config {path} must be a flat JSON object")
    allowed = set(_PARAM_FIELDS) | set(_RUN_FIELDS)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise CliError(
            f"config {path}: unknown field(s) {', '.join(unknown)}; "
            f"expected {', '.join(sorted(allowed))}"
        )
    return raw


def _build_run_config(args, raw: dict) -> chainsim.ChainConfig:
    param_kwargs = {name: getattr(DEFAULT_PARAMS, name) for name in _PARAM_FIELDS}
    for name in _PARAM_FIELDS:
        if name in raw:
            param_kwargs[name] = raw[name]
    run_kwargs = {name: raw[name] for name in _RUN_FIELDS if name in raw}
    # command-line flags win over the config file
    if getattr(args, "trials", None) is not None:
        run_kwargs["trials"] = args.trials
    if getattr(args, "stages", None) is not None:
        run_kwargs["num_stages"] = args.stages
    if getattr(args, "mode", None) is not None:
        run_kwargs["mode"] = args.mode
    if getattr(args, "max_cycles", None) is not None:
        run_kwargs["max_cycles"] = args.max_cycles
    run_kwargs["seed"] = args.seed if args.seed is not None else run_kwargs.get("seed", 42)
    try:
        params = TransponderParams(**param_kwargs)
        return chainsim.ChainConfig(params=params, **run_kwargs)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad configuration: {exc}")


def _params_dict(params: TransponderParams) -> dict:
    return {name: getattr(params, name) for name in _PARAM_FIELDS}


# ---------------------------------------------------------------------------
# verify


def _check_codeword_table() -> str | None:
    from lossguard.simcore import PureState

    for word in losscode.codewords():
        ket_a, ket_b = losscode.CODEWORD_KETS[word.logical_bits]
        expected = (
            PureState.basis(ket_a).amplitudes + PureState.basis(ket_b).amplitudes
        ) / math.sqrt(2.0)
        if not np.allclose(word.state.amplitudes, expected, atol=1e-12, rtol=0.0):
            return _dumps({"property": "codeword-table", "logical_bits": word.logical_bits})
    return None


def _check_correction_tables() -> str | None:
    expected = {"00": "I", "01": "X", "10": "Z", "11": "XZ"}
    for position in range(4):
        table = losscode.derive_correction_table(position)
        if table.entries != expected:
            return _dumps(
                {
                    "property": "correction-tables",
                    "loss_position": position,
                    "entries": table.entries,
                }
            )
    return None


def _check_recovery(states: int, seed: int) -> str | None:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    for index in range(states):
        logical = random_state(2, rng)
        encoded = losscode.encode(logical)
        for position in range(4):
            damaged = partial_trace(encoded.to_density_matrix(), position)
            probs = losscode.outcome_probabilities(damaged, position)
            if np.max(np.abs(probs - 0.25)) > 1e-12:
                return _dumps(
                    {
                        "property": "outcome-uniformity",
                        "state_index": index,
                        "loss_position": position,
                        "probabilities": [float(p) for p in probs],
                    }
                )
            for outcome in OUTCOMES:
                branch = losscode.recover_forced(damaged, position, outcome)
                fid = fidelity(branch.corrected_state, encoded)
                if fid < 1.0 - 1e-10:
                    return _dumps(
                        {
                            "property": "round-trip",
                            "state_index": index,
                            "loss_position": position,
                            "outcome": outcome,
                            "fidelity": fid,
                            "logical_real": [float(a.real) for a in logical.amplitudes],
                            "logical_imag": [float(a.imag) for a in logical.amplitudes],
                        }
                    )
    return None


def cmd_verify(args) -> int:
    if (args.qubit_loss is None) != (args.outcome is None):
        raise CliError("--qubit-loss and --outcome must be given together")
    if args.qubit_loss is not None:
        if args.qubit_loss not in range(4):
            raise CliError("--qubit-loss must be one of 0, 1, 2, 3")
        if args.outcome not in OUTCOMES:
            raise CliError(f"--outcome must be one of {', '.join(OUTCOMES)}")
        table = losscode.derive_correction_table(args.qubit_loss)
        word = table.entries[args.outcome]
        print(
            f"loss at qubit {args.qubit_loss}, ancilla outcome {args.outcome} "
            f"-> correction {word}"
        )
        return 0
    if args.list_tables:
        records = [rec for t in losscode.all_correction_tables() for rec in t.to_records()]
        sys.stdout.write(_dumps(records))
        return 0

    checks = [
        ("codeword-table", _check_codeword_table),
        ("correction-tables", _check_correction_tables),
        ("round-trip", lambda: _check_recovery(args.states, args.seed)),
    ]
    failed = None
    for name, check in checks:
        try:
            failure = check()
        except (RecoveryError, TableDerivationError) as exc:
            failure = _dumps({"property": name, "error": str(exc)})
        if failure is None:
            print(f"PASS {name}")
        else:
            print(f"FAIL {name}")
            failed = failure
            break
    if failed is not None:
        sys.stderr.write(failed)
        return 1
    return 0


# ---------------------------------------------------------------------------
# sweeps


def _grid(lo: float, hi: float, steps: int, log: bool, name: str) -> np.ndarray:
    if steps < 2:
        raise CliError(f"{name}: steps must be >= 2")
    if not lo < hi:
        raise CliError(f"{name}: need lo < hi, got [{lo}, {hi}]")
    if log:
        if lo <= 0:
            raise CliError(f"{name}: log grid needs lo > 0")
        return np.exp(np.linspace(math.log(lo), math.log(hi), steps))
    return np.linspace(lo, hi, steps)


def cmd_sweep_r(args) -> int:
    xs = _grid(args.x_lo, args.x_hi, args.x_steps, log=True, name="x range")
    pts = _grid(args.pt_lo, args.pt_hi, args.pt_steps, log=False, name="p_t range")
    if args.pt_lo <= 0 or args.pt_hi > 1:
        raise CliError("p_t range must lie within (0, 1]")
    rows = [
        (float(x), float(pt), float(analytics.r(float(x), float(pt))))
        for x in xs
        for pt in pts
    ]
    contour = [(float(x), float(analytics.break_even_pt(float(x)))) for x in xs]
    x_star, pt_star = analytics.min_break_even_pt()
    minimum = {"x": x_star, "p_t": pt_star}

    if args.format == "csv":
        _emit(_csv("x,p_t,r", rows), args.out)
        contour_path = str(Path(args.out).with_suffix(".contour.csv"))
        _emit(_csv("x,p_t", contour), contour_path)
        print(f"wrote {len(rows)} rows to {args.out}")
        print(f"wrote r = 1 contour to {contour_path}")
    else:
        payload = {
            "grid": [{"x": x, "p_t": pt, "r": rv} for x, pt, rv in rows],
            "contour_r_equals_1": [{"x": x, "p_t": pt} for x, pt in contour],
            "contour_minimum": minimum,
        }
        _emit(_dumps(payload), args.out)
    print(
        f"r = 1 contour minimum: p_t = {_fmt(pt_star)} at x = {_fmt(x_star)}"
    )
    return 0


def cmd_sweep_pt(args) -> int:
    if args.n_lo < 1 or args.n_lo >= args.n_hi:
        raise CliError("n range must satisfy 1 <= lo < hi")
    if args.n_steps < 2:
        raise CliError("n range: steps must be >= 2")
    raw = np.exp(np.linspace(math.log(args.n_lo), math.log(args.n_hi), args.n_steps))
    ns = sorted(set(int(round(v)) for v in raw))
    etas = tuple(args.eta) if args.eta else SWEEP_PT_ETAS
    for eta in etas:
        if not 0.0 <= eta <= 1.0:
            raise CliError(f"eta must lie in [0, 1], got {eta}")
    rows = []
    for n in ns:
        for eta in etas:
            params = TransponderParams(alpha=0.0, d=0.0, n=n, eta=eta)
            rows.append((n, float(eta), analytics.p_t_full(params)))

    if args.format == "csv":
        _emit(_csv("n,eta,p_t_full", rows), args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        payload = {
            "grid": [{"n": n, "eta": eta, "p_t_full": pt} for n, eta, pt in rows],
            "reference_p_t": PT_REFERENCE,
        }
        _emit(_dumps(payload), args.out)
    print(f"reference line: p_t = {_fmt(PT_REFERENCE)}")
    return 0


# ---------------------------------------------------------------------------
# chain / loop


def _threshold_report() -> dict:
    n_star = analytics.threshold_n()
    x_star, pt_star = analytics.min_break_even_pt()
    return {
        "threshold_n": n_star,
        "ancilla_qubits_per_gate": 2 * n_star,
        "p_t_at_threshold": analytics.p_t_aggregate(n_star),
        "required_p_t": pt_star,
        "optimal_x": x_star,
    }


def _print_threshold(report: dict) -> None:
    print(f"break-even ancilla count: n = {report['threshold_n']}")
    print(
        f"each teleported two-qubit gate then consumes "
        f"{report['ancilla_qubits_per_gate']} ancilla qubits"
    )
    print(f"p_t at n = {report['threshold_n']}: {_fmt(report['p_t_at_threshold'])}")
    print(
        f"minimum usable p_t: {_fmt(report['required_p_t'])} "
        f"at x = {_fmt(report['optimal_x'])}"
    )


def _analytic_chain(config: chainsim.ChainConfig) -> dict:
    params = config.params
    p = analytics.survival_prob(params.alpha, params.d)
    pf = analytics.p_f(p)
    pt = config.effective_p_t()
    per_stage = pf * pt
    out = {
        "survival_prob": p,
        "p_f": pf,
        "p_t": pt,
        "per_stage_success": per_stage,
        "end_to_end_success": per_stage**config.num_stages,
    }
    if params.d > 0 and params.alpha > 0:
        out["alpha_prime"] = analytics.alpha_prime(params.alpha, params.d)
        if pt > 0:
            out["r"] = analytics.r(params.x, pt)
            out["alpha_prime_with_gates"] = 2.0 * params.alpha * out["r"]
    return out


def cmd_chain(args) -> int:
    if args.threshold:
        _print_threshold(_threshold_report())
        return 0
    config = _build_run_config(args, _load_config(args.config))
    stats = chainsim.run_chain(config, workers=_workers())
    report = {
        "command": "chain",
        "mode": config.mode,
        "seed": config.seed,
        "params": _params_dict(config.params),
        "p_t_override": config.p_t_override,
        "empirical": stats.to_dict(),
        "analytic": _analytic_chain(config),
    }
    _emit(_dumps(report), args.out)
    if args.out is not None:
        print(f"wrote report to {args.out}")
    return 0


def cmd_loop(args) -> int:
    config = _build_run_config(args, _load_config(args.config))
    stats = chainsim.run_loop(config, workers=_workers())
    params = config.params
    analytic_mean = chainsim.analytic_loop_mean_cycles(config)
    analytic = {
        "per_cycle_success": analytics.p_f(
            analytics.survival_prob(params.alpha, params.d)
        )
        * config.effective_p_t(),
        "mean_cycles": analytic_mean,
        "storage_time": analytic_mean * params.d / params.nu
        if math.isfinite(analytic_mean)
        else math.inf,
    }
    if params.alpha > 0:
        analytic["bare_half_decay_time"] = analytics.storage_time(params.alpha, params.nu)
    report = {
        "command": "loop",
        "mode": config.mode,
        "seed": config.seed,
        "params": _params_dict(config.params),
        "p_t_override": config.p_t_override,
        "empirical": stats.to_dict(),
        "analytic": analytic,
    }
    _emit(_dumps(report), args.out)
    if args.out is not None:
        print(f"wrote report to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# resources / threshold


_RESOURCE_COLUMNS = ("spg", "qnd", "cnot", "cz", "one_qubit", "pd")


def cmd_resources(args) -> int:
    if args.n < 1:
        raise CliError("--n must be >= 1")
    levels = analytics.REDUCTION_LEVELS if args.all else (args.level,)
    counts = [analytics.resources(args.n, level) for level in levels]
    header = ("level",) + _RESOURCE_COLUMNS
    table = [header] + [
        (c.reduction_level,) + tuple(str(getattr(c, col)) for col in _RESOURCE_COLUMNS)
        for c in counts
    ]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    print(f"per-transponder hardware at n = {args.n}")
    for row in table:
        print("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    if args.out is not None:
        _emit(_dumps([c.as_dict() | {"n": args.n} for c in counts]), args.out)
        print(f"wrote report to {args.out}")
    return 0


def cmd_threshold(args) -> int:
    report = _threshold_report()
    _print_threshold(report)
    if args.out is not None:
        _emit(_dumps(report), args.out)
        print(f"wrote report to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat JSON file of run parameters")
    sub.add_argument("--trials", type=int, help="Monte Carlo trials")
    sub.add_argument("--seed", type=int, default=None, help="run seed (default 42)")
    sub.add_argument("--mode", choices=MODES, default=None, help="gate failure model")
    sub.add_argument("--out", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossguard",
        description="Loss-code recovery checks, attenuation sweeps, and "
        "transponder chain simulations.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("verify", help="run the recovery self-checks")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--states", type=int, default=20, help="random inputs to test")
    p.add_argument("--qubit-loss", type=int, default=None, help="report the correction for this lost qubit")
    p.add_argument("--outcome", default=None, help="ancilla readout bits, e.g. 01")
    p.add_argument("--list-tables", action="store_true", help="dump all correction tables as JSON")
    p.set_defaults(func=cmd_verify)

    p = subparsers.add_parser("sweep-r", help="grid of the attenuation ratio r(x, p_t)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--x-lo", type=float, default=0.01)
    p.add_argument("--x-hi", type=float, default=3.0)
    p.add_argument("--x-steps", type=int, default=300)
    p.add_argument("--pt-lo", type=float, default=0.5)
    p.add_argument("--pt-hi", type=float, default=1.0)
    p.add_argument("--pt-steps", type=int, default=200)
    p.set_defaults(func=cmd_sweep_r)

    p = subparsers.add_parser("sweep-pt", help="transponder success vs. ancilla count")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--n-lo", type=int, default=1)
    p.add_argument("--n-hi", type=int, default=1000)
    p.add_argument("--n-steps", type=int, default=200)
    p.add_argument(
        "--eta",
        type=float,
        action="append",
        help="detector efficiency (repeatable; default four standard curves)",
    )
    p.set_defaults(func=cmd_sweep_pt)

    p = subparsers.add_parser("chain", help="Monte Carlo over a transponder chain")
    _add_run_flags(p)
    p.add_argument("--stages", type=int, help="stages in the chain")
    p.add_argument(
        "--threshold",
        action="store_true",
        help="print the break-even ancilla count instead of simulating",
    )
    p.set_defaults(func=cmd_chain)

    p = subparsers.add_parser("loop", help="Monte Carlo over the cyclic fiber memory")
    _add_run_flags(p)
    p.add_argument("--max-cycles", type=int, help="censoring cap per trial")
    p.set_defaults(func=cmd_loop)

    p = subparsers.add_parser("resources", help="per-transponder hardware table")
    p.add_argument("--level", choices=analytics.REDUCTION_LEVELS, default="iii")
    p.add_argument("--n", type=int, default=1, help="ancilla pairs per teleported gate")
    p.add_argument("--all", action="store_true", help="print every reduction level")
    p.add_argument("--out", help="also write the rows as JSON")
    p.set_defaults(func=cmd_resources)

    p = subparsers.add_parser("threshold", help="break-even ancilla count")
    p.add_argument("--out", help="also write the report as JSON")
    p.set_defaults(func=cmd_threshold)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
