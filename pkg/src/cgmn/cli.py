"""Command-line interface: ``cgmn {symbol,omega-curve,solve1d,solve2d,verify}``.

Parameters come from built-in defaults, then an optional ``--spec`` JSON
file, then explicit flags (highest precedence).  Spec files look like::

    {"kind": "fixed-ng-1d",
     "parameters": {"k_values": [31.4, 62.8], "omega_grid": [1.4, 1.5]},
     "output_path": "scan.csv"}

Exit codes: 0 success, 1 bad arguments, 2 non-convergence in a required
run, 3 oracle verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from .symbol import DEFAULT_CURVE_NODES, omega_curve

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_ORACLE = 0, 1, 2, 3

log = logging.getLogger("cgmn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_real(text: str) -> float:
    """Float, optionally with a ``pi`` factor: ``"10pi"``, ``"2.5*pi"``, ``"pi"``."""
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([0-9.eE+-]*?)\*?pi", t)
    try:
        if m:
            coeff = m.group(1)
            return (float(coeff) if coeff not in ("", "+", "-") else float(coeff + "1")) * math.pi
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from None


def parse_list(text: str) -> list[float]:
    """Comma-separated reals, or a ``start:step:stop`` range (inclusive)."""
    if ":" in text:
        parts = [parse_real(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise argparse.ArgumentTypeError(f"range must be start:step:stop with step > 0, got {text!r}")
        start, step, stop = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [float(v) for v in np.round(start + step * np.arange(count), 12)]
    return [parse_real(p) for p in text.split(",") if p.strip()]


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, solver: bool = False) -> None:
    p.add_argument("--out", help="output CSV path (manifest written alongside)")
    p.add_argument("--spec", help="JSON experiment spec; flags override its values")
    p.add_argument("--ng", type=parse_real, dest="n_g", help="points per wavelength")
    if solver:
        p.add_argument("--tol", type=float, dest="tolerance", help="relative tolerance (default 1e-6)")
        p.add_argument("--max-iter", type=int, dest="max_iterations", help="iteration cap (default 10*N)")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--omega", type=parse_real, help="constant relaxation factor")
        group.add_argument("--omega-policy", choices=["local"], help="spatially varying omega from the curve")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cgmn", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("symbol", help="amplitude surface and condition proxy for one n_g")
    _common(p)
    p.add_argument("--theta-count", type=int)
    p.add_argument("--omega-count", type=int)

    p = sub.add_parser("omega-curve", help="optimal omega versus points per wavelength")
    _common(p)
    p.add_argument("--ng-values", type=parse_list, dest="n_g_values")

    p = sub.add_parser("solve1d", help="1D CGMN iteration counts over an omega grid")
    _common(p, solver=True)
    p.add_argument("--mode", choices=["fixed-ng", "fixed-h"])
    p.add_argument("--k-values", type=parse_list, help="wavenumbers, e.g. 10pi,20pi")
    p.add_argument("--omega-grid", type=parse_list, help="e.g. 1.0:0.05:1.95")
    p.add_argument("--source", choices=["random", "point"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("solve2d", help="scattering by a high-contrast anomaly in 2D")
    _common(p, solver=True)
    p.add_argument("--nx", type=int)
    p.add_argument("--background-k", type=parse_real)
    p.add_argument("--anomaly-k", type=parse_real)
    p.add_argument("--region", type=parse_list, help="x0,x1,y0,y1 in [0,1]")

    p = sub.add_parser("verify", help="dense SSOR/Kaczmarz identity suite")
    _common(p)
    p.add_argument("--sizes", type=parse_int_list)
    p.add_argument("--omegas", type=parse_list)
    return parser


KIND_BY_COMMAND = {"symbol": "symbol-surface", "omega-curve": "omega-curve", "solve2d": "contrast-2d",
                   "verify": "verify-oracle"}

DEFAULTS = {
    "symbol-surface": {"n_g": 10.0, "theta_count": 128, "omega_count": 128},
    "omega-curve": {"n_g_values": list(DEFAULT_CURVE_NODES)},
    "fixed-ng-1d": {"n_g": 10.0, "k_values": list(ex.DEFAULT_K_VALUES), "omega_grid": list(ex.DEFAULT_OMEGA_GRID),
                    "tolerance": 1e-6, "max_iterations": None, "source": "random", "seed": 0, "workers": 1},
    "contrast-2d": {"nx": ex.DEFAULT_2D_GRID, "background_k": None, "anomaly_k": None,
                    "region": list(ex.DEFAULT_2D_REGION), "tolerance": 1e-6, "max_iterations": None,
                    "omega": None, "omega_policy": "local"},
    "verify-oracle": {"sizes": list(ex.DEFAULT_ORACLE_SIZES), "omegas": list(ex.DEFAULT_ORACLE_OMEGAS)},
}
DEFAULTS["fixed-h-1d"] = dict(DEFAULTS["fixed-ng-1d"])

FLAG_KEYS = {"n_g", "theta_count", "omega_count", "n_g_values", "k_values", "omega_grid", "tolerance",
             "max_iterations", "source", "seed", "workers", "nx", "background_k", "anomaly_k", "region",
             "omega", "omega_policy", "sizes", "omegas"}


def resolve_spec(args: argparse.Namespace) -> ex.ExperimentSpec:
    """Merge defaults, the ``--spec`` file and explicit flags into one spec."""
    if args.command == "solve1d":
        kind = "fixed-h-1d" if args.mode == "fixed-h" else "fixed-ng-1d"
    else:
        kind = KIND_BY_COMMAND[args.command]
    file_params, file_out = {}, None
    if args.spec:
        try:
            doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec file {args.spec}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("spec file must contain a JSON object")
        if args.command == "solve1d" and args.mode is None and doc.get("kind") in ("fixed-ng-1d", "fixed-h-1d"):
            kind = doc["kind"]
        elif doc.get("kind") not in (None, kind):
            raise UsageError(f"spec kind {doc.get('kind')!r} does not match command {args.command!r}")
        file_params = dict(doc.get("parameters", {}))
        unknown = set(file_params) - FLAG_KEYS
        if unknown:
            raise UsageError(f"unknown spec parameters: {sorted(unknown)}")
        file_out = doc.get("output_path")

    params = dict(DEFAULTS[kind])
    params.update(file_params)
    for key in FLAG_KEYS & set(vars(args)):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.command == "solve2d" and getattr(args, "omega", None) is not None:
        params["omega_policy"] = None
    output = args.out or file_out or f"{kind}.csv"
    try:
        return ex.ExperimentSpec(kind, params, str(output))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _run(spec: ex.ExperimentSpec) -> tuple[int, list, str, list[str]]:
    """Execute a resolved spec; returns (exit code, iteration records, scalar type, outputs)."""
    p = spec.parameters
    out = Path(spec.output_path)
    if spec.kind == "symbol-surface":
        surface, proxy, argmin = ex.emit_symbol_surface(p["n_g"], p["theta_count"], p["omega_count"], out)
        print(f"n_g = {p['n_g']:g}: condition proxy argmin omega = {argmin:.3f}")
        return EXIT_OK, [], "float64", [str(surface), str(proxy)]

    if spec.kind == "omega-curve":
        values = sorted(float(v) for v in p["n_g_values"])
        if not values or values[0] < 2:
            raise UsageError("n_g values must be non-empty and at least 2")
        curve = omega_curve(values)
        ex.omega_curve_table(curve).to_csv(out)
        for ng, w, _ in curve.samples:
            print(f"n_g = {ng:6.2f}  optimal omega = {w:.3f}")
        return EXIT_OK, [], "float64", [str(out)]

    if spec.kind in ("fixed-ng-1d", "fixed-h-1d"):
        common = dict(k_values=p["k_values"], omega_grid=p["omega_grid"], tolerance=p["tolerance"],
                      max_iterations=p["max_iterations"], n_g=p["n_g"], source=p["source"], seed=p["seed"],
                      workers=p["workers"])
        if not common["k_values"] or not common["omega_grid"] or min(common["k_values"]) <= 0:
            raise UsageError("k values must be positive and the omega grid non-empty")
        runner = ex.run_fixed_ng_1d if spec.kind == "fixed-ng-1d" else ex.run_fixed_h_1d
        table = runner(**common)
        table.to_csv(out)
        for k, (emp, pred) in ex.empirical_optima(table).items():
            print(f"k = {k:10.4f}  empirical omega = {emp:.3f}  predicted omega = {pred:.3f}")
        records = [{"k": r["k"], "omega": r["omega"], "iterations": r["iterations"], "status": r["status"]}
                   for r in table.rows]
        return EXIT_OK, records, "float64", [str(out)]

    if spec.kind == "contrast-2d":
        policy = p["omega"] if p.get("omega_policy") is None else p["omega_policy"]
        if policy is None:
            raise UsageError("solve2d needs --omega or --omega-policy local")
        region = p["region"]
        if len(region) != 4:
            raise UsageError("region must have four values x0,x1,y0,y1")
        try:
            result = ex.run_contrast_2d(p["background_k"], p["anomaly_k"], tuple(region), (p["nx"], p["nx"]),
                                        policy, p["tolerance"], p["max_iterations"], record_true_residual=True)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        hist_path = ex.companion_path(out, "history")
        ex.wavefield_table(result).to_csv(out)
        ex.history_table(result.history).to_csv(hist_path)
        h = result.history
        print(f"policy {policy}: {h.status} after {h.iterations} iterations "
              f"(preconditioned residual {h.final_residual:.3e})")
        records = [{"policy": str(policy), "iterations": h.iterations, "status": h.status}]
        code = EXIT_OK if h.converged else EXIT_NONCONVERGED
        return code, records, "complex128", [str(out), str(hist_path)]

    if spec.kind == "verify-oracle":
        try:
            result = ex.verify_oracle([int(n) for n in p["sizes"]], [float(w) for w in p["omegas"]])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        for line in result.lines():
            print(line)
        table = ex.Table(["family", "n", "omega", *result.identities.max_deviation])
        for case in result.identities.cases:
            table.append(**case)
        table.to_csv(out)
        print("oracle verification", "passed" if result.passed else "FAILED")
        return (EXIT_OK if result.passed else EXIT_ORACLE), [], "float64", [str(out)]

    raise UsageError(f"unsupported kind {spec.kind}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = resolve_spec(args)
        started = ex.timestamp()
        t0 = time.perf_counter()
        code, records, scalar, outputs = _run(spec)
    except UsageError as exc:
        print(f"cgmn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = ex.RunManifest(spec={"kind": spec.kind, "parameters": spec.parameters,
                                    "output_path": spec.output_path},
                              version=ex._version(), scalar_type=scalar,
                              elapsed_seconds=time.perf_counter() - t0, iterations=records,
                              started_at=started, outputs=outputs)
    manifest.write(ex.manifest_path(spec.output_path))
    return code


if __name__ == "__main__":
    sys.exit(main())
