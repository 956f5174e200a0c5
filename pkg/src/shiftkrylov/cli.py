"""Batch driver: load or generate a problem, run one or more methods over a
shift set, emit summaries/histories, optionally cross-check against the
dense oracle.

Exit codes form a stable contract::

    0  every requested shift converged
    2  usage or configuration error
    3  input file parse error
    4  breakdown (at initialization or for at least one shift)
    5  at least one shift unconverged within the iteration budget

Timing is printed to stdout only; files written under ``--out-prefix`` are
byte-deterministic for a fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import io as skio
from .core import BreakdownError, FlopCounter, SparseSymMatrix
from .oracle import DEFAULT_CAP, DenseOracle
from .solvers import METHODS, solve_all

__all__ = [
    "RunConfig",
    "generate_hamiltonian_analog",
    "main",
    "run",
]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_BREAKDOWN = 4
EXIT_UNCONVERGED = 5


def generate_hamiltonian_analog(
    n: int,
    bandwidth: int,
    seed: int,
    real: bool = True,
    dominance: float = 1.25,
) -> SparseSymMatrix:
    """Deterministic banded symmetric matrix for desk-scale sweep benchmarks.

    Off-diagonal bands hold seeded uniform values scaled so row sums stay
    O(1) regardless of bandwidth; each diagonal entry is ``dominance`` times
    the absolute off-diagonal row sum plus a seeded positive term.
    ``dominance >= 1`` therefore gives a strictly diagonally dominant matrix
    whose conditioning tightens as the knob grows. Same seed, same matrix,
    bit for bit.
    """
    n = int(n)
    bandwidth = int(bandwidth)
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    if not 1 <= bandwidth < n:
        raise ValueError(f"bandwidth must be in [1, {n - 1}], got {bandwidth}")
    if dominance < 0:
        raise ValueError("dominance must be nonnegative")
    rng = np.random.default_rng(seed)
    scale = 1.0 / (2.0 * bandwidth)
    rows, cols, vals = [], [], []
    abs_rowsum = np.zeros(n)
    for k in range(1, bandwidth + 1):
        band = rng.uniform(-1.0, 1.0, n - k) * scale
        if not real:
            band = band + 1j * (rng.uniform(-1.0, 1.0, n - k) * scale)
        i = np.arange(n - k)
        rows.append(i)
        cols.append(i + k)
        vals.append(band)
        rows.append(i + k)
        cols.append(i)
        vals.append(band)
        np.add.at(abs_rowsum, i, np.abs(band))
        np.add.at(abs_rowsum, i + k, np.abs(band))
    diag = dominance * abs_rowsum + rng.uniform(0.05, 1.0, n)
    i = np.arange(n)
    rows.append(i)
    cols.append(i)
    vals.append(diag if real else diag.astype(np.complex128))
    return SparseSymMatrix.from_coo(
        n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


@dataclass
class RunConfig:
    """Validated run description consumed by :func:`run`."""

    matrix_path: str | None = None
    generate: tuple | None = None  # (n, bandwidth, seed[, dominance])
    rhs_path: str | None = None
    shifts_path: str | None = None
    method: str = "all"
    tol: float = 1e-12
    max_iter: int | None = None
    history: bool = False
    check: bool = False
    out_prefix: str | None = None
    workers: int = 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shiftkrylov",
        description="Solve complex symmetric shifted linear systems (A + sigma_l I) x = b "
        "for a whole set of shifts from one Lanczos run.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", metavar="PATH", help="Matrix Market coordinate file")
    src.add_argument(
        "--generate",
        metavar="N,BANDWIDTH,SEED[,DOMINANCE]",
        help="generate a banded symmetric test matrix instead of reading one",
    )
    p.add_argument("--rhs", metavar="PATH", help="right-hand-side file (default: e_1)")
    p.add_argument("--shifts", metavar="PATH", required=True, help="shift file")
    p.add_argument(
        "--method",
        choices=METHODS + ("all",),
        default="all",
        help="solver variant (default: all)",
    )
    p.add_argument("--tol", type=float, default=1e-12, help="relative residual target")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap (default: 2n)")
    p.add_argument(
        "--history", action="store_true", help="record per-iteration residual histories"
    )
    p.add_argument(
        "--check",
        action="store_true",
        help=f"cross-check against the dense oracle (n <= {DEFAULT_CAP} only)",
    )
    p.add_argument("--out-prefix", metavar="PREFIX", help="write summary/history files here")
    p.add_argument("--workers", type=int, default=1, help="threads for the per-shift loop")
    return p


def _parse_generate(spec: str):
    parts = spec.split(",")
    if len(parts) not in (3, 4):
        raise ValueError("expected N,BANDWIDTH,SEED[,DOMINANCE]")
    n, bandwidth, seed = int(parts[0]), int(parts[1]), int(parts[2])
    dominance = float(parts[3]) if len(parts) == 4 else 1.25
    return n, bandwidth, seed, dominance


def config_from_args(args) -> RunConfig:
    generate = None
    if args.generate is not None:
        generate = _parse_generate(args.generate)
    cfg = RunConfig(
        matrix_path=args.matrix,
        generate=generate,
        rhs_path=args.rhs,
        shifts_path=args.shifts,
        method=args.method,
        tol=args.tol,
        max_iter=args.max_iter,
        history=args.history,
        check=args.check,
        out_prefix=args.out_prefix,
        workers=args.workers,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if (cfg.matrix_path is None) == (cfg.generate is None):
        raise ValueError("exactly one of matrix path and generate spec is required")
    if cfg.shifts_path is None:
        raise ValueError("a shift file is required")
    if cfg.tol <= 0:
        raise ValueError("tol must be positive")
    if cfg.max_iter is not None and cfg.max_iter < 1:
        raise ValueError("max-iter must be >= 1")
    if cfg.workers < 1:
        raise ValueError("workers must be >= 1")
    if cfg.history and not cfg.out_prefix:
        raise ValueError("--history needs --out-prefix to write the CSV to")
    if cfg.method not in METHODS + ("all",):
        raise ValueError(f"unknown method {cfg.method!r}")


def _summary_line(report) -> str:
    conv = sum(s == "converged" for s in report.status)
    return (
        f"method={report.method:13s} n={report.n} m={report.m} "
        f"iterations={report.iterations} converged={conv}/{report.m} "
        f"update_flops={report.flops.shift_update} "
        f"matvec_flops={report.flops.matvec} wall={report.wall_time:.3f}s"
    )


def _write_compare(path, reports):
    """Per-shift iteration counts of every method side by side, plus counter
    totals (no timing: files stay deterministic)."""
    methods = [r.method for r in reports]
    with open(path, "w") as fh:
        fh.write("# index sigma_re sigma_im " + " ".join(f"iters_{m}" for m in methods) + "\n")
        m = reports[0].m
        for idx in range(m):
            sigma = reports[0].shifts[idx]
            counts = " ".join(str(r.iters[idx]) for r in reports)
            fh.write(f"{idx + 1} {repr(float(sigma.real))} {repr(float(sigma.imag))} {counts}\n")
        for r in reports:
            fh.write(
                f"# totals method={r.method} iterations={r.iterations} "
                f"update_flops={r.flops.shift_update} least_squares_flops={r.flops.least_squares} "
                f"matvec_real={r.flops.matvec_real} matvec_complex={r.flops.matvec_complex}\n"
            )


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration. Returns the process exit code."""
    try:
        _validate(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if cfg.generate is not None:
            A = generate_hamiltonian_analog(*cfg.generate[:3], dominance=cfg.generate[3])
        else:
            A = skio.read_matrix_market(cfg.matrix_path)
        shifts = skio.read_shifts(cfg.shifts_path)
        b = skio.read_rhs(cfg.rhs_path, A.n) if cfg.rhs_path else skio.default_rhs(A.n)
    except skio.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if cfg.check and A.n > DEFAULT_CAP:
        print(f"error: --check is limited to n <= {DEFAULT_CAP}", file=sys.stderr)
        return EXIT_USAGE

    oracle = DenseOracle(A) if cfg.check else None
    methods = list(METHODS) if cfg.method == "all" else [cfg.method]
    reports = []
    saw_breakdown = False
    saw_unconverged = False
    for method in methods:
        counter = FlopCounter()
        try:
            solutions, report = solve_all(
                A,
                b,
                shifts,
                method=method,
                tol=cfg.tol,
                max_iter=cfg.max_iter,
                record_history=cfg.history,
                true_residuals=cfg.check,
                counter=counter,
                workers=cfg.workers,
            )
        except BreakdownError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BREAKDOWN
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        reports.append(report)
        print(_summary_line(report))

        oracle_distance = None
        if oracle is not None:
            oracle_distance = np.empty(report.m)
            for idx, sigma in enumerate(report.shifts):
                xs = oracle.solve(sigma, b)
                oracle_distance[idx] = np.linalg.norm(solutions[idx] - xs) / np.linalg.norm(xs)
        if cfg.out_prefix:
            skio.write_summary(report, f"{cfg.out_prefix}.{method}.summary.txt", oracle_distance)
            if cfg.history:
                skio.write_history_csv(report, f"{cfg.out_prefix}.{method}.history.csv")

        saw_breakdown = saw_breakdown or report.any_breakdown
        saw_unconverged = saw_unconverged or not report.all_converged

    if cfg.method == "all" and cfg.out_prefix:
        _write_compare(f"{cfg.out_prefix}.compare.txt", reports)
    if saw_breakdown:
        return EXIT_BREAKDOWN
    if saw_unconverged:
        return EXIT_UNCONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
