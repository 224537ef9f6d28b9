import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import config
from .config import LOG_LEVEL
from .duality import dgs_constraint_matrices, grs_dual_value, gs_dual_value, gtrp_dual_value
from .errors import InstanceValidationError, NumericalError
from .linalg import max_eigenvalue
from .model import example_gs1, random_instance
from .pipeline import ReportPipeline
from .schema import ReportFile
from .solver import dinkelbach_solve
from .utils.logging import setup_logger

logger = setup_logger(__name__, level=LOG_LEVEL)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

EXIT_CODES = """exit codes:
  0  success
  2  invalid input (malformed JSON, shape or symmetry errors, A or G not positive definite,
     unknown repro name)
  3  numerical failure (no convergence, no certificate found)
"""

REPRO_NAMES = ("gs1", "grq1")
GRQ1_COUNT = 50
GRQ1_GAP_TOL = 1e-7


def _load_template(template_name: str) -> str | None:
    try:
        path = config.TEMPLATES_DIR / template_name
        with open(path, "r", encoding="utf-8") as f:
            return f.read().strip()
    except FileNotFoundError:
        logger.warning(f"Template not found: {template_name}")
        return None


def report_table(report: ReportFile) -> str:
    """Scalar fields of a report as a two-column table; matrices are left out."""
    flat = pd.json_normalize(report.model_dump(exclude_none=True), sep=".")
    row = flat.iloc[0]
    scalars = row[[not isinstance(v, list) for v in row]]
    return scalars.to_frame("value").to_string()


def _emit(pipeline: ReportPipeline, report: ReportFile, args) -> None:
    text = pipeline.step5_save_report(report, args.out)
    if args.out is None:
        print(report_table(report) if args.fmt == "table" else text)


def _pipeline(args) -> ReportPipeline:
    return ReportPipeline(
        seed=args.seed, samples=args.samples, tol=args.tol, max_iter=args.max_iter
    )


def cmd_solve(args) -> int:
    pipeline = _pipeline(args)
    pipeline.step1_load_instance(args.path)
    _emit(pipeline, pipeline.solve_report(), args)
    return EXIT_OK


def cmd_dual(args) -> int:
    pipeline = _pipeline(args)
    pipeline.step1_load_instance(args.path)
    report = pipeline.dual_report()
    _emit(pipeline, report, args)
    return EXIT_OK


def cmd_gap(args) -> int:
    pipeline = _pipeline(args)
    pipeline.step1_load_instance(args.path)
    _emit(pipeline, pipeline.gap_report(), args)
    return EXIT_OK


def cmd_certify(args) -> int:
    pipeline = _pipeline(args)
    report = pipeline.certify_report(args.path, mu=args.mu)
    _emit(pipeline, report, args)
    return EXIT_OK if report.slemma.verified else EXIT_NUMERICAL


def _format_matrix(m: np.ndarray) -> str:
    return pd.DataFrame(m).to_string(header=False, index=False, float_format=lambda v: f"{v:9.4f}")


def repro_gs1(args) -> int:
    """Example instance where the scaled dual keeps a gap of 2/3."""
    inst = example_gs1()
    solve = dinkelbach_solve(inst, tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    gs = gs_dual_value(inst, lower=solve.value, seed=args.seed)
    grs = grs_dual_value(inst, lower=solve.value, seed=args.seed)
    blocks = dgs_constraint_matrices(inst, gs.s, gs.rho)
    template = _load_template("repro_gs1.txt")
    values = {
        "primal": solve.value,
        "dual": gs.rho,
        "gap": abs(gs.rho - solve.value),
        "grs": grs.value,
        "rho": gs.rho,
        "trace_s": gs.trace_s,
        "g_b": _format_matrix(blocks["G(x)B"]),
        "s_i": _format_matrix(blocks["S(x)I"]),
        "g_a": _format_matrix(blocks["G(x)A"]),
        "constraint": _format_matrix(blocks["constraint"]),
        "top_eig": max_eigenvalue(blocks["constraint"]),
    }
    if template is None:
        print(f"v(GS1)={values['primal']:.6f}, v(DGS1)={values['dual']:.6f}, gap={values['gap']:.6f}")
    else:
        print(template.format(**values))
    return EXIT_OK


def repro_grq1(args) -> int:
    """Random p = 1 instances: the Rayleigh quotient dual has no gap."""
    rng = np.random.default_rng(args.seed)
    confirmed = 0
    for k in range(GRQ1_COUNT):
        n = int(rng.integers(2, 6))
        inst = random_instance(n, 1, rng)
        primal = dinkelbach_solve(inst, tol=args.tol, max_iter=args.max_iter, seed=args.seed).value
        gap = abs(gtrp_dual_value(inst) - primal)
        if gap <= GRQ1_GAP_TOL:
            confirmed += 1
        else:
            logger.error(f"Instance {k} (n={n}) has gap {gap:.3e}")
    print(f"grq1: {confirmed}/{GRQ1_COUNT} zero-gap confirmations")
    return EXIT_OK if confirmed == GRQ1_COUNT else EXIT_NUMERICAL


def cmd_repro(args) -> int:
    if args.name == "gs1":
        return repro_gs1(args)
    if args.name == "grq1":
        return repro_grq1(args)
    logger.error(f"Unknown repro name '{args.name}'; choose from {', '.join(REPRO_NAMES)}")
    return EXIT_VALIDATION


def cmd_batch(args) -> int:
    directory = Path(args.path)
    if not directory.is_dir():
        raise InstanceValidationError(f"Batch path {directory} is not a directory")
    pipeline = _pipeline(args)
    summary = pipeline.run_batch(directory, jobs=args.jobs, reports_dir=args.reports)

    if args.out is not None:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        if out.suffix == ".csv":
            summary.to_csv(out, index=False)
        else:
            out.write_text(summary.to_json(orient="records", indent=2), encoding=config.OUTPUT_ENCODING)
        logger.info(f"Summary saved to {out}")
    if args.xlsx is not None:
        summary.to_excel(args.xlsx, index=False, engine="openpyxl")
        logger.info(f"Summary saved to {args.xlsx}")
    if args.fmt == "json":
        print(summary.to_json(orient="records", indent=2))
    elif summary.empty:
        print("No instance files found")
    else:
        print(summary.drop(columns=["error"]).to_string(index=False))

    errors = summary["error"].dropna()
    if errors.empty:
        return EXIT_OK
    print(f"\n{len(errors)} of {len(summary)} instances failed", file=sys.stderr)
    if errors.str.startswith("validation").all():
        return EXIT_VALIDATION
    return EXIT_NUMERICAL


COMMANDS = {
    "solve": (cmd_solve, "Solve the trace ratio problem globally"),
    "dual": (cmd_dual, "Primal value, all four dual values, gaps and certificates"),
    "gap": (cmd_gap, "Duality gap of the plain dual and the eigenspace criterion"),
    "certify": (cmd_certify, "Decide the matrix S-lemma and verify the witness or certificate"),
    "repro": (cmd_repro, "Reproduce a bundled example (gs1, grq1)"),
    "batch": (cmd_batch, "Full dual report for every *.json instance in a directory"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=config.DINK_TOL, help="Dinkelbach tolerance")
    common.add_argument("--max-iter", type=int, default=config.DINK_MAX_ITER, help="Dinkelbach iteration cap")
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Seed for starting points and sampling")
    common.add_argument("--samples", type=int, default=config.DEFAULT_SAMPLES, help="Oracle samples for dual brackets")
    common.add_argument("--out", help="Write the report (or batch summary) to this file")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON output")
    fmt.add_argument("--table", dest="fmt", action="store_const", const="table", help="Table output")

    parser = argparse.ArgumentParser(
        prog="trp",
        description="Solve generalized trace ratio problems and analyze their Lagrangian duals",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(
            name, parents=[common], help=help_text, epilog=EXIT_CODES,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        if name == "repro":
            sub.add_argument("name", help=f"One of: {', '.join(REPRO_NAMES)}")
        else:
            sub.add_argument("path", help="Instance file" if name != "batch" else "Directory of instance files")
        if name == "certify":
            sub.add_argument(
                "--mu", type=float,
                help="Treat path as an instance and certify H = G, Q = mu A - B",
            )
        if name == "batch":
            sub.add_argument("--jobs", type=int, default=1, help="Worker processes")
            sub.add_argument("--xlsx", help="Also write the summary as an Excel sheet")
            sub.add_argument("--reports", help="Directory for one full report per instance")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the trp command line."""
    args = build_parser().parse_args(argv)
    if args.fmt is None:
        args.fmt = "table" if args.command == "batch" else "json"
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except InstanceValidationError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        logger.error(str(e))
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
