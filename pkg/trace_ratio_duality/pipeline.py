import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
from slugify import slugify
from tqdm import tqdm

from . import config
from .duality import (
    DualityReport,
    full_report,
    gap_condition,
    gtrp_dual_value,
)
from .errors import InstanceValidationError, NumericalError
from .model import ProblemInstance
from .schema import (
    CertificatesSection,
    DualsSection,
    GapConditionSection,
    GapsSection,
    GrsCertificateSection,
    GsCertificateSection,
    InstanceFile,
    MetaSection,
    PrimalSection,
    ReportFile,
    SLemmaInputFile,
    SLemmaSection,
    TransformSection,
    as_matrix,
    dump_report,
    load_instance_text,
)
from .slemma import SLemmaWitness, decide, verify
from .solver import SolveReport, dinkelbach_solve
from .utils.logging import setup_logger

logger = setup_logger(__name__)


class ReportPipeline:
    """Load an instance, solve it, evaluate duals and write a report, in discrete steps."""

    def __init__(
        self,
        seed: int = config.DEFAULT_SEED,
        samples: int = config.DEFAULT_SAMPLES,
        tol: float = config.DINK_TOL,
        max_iter: int = config.DINK_MAX_ITER,
    ):
        """Initialize the pipeline.

        Args:
            seed: Seed for starting points and the sampling oracle
            samples: Random samples for the oracle lower bound
            tol: Dinkelbach tolerance
            max_iter: Dinkelbach iteration cap
        """
        self.seed = seed
        self.samples = samples
        self.tol = tol
        self.max_iter = max_iter
        self.instance: ProblemInstance | None = None
        self.transform: TransformSection | None = None
        self.source: str | None = None

    def _meta(self) -> MetaSection:
        tolerances = config.tolerances()
        tolerances["dink_tol"] = self.tol
        return MetaSection(
            tolerances=tolerances, seed=self.seed, version=config.SCHEMA_VERSION, source=self.source
        )

    def step1_load_instance(self, path: str | Path) -> ProblemInstance:
        """Step 1: Read and validate an instance file.

        Non-homogeneous instances (with alpha/beta) are homogenized here.
        """
        path = Path(path)
        logger.info(f"Step 1: Loading instance from {path}")
        try:
            text = path.read_text(encoding=config.INPUT_ENCODING)
        except OSError as e:
            raise InstanceValidationError(f"Cannot read instance file {path}: {e}")
        return self.use_instance_file(load_instance_text(text, source=str(path)), source=path.name)

    def use_instance_file(self, data: InstanceFile, source: str | None = None) -> ProblemInstance:
        self.instance, self.transform = data.to_instance()
        self.source = source
        if self.transform is not None:
            logger.info(
                f"Homogenized non-homogeneous instance (alpha={self.transform.alpha}, "
                f"beta={self.transform.beta})"
            )
        return self.instance

    def use_instance(self, inst: ProblemInstance, source: str | None = None) -> ProblemInstance:
        self.instance, self.transform, self.source = inst, None, source
        return inst

    def _require_instance(self) -> ProblemInstance:
        if self.instance is None:
            raise ValueError("Instance not loaded. Call step1_load_instance() first")
        return self.instance

    def step2_solve_primal(self) -> SolveReport:
        """Step 2: Solve the trace ratio problem globally."""
        inst = self._require_instance()
        logger.info(f"Step 2: Solving primal (n={inst.n}, p={inst.p})")
        return dinkelbach_solve(inst, tol=self.tol, max_iter=self.max_iter, seed=self.seed)

    def step3_dual_values(self) -> DualityReport:
        """Step 3: Primal value, the four dual values and both gaps."""
        inst = self._require_instance()
        logger.info("Step 3: Evaluating dual values")
        return full_report(
            inst, samples=self.samples, seed=self.seed, tol=self.tol, max_iter=self.max_iter
        )

    def step4_certify(self, h, q) -> SLemmaSection:
        """Step 4: Decide the matrix S-lemma for (H, Q) and verify the result."""
        logger.info("Step 4: Deciding the matrix S-lemma")
        result = decide(h, q)
        check = verify(h, q, result)
        if not check.passed:
            logger.error(f"Verification failed: {'; '.join(check.violations)}")
        if isinstance(result, SLemmaWitness):
            return SLemmaSection(
                kind="witness", verified=check.passed, X=as_matrix(result.x),
                value=result.value, violations=list(check.violations),
            )
        return SLemmaSection(
            kind="certificate", verified=check.passed, M=as_matrix(result.m),
            W=as_matrix(result.w), minEig=check.residuals["min_eig"],
            traceSlack=check.residuals["trace_slack"], violations=list(check.violations),
        )

    # === Report assembly ===

    def solve_report(self) -> ReportFile:
        solve = self.step2_solve_primal()
        return ReportFile(primal=_primal_section(solve), transform=self.transform, meta=self._meta())

    def gap_report(self) -> ReportFile:
        inst = self._require_instance()
        solve = self.step2_solve_primal()
        dual = gtrp_dual_value(inst)
        gap = gap_condition(inst)
        return ReportFile(
            primal=_primal_section(solve),
            duals=DualsSection(gtrp=dual, gr=dual),
            gaps=GapsSection(gtrp=abs(solve.value - dual)),
            gap_condition=GapConditionSection(
                multiplicity=gap.multiplicity, holds=gap.holds, boundary=gap.boundary
            ),
            transform=self.transform,
            meta=self._meta(),
        )

    def dual_report(self) -> ReportFile:
        report = self.step3_dual_values()
        return ReportFile(
            primal=_primal_section(report.solve),
            duals=DualsSection(
                gtrp=report.dual_gtrp, gr=report.dual_gr, gs=report.dual_gs, grs=report.dual_grs
            ),
            gaps=GapsSection(gtrp=report.gap_gtrp, gs=report.gap_gs),
            gap_condition=GapConditionSection(
                multiplicity=report.top_multiplicity,
                holds=report.gap_condition_holds,
                boundary=report.gap.boundary,
            ),
            certificates=CertificatesSection(
                grs=GrsCertificateSection(
                    mu=report.grs.mu,
                    M=as_matrix(report.certificate.m),
                    W=as_matrix(report.certificate.w),
                    minEig=report.certificate.min_eig,
                    traceSlack=report.certificate.trace_slack,
                ),
                gs=GsCertificateSection(
                    rho=report.gs.rho, S=as_matrix(report.gs.s),
                    minEig=report.gs.min_eig, traceS=report.gs.trace_s,
                ),
            ),
            transform=self.transform,
            meta=self._meta(),
        )

    def certify_report(self, path: str | Path, mu: float | None = None) -> ReportFile:
        """S-lemma report for an {"H", "Q"} file, or for H = G, Q = mu A - B
        when an instance file and mu are given."""
        path = Path(path)
        try:
            text = path.read_text(encoding=config.INPUT_ENCODING)
        except OSError as e:
            raise InstanceValidationError(f"Cannot read input file {path}: {e}")
        if mu is None:
            try:
                data = SLemmaInputFile.model_validate_json(text)
            except ValueError as e:
                raise InstanceValidationError(f"Invalid S-lemma input in {path}: {e}")
            h, q = np.asarray(data.H), np.asarray(data.Q)
            self.source = path.name
        else:
            inst = self.use_instance_file(load_instance_text(text, source=str(path)), path.name)
            h, q = inst.G, mu * inst.A - inst.B
        return ReportFile(slemma=self.step4_certify(h, q), meta=self._meta())

    def step5_save_report(self, report: ReportFile, output_file: str | Path | None = None) -> str:
        """Step 5: Serialize the report to a file, or return it for stdout."""
        text = dump_report(report)
        if output_file is not None:
            output_file = Path(output_file)
            output_file.parent.mkdir(parents=True, exist_ok=True)
            output_file.write_text(text + "\n", encoding=config.OUTPUT_ENCODING)
            logger.info(f"Step 5: Report saved to {output_file}")
        return text

    # === Batch processing ===

    def run_batch(
        self, directory: str | Path, jobs: int = 1, reports_dir: str | Path | None = None
    ) -> pd.DataFrame:
        """Process every *.json instance in a directory.

        Args:
            directory: Directory with instance files
            jobs: Worker processes (1 runs in-process)
            reports_dir: Optional directory for one full report per instance

        Returns:
            DataFrame with one row per file, sorted by file name
        """
        files = sorted(Path(directory).glob("*.json"), key=lambda f: f.name)
        logger.info(f"Batch: {len(files)} instance files in {directory}")
        options = {
            "seed": self.seed, "samples": self.samples, "tol": self.tol, "max_iter": self.max_iter,
            "reports_dir": str(reports_dir) if reports_dir is not None else None,
        }
        tasks = [(str(f), options) for f in files]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(tqdm(pool.map(_batch_row, tasks), total=len(tasks), desc="instances"))
        else:
            rows = [_batch_row(task) for task in tqdm(tasks, desc="instances")]
        return pd.DataFrame(rows, columns=BATCH_COLUMNS)


BATCH_COLUMNS = [
    "file", "n", "p", "primal", "dual_gtrp", "dual_grs", "dual_gs",
    "gap_gtrp", "weak_duality", "gap_condition", "wall_time", "error",
]


def _primal_section(solve: SolveReport) -> PrimalSection:
    return PrimalSection(
        value=solve.value,
        X=as_matrix(solve.maximizer.x),
        iterations=solve.iterations,
        residual=solve.residual,
    )


def _batch_row(task: tuple[str, dict]) -> dict:
    """Full dual report for one file, summarized as a table row."""
    path, options = task
    path = Path(path)
    row = {column: None for column in BATCH_COLUMNS}
    row["file"] = path.name
    start = time.perf_counter()
    pipeline = ReportPipeline(
        seed=options["seed"], samples=options["samples"],
        tol=options["tol"], max_iter=options["max_iter"],
    )
    try:
        inst = pipeline.step1_load_instance(path)
        report = pipeline.dual_report()
        row.update(
            n=inst.n,
            p=inst.p,
            primal=report.primal.value,
            dual_gtrp=report.duals.gtrp,
            dual_grs=report.duals.grs,
            dual_gs=report.duals.gs,
            gap_gtrp=report.gaps.gtrp,
            weak_duality=report.duals.gtrp - report.primal.value,
            gap_condition=report.gap_condition.holds,
        )
        if options.get("reports_dir"):
            out = Path(options["reports_dir"]) / f"{slugify(path.stem)}.report.json"
            pipeline.step5_save_report(report, out)
    except InstanceValidationError as e:
        row["error"] = f"validation: {e}"
    except NumericalError as e:
        row["error"] = f"numerical: {e}"
    except Exception as e:
        logger.exception(f"{path.name}: unexpected failure")
        row["error"] = f"unexpected: {e}"
    row["wall_time"] = time.perf_counter() - start
    if row["error"]:
        logger.error(f"{path.name}: {row['error']}")
    return row
