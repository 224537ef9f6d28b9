import json
import shutil

import numpy as np
import pytest

from trace_ratio_duality import pipeline as pipeline_module
from trace_ratio_duality.errors import InstanceValidationError
from trace_ratio_duality.pipeline import BATCH_COLUMNS, ReportPipeline
from trace_ratio_duality.schema import InstanceFile, load_report
from trace_ratio_duality.model import random_instance


class TestReportPipeline:
    def test_steps_need_an_instance(self):
        with pytest.raises(ValueError, match="step1_load_instance"):
            ReportPipeline().step2_solve_primal()

    def test_missing_file(self, tmp_path):
        with pytest.raises(InstanceValidationError, match="Cannot read"):
            ReportPipeline().step1_load_instance(tmp_path / "nope.json")

    def test_solve_report(self, gs1_path):
        pipeline = ReportPipeline()
        pipeline.step1_load_instance(gs1_path)
        report = pipeline.solve_report()
        assert report.primal.value == pytest.approx(7.0 / 3.0, abs=1e-8)
        assert report.meta.source == "gs1.json"
        assert report.transform is None

    def test_gap_report(self, gs1_path):
        pipeline = ReportPipeline()
        pipeline.step1_load_instance(gs1_path)
        report = pipeline.gap_report()
        assert report.gaps.gtrp == pytest.approx(2.0 / 3.0, abs=1e-8)
        assert report.gap_condition.holds is False
        assert report.gap_condition.multiplicity == 1

    def test_dual_report_has_certificates(self, gs1_path):
        pipeline = ReportPipeline(samples=200)
        pipeline.step1_load_instance(gs1_path)
        report = pipeline.dual_report()
        assert report.duals.grs == pytest.approx(7.0 / 3.0, abs=1e-6)
        assert report.certificates.grs.traceSlack >= -1e-8
        assert report.certificates.gs.rho == pytest.approx(3.0, abs=1e-5)

    def test_ngtrp_report_records_transform(self, write_json, gs1_path):
        data = json.loads(gs1_path.read_text())
        path = write_json("ng.json", dict(data, alpha=3.0, beta=0.0))
        pipeline = ReportPipeline()
        pipeline.step1_load_instance(path)
        report = pipeline.solve_report()
        assert report.transform.A_shift == pytest.approx(1.0)

    def test_save_report(self, tmp_path, gs1_path):
        pipeline = ReportPipeline()
        pipeline.step1_load_instance(gs1_path)
        report = pipeline.solve_report()
        out = tmp_path / "reports" / "gs1.json"
        text = pipeline.step5_save_report(report, out)
        assert load_report(out.read_text()) == report
        assert out.read_text() == text + "\n"

    def test_reports_are_byte_identical(self, gs1_path):
        texts = []
        for _ in range(2):
            pipeline = ReportPipeline()
            pipeline.step1_load_instance(gs1_path)
            texts.append(pipeline.step5_save_report(pipeline.solve_report()))
        assert texts[0] == texts[1]


class TestBatch:
    def test_empty_directory(self, tmp_path):
        summary = ReportPipeline().run_batch(tmp_path)
        assert summary.empty
        assert list(summary.columns) == BATCH_COLUMNS

    def test_duplicate_files_give_identical_rows(self, tmp_path, gs1_path):
        shutil.copy(gs1_path, tmp_path / "b.json")
        shutil.copy(gs1_path, tmp_path / "a.json")
        summary = ReportPipeline(samples=200).run_batch(tmp_path)
        assert list(summary["file"]) == ["a.json", "b.json"]
        rows = summary.drop(columns=["file", "wall_time"]).to_dict(orient="records")
        assert rows[0] == rows[1]

    def test_errors_are_recorded(self, tmp_path, write_json, gs1_path):
        shutil.copy(gs1_path, tmp_path / "good.json")
        write_json("bad.json", "{not json")
        summary = ReportPipeline(samples=200).run_batch(tmp_path)
        errors = dict(zip(summary["file"], summary["error"]))
        assert errors["good.json"] is None
        assert errors["bad.json"].startswith("validation")

    def test_unexpected_errors_do_not_stop_the_batch(self, tmp_path, gs1_path, monkeypatch):
        shutil.copy(gs1_path, tmp_path / "a.json")
        shutil.copy(gs1_path, tmp_path / "b.json")
        calls = {"n": 0}
        real_full_report = pipeline_module.full_report

        def singular_once(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise np.linalg.LinAlgError("Singular matrix")
            return real_full_report(*args, **kwargs)

        monkeypatch.setattr(pipeline_module, "full_report", singular_once)
        summary = ReportPipeline(samples=200).run_batch(tmp_path)
        errors = dict(zip(summary["file"], summary["error"]))
        assert errors["a.json"] == "unexpected: Singular matrix"
        assert errors["b.json"] is None
        assert summary.loc[summary["file"] == "b.json", "primal"].notna().all()

    def test_reports_directory(self, tmp_path, gs1_path):
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        shutil.copy(gs1_path, data_dir / "My Instance.json")
        ReportPipeline(samples=200).run_batch(data_dir, reports_dir=tmp_path / "reports")
        assert (tmp_path / "reports" / "my-instance.report.json").exists()

    def test_random_corpus_has_nonnegative_weak_duality(self, tmp_path):
        for seed in range(4):
            inst = random_instance(3, 2, seed)
            (tmp_path / f"r{seed}.json").write_text(InstanceFile.from_instance(inst).model_dump_json())
        summary = ReportPipeline(samples=200).run_batch(tmp_path, jobs=2)
        assert len(summary) == 4
        assert summary["error"].isna().all()
        assert (summary["weak_duality"] >= -1e-9).all()
