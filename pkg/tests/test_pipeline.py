"""Batch-pipeline tests: artifact census, determinism, report integrity."""

import json

import numpy as np
import pytest

from camscore.data import sample_image_paths
from camscore.engine import CamConfig
from camscore.errors import PipelineError
from camscore.metrics import METRIC_NAMES, ConfidenceRecord, aggregate_report
from camscore.pipeline import RunConfig, format_report, parse_config_file, run_batch


def three_method_config(out_dir, **overrides):
    cfg = dict(
        image_paths=[str(p) for p in sample_image_paths()],
        methods=[CamConfig(method=m) for m in ("gradcam", "scorecam", "scorecampp")],
        output_dir=str(out_dir),
        seed=42,
    )
    cfg.update(overrides)
    return RunConfig(**cfg)


@pytest.fixture(scope="module")
def batch(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    return run_batch(three_method_config(out)), out


class TestCensus:
    def test_png_and_report_counts(self, batch):
        result, out = batch
        pngs = sorted(out.glob("*.png"))
        assert len(pngs) == 18  # 3 images x 3 methods x (saliency + overlay)
        assert (out / "report.json").exists()
        assert len(result.records) == 9
        assert result.failures == []

    def test_record_grid_complete(self, batch):
        result, _ = batch
        images = {r.image_id for r in result.records}
        methods = {r.method_id for r in result.records}
        assert len(images) == 3 and len(methods) == 3
        assert {(r.image_id, r.method_id) for r in result.records} == {
            (i, m) for i in images for m in methods
        }

    def test_report_self_consistency(self, batch):
        result, _ = batch
        recomputed = aggregate_report(result.records)
        assert recomputed.per_method == result.report.per_method
        assert recomputed.n_images == result.report.n_images

    def test_aggregate_schema_names(self, batch):
        result, out = batch
        doc = json.loads((out / "report.json").read_text())
        for method, values in doc["aggregates"].items():
            assert tuple(values.keys()) == METRIC_NAMES


class TestDeterminism:
    def test_rerun_and_worker_count_byte_identical(self, tmp_path):
        a = run_batch(three_method_config(tmp_path / "w1", worker_count=1))
        b = run_batch(three_method_config(tmp_path / "w8", worker_count=8))
        c = run_batch(three_method_config(tmp_path / "again", worker_count=1))
        ra = a.report_path.read_bytes()
        assert ra == b.report_path.read_bytes() == c.report_path.read_bytes()
        for pa in sorted((tmp_path / "w1").glob("*.png")):
            pb = tmp_path / "w8" / pa.name
            pc = tmp_path / "again" / pa.name
            assert pa.read_bytes() == pb.read_bytes() == pc.read_bytes()


class TestFailures:
    def test_empty_image_list_rejected(self, tmp_path):
        with pytest.raises(PipelineError, match="no input images"):
            run_batch(three_method_config(tmp_path, image_paths=[]))

    def test_no_methods_rejected(self, tmp_path):
        with pytest.raises(PipelineError, match="no methods"):
            run_batch(three_method_config(tmp_path, methods=[]))

    def test_bad_image_collected_not_fatal(self, tmp_path):
        bad = tmp_path / "broken.png"
        bad.write_bytes(b"garbage")
        paths = [str(sample_image_paths()[0]), str(bad)]
        result = run_batch(three_method_config(tmp_path / "out", image_paths=paths))
        assert len(result.failures) == 1
        assert result.failures[0][0].endswith("broken.png")
        assert len(result.records) == 3  # surviving image x 3 methods

    def test_all_images_failing_is_fatal(self, tmp_path):
        bad = tmp_path / "broken.png"
        bad.write_bytes(b"garbage")
        with pytest.raises(PipelineError, match="all images failed"):
            run_batch(three_method_config(tmp_path / "out", image_paths=[str(bad)]))


class TestReportFormats:
    def test_csv_round_trip_of_records(self, tmp_path):
        result = run_batch(three_method_config(
            tmp_path / "csv", report_format="csv",
            methods=[CamConfig(method="scorecam"), CamConfig(method="scorecampp")],
        ))
        text = result.report_path.read_text()
        lines = text.splitlines()
        assert lines[0] == "image_id,method,class_c,y_full,o_masked,logit_full,logit_removed"
        data_rows = [l for l in lines[1:] if l and not l.startswith("metric")]
        body = data_rows[: len(result.records)]
        for row, record in zip(body, result.records):
            cells = row.split(",")
            assert cells[0] == record.image_id
            assert cells[1] == record.method_id
            assert float(cells[3]) == record.y_full
        for name in METRIC_NAMES:
            assert f'"{name}"' in text or name in text

    def test_json_records_reproduce_aggregates(self, tmp_path):
        result = run_batch(three_method_config(tmp_path / "json2"))
        doc = json.loads(result.report_path.read_text())
        rebuilt = [
            ConfidenceRecord(
                image_id=r["image_id"], method_id=r["method"], class_c=r["class_c"],
                y_full=r["y_full"], o_masked=r["o_masked"],
                logit_full=r["logit_full"], logit_removed=r["logit_removed"],
            )
            for r in doc["records"]
        ]
        assert aggregate_report(rebuilt).per_method == doc["aggregates"]

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            RunConfig(image_paths=["x"], methods=[CamConfig()], report_format="xml")


class TestConfigFile:
    def test_parse_flat_keys(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# comment line\n"
            "methods = scorecam, scorecampp\n"
            "workers = 4\n"
            "out = results  # trailing comment\n"
            "\n"
        )
        parsed = parse_config_file(cfg)
        assert parsed == {"methods": "scorecam, scorecampp", "workers": "4", "out": "results"}

    def test_malformed_line_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just some words\n")
        with pytest.raises(ValueError, match="expected 'key = value'"):
            parse_config_file(cfg)


class TestFormatReportUnits:
    def test_duplicate_stems_uniquified(self, tmp_path):
        import shutil

        a = tmp_path / "a" / "scene.png"
        b = tmp_path / "b" / "scene.png"
        a.parent.mkdir()
        b.parent.mkdir()
        src = sample_image_paths()[0]
        shutil.copy(src, a)
        shutil.copy(src, b)
        result = run_batch(three_method_config(
            tmp_path / "out", image_paths=[str(a), str(b)],
            methods=[CamConfig(method="scorecampp")],
        ))
        ids = sorted({r.image_id for r in result.records})
        assert ids == ["scene", "scene_2"]

    def test_format_report_deterministic(self):
        records = [
            ConfidenceRecord("img", "m", 0, 0.5, 0.25, 1.0, 0.5),
            ConfidenceRecord("img", "n", 0, 0.5, 0.75, 1.0, 0.25),
        ]
        report = aggregate_report(records)
        assert format_report(report, records, "json") == format_report(report, records, "json")
        assert format_report(report, records, "csv") == format_report(report, records, "csv")
