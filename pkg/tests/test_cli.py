"""CLI tests: subcommands, flag overrides, config files, exit codes."""

import json

import numpy as np
import pytest

from camscore.cli import main
from camscore.data import sample_image_paths
from camscore.weights import load_weights


@pytest.fixture
def sample():
    return str(sample_image_paths()[0])


class TestGenModel:
    def test_writes_loadable_weight_file(self, tmp_path, capsys):
        out = tmp_path / "model.csw"
        assert main(["gen-model", "--seed", "7", "--out", str(out)]) == 0
        backend = load_weights(out)
        assert backend.seed == 7
        assert backend.input_shape == (3, 64, 64)
        assert "wrote" in capsys.readouterr().out

    def test_input_size_validated(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["gen-model", "--out", str(tmp_path / "m.csw"), "--input-size", "30"])


class TestExplain:
    def test_writes_two_pngs(self, tmp_path, sample, capsys):
        rc = main(["explain", "--images", sample, "--method", "scorecampp",
                   "--out", str(tmp_path), "--seed", "42"])
        assert rc == 0
        pngs = sorted(p.name for p in tmp_path.glob("*.png"))
        assert pngs == ["scene_blocks_scorecampp_overlay.png", "scene_blocks_scorecampp_saliency.png"]
        out = capsys.readouterr().out
        assert "class" in out

    def test_gating_flag_changes_artifact_name(self, tmp_path, sample):
        main(["explain", "--images", sample, "--method", "scorecampp",
              "--gating", "mish", "--out", str(tmp_path)])
        assert (tmp_path / "scene_blocks_scorecampp-mish_saliency.png").exists()

    def test_model_flag_loads_weights(self, tmp_path, sample):
        model = tmp_path / "m.csw"
        main(["gen-model", "--seed", "3", "--out", str(model)])
        rc = main(["explain", "--images", sample, "--model", str(model), "--out", str(tmp_path / "o")])
        assert rc == 0


class TestBench:
    def test_three_by_three_census(self, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["bench",
                   "--images", *[str(p) for p in sample_image_paths()],
                   "--method", "gradcam", "--method", "scorecam", "--method", "scorecampp",
                   "--out", str(out), "--seed", "42"])
        assert rc == 0
        assert len(list(out.glob("*.png"))) == 18
        doc = json.loads((out / "report.json").read_text())
        assert len(doc["records"]) == 9
        printed = capsys.readouterr().out
        assert "Average Drop %" in printed

    def test_directory_input_expands(self, tmp_path):
        src_dir = sample_image_paths()[0].parent
        out = tmp_path / "run"
        rc = main(["bench", "--images", str(src_dir), "--method", "scorecampp",
                   "--out", str(out), "--report-format", "csv"])
        assert rc == 0
        assert (out / "report.csv").exists()
        assert len(list(out.glob("*.png"))) == 6

    def test_missing_images_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["bench", "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_failed_image_gives_nonzero_exit(self, tmp_path, sample, capsys):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"junk")
        rc = main(["bench", "--images", sample, str(bad),
                   "--method", "scorecam", "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "failed" in capsys.readouterr().err

    def test_config_file_with_cli_override(self, tmp_path, sample):
        cfg = tmp_path / "bench.cfg"
        cfg.write_text(
            f"images = {sample}\n"
            "methods = scorecam\n"
            "workers = 2\n"
            f"out = {tmp_path / 'from_file'}\n"
            "report_format = csv\n"
        )
        rc = main(["bench", "--config", str(cfg)])
        assert rc == 0
        assert (tmp_path / "from_file" / "report.csv").exists()
        # CLI flag overrides the file value
        rc = main(["bench", "--config", str(cfg), "--out", str(tmp_path / "cli_wins"),
                   "--report-format", "json"])
        assert rc == 0
        assert (tmp_path / "cli_wins" / "report.json").exists()

    def test_ablation_flags_accepted(self, tmp_path, sample):
        rc = main(["bench", "--images", sample, "--method", "scorecampp",
                   "--no-gate-aggregation", "--cic-softmax", "--gating", "sigmoid",
                   "--batch-size", "4", "--workers", "2", "--out", str(tmp_path / "o")])
        assert rc == 0
        names = {p.name for p in (tmp_path / "o").glob("*saliency*")}
        assert names == {"scene_blocks_scorecampp-sigmoid-noagg-cicsm_saliency.png"}
