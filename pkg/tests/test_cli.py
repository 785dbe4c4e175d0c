"""
命令行接口测试
"""

import numpy as np
import pytest
from click.testing import CliRunner

from polyhex.gcn import GcnModel, load_model, save_model
from polyhex.main import EXIT_STAGE, EXIT_USAGE, cli, main
from polyhex.mesh import save_tri_mesh
from polyhex.segmentation import load_segmentation


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cube_file(tmp_path, cube_mesh):
    path = tmp_path / "cube.obj"
    save_tri_mesh(cube_mesh, path)
    return path


class TestExitCodes:
    def test_missing_option(self):
        assert main(["predict"]) == EXIT_USAGE

    def test_unknown_override(self, tmp_path):
        code = main(["gen-dataset", "--out", str(tmp_path / "d"), "--set", "hex.depth=1"])
        assert code == EXIT_USAGE

    def test_bad_type_list(self, tmp_path):
        assert main(["gen-dataset", "--types", "0-3", "--out", str(tmp_path / "d")]) == EXIT_USAGE

    def test_missing_model(self, tmp_path, cube_file):
        code = main(["predict", "--model", str(tmp_path / "none.txt"), "--mesh", str(cube_file)])
        assert code == EXIT_STAGE

    def test_success(self, tmp_path, cube_file):
        model = tmp_path / "model.txt"
        save_model(GcnModel.zeros("classifier"), model)
        assert main(["predict", "--model", str(model), "--mesh", str(cube_file)]) == 0


class TestCommands:
    def test_gen_dataset(self, runner, tmp_path):
        out = tmp_path / "data"
        result = runner.invoke(
            cli,
            [
                "gen-dataset", "--types", "1,3", "--per-type", "1", "--out", str(out),
                "--set", "dataset.subdivision_levels=1",
            ],
        )  # fmt: skip
        assert result.exit_code == 0, result.output
        assert "2 samples" in result.output
        rows = (out / "manifest.txt").read_text().split()
        assert "1" in rows and "3" in rows

    def test_train_writes_model_and_trace(self, runner, tmp_path):
        data = tmp_path / "data"
        runner.invoke(
            cli,
            ["gen-dataset", "--types", "1,3", "--per-type", "2", "--out", str(data),
             "--set", "dataset.subdivision_levels=1"],
        )  # fmt: skip
        model = tmp_path / "clf.txt"
        result = runner.invoke(
            cli,
            ["train", "--dataset", str(data), "--out", str(model), "--epochs", "1",
             "--set", "train.batch_size=2"],
        )  # fmt: skip
        assert result.exit_code == 0, result.output
        assert load_model(model, "classifier").kind == "classifier"
        assert (tmp_path / "clf.trace.txt").exists()

    def test_centroid_needs_type(self, runner, tmp_path):
        data = tmp_path / "data"
        runner.invoke(
            cli,
            ["gen-dataset", "--types", "1", "--per-type", "1", "--out", str(data),
             "--set", "dataset.subdivision_levels=1"],
        )  # fmt: skip
        result = runner.invoke(
            cli, ["train", "--dataset", str(data), "--out", str(tmp_path / "m.txt"), "--kind", "centroid"]
        )
        assert result.exit_code != 0
        assert "--type" in result.output

    def test_predict_output(self, runner, tmp_path, cube_file):
        model = tmp_path / "model.txt"
        save_model(GcnModel.zeros("classifier"), model)
        result = runner.invoke(cli, ["predict", "--model", str(model), "--mesh", str(cube_file)])
        assert result.exit_code == 0, result.output
        header, row, verdict = result.output.strip().splitlines()[-3:]
        assert header.split() == [f"P{i}" for i in range(1, 12)]
        assert row.split() == ["9.09"] * 11
        assert verdict == "type 1"

    def test_segment_with_type(self, runner, tmp_path, cube_file):
        out = tmp_path / "cube.seg.txt"
        result = runner.invoke(cli, ["segment", "--mesh", str(cube_file), "--out", str(out), "--type", "1"])
        assert result.exit_code == 0, result.output
        seg = load_segmentation(out)
        assert seg.k == 6
        assert np.bincount(seg.labels).tolist() == [32] * 6
        assert (tmp_path / "cube.seg.obj").exists()
