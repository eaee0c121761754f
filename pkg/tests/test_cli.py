import json
import os

from click.testing import CliRunner

from scenesim.cli import main


def _write_commands(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class TestRun:
    def test_full_run_writes_outputs(self, tmp_path):
        cmds = tmp_path / "commands.txt"
        _write_commands(cmds, [
            "# setup",
            "Add a red Porsche in 20 to 30 meters driving ahead",
            "The view moves 2 meters ahead",
        ])
        out = tmp_path / "out"
        runner = CliRunner()
        result = runner.invoke(main, [
            "run", "--commands", str(cmds), "--out", str(out),
            "--seed", "5", "--frames", "2", "--width", "48", "--height", "36"])
        assert result.exit_code == 0, result.output

        assert (out / "scene.json").exists()
        assert (out / "export.json").exists()
        assert (out / "topdown.png").exists()
        assert (out / "trajectory_veh001.csv").exists()
        assert (out / "manifest.json").exists()
        with open(out / "manifest.json") as fh:
            manifest = json.load(fh)
        for name in manifest["frames"]:
            assert (out / name).exists()

        with open(out / "export.json") as fh:
            doc = json.load(fh)
        assert doc["assets"][0]["asset_id"] == "car_porsche_911"

        with open(out / "trajectory_veh001.csv") as fh:
            header = fh.readline().strip()
        assert header == "t,x,y,heading"

    def test_failing_command_sets_exit_code(self, tmp_path):
        cmds = tmp_path / "commands.txt"
        _write_commands(cmds, ["Teleport the car to Mars"])
        out = tmp_path / "out"
        result = CliRunner().invoke(main, [
            "plan", "--commands", str(cmds), "--out", str(out)])
        assert result.exit_code == 1
        assert "FAILED" in result.output

    def test_plan_skips_frames(self, tmp_path):
        cmds = tmp_path / "commands.txt"
        _write_commands(cmds, ["Add a car in 20 to 30 meters driving ahead"])
        out = tmp_path / "out"
        result = CliRunner().invoke(main, [
            "plan", "--commands", str(cmds), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert not any(n.startswith("frame_") for n in os.listdir(out))
        assert (out / "topdown.png").exists()


class TestLint:
    def test_clean_corpus_passes(self, tmp_path):
        corpus = tmp_path / "corpus.txt"
        _write_commands(corpus, [
            "Delete all cars in the scene",
            "Add a red car close to me",
            "The view moves 5 meters ahead",
        ])
        result = CliRunner().invoke(main, ["lint-dsl", str(corpus)])
        assert result.exit_code == 0
        assert "corpus OK" in result.output

    def test_bad_line_named(self, tmp_path):
        corpus = tmp_path / "corpus.txt"
        _write_commands(corpus, [
            "Delete all cars",
            "Levitate the bus",
        ])
        result = CliRunner().invoke(main, ["lint-dsl", str(corpus)])
        assert result.exit_code == 1
        assert "line 2" in result.output


class TestDemoExport:
    def test_export_demo_scene(self, tmp_path):
        path = tmp_path / "scene.json"
        result = CliRunner().invoke(main, ["export-demo-scene", str(path)])
        assert result.exit_code == 0
        with open(path) as fh:
            doc = json.load(fh)
        assert "lane_map" in doc and "cameras" in doc

    def test_run_accepts_exported_scene(self, tmp_path):
        scene_path = tmp_path / "scene.json"
        CliRunner().invoke(main, ["export-demo-scene", str(scene_path)])
        cmds = tmp_path / "commands.txt"
        _write_commands(cmds, ["Add a car in 20 to 30 meters driving ahead"])
        out = tmp_path / "out"
        result = CliRunner().invoke(main, [
            "plan", "--scene", str(scene_path),
            "--commands", str(cmds), "--out", str(out)])
        assert result.exit_code == 0, result.output
