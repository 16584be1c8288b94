import numpy as np
import pytest

from freqforest.cli import main
from freqforest.dataio import write_features
from freqforest.forest import Sample


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A small synthetic dataset taken through the whole CLI chain."""
    root = tmp_path_factory.mktemp("cliwork")
    data = root / "data"
    rc = main(["synth", "--out", str(data), "--classes", "3", "--actors", "3",
               "--frames", "32", "--seed", "4"])
    assert rc == 0
    rc = main(["extract", "--manifest", str(data / "manifest.txt"),
               "--out", str(root / "features.txt")])
    assert rc == 0
    rc = main(["train", "--features", str(root / "features.txt"),
               "--out", str(root / "model.txt"), "--seed", "4"])
    assert rc == 0
    return root


class TestPipelineCommands:
    def test_predict(self, workspace, capsys):
        rc = main(["predict", "--model", str(workspace / "model.txt"),
                   "--features", str(workspace / "features.txt")])
        assert rc == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l]
        assert len(lines) == 3 * 3 * 4
        assert all(len(l.split()) == 2 for l in lines)

    def test_predict_to_file(self, workspace, tmp_path):
        out = tmp_path / "preds.txt"
        rc = main(["predict", "--model", str(workspace / "model.txt"),
                   "--features", str(workspace / "features.txt"),
                   "--out", str(out)])
        assert rc == 0
        assert len(out.read_text().splitlines()) == 36

    def test_evaluate_prints_matrix(self, workspace, capsys):
        rc = main(["evaluate", "--model", str(workspace / "model.txt"),
                   "--features", str(workspace / "features.txt")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "accuracy" in out
        assert "CONFMAT 1" in out

    def test_experiment_from_features(self, workspace, capsys):
        rc = main(["experiment", "--features", str(workspace / "features.txt"),
                   "--train-scenarios", "s1", "--test-scenarios", "s1",
                   "--test-scenarios", "s1,s2",
                   "--train-actors", "1-2", "--test-actors", "3",
                   "--runs", "2", "--seed", "0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.count("RESULT") == 2
        assert "mean accuracy over runs" in out

    def test_experiment_from_manifest_extracts_inline(self, workspace, capsys):
        rc = main(["experiment", "--manifest", str(workspace / "data" / "manifest.txt"),
                   "--train-scenarios", "s1", "--test-scenarios", "s1",
                   "--train-actors", "1-2", "--test-actors", "3", "--runs", "1"])
        assert rc == 0
        assert "RESULT" in capsys.readouterr().out

    def test_experiment_needs_input(self):
        assert main(["experiment"]) == 1


class TestErrorPaths:
    def test_missing_manifest_is_error_exit(self, tmp_path, capsys):
        rc = main(["extract", "--manifest", str(tmp_path / "nope.txt"),
                   "--out", str(tmp_path / "f.txt")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_malformed_features_is_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("FEATURES 1 2 fa\nc1 box\nfa 1.0\n")
        rc = main(["train", "--features", str(bad), "--out", str(tmp_path / "m.txt")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["train"])  # missing required arguments
        assert exc.value.code == 2

    def test_actor_flags_must_pair(self, workspace):
        rc = main(["experiment", "--features", str(workspace / "features.txt"),
                   "--train-actors", "1-2"])
        assert rc == 1


class TestExperimentDefaults:
    def test_default_16_9_partition_on_25_actors(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        samples = []
        for actor in range(1, 26):
            for ci, label in enumerate(("a", "b", "c")):
                center = np.zeros(4)
                center[ci] = 5.0
                feats = {f"f{j}": np.abs(center + rng.normal(scale=0.3, size=4))
                         for j in range(2)}
                samples.append(Sample(f"c{actor}_{label}", label, feats,
                                      actor=str(actor), scenario="s1"))
        path = tmp_path / "features.txt"
        write_features(path, samples, 4)
        rc = main(["experiment", "--features", str(path), "--runs", "1"])
        assert rc == 0
        err = capsys.readouterr().err
        assert "default 16/9 actor partition" in err
