import json
import threading
import time

import pytest

from redlight.cli import main
from redlight.store import RecordStore


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "d"
    code = main(["gen", "--out", str(out), "--n", "24", "--mix", "0.25,0.25,0.5", "--seed", "6"])
    assert code == 0
    return out


class TestGen:
    def test_reports_outputs(self, tmp_path, capsys):
        code = main(["gen", "--out", str(tmp_path / "d"), "--n", "8", "--mix", "0.25,0.25,0.5"])
        out = capsys.readouterr().out
        assert code == 0
        assert "wrote 8 frames" in out
        assert "vehicle=2" in out

    def test_bad_mix_is_usage_error(self, tmp_path, capsys):
        code = main(["gen", "--out", str(tmp_path / "d"), "--n", "8", "--mix", "0.5,0.5"])
        assert code == 2
        assert "usage error" in capsys.readouterr().err

    def test_unbalanced_mix_is_usage_error(self, tmp_path, capsys):
        code = main(["gen", "--out", str(tmp_path / "d"), "--n", "8", "--mix", "0.9,0.9,0.2"])
        assert code == 2
        assert "sum to 1" in capsys.readouterr().err


class TestRun:
    def test_processes_list(self, dataset, tmp_path, capsys):
        store = tmp_path / "run.jsonl"
        code = main(
            ["run", "--config", str(dataset / "config.json"), "--list", str(dataset / "frames.list"),
             "--store", str(store), "--quiet"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "frames 24" in out
        assert "violations 6" in out
        with RecordStore(store, create=False) as s:
            assert s.violation_count() == 6

    def test_prints_violations_unless_quiet(self, dataset, tmp_path, capsys):
        code = main(
            ["run", "--config", str(dataset / "config.json"), "--list", str(dataset / "frames.list"),
             "--store", str(tmp_path / "run.jsonl")]
        )
        assert code == 0
        assert "violation viol-SYN1-0-" in capsys.readouterr().out

    def test_missing_config_exit_1(self, dataset, tmp_path, capsys):
        code = main(
            ["run", "--config", str(tmp_path / "absent.json"), "--list", str(dataset / "frames.list"),
             "--store", str(tmp_path / "run.jsonl")]
        )
        assert code == 1
        assert "not found" in capsys.readouterr().err

    def test_invalid_config_exit_2(self, dataset, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"version": 1, "cameras": [{"camera_id": "X Y"}]}))
        code = main(
            ["run", "--config", str(bad), "--list", str(dataset / "frames.list"),
             "--store", str(tmp_path / "run.jsonl")]
        )
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_list_warnings_go_to_stderr(self, dataset, tmp_path, capsys):
        lst = tmp_path / "partial.list"
        lines = (dataset / "frames.list").read_text().splitlines()[:6]
        lst.write_text("\n".join(lines) + "\nbadline\n")
        # frame paths are relative to the list directory, so link them in
        (tmp_path / "frames").symlink_to(dataset / "frames")
        code = main(
            ["run", "--config", str(dataset / "config.json"), "--list", str(lst),
             "--store", str(tmp_path / "run.jsonl"), "--quiet"]
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "warning: list line 7" in captured.err

    def test_watch_mode_consumes_appended_lines(self, dataset, tmp_path, capsys):
        lst = tmp_path / "grow.list"
        all_lines = (dataset / "frames.list").read_text().splitlines()
        lst.write_text("\n".join(all_lines[:10]) + "\n")
        (tmp_path / "frames").symlink_to(dataset / "frames")

        def append_rest():
            time.sleep(0.6)
            with open(lst, "a") as fh:
                fh.write("\n".join(all_lines[10:]) + "\n")

        t = threading.Thread(target=append_rest)
        t.start()
        code = main(
            ["run", "--config", str(dataset / "config.json"), "--list", str(lst),
             "--store", str(tmp_path / "run.jsonl"), "--quiet", "--watch", "--idle-exit", "1.5"]
        )
        t.join()
        assert code == 0
        assert "frames 24" in capsys.readouterr().out


class TestEval:
    @pytest.fixture()
    def run_store(self, dataset, tmp_path):
        store = tmp_path / "run.jsonl"
        assert (
            main(
                ["run", "--config", str(dataset / "config.json"), "--list", str(dataset / "frames.list"),
                 "--store", str(store), "--quiet"]
            )
            == 0
        )
        return store

    def test_table_output(self, dataset, run_store, capsys):
        capsys.readouterr()
        code = main(["eval", "--store", str(run_store), "--labels", str(dataset / "labels.txt")])
        out = capsys.readouterr().out
        assert code == 0
        assert "tp rate          1.0000" in out
        assert "overall error    0.0000" in out

    def test_records_output(self, dataset, run_store, capsys):
        capsys.readouterr()
        code = main(
            ["eval", "--store", str(run_store), "--labels", str(dataset / "labels.txt"),
             "--format", "records"]
        )
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["total"] == 24
        assert report["tp"] == 6 and report["fn"] == 0 and report["fp"] == 0
        assert report["tp_rate"] == 1.0

    def test_unmatched_paths_exit_1(self, dataset, run_store, tmp_path, capsys):
        labels = tmp_path / "labels.txt"
        # drop the violating paths from the label universe
        kept = [
            line
            for line in (dataset / "labels.txt").read_text().splitlines()
            if line.split(";")[1] == "false"
        ]
        labels.write_text("\n".join(kept) + "\n")
        code = main(["eval", "--store", str(run_store), "--labels", str(labels)])
        captured = capsys.readouterr()
        assert code == 1
        assert "missing from the label file" in captured.err

    def test_missing_store_exit_1(self, dataset, tmp_path, capsys):
        code = main(["eval", "--store", str(tmp_path / "absent.jsonl"), "--labels", str(dataset / "labels.txt")])
        assert code == 1
        assert "store not found" in capsys.readouterr().err

    def test_malformed_labels_exit_1(self, run_store, tmp_path, capsys):
        labels = tmp_path / "labels.txt"
        labels.write_text("frames/a.pgm;maybe;0\n")
        code = main(["eval", "--store", str(run_store), "--labels", str(labels)])
        assert code == 1


class TestUsage:
    def test_no_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main([])
        assert exc_info.value.code == 2

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["frobnicate"])
        assert exc_info.value.code == 2
