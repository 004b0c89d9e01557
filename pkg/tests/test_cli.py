"""CLI tests: exit codes, overrides, reports, logging, and the entry point."""

import logging
import shutil
import subprocess

import pytest

import pad.experiment as expmod
from pad.cli import _configure_logging, build_parser, main
from pad.experiment import parse_config_text

CONFIG_TEXT = """\
# tiny deterministic run
prompt_count = 3
max_len = 6
seed = 0
retrieval.k = 2
"""

CORPUS_TEXT = """\
fever rash cough fatigue nausea headache dizziness insomnia
anxiety tremor swelling itching bruising cramping numbness fever
rash cough fever fatigue nausea anxiety tremor swelling
headache dizziness insomnia anxiety fever rash cough fatigue
tremor swelling itching fever bruising cramping numbness rash
nausea headache fever dizziness insomnia anxiety tremor cough
"""

REPORT_FILES = ("results.csv", "results.md", "privacy.jsonl", "config.txt")


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus.txt"
    corpus.write_text(CORPUS_TEXT, encoding="utf-8")
    path = root / "run.txt"
    path.write_text(CONFIG_TEXT + f"corpus_path = {corpus}\n",
                    encoding="utf-8")
    return path


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_happy_path(self, config_path, tmp_path, capsys):
        out = tmp_path / "results"
        assert run_cli("run", "--config", str(config_path),
                       "--out", str(out)) == 0
        for name in REPORT_FILES:
            assert (out / name).is_file()
        stdout = capsys.readouterr().out
        assert f"wrote 2 rows to {out}" in stdout

    def test_byte_identical_reruns(self, config_path, tmp_path):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert run_cli("run", "--config", str(config_path),
                           "--out", str(out)) == 0
        for name in REPORT_FILES:
            first = (outs[0] / name).read_bytes()
            second = (outs[1] / name).read_bytes()
            assert first == second, name

    def test_flag_overrides_reach_config_echo(self, config_path, tmp_path):
        out = tmp_path / "o"
        assert run_cli("run", "--config", str(config_path), "--seed", "5",
                       "--pad.lambda_amp", "7.5", "--max_len", "4",
                       "--out", str(out)) == 0
        echo = parse_config_text((out / "config.txt").read_text(
            encoding="utf-8"))
        assert echo["seed"] == "5"
        assert echo["pad.lambda_amp"] == "7.5"
        assert echo["max_len"] == "4"

    def test_runs_without_config_file(self, config_path, tmp_path):
        # flags alone describe the run; corpus comes from a flag too
        corpus = config_path.parent / "corpus.txt"
        out = tmp_path / "o"
        assert run_cli("run", "--corpus_path", str(corpus),
                       "--prompt_count", "2", "--max_len", "3",
                       "--out", str(out)) == 0
        assert (out / "results.csv").is_file()

    def test_missing_config_file(self, tmp_path, capsys):
        code = run_cli("run", "--config", str(tmp_path / "nope.txt"),
                       "--out", str(tmp_path / "o"))
        assert code == 2
        assert "config file not found" in capsys.readouterr().err

    def test_malformed_config_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("words without equals\n", encoding="utf-8")
        assert run_cli("run", "--config", str(bad),
                       "--out", str(tmp_path / "o")) == 2
        assert "pad: error:" in capsys.readouterr().err

    def test_invalid_value_fails_before_running(self, config_path, tmp_path,
                                                capsys):
        assert run_cli("run", "--config", str(config_path),
                       "--prompt_count", "0",
                       "--out", str(tmp_path / "o")) == 2
        assert "prompt_count" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    def test_bad_corpus_path(self, tmp_path, capsys):
        assert run_cli("run", "--corpus_path", "/no/such/corpus",
                       "--out", str(tmp_path / "o")) == 2
        assert "does not exist" in capsys.readouterr().err

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            run_cli("run", "--bogus", "1")
        assert excinfo.value.code == 2

    def test_partial_failure_exits_one(self, config_path, tmp_path, capsys,
                                       monkeypatch):
        real = expmod._run_row

        def flaky(cfg, corpus, model, prompts, retrievals, row_index, *rest):
            if row_index == 1:
                raise RuntimeError("boom")
            return real(cfg, corpus, model, prompts, retrievals, row_index,
                        *rest)

        monkeypatch.setattr(expmod, "_run_row", flaky)
        out = tmp_path / "o"
        code = run_cli("run", "--config", str(config_path), "--out", str(out))
        assert code == 1
        captured = capsys.readouterr()
        assert "row 1 (full) failed: boom" in captured.err
        assert "1 row(s) failed" in captured.err
        # the completed extraction row is still written
        assert "wrote 1 rows" in captured.out
        assert (out / "results.csv").is_file()


class TestReport:
    def test_rerender_matches_original(self, config_path, tmp_path, capsys):
        out = tmp_path / "o"
        assert run_cli("run", "--config", str(config_path),
                       "--out", str(out)) == 0
        original = (out / "results.md").read_bytes()
        (out / "results.md").unlink()
        assert run_cli("report", "--in", str(out)) == 0
        assert (out / "results.md").read_bytes() == original
        assert "results.md" in capsys.readouterr().out

    def test_missing_directory(self, tmp_path, capsys):
        assert run_cli("report", "--in", str(tmp_path / "void")) == 2
        assert "pad: error:" in capsys.readouterr().err

    def test_requires_in_flag(self):
        with pytest.raises(SystemExit) as excinfo:
            run_cli("report")
        assert excinfo.value.code == 2


class TestLogging:
    def capture_level(self, monkeypatch, value):
        recorded = {}
        monkeypatch.setattr(logging, "basicConfig",
                            lambda **kw: recorded.update(kw))
        if value is None:
            monkeypatch.delenv("PAD_LOG", raising=False)
        else:
            monkeypatch.setenv("PAD_LOG", value)
        _configure_logging()
        return recorded["level"]

    def test_defaults_to_warning(self, monkeypatch):
        assert self.capture_level(monkeypatch, None) == logging.WARNING

    def test_env_sets_level(self, monkeypatch):
        assert self.capture_level(monkeypatch, "debug") == logging.DEBUG
        assert self.capture_level(monkeypatch, " INFO ") == logging.INFO

    def test_invalid_level_falls_back(self, monkeypatch):
        assert self.capture_level(monkeypatch, "CHATTY") == logging.WARNING

    def test_run_emits_info_records(self, config_path, tmp_path, caplog):
        with caplog.at_level(logging.INFO, logger="pad"):
            run_cli("run", "--config", str(config_path),
                    "--out", str(tmp_path / "o"))
        messages = [r.getMessage() for r in caplog.records]
        assert any("corpus:" in m for m in messages)
        assert any(m.startswith("row 0") for m in messages)


class TestParser:
    def test_every_config_key_has_a_flag(self):
        parser = build_parser()
        help_text = None
        for action in parser._subparsers._group_actions:
            help_text = action.choices["run"].format_help()
        from pad.experiment import CONFIG_SCHEMA
        for key in CONFIG_SCHEMA:
            assert f"--{key}" in help_text


class TestInstalledScript:
    def test_console_entry_point(self, config_path, tmp_path):
        exe = shutil.which("pad")
        assert exe, "console script 'pad' not on PATH"
        out = tmp_path / "o"
        proc = subprocess.run(
            [exe, "run", "--config", str(config_path), "--out", str(out)],
            capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0, proc.stderr
        assert (out / "results.csv").is_file()
        assert f"wrote 2 rows to {out}" in proc.stdout
