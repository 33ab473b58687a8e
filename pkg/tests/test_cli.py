import pytest

from cli import build_parser, command_name, main
from tools import TOOLS, resolve_tool
from utils.helpers import load_tools


def test_command_names():
    assert command_name("report_writer-generate") == "generate"
    assert command_name("metrics-freq_report") == "freq-report"
    assert command_name("corpus_builder-gen_data") == "gen-data"


@pytest.mark.parametrize("argv,tool", [
    (["gen-data", "--out", "corpus"], "corpus_builder-gen_data"),
    (["train", "--data", "corpus", "--out", "run"], "experiments-train"),
    (["ablate", "--data", "corpus", "--out", "grid"], "experiments-ablate"),
    (["generate", "--checkpoint", "c.qbck", "--data", "corpus", "--out", "r.txt"], "report_writer-generate"),
    (["evaluate", "--pred", "p.txt", "--ref", "r.txt"], "metrics-evaluate"),
    (["freq-report", "--texts", "r.txt"], "metrics-freq_report"),
])
def test_every_command_is_registered(argv, tool):
    assert build_parser().parse_args(argv).tool == tool


def test_generate_defaults_and_flags():
    parser = build_parser()
    base = ["generate", "--checkpoint", "c.qbck", "--data", "corpus", "--out", "r.txt"]
    args = parser.parse_args(base)
    assert (args.beam, args.rep_penalty, args.min_len, args.max_len, args.greedy) == (5, 2.0, 8, 64, False)
    assert parser.parse_args(base + ["--greedy"]).greedy is True
    assert parser.parse_args(base + ["--greedy", "false"]).greedy is False
    assert parser.parse_args(base + ["--rep-penalty", "1.5"]).rep_penalty == 1.5


def test_usage_errors_exit():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["generate", "--data", "corpus"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["generate", "--checkpoint", "c", "--data", "d", "--out", "o", "--split", "train"])


def test_main_returns_zero_on_success(tmp_path):
    pred = tmp_path / "pred.txt"
    pred.write_text("ct image\n")
    assert main(["evaluate", "--pred", str(pred), "--ref", str(pred)]) == 0


def test_main_reports_data_errors(tmp_path, capsys):
    code = main(["generate", "--checkpoint", str(tmp_path / "absent.qbck"), "--data", str(tmp_path), "--out", str(tmp_path / "r.txt")])
    assert code == 3
    assert capsys.readouterr().err.startswith("Error:")


def test_main_reports_config_errors(tmp_path):
    config = tmp_path / "bad.txt"
    config.write_text("decode.beam_size=0\n")
    assert main(["train", "--data", str(tmp_path), "--out", str(tmp_path / "run"), "--config", str(config)]) == 2


def test_loaded_schemas_match_the_tool_registry():
    names = sorted(schema["function"]["name"] for schema in load_tools())
    assert names == sorted(schema["function"]["name"] for schema in TOOLS.values())
    for name in names:
        assert callable(resolve_tool(name))
