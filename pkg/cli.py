import argparse
import sys
from typing import Any, Dict, List, Optional

# Load environment variables first
from dotenv import load_dotenv
load_dotenv()

from tools import resolve_tool
from utils.helpers import init_tracing, load_tools

EXIT_CODES = """exit codes:
  0  success
  1  usage or internal error
  2  configuration error (unknown key, invalid value, inconsistent model)
  3  data error (missing corpus files, vocabulary/provenance mismatch, empty corpus)
  4  numeric failure (NaN or Inf during training)
"""

_TYPES = {"string": str, "integer": int, "number": float}


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got '{text}'")


def command_name(tool_name: str) -> str:
    """`report_writer-generate` -> `generate`, `metrics-freq_report` -> `freq-report`."""
    return tool_name.split("-", 1)[1].replace("_", "-")


def add_tool_arguments(parser: argparse.ArgumentParser, schema: Dict[str, Any]) -> None:
    parameters = schema["function"]["parameters"]
    required = set(parameters.get("required", []))
    for name, prop in parameters["properties"].items():
        flag = "--" + name.replace("_", "-")
        kwargs: Dict[str, Any] = {"dest": name, "help": prop.get("description", "")}
        if prop["type"] == "boolean":
            # bare flag turns it on; `--greedy false` is also accepted
            kwargs.update(type=_bool, nargs="?", const=True, default=prop.get("default", False))
        else:
            kwargs["type"] = _TYPES[prop["type"]]
            if "enum" in prop:
                kwargs["choices"] = prop["enum"]
            if "default" in prop:
                kwargs["default"] = prop["default"]
                kwargs["help"] += f" (default: {prop['default']})"
        if name in required:
            kwargs["required"] = True
        parser.add_argument(flag, **kwargs)


def build_parser(tools: Optional[List[Dict[str, Any]]] = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medcap",
        description="Desk-scale image-to-report generation: corpus, training, decoding and scoring.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for schema in tools if tools is not None else load_tools():
        tool_name = schema["function"]["name"]
        sub = subparsers.add_parser(
            command_name(tool_name),
            help=schema["function"]["description"].splitlines()[0],
            description=schema["function"]["description"],
            epilog=EXIT_CODES,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        add_tool_arguments(sub, schema)
        sub.set_defaults(tool=tool_name)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    kwargs = {k: v for k, v in vars(args).items() if k not in ("command", "tool") and v is not None}
    init_tracing()
    result = resolve_tool(args.tool)(**kwargs)
    if not result:
        print(result.error, file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
