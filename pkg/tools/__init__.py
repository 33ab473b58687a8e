# This file marks the directory as a Python package and can be used to expose tools.
import importlib
from typing import Callable

from tools.corpus_builder import CORPUS_BUILDER_TOOLS
from tools.experiments import EXPERIMENT_TOOLS
from tools.report_writer import REPORT_WRITER_TOOLS
from tools.metrics import METRICS_TOOLS

# Combine all tools into a single dictionary
TOOLS = {
    **CORPUS_BUILDER_TOOLS,
    **EXPERIMENT_TOOLS,
    **REPORT_WRITER_TOOLS,
    **METRICS_TOOLS
}


def resolve_tool(tool_name: str) -> Callable:
    """Function behind a `module-function` tool name."""
    module_name, function_name = tool_name.split('-')
    module = importlib.import_module(f"tools.{module_name}")
    return getattr(module, function_name)
