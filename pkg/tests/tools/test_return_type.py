import json

from objects.errors import ConfigError, NumericError
from tools.return_type import ToolResult


def test_ok_result():
    result = ToolResult.ok({"steps": 3})
    assert result and result.exit_code == 0
    assert json.loads(str(result)) == {"status": "success", "data": {"steps": 3}}


def test_library_errors_keep_their_exit_code():
    assert ToolResult.from_error(ConfigError("unknown config key 'x'")).exit_code == 2
    result = ToolResult.from_error(NumericError("non-finite gradient"))
    assert not result
    assert result.exit_code == 4
    assert result.error == "Error: NumericError: non-finite gradient"


def test_plain_errors_default_to_one():
    result = ToolResult.err("Failed to train: boom")
    assert result.exit_code == 1
    assert json.loads(str(result))["error"] == "Error: Failed to train: boom"
