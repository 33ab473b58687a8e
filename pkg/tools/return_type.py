from typing import TypeVar, Generic, Optional
import json

from objects.errors import MedcapError

T = TypeVar('T')


class ToolResult(Generic[T]):
    """Outcome of one CLI tool: data on success, otherwise an error message and the exit code to report."""
    def __init__(self, success: bool, data: Optional[T] = None, error: Optional[str] = None, exit_code: int = 0):
        self.success = success
        self.data = data
        self.error = error
        self.exit_code = exit_code

    @classmethod
    def ok(cls, data: T) -> 'ToolResult[T]':
        """Create a successful result"""
        return cls(success=True, data=data)

    @classmethod
    def err(cls, error: str, exit_code: int = 1) -> 'ToolResult[T]':
        """Create a failed result; exit code 1 unless the caller knows better"""
        if not error.startswith("Error: "):
            error = f"Error: {error}"
        return cls(success=False, error=error, exit_code=exit_code)

    @classmethod
    def from_error(cls, error: MedcapError) -> 'ToolResult[T]':
        """Failed result for a library error, keeping its config/data/numeric exit code"""
        return cls.err(f"{type(error).__name__}: {error}", error.exit_code)

    def __bool__(self) -> bool:
        """Allows using Result in if statements directly"""
        return self.success

    def __str__(self) -> str:
        """String representation for print() and str()"""
        if self.success:
            return json.dumps({"status": "success", "data": self.data}, default=str)
        return json.dumps({"status": "error", "error": self.error, "exit_code": self.exit_code})

    def __repr__(self) -> str:
        return self.__str__()
