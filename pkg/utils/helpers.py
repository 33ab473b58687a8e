import hashlib
import importlib
import os
from typing import Dict, List

import weave

TOOLS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "tools")


def load_tools() -> List[Dict]:
    """
    Dynamically loads all tools from the tools directory.
    Returns a list of all available tools with complete parameter specifications.
    """
    all_tools = {}
    for filename in sorted(os.listdir(TOOLS_DIR)):
        if filename.endswith('.py') and not filename.startswith('__'):
            module = importlib.import_module(f'tools.{filename[:-3]}')
            for attr_name in dir(module):
                if attr_name.endswith('_TOOLS'):
                    all_tools.update(getattr(module, attr_name))
    return list(all_tools.values())


def init_tracing() -> bool:
    """Start weave tracing when WEAVE_TEAM and WEAVE_PROJECT are set; otherwise ops run untraced."""
    team, project = os.getenv("WEAVE_TEAM"), os.getenv("WEAVE_PROJECT")
    if not (team and project):
        return False
    weave.init(f"{team}/{project}")
    return True


def sub_seed(seed: int, name: str) -> int:
    """Independent, replayable seed for one named source of randomness."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")
