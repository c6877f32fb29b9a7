"""Bundled prompt templates and demonstration data, overridable by directory.

Templates use literal ``{name}`` placeholders filled by plain substitution,
so claim text containing braces never breaks rendering. A prompts directory
passed by the caller overrides bundled assets file by file.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

DECOMPOSITION_TEMPLATE = "decomposition.txt"
DEMONSTRATIONS = "demonstrations.json"
EXTRACTION_TEMPLATE = "extraction.txt"
METRIC_SHELL = "metric_shell.txt"
VERIFICATION_TEMPLATE = "verification.txt"


def metric_instruction_file(metric: str) -> str:
    return f"metric_{metric}.txt"


def load_text(name: str, prompts_dir: str | Path | None = None) -> str:
    """Load a prompt asset, preferring an override file in ``prompts_dir``."""
    if prompts_dir is not None:
        candidate = Path(prompts_dir) / name
        if candidate.exists():
            return candidate.read_text("utf-8")
    return resources.files(__package__).joinpath(name).read_text("utf-8")


def load_json(name: str, prompts_dir: str | Path | None = None):
    return json.loads(load_text(name, prompts_dir))


def fill(template: str, **values: str) -> str:
    """Substitute literal ``{key}`` markers; unknown braces are left alone."""
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def render_list(items) -> str:
    """Render strings as a bracketed, quoted list, as the prompts request."""
    return "[" + ", ".join(repr(str(item)) for item in items) + "]"
