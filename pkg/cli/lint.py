import sys

from cli._runner import run

SOURCES = ["app", "cli", "tests"]


def main() -> None:
    """Run ruff lint checks and verify formatting."""
    code = run(["uv", "run", "ruff", "check", *SOURCES])
    code = code or run(["uv", "run", "ruff", "format", "--check", *SOURCES])
    sys.exit(code)


def format() -> None:
    """Apply ruff formatting and safe lint fixes."""
    code = run(["uv", "run", "ruff", "format", *SOURCES])
    sys.exit(code or run(["uv", "run", "ruff", "check", "--fix", *SOURCES]))
