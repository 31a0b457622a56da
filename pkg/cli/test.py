import sys

from cli._runner import run


def main() -> None:
    """Run unit tests (integration sweeps excluded)."""
    sys.exit(run(["uv", "run", "pytest"]))


def test_v() -> None:
    """Run unit tests with verbose output."""
    sys.exit(run(["uv", "run", "pytest", "-v"]))


def test_all() -> None:
    """Run every test including acceptance-scale sweeps."""
    sys.exit(run(["uv", "run", "pytest", "-m", ""]))


def test_integration() -> None:
    """Run acceptance-scale sweeps only."""
    sys.exit(run(["uv", "run", "pytest", "-m", "integration", "--no-cov"]))
