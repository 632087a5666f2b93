#!/usr/bin/env python3
# /// script
# dependencies = [
#     "numpy>=1.24",
#     "scipy>=1.10",
#     "pandas>=2.0",
#     "contourpy>=1.2",
#     "pydantic>=2.0",
#     "python-dotenv",
#     "rich>=13.0.0",
#     "click>=8.0.0",
# ]
# ///

"""
Launcher for ASGEM

Checks that the numerical stack is importable before handing over to the CLI,
so a missing package is reported by name instead of as a traceback.
"""

import importlib
import sys

REQUIRED = ["numpy", "scipy", "pandas", "contourpy", "pydantic", "dotenv", "click"]
OPTIONAL = ["rich"]


def check_dependencies():
    """Map each module name to whether it imports"""
    deps = {}
    for name in REQUIRED + OPTIONAL:
        try:
            importlib.import_module(name)
            deps[name] = True
        except ImportError:
            deps[name] = False
    return deps


def main():
    deps = check_dependencies()

    missing = [name for name in REQUIRED if not deps[name]]
    if missing:
        print(f"❌ Missing packages: {', '.join(missing)}")
        print("   Install with: pip install -e .   (or: uv run run.py ...)")
        sys.exit(1)

    if not deps["rich"]:
        print("⚠️  rich not installed, falling back to plain output")

    from asgem_cli import main as cli_main
    cli_main()


if __name__ == "__main__":
    main()
