#!/usr/bin/env python3
"""
Startup script for FlowToric
"""

import signal
import sys


def _setup_signal_handlers():
    """Exit quietly on SIGTERM during long Groebner runs."""

    def _handle_sigterm(signum, frame):  # pragma: no cover - simple exit hook
        print("\nReceived termination signal. Stopping...", file=sys.stderr)
        sys.exit(130)

    signal.signal(signal.SIGTERM, _handle_sigterm)


def check_dependencies():
    """Check if required dependencies are installed."""
    missing = []
    for name in ("numpy", "scipy", "sympy", "networkx"):
        try:
            __import__(name)
        except ImportError:
            missing.append(name)
    return missing


def main():
    """Main startup function."""
    _setup_signal_handlers()

    missing = check_dependencies()
    if missing:
        print(f"Missing dependencies: {', '.join(missing)}", file=sys.stderr)
        print("Please run:", file=sys.stderr)
        print("  python3 -m pip install --user -r requirements.txt", file=sys.stderr)
        return 2

    from cli import main as cli_main
    try:
        return cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        print("\nStopped.", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
