#!/usr/bin/env python3
"""
Test script to verify the FlowToric setup
"""

import sys
from pathlib import Path

# Ensure project root is on sys.path so imports work when run from tests/manual
PROJECT_ROOT = Path(__file__).resolve().parents[2]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))


def test_imports():
    """Test if all required modules can be imported"""
    print("Testing imports...")

    for name in ("numpy", "scipy", "sympy", "networkx"):
        try:
            __import__(name)
            print(f"✓ {name} imported successfully")
        except ImportError as e:
            print(f"✗ {name} import failed: {e}")
            return False

    try:
        from cli import main  # noqa: F401
        print("✓ FlowToric modules imported successfully")
    except ImportError as e:
        print(f"✗ FlowToric import failed: {e}")
        return False

    return True


def test_files():
    """Test if required files exist"""
    print("\nTesting files...")

    required_files = [
        'cli.py',
        'config.py',
        'flowcore.py',
        'toric.py',
        'run.py',
        'requirements.txt',
        'README.md'
    ]

    for file_path in required_files:
        if (PROJECT_ROOT / file_path).exists():
            print(f"✓ {file_path} exists")
        else:
            print(f"✗ {file_path} missing")
            return False

    return True


def test_smoke():
    """Compute the Groebner basis of B_3"""
    print("\nTesting a small computation...")

    try:
        from flowcore import birkhoff_spec, enumerate_lattice_points
        from order import revlex_from_ranking
        from toric import buchberger, max_degree

        points = enumerate_lattice_points(birkhoff_spec(3))
        gb = buchberger(points, revlex_from_ranking(points, range(len(points))))
        if len(points) == 6 and max_degree(gb) == 3:
            print("✓ B_3 has six points and a cubic Groebner basis")
            return True
        print(f"✗ Unexpected result: {len(points)} points, degree {max_degree(gb)}")
        return False

    except Exception as e:
        print(f"✗ Smoke test failed: {e}")
        return False


def main():
    """Run all tests"""
    print("FlowToric - Setup Test")
    print("=" * 50)

    tests = [
        test_imports,
        test_files,
        test_smoke
    ]

    all_passed = True

    for test in tests:
        if not test():
            all_passed = False

    print("\n" + "=" * 50)
    if all_passed:
        print("✓ All tests passed! FlowToric should work correctly.")
        print("\nTo run the acceptance suite:")
        print("  python run.py verify-all")
    else:
        print("✗ Some tests failed. Please check the errors above.")
        print("\nTo install missing dependencies:")
        print("  python3 -m pip install --user -r requirements.txt")

    return all_passed


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
