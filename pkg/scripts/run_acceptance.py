"""Run the acceptance criteria and keep the desk-case artifacts.

Usage: python3 scripts/run_acceptance.py [output-dir]
"""

import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "out" / "acceptance"
    out.mkdir(parents=True, exist_ok=True)
    env = {**os.environ, "FREQSUC_ACCEPTANCE_OUT": str(out)}
    cmd = [sys.executable, "-m", "pytest", "-v", str(ROOT / "tests" / "test_acceptance.py")]
    return subprocess.call(cmd, cwd=ROOT, env=env)


if __name__ == "__main__":
    sys.exit(main())
