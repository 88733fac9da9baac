"""Run every shipped scenario and print a one-line summary of each.

    python3 scripts/run_scenarios.py [--out out] [--only fiber_testbed]
"""

import argparse
import time
from pathlib import Path

from quantum_seal.scenario import load_config, run_scenario, write_outputs

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", type=Path, default=ROOT / "scenarios")
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    ap.add_argument("--only", help="run a single scenario by file stem")
    args = ap.parse_args()

    for path in sorted(args.scenarios.glob("*.toml")):
        if args.only and path.stem != args.only:
            continue
        cfg = load_config(path)
        t0 = time.perf_counter()
        result = run_scenario(cfg)
        write_outputs(result, args.out / path.stem)
        overall = result.overall_estimate()
        v = f"{overall.v_hat:.4f} +/- {overall.std_err:.4f}" if overall else "n/a"
        trail = ", ".join(f"{new.value}@{w}" for w, _, new in result.transitions())
        print(f"{path.stem:26s} {cfg.total_windows:>10,d} windows  {time.perf_counter() - t0:6.1f}s  "
              f"v_hat {v}  states: {trail}")


if __name__ == "__main__":
    main()
