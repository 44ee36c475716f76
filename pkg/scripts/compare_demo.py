#!/usr/bin/env python3
"""Side-by-side demo: naive state feedback vs. predictor feedback on the
default robot with a 0.3 s input delay. Writes CSVs and a report to out/."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from delaycomp.cli import cmd_compare, parse_config

CONFIG = pathlib.Path(__file__).resolve().parents[1] / "configs" / "robot.cfg"


def main():
    config = parse_config(CONFIG.read_text())
    # destabilize the naive loop: no friction, aggressive poles
    from dataclasses import replace

    from delaycomp.robot import RobotParams

    params = RobotParams(m=1.0, J=1.0, B_v=0.0, B_omega=0.0, l=0.5, k_m=2.0, k_d=4.0)
    config = replace(config, params=params, poles=(-8.0, -8.0), horizon=20.0)
    return cmd_compare(config)


if __name__ == "__main__":
    sys.exit(main())
