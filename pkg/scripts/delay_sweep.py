#!/usr/bin/env python3
"""Locate the naive controller's stability boundary on the scalar test
channel dx/dt = u(t-h) with feedback gain -8: classical delay-margin theory
puts it at pi/16 ~ 0.196 s. Prints the sweep table; the predictor should
settle at every delay."""

import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from delaycomp.control import Gain, origin_setpoint
from delaycomp.robot import LtiPlant
from delaycomp.sim import Scenario, sweep_delay


def main():
    plant = LtiPlant(np.array([[0.0]]), np.array([[1.0]]), 0.1)
    base = Scenario(
        plant=plant,
        gain=Gain.for_plant(np.array([[-8.0]]), plant),
        setpoint=origin_setpoint(plant),
        controller="naive",
        x0=np.array([1.0]),
        dt=0.01,
        T=40.0,
    )
    grid = [round(0.05 + 0.01 * i, 2) for i in range(21)]  # 0.05 .. 0.25
    print(f"theoretical margin: pi/16 = {math.pi / 16:.5f} s")
    print(f"{'h [s]':>6}  {'naive':>8}  {'predictor':>10}")
    for h, m_naive, m_pred in sweep_delay(base, grid):
        fmt = lambda m: "settled" if m.settled else ("DIVERGED" if m.diverged else "unsettled")
        print(f"{h:6.2f}  {fmt(m_naive):>8}  {fmt(m_pred):>10}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
