"""Closed-loop tracking error of the 8 cues across loop rate, inertia and amplitude.

    python scripts/tracking_sweep.py
"""

import argparse
from dataclasses import replace

from pantoguide.actuation import LoopConfig, NumericalBlowup, track_trajectory
from pantoguide.cues import DIRECTIONS, CueSpec
from pantoguide.kinematics import KinematicsError, PantographConfig, workspace_center


def worst_error(cfg, loop, amplitude):
    centre = workspace_center(cfg)
    worst, sat = 0.0, 0.0
    for d in DIRECTIONS:
        res = track_trajectory(CueSpec(d, amplitude=amplitude), cfg, loop_cfg=loop, center=centre)
        worst = max(worst, res.max_error)
        sat = max(sat, res.saturation_fraction)
    return worst, sat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rates", type=float, nargs="+", default=[415.0, 830.0, 1660.0])
    ap.add_argument("--inertias", type=float, nargs="+", default=[3e-6, 1e-5, 3e-5, 1e-4])
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[1.0, 3.0])
    args = ap.parse_args()

    cfg = PantographConfig()
    print("rate_hz  inertia_kg_m2  amplitude_mm  max_error_mm  saturation")
    for rate in args.rates:
        for inertia in args.inertias:
            loop = replace(LoopConfig(), control_rate=rate, motor_inertia_reflected=inertia)
            for amp in args.amplitudes:
                try:
                    err, sat = worst_error(cfg, loop, amp)
                    cell = f"{err:12.4f}  {sat:10.3f}"
                except (NumericalBlowup, KinematicsError) as exc:
                    cell = f"{'unstable':>12}  ({type(exc).__name__})"
                print(f"{rate:7.0f}  {inertia:13.0e}  {amp:12.1f}  {cell}")


if __name__ == "__main__":
    main()
