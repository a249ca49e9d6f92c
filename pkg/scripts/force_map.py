"""Isotropic force map over the pantograph plane, plus cue-centre summary.

    python scripts/force_map.py --out force_map.csv --resolution 200
"""

import argparse
import math

import numpy as np

from pantoguide import kinematics as kin


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="force_map.csv")
    ap.add_argument("--resolution", type=int, default=100)
    ap.add_argument("--half-width-mm", type=float, default=30.0)
    ap.add_argument("--radius-mm", type=float, default=3.0, help="cue region radius")
    args = ap.parse_args()

    cfg = kin.PantographConfig()
    w = args.half_width_mm
    fmap = kin.force_map(cfg, args.resolution, (-w, w, -w, w))
    fmap.to_csv(args.out)
    f = np.where(fmap.reachable, fmap.force, np.nan)
    print(f"wrote {args.out}: {fmap.reachable.sum()} of {f.size} grid points reachable")
    print(f"median force over reachable grid {np.nanmedian(f):.2f} N")

    for clearance in (0.0, kin.REACH_CLEARANCE):
        c = kin.workspace_center(cfg, args.radius_mm, clearance)
        worst, _ = kin.region_force(cfg, c, args.radius_mm)
        ring = [
            kin.isotropic_force(cfg, kin.PlanarPoint(c.u + args.radius_mm * math.cos(a), c.v + args.radius_mm * math.sin(a)))
            if kin.disc_clearance(cfg, kin.PlanarPoint(c.u + args.radius_mm * math.cos(a), c.v + args.radius_mm * math.sin(a)), 0.0) > 0
            else 0.0
            for a in np.linspace(0, 2 * math.pi, 360, endpoint=False)
        ]
        print(
            f"clearance {clearance:.1f} mm: centre ({c.u:.3f}, {c.v:.3f}) mm, "
            f"force at centre {kin.isotropic_force(cfg, c):.2f} N, worst over disc {worst:.2f} N, "
            f"min over 360-point rim {min(ring):.2f} N"
        )


if __name__ == "__main__":
    main()
