#!/usr/bin/env python3
"""Regenerate the reference data set from the shipped hBN scenario.

Runs every CLI subcommand against scripts/hbn_scenario.yaml and collects the
CSVs under out/ (no plotting; the CSVs are the deliverable):

    permittivity    dielectric tensor curves across both phonon bands
    bands           hyperbolic band edges and centers
    fieldmap        conical emission intensity of a point dipole
    foci            waveguide focal structure
    resonance       |J + i Gamma| map over (frequency, aspect) + locus overlay
    coupling-sweep  J12, Gamma11 vs radius at the tracked super-resonance
    design-window   spacer feasibility window h* << h <= h_c
    gate            iSWAP fidelity report, trajectory, process matrix
    evolve          free exchange trajectory

Usage: python scripts/reproduce_figure_data.py [--threads N] [--out PREFIX]
"""

import argparse
import subprocess
import sys
from pathlib import Path

SCENARIO = Path(__file__).resolve().parent / "hbn_scenario.yaml"
COMMANDS = ["permittivity", "bands", "fieldmap", "foci", "resonance",
            "coupling-sweep", "design-window", "gate", "evolve"]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", default="out/hbn", help="output prefix")
    args = ap.parse_args()

    rc_total = 0
    for cmd in COMMANDS:
        argv = [sys.executable, "-m", "hyperpol", "--config", str(SCENARIO),
                "--out-prefix", args.out, "--threads", str(args.threads), cmd]
        print(f"== {cmd}")
        rc = subprocess.call(argv)
        if rc != 0:
            print(f"   exited with {rc}")
            rc_total = rc
    print(f"\nCSV outputs under {Path(args.out).parent}/")
    return rc_total


if __name__ == "__main__":
    sys.exit(main())
