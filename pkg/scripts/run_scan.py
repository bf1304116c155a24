#!/usr/bin/env python3
"""Asymptotic scan of the twisted first moment against 2 gamma_-1 log k."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rsmoment.modforms import eigenforms, newform_from_eigenform
from rsmoment.moments import asymptotic_scan, scan_to_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--kmin", type=int, default=14)
    ap.add_argument("--kmax", type=int, default=60)
    args = ap.parse_args()
    g = newform_from_eigenform(eigenforms(12, 60000)[0])
    res = asymptotic_scan(g, args.p, range(args.kmin, args.kmax + 1, 2))
    print(scan_to_csv(res), end="")
    print(f"# slope {res.slope:.6f} theoretical {res.slope_theoretical:.6f} "
          f"max residual {res.max_abs_residual_from_fit:.4f}")


if __name__ == "__main__":
    main()
