#!/usr/bin/env python3
"""Write newform coefficient files for the fixed form g (Delta by default)."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rsmoment.modforms import eigenforms, newform_from_eigenform, write_newform


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--weight", type=int, default=12)
    ap.add_argument("--index", type=int, default=0)
    ap.add_argument("--count", type=int, default=10000)
    ap.add_argument("--out", default="delta.nf")
    args = ap.parse_args()
    rec = newform_from_eigenform(eigenforms(args.weight, args.count)[args.index])
    write_newform(rec, args.out)
    print(f"wrote {args.out}: weight {rec.weight}, {rec.length} coefficients")


if __name__ == "__main__":
    main()
