#!/usr/bin/env python3
"""Moment identity sweep: LHS vs M + E for g = Delta across weights and twists."""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rsmoment.modforms import eigenforms, newform_from_eigenform
from rsmoment.moments import CSV_HEADER, moment_report, report_csv_row


def main():
    g = newform_from_eigenform(eigenforms(12, 40000)[0])
    print(CSV_HEADER)
    for p in (1, 2, 3, 5):
        for k in range(14, 42, 2):
            t0 = time.perf_counter()
            rep = moment_report(g, p, k)
            print(report_csv_row(rep) + f"  # {time.perf_counter()-t0:.1f}s")
            assert abs(rep.identity_residual) <= rep.cert_total, (k, p)


if __name__ == "__main__":
    main()
