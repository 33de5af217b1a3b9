#!/usr/bin/env python3
"""Regenerate the sweep datasets behind the attenuation-ratio contour plot
and the transponder-success curves, plus the break-even summary.

Writes CSV files into --outdir (default ./figure_data) and prints the
headline numbers.  Plotting is left to whatever tool you prefer; the CSVs
are plain (x, p_t, r) and (n, eta, p_t_full) grids.
"""

import argparse
import pathlib

from lossguard import cli


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figure_data")
    args = ap.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    rc = cli.main(["sweep-r", "--out", str(outdir / "ratio_grid.csv")])
    assert rc == 0
    rc = cli.main(
        [
            "sweep-pt",
            "--out",
            str(outdir / "transponder_success.csv"),
            "--n-lo",
            "1",
            "--n-hi",
            "1000",
            "--n-steps",
            "300",
        ]
    )
    assert rc == 0
    rc = cli.main(["threshold", "--out", str(outdir / "threshold.json")])
    assert rc == 0

    print(f"datasets written under {outdir}/")


if __name__ == "__main__":
    main()
