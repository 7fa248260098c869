"""Log Bayes' capacity of VMF and Gaussian noise over their parameter ranges.

    python scripts/capacity_curves.py [--p 13700] [--radius 1] [--form theorem]

Prints a long-format CSV (mechanism, parameter, log_capacity) for plotting.
"""

import argparse
import csv
import sys

import numpy as np

from privcap.qif import bayes_capacity_gaussian, bayes_capacity_vmf


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=13700)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--form", default="derivation", choices=("derivation", "theorem"))
    args = ap.parse_args()
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["mechanism", "parameter", "log_capacity"])
    for k in np.linspace(0, 500, 51):
        out.writerow(["vmf", f"{k:g}", f"{bayes_capacity_vmf(args.p, k).log_capacity:.10g}"])
    for s in np.geomspace(0.1, 10, 41):
        c = bayes_capacity_gaussian(args.p, s, args.radius, args.form)
        out.writerow(["gauss", f"{s:.6g}", f"{c.log_capacity:.10g}"])


if __name__ == "__main__":
    main()
