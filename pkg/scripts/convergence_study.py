"""Max-norm error of the discrete Jacobian determinant and curl under refinement.

    python3 scripts/convergence_study.py --amplitudes 0.05 0.1 0.2 --sizes 17 33 65 129
"""
import argparse
import csv
import sys

from planimm.maps import get_map
from planimm.verify import convergence_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--sizes", type=int, nargs="+", default=[17, 33, 65, 129])
    ap.add_argument("--out", help="CSV file (default: stdout)")
    args = ap.parse_args(argv)

    rows = []
    for a in args.amplitudes:
        rows += convergence_table(get_map("sinusoidal", amplitude=a), args.sizes)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
