#!/usr/bin/env python3
"""Convert the Braatz Tennessee Eastman .dat files into the CSV layout xfdd reads.

Input directory holds d00.dat .. d21.dat (training) and d00_te.dat .. d21_te.dat
(testing). d00.dat is stored transposed (52 rows x 500 samples); every other
file is samples x 52. Fault 21 is not in the catalog and is skipped.

Output: train.csv and test.csv with columns XMEAS(1)..XMEAS(41),
XMV(1)..XMV(11), run, fault. Training runs use the fault id as run id; test
runs use 100 + fault id. Every row of a faulty file carries its fault id; the
detection config relabels test rows before the onset as normal.
"""

import argparse
import csv
import pathlib
import sys

N_VARIABLES = 52
FAULTS = range(0, 21)
HEADER = [f"XMEAS({i})" for i in range(1, 42)] + [f"XMV({i})" for i in range(1, 12)] + ["run", "fault"]


def read_dat(path, transposed=False):
    rows = [[float(v) for v in line.split()] for line in path.read_text().splitlines() if line.strip()]
    if transposed:
        rows = [list(col) for col in zip(*rows)]
    for i, row in enumerate(rows):
        if len(row) != N_VARIABLES:
            sys.exit(f"{path}: row {i + 1} has {len(row)} values, expected {N_VARIABLES}")
    return rows


def write(out_path, runs):
    with out_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for run_id, fault, rows in runs:
            for row in rows:
                w.writerow([repr(v) for v in row] + [run_id, fault])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", type=pathlib.Path, help="directory with the .dat files")
    ap.add_argument("out", type=pathlib.Path, help="output directory")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    train, test = [], []
    for f in FAULTS:
        train.append((f, f, read_dat(args.src / f"d{f:02d}.dat", transposed=(f == 0))))
        test.append((100 + f, f, read_dat(args.src / f"d{f:02d}_te.dat")))
    write(args.out / "train.csv", train)
    write(args.out / "test.csv", test)
    print(f"wrote {sum(len(r) for *_, r in train)} training and {sum(len(r) for *_, r in test)} test rows")


if __name__ == "__main__":
    main()
