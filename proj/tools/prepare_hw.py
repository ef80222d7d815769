#!/usr/bin/env python3
"""Convert the UCI multiple-features handwritten digits data into the
manifest + CSV layout read by `gpmvc`.

Accepts either the original UCI files (mfeat-fou, mfeat-fac, ... whitespace
separated, 200 rows per digit in order) or the CSV export shipped with
mvlearn (mfeat-fou.csv, ... header row, label in the last column).
"""

import argparse
import csv
import json
import os
import sys

DEFAULT_VIEWS = ["fou", "fac", "kar"]


def read_view(src, name):
    csv_path = os.path.join(src, f"mfeat-{name}.csv")
    raw_path = os.path.join(src, f"mfeat-{name}")
    if os.path.exists(csv_path):
        with open(csv_path, newline="") as f:
            rows = list(csv.reader(f))
        body = rows[1:]
        return [r[:-1] for r in body], [int(float(r[-1])) for r in body]
    if os.path.exists(raw_path):
        with open(raw_path) as f:
            rows = [line.split() for line in f if line.strip()]
        return rows, [i // 200 for i in range(len(rows))]
    sys.exit(f"neither {csv_path} nor {raw_path} exists")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", help="directory holding the mfeat-* files")
    ap.add_argument("out", help="output dataset directory")
    ap.add_argument("--views", nargs="+", default=DEFAULT_VIEWS)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    labels = None
    dims = []
    for v, name in enumerate(args.views):
        feats, y = read_view(args.src, name)
        if labels is None:
            labels = y
        elif y != labels:
            sys.exit(f"labels of view {name} disagree with the first view")
        dims.append(len(feats[0]))
        with open(os.path.join(args.out, f"view_{v}.csv"), "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(feats)
    with open(os.path.join(args.out, "labels.csv"), "w") as f:
        f.writelines(f"{y}\n" for y in labels)
    manifest = {
        "name": "hw-" + "-".join(args.views),
        "V": len(args.views),
        "N": len(labels),
        "dims": dims,
        "k": len(set(labels)),
        "views": [f"view_{v}.csv" for v in range(len(args.views))],
        "labels": "labels.csv",
        "view_names": args.views,
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    print(f"wrote {manifest['N']} samples, dims {dims}, k={manifest['k']} to {args.out}")


if __name__ == "__main__":
    main()
