#!/usr/bin/env python3
"""Convert SHD/SSC HDF5 files into the flat CSV layout read by `liflab`.

Usage:
    python3 scripts/shd_to_csv.py shd_train.h5 shd_test.h5 --out data/shd
    python3 scripts/shd_to_csv.py ssc_train.h5 ssc_test.h5 --out data/ssc

Writes one CSV per sample (`unit,time_seconds` per line) under
<out>/train/ and <out>/test/, plus the manifests <out>/train.csv and
<out>/test.csv with lines `relative_path,label`. Then run, for example:

    liflab train --dataset shd-csv --data-dir data/shd
"""

import argparse
import pathlib

import h5py


def convert(h5_path: pathlib.Path, out: pathlib.Path, split: str, limit: int) -> int:
    split_dir = out / split
    split_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    with h5py.File(h5_path, "r") as f:
        times = f["spikes"]["times"]
        units = f["spikes"]["units"]
        labels = f["labels"]
        n = len(labels) if limit <= 0 else min(limit, len(labels))
        for i in range(n):
            rel = f"{split}/{i:06d}.csv"
            with open(out / rel, "w") as sample:
                for u, t in zip(units[i], times[i]):
                    sample.write(f"{int(u)},{float(t):.9g}\n")
            lines.append(f"{rel},{int(labels[i])}\n")
    (out / f"{split}.csv").write_text("".join(lines))
    return len(lines)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("train_h5", type=pathlib.Path)
    ap.add_argument("test_h5", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, required=True)
    ap.add_argument("--limit", type=int, default=0, help="samples per split; 0 converts everything")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for split, path in (("train", args.train_h5), ("test", args.test_h5)):
        n = convert(path, args.out, split, args.limit)
        print(f"{split}: {n} samples -> {args.out / (split + '.csv')}")


if __name__ == "__main__":
    main()
