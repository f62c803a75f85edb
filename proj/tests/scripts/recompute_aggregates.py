#!/usr/bin/env python3
"""Recompute aggregates.csv from records.csv, nulls.csv and run.json.

Usage: recompute_aggregates.py <sweep-output-dir>
Exits nonzero on any cell or column that differs by more than 1e-9.
"""

import csv
import json
import math
import statistics
import sys
from collections import OrderedDict
from pathlib import Path

TOL = 1e-9
LOWER_IS_DETECTED = {"tree-ring"}


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def opt_mean(values):
    return statistics.fmean(values) if values else None


def sample_sd(values):
    return statistics.stdev(values) if len(values) > 1 else 0.0


def tpr(nulls, positives, lower_is_detected, q):
    # Threshold: the lowest null value (direction-adjusted) with at most
    # floor(q N) nulls strictly beyond it.
    sign = -1.0 if lower_is_detected else 1.0
    adjusted = [sign * v for v in nulls]
    allowed = math.floor(q * len(adjusted))
    tau = min(t for t in adjusted if sum(1 for v in adjusted if v > t) <= allowed)
    hits = sum(1 for v in positives if sign * v > tau)
    return hits / len(positives), len(nulls) < math.ceil(1.0 / q)


def main():
    out = Path(sys.argv[1])
    records = read_rows(out / "records.csv")
    aggregates = read_rows(out / "aggregates.csv")
    q = json.loads((out / "run.json").read_text())["config"]["fpr"]
    nulls = {}
    for row in read_rows(out / "nulls.csv"):
        nulls.setdefault(row["scheme"], []).append(float(row["stat"]))

    cells = OrderedDict()
    for r in records:
        key = (r["scheme"], r["family"], r["variant"], float(r["strength"]))
        cells.setdefault(key, []).append(r)

    failures = []

    def check(key, column, expected, actual):
        if expected is None or actual == "":
            if not (expected is None and actual == ""):
                failures.append(f"{key} {column}: expected {expected!r}, found {actual!r}")
            return
        if not math.isclose(float(actual), expected, rel_tol=TOL, abs_tol=TOL):
            failures.append(f"{key} {column}: expected {expected!r}, found {actual}")

    if len(aggregates) != len(cells):
        failures.append(f"{len(aggregates)} aggregate rows for {len(cells)} record cells")

    for agg in aggregates:
        key = (agg["scheme"], agg["family"], agg["variant"], float(agg["strength"]))
        rows = cells.get(key)
        if rows is None:
            failures.append(f"{key}: no records")
            continue
        col = lambda name: [float(r[name]) for r in rows if r[name] != ""]
        if int(agg["n"]) != len(rows):
            failures.append(f"{key} n: expected {len(rows)}, found {agg['n']}")
        for name, source in (("psnr", "psnr_db"), ("ssim", "ssim"), ("stat", "stat")):
            check(key, name + "_mean", statistics.fmean(col(source)), agg[name + "_mean"])
            check(key, name + "_std", sample_sd(col(source)), agg[name + "_std"])
        check(key, "p_value_mean", opt_mean(col("p_value")), agg["p_value_mean"])
        detected = sum(1 for r in rows if r["detected"] == "1") / len(rows)
        check(key, "detected_rate", detected, agg["detected_rate"])
        rate, warn = tpr(nulls[key[0]], col("stat"), key[0] in LOWER_IS_DETECTED, q)
        check(key, "tpr", rate, agg["tpr"])
        if agg["tpr_warning"] != ("1" if warn else "0"):
            failures.append(f"{key} tpr_warning: found {agg['tpr_warning']}")
        for name, source in (("blipa_mean", "blipa"), ("vlma_mean", "vlma"),
                             ("triplet_sim_mean", "triplet_sim"), ("mask_area_mean", "mask_area")):
            check(key, name, opt_mean(col(source)), agg[name])

    for f in failures:
        print("MISMATCH", f)
    print(f"{len(aggregates)} aggregate rows checked against {len(records)} records: "
          f"{'OK' if not failures else str(len(failures)) + ' mismatches'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
