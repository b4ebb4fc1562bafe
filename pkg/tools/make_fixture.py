"""Regenerate the synthetic 17-bank fixture shipped in ``src/adoptnet/data``.

The banks, exposures and CEO attributes are invented. Only the structure is
chosen on purpose: five day-0 adopters form a densely exposed core, six
early adopters (days 1-100) attach to that core, and six late adopters
(after day 100) sit on the periphery, so mean amplification falls from one
group to the next.

Run ``python tools/make_fixture.py`` and commit the two CSV files.
"""
import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "adoptnet" / "data"

DAYS = [0] * 5 + [30, 52, 66, 81, 89, 95] + [120, 141, 158, 176, 194, 305]
REGION = (
    ["north_america", "europe", "asia_pacific", "europe", "north_america"]
    + ["europe", "asia_pacific", "north_america", "europe", "asia_pacific", "north_america"]
    + ["asia_pacific", "europe", "north_america", "asia_pacific", "europe", "asia_pacific"]
)
CENTERS = {
    "north_america": (40.7, -74.0),
    "europe": (51.5, -0.1),
    "asia_pacific": (35.7, 139.7),
}


def main(seed=20240611):
    rng = np.random.default_rng(seed)
    n = len(DAYS)
    core, early, late = range(0, 5), range(5, 11), range(11, 17)
    edges = {}

    def add(i, j, lo, hi):
        a, b = min(i, j), max(i, j)
        edges[(a, b)] = round(float(rng.uniform(lo, hi)), 2)

    for i in core:
        for j in core:
            if i < j:
                add(i, j, 8.0, 12.0)
    for i in early:
        for j in rng.choice(list(core), size=3, replace=False):
            add(i, int(j), 3.0, 6.0)
    for k, i in enumerate(early):
        add(i, early[(k + 1) % len(early)], 1.0, 2.0)
    for i in late:
        add(i, int(rng.choice(list(early))), 0.8, 1.6)

    ids = [f"bank_{i + 1:02d}" for i in range(n)]
    age = np.round(rng.normal(58.0, 5.0, n)).astype(int)
    age[11:] += 3  # late adopters skew older
    tenure = np.round(rng.uniform(2.0, 12.0, n), 1)
    log_assets = np.round(np.r_[rng.normal(7.6, 0.2, 5), rng.normal(7.2, 0.25, 6), rng.normal(6.9, 0.25, 6)], 3)

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "synthetic_panel.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "adoption_days", "ceo_age", "ceo_tenure", "log_assets", "region", "latitude", "longitude"])
        for i in range(n):
            lat0, lon0 = CENTERS[REGION[i]]
            lat = round(lat0 + rng.normal(0, 4.0), 3)
            lon = round(lon0 + rng.normal(0, 6.0), 3)
            w.writerow([ids[i], DAYS[i], int(age[i]), tenure[i], log_assets[i], REGION[i], lat, lon])
    with open(OUT / "synthetic_exposures.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "target", "exposure"])
        for (i, j), v in sorted(edges.items()):
            w.writerow([ids[i], ids[j], v])


if __name__ == "__main__":
    main()
