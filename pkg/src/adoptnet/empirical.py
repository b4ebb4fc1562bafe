"""Bank-panel pipeline: amplification, adoption-timing regressions, group
comparison and the cumulative-adoption S-curve.

Inputs are two CSV files. The panel has one row per bank with columns
``id, adoption_days, ceo_age, ceo_tenure, log_assets, region, latitude,
longitude``. The exposure file lists pairwise exposures as
``source, target, exposure`` using the panel ids. Exposures are symmetrized
and scaled so the largest entry is 1; coordinates are min-max scaled to the
unit square.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .amplification import amplification_factors
from .dynamics import ModelParams
from .errors import ConfigError, IngestionError
from .graph import SpatialNetwork, build_operators, parse_kernel, spatial_weights
from .stats import Correlation, RegressionResult, SCurveFit, TTest, fit_scurve, ols, spearman, ttest_two_sample

REGIONS = ("north_america", "europe", "asia_pacific")
PANEL_COLUMNS = ("id", "adoption_days", "ceo_age", "ceo_tenure", "log_assets", "region", "latitude", "longitude")
EXPOSURE_COLUMNS = ("source", "target", "exposure")
GROUPS = ("pre", "early", "late")
EARLY_CUTOFF = 100


@dataclass(frozen=True)
class BankPanel:
    ids: tuple[str, ...]
    adoption_days: np.ndarray
    ceo_age: np.ndarray
    ceo_tenure: np.ndarray
    log_assets: np.ndarray
    region: tuple[str, ...]
    latitude: np.ndarray
    longitude: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    def groups(self) -> np.ndarray:
        """0 for day-0 adopters, 1 for days 1-100, 2 after day 100."""
        d = self.adoption_days
        return np.where(d <= 0, 0, np.where(d <= EARLY_CUTOFF, 1, 2))


def _read_rows(path, required, label):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestionError(f"{label}: cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(enumerate(reader, start=2))  # line numbers, header is line 1


def _number(row, line, col, path):
    raw = row.get(col)
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise IngestionError(f"{path}: line {line}, column {col!r}: non-numeric value {raw!r}") from None
    if not math.isfinite(v):
        raise IngestionError(f"{path}: line {line}, column {col!r}: value must be finite")
    return v


def load_panel(panel_csv) -> BankPanel:
    rows = _read_rows(panel_csv, PANEL_COLUMNS, "panel")
    if not rows:
        raise IngestionError(f"{panel_csv}: no data rows")
    ids, region = [], []
    cols = {c: [] for c in PANEL_COLUMNS if c not in ("id", "region")}
    for line, row in rows:
        bank = (row["id"] or "").strip()
        if not bank:
            raise IngestionError(f"{panel_csv}: line {line}, column 'id': empty id")
        if bank in ids:
            raise IngestionError(f"{panel_csv}: line {line}, column 'id': duplicate id {bank!r}")
        reg = (row["region"] or "").strip().lower()
        if reg not in REGIONS:
            raise IngestionError(
                f"{panel_csv}: line {line}, column 'region': unknown region {row['region']!r} "
                f"(expected one of {', '.join(REGIONS)})"
            )
        ids.append(bank)
        region.append(reg)
        for c in cols:
            cols[c].append(_number(row, line, c, panel_csv))
    days = np.array(cols["adoption_days"])
    if np.any(days < 0):
        line = rows[int(np.argmax(days < 0))][0]
        raise IngestionError(f"{panel_csv}: line {line}, column 'adoption_days': must be >= 0")
    return BankPanel(tuple(ids), days, np.array(cols["ceo_age"]), np.array(cols["ceo_tenure"]),
                     np.array(cols["log_assets"]), tuple(region), np.array(cols["latitude"]),
                     np.array(cols["longitude"]))


def _unit_square(values):
    lo, hi = values.min(), values.max()
    return (values - lo) / (hi - lo) if hi > lo else np.full_like(values, 0.5)


def ingest(panel_csv, exposures_csv, spatial_kernel="knn:4") -> tuple[BankPanel, SpatialNetwork]:
    """Read the panel and exposures and build the spatial network.

    Raises
    ------
    IngestionError
        Missing columns, non-numeric cells, unknown regions or ids, with the
        file, line and column of the first problem.
    """
    panel = load_panel(panel_csv)
    index = {b: i for i, b in enumerate(panel.ids)}
    E = np.zeros((panel.n, panel.n))
    for line, row in _read_rows(exposures_csv, EXPOSURE_COLUMNS, "exposures"):
        ends = []
        for col in ("source", "target"):
            bank = (row[col] or "").strip()
            if bank not in index:
                raise IngestionError(f"{exposures_csv}: line {line}, column {col!r}: unknown bank id {bank!r}")
            ends.append(index[bank])
        i, j = ends
        if i == j:
            raise IngestionError(f"{exposures_csv}: line {line}: self-exposure for {row['source']!r}")
        v = _number(row, line, "exposure", exposures_csv)
        if v < 0:
            raise IngestionError(f"{exposures_csv}: line {line}, column 'exposure': must be >= 0")
        E[i, j] += v
    G = 0.5 * (E + E.T)
    if G.max() <= 0:
        raise IngestionError(f"{exposures_csv}: no positive exposures")
    G /= G.max()
    coords = np.column_stack([_unit_square(panel.longitude), _unit_square(panel.latitude)])
    kernel = parse_kernel(spatial_kernel)
    net = SpatialNetwork(coords, G, spatial_weights(coords, kernel), str(kernel),
                         {"ids": panel.ids})
    return panel, net


def fixture_paths() -> tuple[Path, Path]:
    """Shipped synthetic 17-bank fixture (not real bank data)."""
    base = resources.files("adoptnet") / "data"
    return Path(str(base / "synthetic_panel.csv")), Path(str(base / "synthetic_exposures.csv"))


SPECIFICATIONS = (
    ("ceo_age", "amplification"),
    ("ceo_age", "amplification", "log_assets"),
    ("ceo_age", "amplification", "log_assets", "region"),
    ("ceo_age", "amplification", "log_assets", "region", "ceo_tenure"),
)


def design_matrix(panel: BankPanel, amp: np.ndarray, terms) -> tuple[np.ndarray, list[str]]:
    cols, names = [np.ones(panel.n)], ["const"]
    for term in terms:
        if term == "amplification":
            cols.append(np.asarray(amp, dtype=float))
            names.append(term)
        elif term == "region":
            # north_america is the base category; absent regions get no dummy
            for reg in REGIONS[1:]:
                dummy = np.array([r == reg for r in panel.region], dtype=float)
                if dummy.any():
                    cols.append(dummy)
                    names.append(f"region_{reg}")
        else:
            cols.append(np.asarray(getattr(panel, term), dtype=float))
            names.append(term)
    return np.column_stack(cols), names


@dataclass(frozen=True)
class GroupStats:
    name: str
    count: int
    mean_days: float
    mean_amplification: float
    amplification_share: float


@dataclass(frozen=True)
class GroupReport:
    groups: tuple[GroupStats, ...]
    pre_vs_post: TTest
    post_correlation: Correlation

    def rows(self):
        for g in self.groups:
            yield dict(group=g.name, count=g.count, mean_days=g.mean_days,
                       mean_amplification=g.mean_amplification, amplification_share=g.amplification_share)


def group_report(panel: BankPanel, amp: np.ndarray, pooled: bool = True) -> GroupReport:
    """Compare day-0, early (1-100) and late (101+) adopters.

    Includes a t-test of amplification, day-0 adopters against all later
    adopters, and the Spearman correlation of amplification with adoption
    day among the later adopters.
    """
    amp = np.asarray(amp, dtype=float)
    label = panel.groups()
    total = amp.sum()
    stats = []
    for g, name in enumerate(GROUPS):
        sel = label == g
        cnt = int(sel.sum())
        stats.append(GroupStats(
            name, cnt,
            float(panel.adoption_days[sel].mean()) if cnt else math.nan,
            float(amp[sel].mean()) if cnt else math.nan,
            float(amp[sel].sum() / total),
        ))
    post = label > 0
    test = ttest_two_sample(amp[label == 0], amp[post], pooled=pooled)
    corr = spearman(amp[post], panel.adoption_days[post])
    return GroupReport(tuple(stats), test, corr)


def cumulative_adoption(panel: BankPanel) -> tuple[np.ndarray, np.ndarray]:
    """Distinct adoption days and the fraction of banks adopted by each."""
    days = np.sort(panel.adoption_days)
    uniq = np.unique(days)
    frac = np.searchsorted(days, uniq, side="right") / panel.n
    return uniq, frac


@dataclass(frozen=True)
class PipelineResult:
    amplification: np.ndarray
    regressions: tuple[RegressionResult, ...]
    groups: GroupReport
    scurve: SCurveFit
    correlation: Correlation


def run_pipeline(panel: BankPanel, net: SpatialNetwork, params: ModelParams) -> PipelineResult:
    """Amplification, four nested timing regressions, group report, S-curve.

    Deterministic given the inputs.
    """
    if panel.n != net.n:
        raise ConfigError(f"panel has {panel.n} banks but the network has {net.n} nodes")
    if panel.n < 8:
        raise ConfigError(f"pipeline needs at least 8 banks, got {panel.n}")
    amp = amplification_factors(build_operators(net), params)
    regs = []
    for terms in SPECIFICATIONS:
        X, names = design_matrix(panel, amp, terms)
        regs.append(ols(panel.adoption_days, X, names))
    t, frac = cumulative_adoption(panel)
    curve = fit_scurve(t, frac)
    return PipelineResult(amp, tuple(regs), group_report(panel, amp), curve,
                          spearman(amp, panel.adoption_days))
