"""Synthetic multiplex generation and CSV input/output.

File formats (CSV, comma-separated, header row, ISO-8601 dates, UTF-8):

* exposures: ``date,layer,debtor,creditor,amount``; duplicate
  (date, layer, debtor, creditor) rows sum.
* capitals: ``date,bank,capital[,total_assets]``; sparse in time, records
  are forward-filled onto snapshot dates (most recent record on or before
  the date wins).
* probabilities: ``date,bank,pd`` or ``date,bank,spread``; a file may
  carry both columns but each row must fill exactly one.  Bank ``*``
  broadcasts to every bank; specific rows override the broadcast.
  Spreads convert via the constant-hazard convention.  Forward-filled
  like capitals.

All parse errors name the file and line they came from.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .debtrank import RiskProfile
from .exposure_model import (
    BankId,
    BankRecord,
    LayerId,
    LiabilityMatrix,
    MultiLayerSnapshot,
    layer_sort_key,
    validate,
)
from .network_stats import BandSummary, EmpiricalCdf, LayerPairStats, PowerLawFit
from .systemic_loss import (
    CONSTANT_HAZARD,
    DEFAULT_RECOVERY,
    DIRECT,
    FROM_SPREAD,
    DefaultProbabilities,
    LossReport,
    spread_to_pd,
)


class DataError(ValueError):
    """Malformed or inconsistent input data; the message names the source."""


# ---------------------------------------------------------------------------
# synthetic generator
# ---------------------------------------------------------------------------

# Empirically motivated per-layer directed densities: unsecured deposits
# and loans, FX settlement, securities, derivatives.
DEFAULT_DENSITIES: dict[LayerId, float] = {"dl": 0.076, "fx": 0.08, "secu": 0.07, "deri": 0.098}


@dataclass(frozen=True)
class Lognormal:
    mu: float
    sigma: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.lognormal(self.mu, self.sigma, n)


@dataclass(frozen=True)
class Pareto:
    """Continuous power law with density exponent ``alpha`` above ``xmin``."""

    alpha: float
    xmin: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.xmin * (1.0 - rng.random(n)) ** (-1.0 / (self.alpha - 1.0))


@dataclass(frozen=True)
class GeneratorConfig:
    """Recipe for a synthetic dated multiplex.

    ``participation_rho`` in [0, 1] correlates which bank pairs trade
    across layers: 0 draws each layer's edge set independently, 1 makes
    layers maximally nested.  Exposure and capital scales are calibrated
    so single-default capital impacts spread over (0, 1) rather than
    saturating.  All amounts land on the cent grid.
    """

    bank_count: int = 30
    densities: Mapping[LayerId, float] = field(default_factory=lambda: dict(DEFAULT_DENSITIES))
    exposure_law: Lognormal | Pareto = Lognormal(mu=math.log(50.0), sigma=1.2)
    capital_law: Lognormal | Pareto = Lognormal(mu=math.log(400.0), sigma=0.8)
    participation_rho: float = 0.25
    external_assets_factor: float = 8.0
    n_days: int = 1
    start_date: Date = Date(2013, 9, 30)
    seed: int = 0


def _bank_ids(count: int) -> list[BankId]:
    width = max(2, len(str(count - 1)))
    return [f"B{k:0{width}d}" for k in range(count)]


def _cents(arr: np.ndarray) -> np.ndarray:
    return np.maximum(0.01, np.round(arr, 2))


def generate_multiplex(cfg: GeneratorConfig) -> list[MultiLayerSnapshot]:
    """Generate ``cfg.n_days`` consecutive snapshots, deterministically.

    Every layer gets exactly round(density * b * (b - 1)) directed edges;
    an edge count of zero for a positive target density is rejected as
    infeasible for the given bank count.
    """
    b = cfg.bank_count
    if b < 2:
        raise ValueError(f"bank_count must be at least 2, got {b}")
    if not 0.0 <= cfg.participation_rho <= 1.0:
        raise ValueError(f"participation_rho must lie in [0, 1], got {cfg.participation_rho}")
    if cfg.n_days < 1:
        raise ValueError(f"n_days must be at least 1, got {cfg.n_days}")
    banks = _bank_ids(b)
    pairs = [(i, j) for i in range(b) for j in range(b) if i != j]
    n_pairs = len(pairs)
    layer_names = sorted(cfg.densities)
    targets: dict[LayerId, int] = {}
    for layer in layer_names:
        dens = cfg.densities[layer]
        if not 0.0 < dens <= 1.0:
            raise ValueError(f"layer {layer!r}: density must lie in (0, 1], got {dens}")
        m_edges = int(round(dens * n_pairs))
        if m_edges < 1:
            raise ValueError(
                f"layer {layer!r}: density {dens} is infeasible for {b} banks (rounds to 0 edges)"
            )
        targets[layer] = m_edges

    cap_rng = np.random.default_rng([cfg.seed, 101])
    capitals = _cents(cfg.capital_law.sample(cap_rng, b))
    external = _cents(capitals * cfg.external_assets_factor * np.exp(0.25 * cap_rng.standard_normal(b)))
    records = {
        banks[k]: BankRecord(bank=banks[k], capital=float(capitals[k]), total_assets=float(external[k]))
        for k in range(b)
    }

    snapshots = []
    for day in range(cfg.n_days):
        master = np.random.default_rng([cfg.seed, 202, day]).random(n_pairs)
        layers: dict[LayerId, LiabilityMatrix] = {}
        for li, layer in enumerate(layer_names):
            rng = np.random.default_rng([cfg.seed, 303, day, li])
            scores = cfg.participation_rho * master + (1.0 - cfg.participation_rho) * rng.random(n_pairs)
            if targets[layer] >= n_pairs:
                chosen = np.arange(n_pairs)
            else:
                chosen = np.argpartition(scores, targets[layer])[: targets[layer]]
            amounts = _cents(cfg.exposure_law.sample(rng, targets[layer]))
            entries = {}
            for pos, pair_idx in enumerate(sorted(chosen.tolist())):
                i, j = pairs[pair_idx]
                entries[(banks[i], banks[j])] = float(amounts[pos])
            layers[layer] = LiabilityMatrix(entries)
        snapshots.append(
            MultiLayerSnapshot(date=cfg.start_date + timedelta(days=day), layers=layers, banks=dict(records))
        )
    return snapshots


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _open_rows(path: str | os.PathLike, required: Sequence[str], optional: Sequence[str] = ()):
    """Yield (line_number, row_dict) from a CSV file, checking the header."""
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}:1: empty file") from None
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}:1: missing columns {missing} in header {header}")
        known = set(required) | set(optional)
        extra = [c for c in header if c not in known]
        if extra:
            raise DataError(f"{path}:1: unknown columns {extra}")
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            yield lineno, dict(zip(header, (cell.strip() for cell in raw)))


def _parse_date(path, lineno: int, text: str) -> Date:
    try:
        return Date.fromisoformat(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: bad date {text!r} (want YYYY-MM-DD)") from None


def _parse_float(path, lineno: int, name: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: bad {name} {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{path}:{lineno}: {name} must be finite, got {text!r}")
    return value


def parse_exposures(
    path: str | os.PathLike,
    date_from: Date | None = None,
    date_to: Date | None = None,
    layers: Iterable[LayerId] | None = None,
) -> dict[Date, dict[LayerId, LiabilityMatrix]]:
    """Read an exposures file into per-date, per-layer matrices."""
    wanted = set(layers) if layers is not None else None
    builders: dict[Date, dict[LayerId, dict]] = {}
    for lineno, row in _open_rows(path, ("date", "layer", "debtor", "creditor", "amount")):
        day = _parse_date(path, lineno, row["date"])
        if (date_from and day < date_from) or (date_to and day > date_to):
            continue
        layer = row["layer"]
        if not layer:
            raise DataError(f"{path}:{lineno}: empty layer label")
        if wanted is not None and layer not in wanted:
            continue
        debtor, creditor = row["debtor"], row["creditor"]
        if not debtor or not creditor:
            raise DataError(f"{path}:{lineno}: empty bank id")
        if debtor == creditor:
            raise DataError(f"{path}:{lineno}: self-liability {debtor!r} -> {creditor!r}")
        amount = _parse_float(path, lineno, "amount", row["amount"])
        if amount <= 0.0:
            raise DataError(f"{path}:{lineno}: amount must be positive, got {amount}")
        entries = builders.setdefault(day, {}).setdefault(layer, {})
        key = (debtor, creditor)
        entries[key] = entries.get(key, 0.0) + amount
    return {
        day: {layer: LiabilityMatrix(entries) for layer, entries in by_layer.items()}
        for day, by_layer in sorted(builders.items())
    }


@dataclass(frozen=True)
class CapitalSeries:
    """Dated capital records per bank, sorted by date, for forward-fill."""

    path: str
    records: dict[BankId, list[tuple[Date, float, float | None]]]

    def effective(self, on_date: Date) -> dict[BankId, BankRecord]:
        """Records in force on ``on_date`` (latest dated at or before it)."""
        out = {}
        for bank, rows in self.records.items():
            best = None
            for day, capital, total_assets in rows:
                if day <= on_date:
                    best = (capital, total_assets)
                else:
                    break
            if best is not None:
                out[bank] = BankRecord(bank=bank, capital=best[0], total_assets=best[1])
        return out


def parse_capitals(path: str | os.PathLike) -> CapitalSeries:
    """Read a capitals file; duplicate (date, bank) rows are rejected."""
    rows: dict[BankId, dict[Date, tuple[float, float | None]]] = {}
    for lineno, row in _open_rows(path, ("date", "bank", "capital"), optional=("total_assets",)):
        day = _parse_date(path, lineno, row["date"])
        bank = row["bank"]
        if not bank:
            raise DataError(f"{path}:{lineno}: empty bank id")
        capital = _parse_float(path, lineno, "capital", row["capital"])
        if capital < 0.0:
            raise DataError(f"{path}:{lineno}: capital must be non-negative, got {capital}")
        total_assets = None
        if row.get("total_assets"):
            total_assets = _parse_float(path, lineno, "total_assets", row["total_assets"])
            if total_assets < 0.0:
                raise DataError(f"{path}:{lineno}: total_assets must be non-negative")
        per_bank = rows.setdefault(bank, {})
        if day in per_bank:
            raise DataError(f"{path}:{lineno}: duplicate capital row for {bank} on {day}")
        per_bank[day] = (capital, total_assets)
    return CapitalSeries(
        path=str(path),
        records={
            bank: [(day,) + per_bank[day] for day in sorted(per_bank)] for bank, per_bank in rows.items()
        },
    )


@dataclass(frozen=True)
class ProbabilitySeries:
    path: str
    by_date: dict[Date, DefaultProbabilities]

    def effective(self, on_date: Date) -> DefaultProbabilities | None:
        best = None
        for day in sorted(self.by_date):
            if day <= on_date:
                best = self.by_date[day]
            else:
                break
        return best


def parse_probabilities(
    path: str | os.PathLike,
    recovery_rate: float = DEFAULT_RECOVERY,
    convention: str = CONSTANT_HAZARD,
    horizon: float = 1.0,
) -> ProbabilitySeries:
    """Read per-bank default probabilities, converting spreads as needed."""
    staged: dict[Date, dict[str, float]] = {}
    broadcast: dict[Date, float] = {}
    spread_seen: dict[Date, bool] = {}
    for lineno, row in _open_rows(path, ("date", "bank"), optional=("pd", "spread")):
        day = _parse_date(path, lineno, row["date"])
        bank = row["bank"]
        if not bank:
            raise DataError(f"{path}:{lineno}: empty bank id")
        pd_text = row.get("pd", "")
        spread_text = row.get("spread", "")
        if pd_text and spread_text:
            raise DataError(f"{path}:{lineno}: give pd or spread, not both")
        if pd_text:
            p = _parse_float(path, lineno, "pd", pd_text)
            if not 0.0 <= p <= 1.0:
                raise DataError(f"{path}:{lineno}: pd must lie in [0, 1], got {p}")
        elif spread_text:
            s = _parse_float(path, lineno, "spread", spread_text)
            if s < 0.0:
                raise DataError(f"{path}:{lineno}: spread must be non-negative, got {s}")
            p = spread_to_pd(s, recovery_rate, horizon, convention)
            spread_seen[day] = True
        else:
            raise DataError(f"{path}:{lineno}: row has neither pd nor spread")
        if bank == "*":
            broadcast[day] = p
        else:
            staged.setdefault(day, {})[bank] = p
    by_date = {}
    for day in sorted(set(staged) | set(broadcast)):
        by_date[day] = DefaultProbabilities(
            values=staged.get(day, {}),
            provenance=FROM_SPREAD if spread_seen.get(day) else DIRECT,
            default=broadcast.get(day),
        )
    return ProbabilitySeries(path=str(path), by_date=by_date)


def assemble_snapshots(
    exposures: dict[Date, dict[LayerId, LiabilityMatrix]],
    capitals: CapitalSeries,
    probabilities: ProbabilitySeries | None = None,
) -> list[tuple[MultiLayerSnapshot, DefaultProbabilities | None]]:
    """Join parsed inputs into dated snapshots.

    A snapshot's bank set is every bank with a capital record in force on
    the date; every bank active in a matrix must have one.
    """
    out = []
    for day in sorted(exposures):
        matrices = exposures[day]
        records = capitals.effective(day)
        active = set()
        for matrix in matrices.values():
            active |= matrix.banks()
        missing = sorted(active - set(records))
        if missing:
            raise DataError(f"{capitals.path}: no capital record on or before {day} for: {missing}")
        snapshot = MultiLayerSnapshot(date=day, layers=dict(matrices), banks=records)
        problems = validate(snapshot)
        if problems:
            head = ", ".join(f"{v.kind}@{v.where}" for v in problems[:5])
            raise DataError(f"{capitals.path}: snapshot {day} failed validation: {head}")
        p = probabilities.effective(day) if probabilities is not None else None
        out.append((snapshot, p))
    return out


def load_bundle(
    exposures_path: str | os.PathLike,
    capitals_path: str | os.PathLike,
    probabilities_path: str | os.PathLike | None = None,
    date_from: Date | None = None,
    date_to: Date | None = None,
    layers: Iterable[LayerId] | None = None,
    recovery_rate: float = DEFAULT_RECOVERY,
) -> list[tuple[MultiLayerSnapshot, DefaultProbabilities | None]]:
    """Parse and join the three input files over an optional date window."""
    exposures = parse_exposures(exposures_path, date_from, date_to, layers)
    if not exposures:
        raise DataError(f"{exposures_path}: no exposures in the selected date range")
    capitals = parse_capitals(capitals_path)
    probabilities = parse_probabilities(probabilities_path, recovery_rate) if probabilities_path else None
    return assemble_snapshots(exposures, capitals, probabilities)


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetBundle:
    exposures: str
    capitals: str
    probabilities: str | None


def write_dataset(
    snapshots: Sequence[MultiLayerSnapshot],
    out_dir: str | os.PathLike,
    spread: float | None = None,
) -> DatasetBundle:
    """Write snapshots as the three-file CSV dataset under ``out_dir``.

    With ``spread`` given, a probabilities file with one broadcast spread
    row per date is included.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    exposures_path = out / "exposures.csv"
    with exposures_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "layer", "debtor", "creditor", "amount"])
        for snapshot in snapshots:
            for layer in snapshot.layer_order():
                matrix = snapshot.layers[layer]
                for (debtor, creditor) in sorted(matrix.entries):
                    writer.writerow(
                        [snapshot.date, layer, debtor, creditor, _fmt(matrix.entries[(debtor, creditor)])]
                    )
    capitals_path = out / "capitals.csv"
    with capitals_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "bank", "capital", "total_assets"])
        first = snapshots[0]
        for bank in first.bank_order():
            record = first.banks[bank]
            writer.writerow([first.date, bank, _fmt(record.capital), _fmt(record.total_assets)])
    probabilities_path = None
    if spread is not None:
        probabilities_path = out / "probabilities.csv"
        with probabilities_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["date", "bank", "spread"])
            for snapshot in snapshots:
                writer.writerow([snapshot.date, "*", _fmt(spread)])
    return DatasetBundle(
        exposures=str(exposures_path),
        capitals=str(capitals_path),
        probabilities=str(probabilities_path) if probabilities_path else None,
    )


def _fmt(value) -> str:
    """One CSV cell; floats carry 12 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if not math.isfinite(value) else f"{float(value):.12g}"
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(f"{value:.12g}") if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Date):
        return value.isoformat()
    return value


def report_rows(report) -> list[dict]:
    """Flatten a report object into serializable rows."""
    if isinstance(report, dict):
        return [report]
    if isinstance(report, (list, tuple)):
        rows = []
        for item in report:
            rows.extend(report_rows(item))
        return rows
    if isinstance(report, LossReport):
        return [
            {
                "date": report.date,
                "el_approx": report.el_approx,
                "el_exact": report.el_exact,
                "approx_error": report.approx_error,
                "el_credit_total": sum(report.el_credit.values()),
                "method": report.method,
            }
        ]
    if isinstance(report, RiskProfile):
        rows = []
        for rank, row in enumerate(report.rows, start=1):
            out = {"date": report.date, "rank": rank, "bank": row.bank, "r_combined": row.r_combined}
            for layer in sorted(row.layer_values, key=layer_sort_key):
                out[f"rhat_{layer}"] = row.layer_values[layer]
            out["margin"] = row.margin
            rows.append(out)
        return rows
    if isinstance(report, LayerPairStats):
        return [
            {
                "pair": f"{report.pair[0]}:{report.pair[1]}",
                "jaccard": report.jaccard,
                "rho_exposure": report.rho_exposure,
                "rho_liability": report.rho_liability,
                "rho_debtrank": report.rho_debtrank,
                "degree_corr_all": report.degree_corr.total,
                "degree_corr_in": report.degree_corr.incoming,
                "degree_corr_out": report.degree_corr.outgoing,
                "weight_corr_all": report.weight_corr.total,
                "weight_corr_in": report.weight_corr.incoming,
                "weight_corr_out": report.weight_corr.outgoing,
            }
        ]
    if isinstance(report, PowerLawFit):
        return [
            {
                "xmin": report.xmin,
                "alpha": report.alpha,
                "ks_statistic": report.ks_statistic,
                "p_value": report.p_value,
                "n_tail": report.n_tail,
                "strategy": report.strategy,
                "replicates": report.replicates,
            }
        ]
    if isinstance(report, BandSummary):
        return [
            {
                "observed": report.observed,
                "null_mean": report.mean,
                "null_std": report.std,
                "lower": report.lower,
                "upper": report.upper,
                "significant": report.significant,
                "replicates": report.replicates,
            }
        ]
    if isinstance(report, EmpiricalCdf):
        return [
            {"value": float(v), "cdf": float(c), "ccdf": float(cc)}
            for v, c, cc in zip(report.values, report.cdf, report.ccdf)
        ]
    raise TypeError(f"cannot serialize report of type {type(report).__name__}")


def write_report(report, fmt: str = "csv", path: str | os.PathLike | None = None) -> None:
    """Write a report as CSV or JSON to ``path`` (stdout when None).

    Numbers are emitted with 12 significant digits, so written values
    parse back within 1e-9 relative.  CSV columns are the union of row
    keys in first-seen order; missing and undefined values are blank.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    rows = report_rows(report)
    if fmt == "csv":
        columns: list[str] = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])
        text = buffer.getvalue()
    else:
        payload = [{k: _json_value(v) for k, v in row.items()} for row in rows]
        text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot write: {exc}") from exc
