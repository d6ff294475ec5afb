"""Batch command-line interface over dated CSV inputs.

Subcommands: debtrank, profile, el-syst, marginal, stats, nullmodel, fit,
generate.  Inputs are the exposures/capitals/probabilities CSV files
described in :mod:`multirisk.synth_io`; output is CSV (default) or JSON to
``--out`` or stdout.  Reruns with identical inputs and seed produce
byte-identical output.

Exit status: 0 on success, 1 on malformed or inconsistent input data
(the message names the file and line), 2 on a computation or usage
error, 141 when the output pipe closes early.

``MULTIRISK_THREADS`` caps the number of worker threads used to process
independent dates (0 or unset picks a size automatically); results are
ordered by date regardless.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date as Date

from .debtrank import INTERBANK_ONLY, WITH_EXTERNAL_ASSETS, economic_value, single_seed_debtranks, sr_profile
from .exposure_model import layer_sort_key
from .network_stats import layer_pair_stats, pair_null_bands, powerlaw_fit, exposure_cdf
from .synth_io import (
    DataError,
    GeneratorConfig,
    generate_multiplex,
    load_bundle,
    parse_exposures,
    report_rows,
    write_dataset,
    write_report,
)
from .systemic_loss import loss_report, marginal_report

logger = logging.getLogger(__name__)

VALUE_MODES = {"interbank": INTERBANK_ONLY, "external": WITH_EXTERNAL_ASSETS}


@dataclass
class CommandPlan:
    """A validated invocation: which command, on what, with what knobs."""

    command: str
    exposures: str | None = None
    capitals: str | None = None
    pd_path: str | None = None
    layers: list[str] | None = None
    date_from: Date | None = None
    date_to: Date | None = None
    psi: float = 1.0
    r_loss: float = 0.6
    recovery: float = 0.4
    lgd: float = 0.6
    seed: int = 0
    exact_cap: int = 20
    fmt: str = "csv"
    out: str | None = None
    value_mode: str = INTERBANK_ONLY
    replicates: int | None = None
    xmin: float | None = None
    cdf_out: str | None = None
    banks: int = 30
    days: int = 1
    start_date: Date = Date(2013, 9, 30)
    spread: float | None = 0.012
    rho: float = 0.25


def _unit(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is outside [0, 1]")
    return value


def _recovery(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"recovery must lie in [0, 1), got {value}")
    return value


def _iso_date(text: str) -> Date:
    try:
        return Date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {text!r} (want YYYY-MM-DD)") from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _replicates(text: str) -> int:
    value = int(text)
    if value != 0 and value < 100:
        raise argparse.ArgumentTypeError(f"replicates must be 0 or at least 100, got {value}")
    return value


def _add_io_flags(sp, pd_required=False, capitals=True):
    sp.add_argument("--exposures", required=True, help="exposures CSV (date,layer,debtor,creditor,amount)")
    if capitals:
        sp.add_argument("--capitals", required=True, help="capitals CSV (date,bank,capital[,total_assets])")
    sp.add_argument(
        "--pd",
        dest="pd_path",
        required=pd_required,
        default=None,
        help="probabilities CSV (date,bank,pd|spread); bank '*' broadcasts",
    )
    sp.add_argument("--layers", default=None, help="comma-separated layer filter")
    sp.add_argument("--from", dest="date_from", type=_iso_date, default=None, help="first date, inclusive")
    sp.add_argument("--to", dest="date_to", type=_iso_date, default=None, help="last date, inclusive")


def _add_output_flags(sp):
    sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default=None, help="output path (stdout when omitted)")


def _add_model_flags(sp):
    sp.add_argument("--psi", type=_unit, default=1.0, help="initial distress of seed banks")
    sp.add_argument("--r-loss", dest="r_loss", type=_unit, default=0.6, help="loss rate on external assets")
    sp.add_argument(
        "--value-mode",
        dest="value_mode_name",
        choices=sorted(VALUE_MODES),
        default="interbank",
        help="economic-value weighting (external needs total_assets)",
    )
    sp.add_argument("--recovery", type=_recovery, default=0.4, help="recovery rate for spread conversion")
    sp.add_argument("--lgd", type=_unit, default=0.6, help="loss given default for credit pricing")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--exact-cap", dest="exact_cap", type=_positive_int, default=20,
                    help="largest bank count enumerated exactly")


def parse_args(argv=None) -> CommandPlan:
    parser = argparse.ArgumentParser(
        prog="multirisk",
        description="Systemic risk analytics for dated multi-layer interbank exposure data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("debtrank", "per-bank cascade indices on the combined network"),
        ("profile", "systemic-risk profile with per-layer decomposition"),
        ("el-syst", "expected systemic loss per date"),
        ("marginal", "marginal systemic and credit loss of every exposure"),
        ("stats", "cross-layer similarity statistics with significance"),
        ("nullmodel", "null-model bands for cross-layer statistics"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_io_flags(sp, pd_required=name in ("el-syst", "marginal"))
        _add_model_flags(sp)
        _add_output_flags(sp)
        if name in ("stats", "nullmodel"):
            sp.add_argument("--replicates", type=_replicates, default=200,
                            help="null-model replicates (0 skips significance)")

    sp = sub.add_parser("fit", help="power-law tail fit of exposure sizes per layer")
    sp.add_argument("--exposures", required=True)
    sp.add_argument("--layers", default=None, help="comma-separated layer filter")
    sp.add_argument("--from", dest="date_from", type=_iso_date, default=None)
    sp.add_argument("--to", dest="date_to", type=_iso_date, default=None)
    sp.add_argument("--xmin", type=float, default=None, help="fix the tail cutoff instead of scanning")
    sp.add_argument("--replicates", type=int, default=1000, help="bootstrap replicates (0 skips the p-value)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cdf-out", dest="cdf_out", default=None, help="also write the exposure CDF/CCDF table here")
    _add_output_flags(sp)

    sp = sub.add_parser("generate", help="write a synthetic dataset")
    sp.add_argument("--banks", type=_positive_int, default=30)
    sp.add_argument("--days", type=_positive_int, default=1)
    sp.add_argument("--start-date", dest="start_date", type=_iso_date, default=Date(2013, 9, 30))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rho", type=_unit, default=0.25, help="cross-layer participation correlation")
    sp.add_argument("--spread", type=float, default=0.012,
                    help="broadcast spread for the probabilities file (negative skips the file)")
    sp.add_argument("--out", required=True, help="output directory")

    ns = parser.parse_args(argv)
    plan = CommandPlan(command=ns.command)
    for field_name in vars(ns):
        if field_name in ("command", "value_mode_name"):
            continue
        setattr(plan, field_name, getattr(ns, field_name))
    if getattr(ns, "value_mode_name", None):
        plan.value_mode = VALUE_MODES[ns.value_mode_name]
    if isinstance(plan.layers, str):
        plan.layers = [piece.strip() for piece in plan.layers.split(",") if piece.strip()]
    if plan.date_from and plan.date_to and plan.date_from > plan.date_to:
        parser.error(f"--from {plan.date_from} is after --to {plan.date_to}")
    return plan


def _worker_count() -> int:
    raw = os.environ.get("MULTIRISK_THREADS", "0").strip() or "0"
    try:
        count = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer MULTIRISK_THREADS=%r", raw)
        count = 0
    if count <= 0:
        count = min(8, os.cpu_count() or 1)
    return count


def _map_dates(func, items):
    """Apply ``func`` over per-date work items, in stable date order."""
    workers = min(_worker_count(), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _load(plan: CommandPlan):
    return load_bundle(
        plan.exposures,
        plan.capitals,
        plan.pd_path,
        plan.date_from,
        plan.date_to,
        plan.layers,
        plan.recovery,
    )


def _need_probabilities(snapshot, p, plan):
    if p is None:
        raise DataError(
            f"{plan.pd_path}: no probabilities in force on {snapshot.date}"
        )
    return p


def _run_debtrank(plan: CommandPlan) -> list[dict]:
    bundle = _load(plan)

    def one(item):
        snapshot, _ = item
        combined = snapshot.combined()
        v = economic_value(combined, snapshot.banks, plan.value_mode, plan.r_loss)
        ranks = single_seed_debtranks(combined, snapshot.banks, plan.psi, v)
        rows = []
        for bank in snapshot.bank_order():
            r_incl = ranks[bank]
            rows.append(
                {
                    "date": snapshot.date,
                    "bank": bank,
                    "r_including": r_incl,
                    "r_excluding": max(0.0, r_incl - plan.psi * v.values[bank]),
                }
            )
        return rows

    return [row for rows in _map_dates(one, bundle) for row in rows]


def _run_profile(plan: CommandPlan) -> list[dict]:
    bundle = _load(plan)

    def one(item):
        snapshot, _ = item
        return report_rows(sr_profile(snapshot, plan.psi))

    return [row for rows in _map_dates(one, bundle) for row in rows]


def _run_el_syst(plan: CommandPlan) -> list[dict]:
    bundle = _load(plan)

    def one(item):
        snapshot, p = item
        report = loss_report(
            snapshot,
            _need_probabilities(snapshot, p, plan),
            plan.lgd,
            plan.psi,
            plan.exact_cap,
            plan.value_mode,
            plan.r_loss,
        )
        return report_rows(report)

    return [row for rows in _map_dates(one, bundle) for row in rows]


def _run_marginal(plan: CommandPlan) -> list[dict]:
    bundle = _load(plan)

    def one(item):
        snapshot, p = item
        rows = []
        for entry in marginal_report(
            snapshot,
            _need_probabilities(snapshot, p, plan),
            plan.lgd,
            plan.psi,
            plan.value_mode,
            plan.r_loss,
        ):
            rows.append(
                {
                    "date": snapshot.date,
                    "layer": entry.layer,
                    "debtor": entry.debtor,
                    "creditor": entry.creditor,
                    "amount": entry.amount,
                    "d_el_syst": entry.d_systemic,
                    "d_el_credit": entry.d_credit,
                    "d_el_clamped": entry.d_clamped,
                }
            )
        return rows

    return [row for rows in _map_dates(one, bundle) for row in rows]


def _layer_pairs(snapshot):
    layers = snapshot.layer_order()
    return [(layers[i], layers[j]) for i in range(len(layers)) for j in range(i + 1, len(layers))]


def _run_stats(plan: CommandPlan) -> list[dict]:
    bundle = _load(plan)
    dates = [snapshot.date for snapshot, _ in bundle]

    def one(item):
        snapshot, _ = item
        date_index = dates.index(snapshot.date)
        rows = []
        for pair_index, (a, b) in enumerate(_layer_pairs(snapshot)):
            stats = layer_pair_stats(snapshot, a, b, psi=plan.psi)
            row = {"date": snapshot.date}
            row.update(report_rows(stats)[0])
            if plan.replicates:
                pair_seed = plan.seed + 100_000 * date_index + 1_000 * pair_index
                bands = pair_null_bands(snapshot, a, b, plan.replicates, pair_seed)
                for name in ("jaccard", "rho_exposure", "rho_liability"):
                    row[f"{name}_significant"] = bands[name].significant
            rows.append(row)
        return rows

    return [row for rows in _map_dates(one, bundle) for row in rows]


def _run_nullmodel(plan: CommandPlan) -> list[dict]:
    bundle = _load(plan)
    if not plan.replicates:
        raise ValueError("nullmodel needs --replicates of at least 100")
    dates = [snapshot.date for snapshot, _ in bundle]

    def one(item):
        snapshot, _ = item
        date_index = dates.index(snapshot.date)
        rows = []
        for pair_index, (a, b) in enumerate(_layer_pairs(snapshot)):
            pair_seed = plan.seed + 100_000 * date_index + 1_000 * pair_index
            bands = pair_null_bands(snapshot, a, b, plan.replicates, pair_seed)
            for name in ("jaccard", "rho_exposure", "rho_liability"):
                band = bands[name]
                rows.append(
                    {
                        "date": snapshot.date,
                        "pair": f"{a}:{b}",
                        "statistic": name,
                        "observed": band.observed,
                        "null_mean": band.mean,
                        "null_std": band.std,
                        "lower": band.lower,
                        "upper": band.upper,
                        "significant": band.significant,
                        "replicates": band.replicates,
                    }
                )
        return rows

    return [row for rows in _map_dates(one, bundle) for row in rows]


def _run_fit(plan: CommandPlan) -> list[dict]:
    exposures = parse_exposures(plan.exposures, plan.date_from, plan.date_to, plan.layers)
    if not exposures:
        raise DataError(f"{plan.exposures}: no exposures in the selected date range")
    pooled: dict[str, list[float]] = {}
    for by_layer in exposures.values():
        for layer, matrix in by_layer.items():
            pooled.setdefault(layer, []).extend(matrix.entries.values())
    rows = []
    cdf_rows = []
    for layer in sorted(pooled, key=layer_sort_key):
        samples = pooled[layer]
        try:
            fit = powerlaw_fit(samples, xmin=plan.xmin, bootstrap_replicates=plan.replicates, seed=plan.seed)
        except ValueError as exc:
            logger.warning("layer %s: %s; skipped", layer, exc)
            continue
        row = {"layer": layer, "n": len(samples)}
        row.update(report_rows(fit)[0])
        rows.append(row)
        if plan.cdf_out:
            table = exposure_cdf(samples)
            for value, c, cc in zip(table.values, table.cdf, table.ccdf):
                cdf_rows.append({"layer": layer, "value": float(value), "cdf": float(c), "ccdf": float(cc)})
    if not rows:
        raise ValueError("no layer had enough data to fit")
    if plan.cdf_out:
        write_report(cdf_rows, plan.fmt, plan.cdf_out)
    return rows


def _run_generate(plan: CommandPlan) -> int:
    cfg = GeneratorConfig(
        bank_count=plan.banks,
        participation_rho=plan.rho,
        n_days=plan.days,
        start_date=plan.start_date,
        seed=plan.seed,
    )
    snapshots = generate_multiplex(cfg)
    spread = plan.spread if plan.spread is not None and plan.spread >= 0.0 else None
    bundle = write_dataset(snapshots, plan.out, spread)
    sys.stderr.write(
        f"wrote {bundle.exposures}, {bundle.capitals}"
        + (f", {bundle.probabilities}\n" if bundle.probabilities else "\n")
    )
    return 0


_RUNNERS = {
    "debtrank": _run_debtrank,
    "profile": _run_profile,
    "el-syst": _run_el_syst,
    "marginal": _run_marginal,
    "stats": _run_stats,
    "nullmodel": _run_nullmodel,
    "fit": _run_fit,
}


def run(plan: CommandPlan) -> int:
    """Execute a validated plan; returns the process exit status."""
    if plan.command == "generate":
        return _run_generate(plan)
    rows = _RUNNERS[plan.command](plan)
    write_report(rows, plan.fmt, plan.out)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    plan = parse_args(argv)
    try:
        return run(plan)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, RuntimeError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # downstream closed the pipe (e.g. | head); suppress the flush-at-exit error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 141


if __name__ == "__main__":
    sys.exit(main())
