"""Data model for dated multi-layer interbank liability networks.

A liability matrix stores directed amounts owed between banks: entry
``(debtor, creditor) -> amount`` means the debtor owes the creditor that
amount.  A snapshot bundles one trading date's liability matrices, one per
market layer, with the per-bank balance-sheet records valid on that date.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Iterable, Mapping, Sequence

import numpy as np

BankId = str
LayerId = str

# Canonical market layers: unsecured deposits and loans, FX-settlement
# exposures, securities holdings, and derivatives.  Arbitrary extra labels
# are accepted everywhere; this tuple only fixes a reporting order.
CANONICAL_LAYERS: tuple[LayerId, ...] = ("dl", "fx", "secu", "deri")


def layer_sort_key(layer: LayerId) -> tuple[int, str]:
    """Sort canonical layers first, in canonical order, then the rest."""
    try:
        return (CANONICAL_LAYERS.index(layer), layer)
    except ValueError:
        return (len(CANONICAL_LAYERS), layer)


@dataclass(frozen=True)
class Violation:
    """One validation finding; ``where`` pins the offending location."""

    kind: str
    where: str


@dataclass(frozen=True)
class BankRecord:
    """Balance-sheet data for one bank on one date.

    ``total_assets`` holds the bank's assets outside the interbank network
    and is only needed for the economic-value mode that prices losses on
    the whole balance sheet.  ``default_probability`` and ``lgd`` are
    optional defaults used when no probability input is supplied.
    """

    bank: BankId
    capital: float
    total_assets: float | None = None
    default_probability: float | None = None
    lgd: float | None = None


class LiabilityMatrix:
    """Sparse directed liability matrix keyed by (debtor, creditor)."""

    __slots__ = ("entries",)

    def __init__(self, entries: Mapping[tuple[BankId, BankId], float] | None = None):
        self.entries: dict[tuple[BankId, BankId], float] = dict(entries or {})

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, LiabilityMatrix) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"LiabilityMatrix({len(self.entries)} entries)"

    def amount(self, debtor: BankId, creditor: BankId) -> float:
        """Amount debtor owes creditor; 0.0 for absent entries."""
        return self.entries.get((debtor, creditor), 0.0)

    def edges(self) -> set[tuple[BankId, BankId]]:
        return set(self.entries)

    def banks(self) -> set[BankId]:
        out: set[BankId] = set()
        for debtor, creditor in self.entries:
            out.add(debtor)
            out.add(creditor)
        return out

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def with_exposure(self, debtor: BankId, creditor: BankId, amount: float) -> "LiabilityMatrix":
        """New matrix with ``amount`` added onto (debtor, creditor)."""
        new = dict(self.entries)
        new[(debtor, creditor)] = new.get((debtor, creditor), 0.0) + amount
        return LiabilityMatrix(new)

    def without_exposure(self, debtor: BankId, creditor: BankId, amount: float | None = None) -> "LiabilityMatrix":
        """New matrix with ``amount`` (default: all) removed from the entry.

        Entries reduced to (numerically) nothing are dropped rather than
        stored as zeros.
        """
        key = (debtor, creditor)
        if key not in self.entries:
            raise KeyError(f"no exposure {debtor}->{creditor}")
        new = dict(self.entries)
        if amount is None or amount >= new[key]:
            del new[key]
        else:
            remaining = new[key] - amount
            if remaining <= 0.0 or math.isclose(remaining, 0.0, abs_tol=1e-12):
                del new[key]
            else:
                new[key] = remaining
        return LiabilityMatrix(new)

    def in_weights(self, order: Sequence[BankId]) -> dict[BankId, float]:
        """Per-bank interbank assets: column sums over ``order``."""
        out = {b: 0.0 for b in order}
        for (_, creditor), amount in self.entries.items():
            if creditor in out:
                out[creditor] += amount
        return out

    def to_dense(self, order: Sequence[BankId]) -> np.ndarray:
        """Dense array with rows = debtors, columns = creditors."""
        index = {b: k for k, b in enumerate(order)}
        dense = np.zeros((len(order), len(order)))
        for (debtor, creditor), amount in self.entries.items():
            dense[index[debtor], index[creditor]] = amount
        return dense

    def violations(self, where_prefix: str = "") -> list[Violation]:
        out: list[Violation] = []
        for (debtor, creditor), amount in self.entries.items():
            where = f"{where_prefix}{debtor}->{creditor}"
            if not debtor or not creditor:
                out.append(Violation("empty-bank-id", where))
            if debtor == creditor:
                out.append(Violation("self-entry", where))
            if not math.isfinite(amount):
                out.append(Violation("non-finite-amount", where))
            elif amount <= 0.0:
                out.append(Violation("non-positive-amount", where))
        return out


@dataclass
class MultiLayerSnapshot:
    """One date's liability matrices per layer plus bank records.

    Treat instances as immutable after construction; derived quantities
    (the combined network) are cached on first use.
    """

    date: Date
    layers: dict[LayerId, LiabilityMatrix]
    banks: dict[BankId, BankRecord]
    _combined: LiabilityMatrix | None = field(default=None, init=False, repr=False, compare=False)

    def bank_order(self) -> list[BankId]:
        return sorted(self.banks)

    def layer_order(self) -> list[LayerId]:
        return sorted(self.layers, key=layer_sort_key)

    def combined(self) -> LiabilityMatrix:
        if self._combined is None:
            self._combined = combine_layers(self.layers.values())
        return self._combined


def combine_layers(layers: Iterable[LiabilityMatrix]) -> LiabilityMatrix:
    """Entrywise sum of the given matrices; absent entries count as zero."""
    summed: dict[tuple[BankId, BankId], float] = {}
    for matrix in layers:
        for key, amount in matrix.entries.items():
            summed[key] = summed.get(key, 0.0) + amount
    return LiabilityMatrix(summed)


def interbank_assets(m: LiabilityMatrix, bank: BankId, known: Iterable[BankId] | None = None) -> float:
    """Total owed to ``bank`` by all debtors (its interbank assets)."""
    universe = set(known) if known is not None else m.banks()
    if bank not in universe:
        raise KeyError(f"unknown bank {bank!r}")
    return float(sum(amount for (_, creditor), amount in m.entries.items() if creditor == bank))


def total_economic_value(m: LiabilityMatrix) -> float:
    """Total interbank value in the matrix (sum of all entries)."""
    return m.total()


def validate(snapshot: MultiLayerSnapshot) -> list[Violation]:
    """Check a snapshot; returns all violations, empty iff valid."""
    out: list[Violation] = []
    for layer in sorted(snapshot.layers, key=layer_sort_key):
        if not layer:
            out.append(Violation("empty-layer-label", f"{snapshot.date}"))
        prefix = f"{snapshot.date}/{layer}/"
        matrix = snapshot.layers[layer]
        out.extend(matrix.violations(prefix))
        for bank in sorted(matrix.banks()):
            if bank not in snapshot.banks:
                out.append(Violation("missing-bank-record", f"{prefix}{bank}"))
    for bank in sorted(snapshot.banks):
        record = snapshot.banks[bank]
        where = f"{snapshot.date}/{bank}"
        if not bank:
            out.append(Violation("empty-bank-id", where))
        if not math.isfinite(record.capital) or record.capital < 0.0:
            out.append(Violation("bad-capital", where))
        if record.total_assets is not None and (
            not math.isfinite(record.total_assets) or record.total_assets < 0.0
        ):
            out.append(Violation("bad-total-assets", where))
        if record.default_probability is not None and not 0.0 <= record.default_probability <= 1.0:
            out.append(Violation("bad-probability", where))
        if record.lgd is not None and not 0.0 <= record.lgd <= 1.0:
            out.append(Violation("bad-lgd", where))
    return out
