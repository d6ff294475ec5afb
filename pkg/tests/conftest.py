from __future__ import annotations

import numpy as np
import pytest

from multirisk import (
    BankRecord,
    GeneratorConfig,
    LiabilityMatrix,
    MultiLayerSnapshot,
    generate_multiplex,
)
from datetime import date as Date


@pytest.fixture
def two_bank():
    """A owes B 50; both capitalized at 100."""
    matrix = LiabilityMatrix({("A", "B"): 50.0})
    banks = {"A": BankRecord("A", 100.0), "B": BankRecord("B", 100.0)}
    return matrix, banks


@pytest.fixture
def chain():
    """A owes B 50, B owes C 80; all capitalized at 100."""
    matrix = LiabilityMatrix({("A", "B"): 50.0, ("B", "C"): 80.0})
    banks = {b: BankRecord(b, 100.0) for b in "ABC"}
    return matrix, banks


@pytest.fixture(scope="session")
def standard_snapshot():
    """The standard generated 30-bank, 4-layer fixture (seed 7)."""
    return generate_multiplex(GeneratorConfig(bank_count=30, seed=7))[0]


def snapshot_of(matrix: LiabilityMatrix, banks, date=Date(2013, 9, 30), layer="dl") -> MultiLayerSnapshot:
    return MultiLayerSnapshot(date=date, layers={layer: matrix}, banks=dict(banks))


def records_of(capitals, total_assets=None) -> dict[str, BankRecord]:
    return {
        b: BankRecord(b, cap, total_assets=None if total_assets is None else total_assets[b])
        for b, cap in capitals.items()
    }


def mild_multiplex(rng: np.random.Generator, b: int, n_layers: int = 2):
    """Random multi-layer instance in the mild-contagion regime.

    Returns (snapshot, entries_combined, capitals) with the plain-dict view
    for oracle checks.
    """
    import oracles

    layers = {}
    combined: dict[tuple[str, str], float] = {}
    names = capitals = None
    for li in range(n_layers):
        names, entries, caps = oracles.random_instance(rng, b, n_edges=2 * b)
        if capitals is None:
            capitals = caps
        layers[f"L{li}"] = LiabilityMatrix(entries)
        for key, amount in entries.items():
            combined[key] = combined.get(key, 0.0) + amount
    snapshot = MultiLayerSnapshot(
        date=Date(2013, 9, 30), layers=layers, banks=records_of(capitals)
    )
    return snapshot, combined, capitals
