"""Distress-cascade engine for liability networks.

The cascade tracks two variables per bank: a continuous distress level
``h`` in [0, 1] and a discrete status in {undistressed, distressed,
inactive}.  Seeds start distressed at level psi.  Each round, every
distressed debtor j passes ``W[j, i] * h[j]`` to each creditor i, where
``W[j, i] = min(1, L[j, i] / C[i])`` is the fraction of i's capital wiped
out if j defaults outright.  Distress accumulates, capped at 1; a bank
transmits exactly once, the round after it first becomes distressed, then
turns inactive.  The cascade ends when nobody is distressed, after at most
one round per bank.

The headline index for a seed set S is ``R = sum_j h_j(end) * v_j`` with
``v`` the economic-value weights; the variant that excludes the seeds'
initial distress subtracts ``psi * sum_{seed} v_seed``.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .exposure_model import (
    BankId,
    BankRecord,
    LayerId,
    LiabilityMatrix,
    MultiLayerSnapshot,
    total_economic_value,
)

INTERBANK_ONLY = "interbank-only"
WITH_EXTERNAL_ASSETS = "with-external-assets"

UNDISTRESSED = "U"
DISTRESSED = "D"
INACTIVE = "I"


@dataclass(frozen=True)
class ImpactMatrix:
    """Dense capital-impact matrix over a fixed bank order.

    ``values[j, i]`` is the fraction of bank i's capital lost when bank j
    defaults outright: min(1, liability(j -> i) / capital(i)).
    """

    order: tuple[BankId, ...]
    values: np.ndarray

    def value(self, debtor: BankId, creditor: BankId) -> float:
        return float(self.values[self.order.index(debtor), self.order.index(creditor)])


@dataclass(frozen=True)
class EconomicValueVector:
    """Relative economic weight per bank; sums to 1 over the bank order.

    ``mode`` is either "interbank-only" (weights proportional to interbank
    assets) or "with-external-assets" (interbank assets plus ``loss_rate``
    times the bank's non-interbank assets).
    """

    values: dict[BankId, float]
    mode: str
    loss_rate: float | None = None

    def as_array(self, order: Sequence[BankId]) -> np.ndarray:
        return np.array([self.values[b] for b in order])


@dataclass(frozen=True)
class CascadeState:
    """Distress levels and statuses after a given propagation round."""

    step: int
    h: dict[BankId, float]
    status: dict[BankId, str]


@dataclass(frozen=True)
class DebtRankResult:
    seeds: frozenset[BankId]
    psi: float
    r_including_initial: float
    r_excluding_initial: float
    rounds: int
    final_h: dict[BankId, float]


@dataclass(frozen=True)
class ProfileRow:
    bank: BankId
    r_combined: float
    layer_values: dict[LayerId, float]
    margin: float


@dataclass(frozen=True)
class RiskProfile:
    """Banks ranked by combined-network systemic impact, descending."""

    date: Date
    rows: tuple[ProfileRow, ...]


def impact_matrix(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    order: Sequence[BankId] | None = None,
) -> ImpactMatrix:
    """Capital-impact matrix of ``m`` given the banks' capitals.

    Zero capital with a positive incoming liability yields impact 1
    (any default wipes the creditor out); absent liabilities yield 0.
    """
    if order is None:
        order = sorted(banks)
    missing = sorted(m.banks() - set(banks))
    if missing:
        raise KeyError(f"banks in matrix without records: {missing}")
    caps = np.array([banks[b].capital for b in order], dtype=np.float64)
    if (caps < 0).any() or not np.isfinite(caps).all():
        raise ValueError("capitals must be finite and non-negative")
    dense = m.to_dense(order)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = dense / caps[None, :]
    w[dense == 0.0] = 0.0
    w[(dense > 0.0) & (caps[None, :] == 0.0)] = 1.0
    np.minimum(w, 1.0, out=w)
    return ImpactMatrix(order=tuple(order), values=w)


def economic_value(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> EconomicValueVector:
    """Relative economic weights of the banks under ``m``.

    "interbank-only" weighs each bank by its interbank assets (what the
    rest of the network owes it).  "with-external-assets" adds
    ``loss_rate`` times the bank's assets outside the network, pricing the
    part of a defaulted balance sheet lost to the wider economy.
    """
    order = sorted(banks)
    assets = m.in_weights(order)
    if mode == INTERBANK_ONLY:
        raw = {b: assets[b] for b in order}
    elif mode == WITH_EXTERNAL_ASSETS:
        if not 0.0 <= loss_rate <= 1.0:
            raise ValueError(f"loss_rate must lie in [0, 1], got {loss_rate}")
        missing = [b for b in order if banks[b].total_assets is None]
        if missing:
            raise ValueError(f"mode {mode!r} needs total_assets for: {missing}")
        raw = {b: assets[b] + loss_rate * float(banks[b].total_assets) for b in order}
    else:
        raise ValueError(f"unknown economic-value mode {mode!r}")
    denom = sum(raw.values())
    if denom <= 0.0:
        raise ValueError("economic value undefined: all weights are zero")
    values = {b: raw[b] / denom for b in order}
    return EconomicValueVector(values=values, mode=mode, loss_rate=loss_rate if mode == WITH_EXTERNAL_ASSETS else None)


def _dense_inputs(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    v: EconomicValueVector | None,
) -> tuple[list[BankId], np.ndarray, np.ndarray]:
    order = sorted(banks)
    w = impact_matrix(m, banks, order).values
    if v is None:
        v = economic_value(m, banks, INTERBANK_ONLY)
    return order, w, v.as_array(order)


def debtrank(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    seeds: Iterable[BankId],
    psi: float = 1.0,
    v: EconomicValueVector | None = None,
) -> DebtRankResult:
    """Run one cascade from ``seeds`` at initial distress ``psi``."""
    seed_set = frozenset(seeds)
    if not seed_set:
        raise ValueError("seed set must be non-empty")
    unknown = sorted(seed_set - set(banks))
    if unknown:
        raise KeyError(f"unknown seed banks: {unknown}")
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"psi must lie in [0, 1], got {psi}")
    order, w, values = _dense_inputs(m, banks, v)
    index = {b: k for k, b in enumerate(order)}
    h0 = np.zeros(len(order))
    mask = np.zeros(len(order), dtype=np.bool_)
    for s in seed_set:
        h0[index[s]] = psi
        mask[index[s]] = True
    h, rounds = _kernels.cascade(w, h0, mask)
    r_incl = min(1.0, float(h @ values))
    r_excl = max(0.0, r_incl - psi * float(sum(values[index[s]] for s in seed_set)))
    return DebtRankResult(
        seeds=seed_set,
        psi=psi,
        r_including_initial=r_incl,
        r_excluding_initial=r_excl,
        rounds=int(rounds),
        final_h={b: float(h[k]) for k, b in enumerate(order)},
    )


def cascade_states(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    seeds: Iterable[BankId],
    psi: float = 1.0,
) -> list[CascadeState]:
    """Full round-by-round trace of the cascade, for inspection and tests.

    Element 0 is the initial state; the kernels compute exactly this
    sequence without materializing it.
    """
    seed_set = frozenset(seeds)
    if not seed_set:
        raise ValueError("seed set must be non-empty")
    order = sorted(banks)
    w = impact_matrix(m, banks, order).values
    index = {b: k for k, b in enumerate(order)}
    h = {b: psi if b in seed_set else 0.0 for b in order}
    status = {b: DISTRESSED if b in seed_set else UNDISTRESSED for b in order}
    states = [CascadeState(step=0, h=dict(h), status=dict(status))]
    step = 0
    while any(s == DISTRESSED for s in status.values()):
        step += 1
        impact = {b: 0.0 for b in order}
        for j in order:
            if status[j] == DISTRESSED and h[j] > 0.0:
                for i in order:
                    wji = w[index[j], index[i]]
                    if wji > 0.0:
                        impact[i] += wji * h[j]
        new_status = dict(status)
        for j in order:
            if status[j] == DISTRESSED:
                new_status[j] = INACTIVE
        for i in order:
            if impact[i] > 0.0:
                h[i] = min(1.0, h[i] + impact[i])
                if new_status[i] == UNDISTRESSED and status[i] == UNDISTRESSED:
                    new_status[i] = DISTRESSED
        status = new_status
        states.append(CascadeState(step=step, h=dict(h), status=dict(status)))
    return states


def single_seed_debtranks(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    psi: float = 1.0,
    v: EconomicValueVector | None = None,
) -> dict[BankId, float]:
    """R (including initial distress) for every single-bank seed."""
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"psi must lie in [0, 1], got {psi}")
    order, w, values = _dense_inputs(m, banks, v)
    r = _kernels.seed_sweep(w, values, psi)
    return {b: float(r[k]) for k, b in enumerate(order)}


def layer_debtranks(snapshot: MultiLayerSnapshot, layer: LayerId, psi: float = 1.0) -> dict[BankId, float]:
    """Normalized per-bank single-seed index of one layer.

    The layer's cascade runs on the layer's own liabilities and economic
    values (full capitals), then is rescaled by the layer's share of the
    combined network's interbank value, making layers comparable and
    summable against the combined index.  An empty layer contributes 0.
    """
    if layer not in snapshot.layers:
        raise KeyError(f"unknown layer {layer!r}")
    matrix = snapshot.layers[layer]
    v_layer = total_economic_value(matrix)
    if v_layer <= 0.0:
        return {b: 0.0 for b in snapshot.bank_order()}
    v_comb = total_economic_value(snapshot.combined())
    if v_comb <= 0.0:
        raise ValueError("combined network has no interbank value")
    share = v_layer / v_comb
    ranks = single_seed_debtranks(matrix, snapshot.banks, psi)
    return {b: share * r for b, r in ranks.items()}


def normalized_layer_debtrank(
    snapshot: MultiLayerSnapshot, layer: LayerId, bank: BankId, psi: float = 1.0
) -> float:
    if bank not in snapshot.banks:
        raise KeyError(f"unknown bank {bank!r}")
    return layer_debtranks(snapshot, layer, psi)[bank]


def combined_debtranks(snapshot: MultiLayerSnapshot, psi: float = 1.0) -> dict[BankId, float]:
    """Single-seed index of every bank on the combined network."""
    combined = snapshot.combined()
    if total_economic_value(combined) <= 0.0:
        return {b: 0.0 for b in snapshot.bank_order()}
    return single_seed_debtranks(combined, snapshot.banks, psi)


def average_debtrank(snapshot: MultiLayerSnapshot, scope: str = "combined", psi: float = 1.0) -> float:
    """Mean single-seed index over all banks, isolated banks included.

    ``scope`` is "combined" or a layer label; layer scope averages the
    normalized layer values.  A network with no exposures averages to 0.
    """
    b = len(snapshot.banks)
    if b == 0:
        return 0.0
    if scope == "combined":
        ranks = combined_debtranks(snapshot, psi)
    else:
        ranks = layer_debtranks(snapshot, scope, psi)
    return float(sum(ranks.values()) / b)


def sr_profile(snapshot: MultiLayerSnapshot, psi: float = 1.0) -> RiskProfile:
    """Rank banks by combined-network impact, most systemic first.

    Ties break lexicographically by bank id.  Each row carries the
    per-layer normalized indices and the margin between the combined index
    and the sum of the layer indices.
    """
    combined = combined_debtranks(snapshot, psi)
    per_layer = {layer: layer_debtranks(snapshot, layer, psi) for layer in snapshot.layer_order()}
    rows = []
    for bank in sorted(snapshot.banks, key=lambda x: (-combined[x], x)):
        layer_values = {layer: per_layer[layer][bank] for layer in per_layer}
        margin = combined[bank] - sum(layer_values.values())
        rows.append(
            ProfileRow(bank=bank, r_combined=combined[bank], layer_values=layer_values, margin=margin)
        )
    return RiskProfile(date=snapshot.date, rows=tuple(rows))
