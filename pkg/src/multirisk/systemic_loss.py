"""Expected systemic loss and marginal exposure pricing.

The exact expected systemic loss prices every possible set of initially
defaulting banks: the probability of the set (independent defaults) times
the economic value destroyed by the cascade it triggers.  The power-set
enumeration is exponential in the bank count and is therefore capped; the
first-order approximation sums single-bank terms only and is cheap at any
size.  Because cascades overlap, the approximation overstates the loss
slightly in realistic regimes (it double counts joint defaults), so the
approximation error is tracked rather than assumed away.

Credit expected loss is the classical per-creditor quantity
``sum_j p_j * LGD_j * L[j, creditor]`` with no network propagation; the
marginal operators price one exposure by with-minus-without differences
under each metric.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Mapping

import numpy as np

from . import _kernels
from .debtrank import (
    INTERBANK_ONLY,
    EconomicValueVector,
    economic_value,
    impact_matrix,
    single_seed_debtranks,
)
from .exposure_model import (
    BankId,
    BankRecord,
    LayerId,
    LiabilityMatrix,
    MultiLayerSnapshot,
    total_economic_value,
)

logger = logging.getLogger(__name__)

DIRECT = "direct"
FROM_SPREAD = "from-spread"

CONSTANT_HAZARD = "constant-hazard"
LINEAR = "linear"

DEFAULT_LGD = 0.6
DEFAULT_RECOVERY = 0.4
DEFAULT_EXACT_CAP = 20


@dataclass(frozen=True)
class DefaultProbabilities:
    """Per-bank one-period default probabilities.

    ``default`` is an optional broadcast value used for banks without a
    specific entry.  ``provenance`` records whether the values were given
    directly or converted from market spreads.
    """

    values: dict[BankId, float]
    provenance: str = DIRECT
    default: float | None = None

    def p_for(self, bank: BankId) -> float:
        if bank in self.values:
            return self.values[bank]
        if self.default is not None:
            return self.default
        raise KeyError(f"no default probability for bank {bank!r}")

    def resolve(self, banks) -> dict[BankId, float]:
        return {b: self.p_for(b) for b in banks}


@dataclass(frozen=True)
class ExposureDelta:
    """One additional liability: debtor owes creditor ``amount`` on a layer."""

    layer: LayerId
    debtor: BankId
    creditor: BankId
    amount: float

    def __post_init__(self):
        if self.debtor == self.creditor:
            raise ValueError("exposure delta cannot be a self-liability")
        if not (math.isfinite(self.amount) and self.amount > 0.0):
            raise ValueError(f"exposure amount must be positive, got {self.amount}")


@dataclass(frozen=True)
class LossReport:
    """Systemic and credit expected loss for one date."""

    date: Date
    el_approx: float
    el_exact: float | None
    approx_error: float | None
    el_credit: dict[BankId, float] = field(default_factory=dict)

    @property
    def method(self) -> str:
        return "exact" if self.el_exact is not None else "approx"

    @property
    def el_systemic(self) -> float:
        return self.el_approx if self.el_exact is None else self.el_exact


@dataclass(frozen=True)
class ExposureMarginal:
    """Marginal loss contributions of one existing exposure."""

    layer: LayerId
    debtor: BankId
    creditor: BankId
    amount: float
    d_systemic: float
    d_credit: float
    d_clamped: float


def _probability_map(
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None,
) -> dict[BankId, float]:
    if p is None:
        missing = [b for b, rec in banks.items() if rec.default_probability is None]
        if missing:
            raise ValueError(f"no default probabilities given and records lack them for: {sorted(missing)}")
        resolved = {b: float(banks[b].default_probability) for b in banks}
    elif isinstance(p, DefaultProbabilities):
        resolved = p.resolve(banks)
    else:
        resolved = {b: float(p[b]) for b in banks}
    bad = {b: q for b, q in resolved.items() if not 0.0 <= q <= 1.0}
    if bad:
        raise ValueError(f"default probabilities outside [0, 1]: {bad}")
    return resolved


def _lgd_map(
    banks: Mapping[BankId, BankRecord],
    lgd: float | Mapping[BankId, float] | None,
) -> dict[BankId, float]:
    if lgd is None:
        out = {b: (rec.lgd if rec.lgd is not None else DEFAULT_LGD) for b, rec in banks.items()}
    elif isinstance(lgd, (int, float)):
        out = {b: float(lgd) for b in banks}
    else:
        out = {b: float(lgd[b]) for b in banks}
    bad = {b: g for b, g in out.items() if not 0.0 <= g <= 1.0}
    if bad:
        raise ValueError(f"LGD values outside [0, 1]: {bad}")
    return out


def _value_basis(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    value_mode: str,
    loss_rate: float,
) -> tuple[float, EconomicValueVector | None]:
    """Absolute economic scale and normalized weights for a value mode.

    Interbank-only prices destroyed interbank assets, so the scale is the
    matrix total; the external-assets mode adds loss_rate times each
    bank's non-interbank assets to both the weights and the scale.
    """
    if value_mode == INTERBANK_ONLY:
        scale = total_economic_value(m)
        if scale <= 0.0:
            return 0.0, None
        return scale, economic_value(m, banks, value_mode, loss_rate)
    v = economic_value(m, banks, value_mode, loss_rate)
    assets = m.in_weights(sorted(banks))
    scale = float(sum(assets.values())) + loss_rate * float(
        sum(banks[b].total_assets for b in banks)
    )
    return scale, v


def expected_systemic_loss_approx(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None = None,
    psi: float = 1.0,
    value_mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> float:
    """First-order expected systemic loss: V * sum_i p_i * R_i.

    Each bank's single-seed cascade index R_i (including the seed's own
    initial distress) is weighted by its default probability.  A matrix
    with no interbank value prices to 0.
    """
    pmap = _probability_map(banks, p)
    scale, v = _value_basis(m, banks, value_mode, loss_rate)
    if scale <= 0.0:
        return 0.0
    ranks = single_seed_debtranks(m, banks, psi, v)
    return scale * float(sum(pmap[b] * ranks[b] for b in banks))


def expected_systemic_loss_exact(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None = None,
    psi: float = 1.0,
    cap: int = DEFAULT_EXACT_CAP,
    value_mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> float:
    """Exact expected systemic loss over the power set of default events.

    Enumerates all 2^b default sets (Gray-code order, incrementally
    updated probabilities), so ``cap`` bounds the bank count; the empty
    set destroys nothing by definition.
    """
    pmap = _probability_map(banks, p)
    b = len(banks)
    if b > cap:
        raise ValueError(f"bank count {b} exceeds the exact enumeration cap {cap}")
    scale, v = _value_basis(m, banks, value_mode, loss_rate)
    if scale <= 0.0:
        return 0.0
    order = sorted(banks)
    w = impact_matrix(m, banks, order).values
    varr = v.as_array(order)
    parr = np.array([pmap[bk] for bk in order], dtype=np.float64)
    total = float(_kernels.exact_powerset_sum(w, varr, parr, float(psi)))
    if total > 1.0 + 1e-9:
        raise RuntimeError(f"exact loss exceeds total economic value: {total} > 1")
    return scale * min(1.0, total)


def approx_error_report(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None = None,
    psi: float = 1.0,
    cap: int = DEFAULT_EXACT_CAP,
) -> float:
    """Relative approximation error (approx - exact) / exact.

    The approximation normally overshoots; an undershoot is logged as a
    finding rather than raised.  Both quantities zero means zero error;
    exact zero with a positive approximation has no relative error.
    """
    exact = expected_systemic_loss_exact(m, banks, p, psi, cap)
    approx = expected_systemic_loss_approx(m, banks, p, psi)
    if exact == 0.0:
        if approx == 0.0:
            return 0.0
        raise ValueError("relative error undefined: exact loss is zero with non-zero approximation")
    if approx < exact:
        logger.warning(
            "approximation undershoots the exact loss: approx=%.12g exact=%.12g", approx, exact
        )
    return (approx - exact) / exact


def credit_expected_loss(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None = None,
    lgd: float | Mapping[BankId, float] | None = DEFAULT_LGD,
) -> dict[BankId, float]:
    """Per-creditor credit expected loss, no network propagation.

    EL_credit(i) = sum_j p_j * LGD_j * liability(j -> i).
    """
    pmap = _probability_map(banks, p)
    gmap = _lgd_map(banks, lgd)
    out = {b: 0.0 for b in sorted(banks)}
    for (debtor, creditor), amount in m.entries.items():
        out[creditor] += pmap[debtor] * gmap[debtor] * amount
    return out


def marginal_credit(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None,
    x: ExposureDelta,
    lgd: float | Mapping[BankId, float] | None = DEFAULT_LGD,
) -> float:
    """Credit expected loss added by exposure ``x``.

    Computed as the with-minus-without credit total, which collapses to
    p_debtor * LGD_debtor * amount.
    """
    if x.debtor not in banks or x.creditor not in banks:
        raise KeyError(f"exposure endpoints must be known banks: {x.debtor!r}, {x.creditor!r}")
    before = credit_expected_loss(m, banks, p, lgd)
    after = credit_expected_loss(m.with_exposure(x.debtor, x.creditor, x.amount), banks, p, lgd)
    return sum(after.values()) - sum(before.values())


def marginal_systemic(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None,
    x: ExposureDelta,
    psi: float = 1.0,
    method: str = "approx",
    cap: int = DEFAULT_EXACT_CAP,
    value_mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> float:
    """Systemic expected loss added by exposure ``x``: EL(m + x) - EL(m).

    The default prices with the first-order loss; ``method="exact"`` uses
    the power-set enumeration (bank count capped).  The result may be
    negative: an added liability can reroute cascades.
    """
    if x.debtor not in banks or x.creditor not in banks:
        raise KeyError(f"exposure endpoints must be known banks: {x.debtor!r}, {x.creditor!r}")
    with_x = m.with_exposure(x.debtor, x.creditor, x.amount)
    if method == "approx":
        loss = expected_systemic_loss_approx
        return loss(with_x, banks, p, psi, value_mode, loss_rate) - loss(
            m, banks, p, psi, value_mode, loss_rate
        )
    if method == "exact":
        loss = expected_systemic_loss_exact
        return loss(with_x, banks, p, psi, cap, value_mode, loss_rate) - loss(
            m, banks, p, psi, cap, value_mode, loss_rate
        )
    raise ValueError(f"unknown method {method!r}")


def marginal_systemic_clamped(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord],
    p: DefaultProbabilities | Mapping[BankId, float] | None,
    x: ExposureDelta,
    lgd: float | Mapping[BankId, float] | None = DEFAULT_LGD,
    psi: float = 1.0,
    method: str = "approx",
    cap: int = DEFAULT_EXACT_CAP,
    value_mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> float:
    """Conservative marginal price: max of systemic and credit marginals."""
    return max(
        marginal_systemic(m, banks, p, x, psi, method, cap, value_mode, loss_rate),
        marginal_credit(m, banks, p, x, lgd),
    )


def spread_to_pd(
    spread: float,
    recovery_rate: float = DEFAULT_RECOVERY,
    horizon: float = 1.0,
    convention: str = CONSTANT_HAZARD,
) -> float:
    """Market spread to default probability over ``horizon`` years.

    The default convention treats the spread as a constant hazard rate
    scaled by the loss fraction: p = 1 - exp(-spread * horizon / (1 - R)).
    The "linear" convention uses the first-order version
    p = min(1, spread * horizon / (1 - R)).
    """
    if spread < 0.0 or not math.isfinite(spread):
        raise ValueError(f"spread must be non-negative, got {spread}")
    if horizon < 0.0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    if not 0.0 <= recovery_rate < 1.0:
        raise ValueError(f"recovery rate must lie in [0, 1), got {recovery_rate}")
    scaled = spread * horizon / (1.0 - recovery_rate)
    if convention == CONSTANT_HAZARD:
        return 1.0 - math.exp(-scaled)
    if convention == LINEAR:
        return min(1.0, scaled)
    raise ValueError(f"unknown spread convention {convention!r}")


def loss_report(
    snapshot: MultiLayerSnapshot,
    p: DefaultProbabilities | Mapping[BankId, float] | None = None,
    lgd: float | Mapping[BankId, float] | None = DEFAULT_LGD,
    psi: float = 1.0,
    exact_cap: int = DEFAULT_EXACT_CAP,
    value_mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> LossReport:
    """Price one snapshot: approximate loss always, exact when feasible."""
    combined = snapshot.combined()
    approx = expected_systemic_loss_approx(combined, snapshot.banks, p, psi, value_mode, loss_rate)
    exact = None
    error = None
    if len(snapshot.banks) <= exact_cap:
        exact = expected_systemic_loss_exact(
            combined, snapshot.banks, p, psi, exact_cap, value_mode, loss_rate
        )
        if exact > 0.0:
            error = (approx - exact) / exact
            if approx < exact:
                logger.warning(
                    "%s: approximation undershoots the exact loss (%.12g < %.12g)",
                    snapshot.date,
                    approx,
                    exact,
                )
        elif approx == 0.0:
            error = 0.0
    credit = credit_expected_loss(combined, snapshot.banks, p, lgd)
    return LossReport(date=snapshot.date, el_approx=approx, el_exact=exact, approx_error=error, el_credit=credit)


def marginal_report(
    snapshot: MultiLayerSnapshot,
    p: DefaultProbabilities | Mapping[BankId, float] | None = None,
    lgd: float | Mapping[BankId, float] | None = DEFAULT_LGD,
    psi: float = 1.0,
    value_mode: str = INTERBANK_ONLY,
    loss_rate: float = 0.6,
) -> list[ExposureMarginal]:
    """Marginal systemic and credit contribution of every booked exposure.

    Each exposure is priced with-minus-without against the full combined
    network: the full network's loss is computed once, then each
    exposure's amount is removed from the combined matrix in turn.  The
    credit side uses its closed form p * LGD * amount.
    """
    combined = snapshot.combined()
    pmap = _probability_map(snapshot.banks, p)
    gmap = _lgd_map(snapshot.banks, lgd)
    el_full = expected_systemic_loss_approx(combined, snapshot.banks, pmap, psi, value_mode, loss_rate)
    rows = []
    for layer in snapshot.layer_order():
        matrix = snapshot.layers[layer]
        for (debtor, creditor) in sorted(matrix.entries):
            amount = matrix.entries[(debtor, creditor)]
            base = combined.without_exposure(debtor, creditor, amount)
            d_syst = el_full - expected_systemic_loss_approx(
                base, snapshot.banks, pmap, psi, value_mode, loss_rate
            )
            d_cred = pmap[debtor] * gmap[debtor] * amount
            rows.append(
                ExposureMarginal(
                    layer=layer,
                    debtor=debtor,
                    creditor=creditor,
                    amount=amount,
                    d_systemic=d_syst,
                    d_credit=d_cred,
                    d_clamped=max(d_syst, d_cred),
                )
            )
    return rows
