"""Multiplex network statistics, null models, and tail fitting.

Layer similarity is measured by link overlap (Jaccard index on edge sets)
and by Pearson correlations of per-bank quantities across layers.  The
null model rewires each liability's debtor endpoint uniformly among the
other banks, exactly preserving every creditor's total interbank assets,
and yields empirical significance bands.  Exposure-size tails are fitted
with a continuous power law by maximum likelihood, the cutoff chosen by a
Kolmogorov-Smirnov scan, and goodness-of-fit assessed by a semi-parametric
bootstrap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .debtrank import single_seed_debtranks
from .exposure_model import (
    BankId,
    BankRecord,
    LayerId,
    LiabilityMatrix,
    MultiLayerSnapshot,
    total_economic_value,
)

SCAN = "scan"
FIXED = "fixed"


@dataclass(frozen=True)
class CorrelationTriple:
    """Cross-layer Pearson correlations of total / incoming / outgoing."""

    total: float
    incoming: float
    outgoing: float


@dataclass(frozen=True)
class LayerPairStats:
    pair: tuple[LayerId, LayerId]
    jaccard: float
    rho_exposure: float
    rho_liability: float
    rho_debtrank: float
    degree_corr: CorrelationTriple
    weight_corr: CorrelationTriple


@dataclass(frozen=True)
class PowerLawFit:
    xmin: float
    alpha: float
    ks_statistic: float
    p_value: float | None
    n_tail: int
    strategy: str
    replicates: int


@dataclass(frozen=True)
class NullModelSample:
    """One rewired matrix plus the in-weight vector it preserves."""

    matrix: LiabilityMatrix
    seed: int
    preserved: dict[BankId, float]


@dataclass(frozen=True)
class BandSummary:
    """Null distribution summary for one statistic."""

    observed: float
    mean: float
    std: float
    lower: float
    upper: float
    significant: bool
    replicates: int


@dataclass(frozen=True)
class EmpiricalCdf:
    values: np.ndarray
    cdf: np.ndarray
    ccdf: np.ndarray


def jaccard(a: LiabilityMatrix | Iterable[tuple[BankId, BankId]], b) -> float:
    """Link overlap |E_a & E_b| / |E_a | E_b|; two empty sets overlap 0."""
    ea = a.edges() if isinstance(a, LiabilityMatrix) else set(a)
    eb = b.edges() if isinstance(b, LiabilityMatrix) else set(b)
    union = ea | eb
    if not union:
        return 0.0
    return len(ea & eb) / len(union)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation; NaN when either side has zero variance."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise ValueError(f"length mismatch: {xa.shape} vs {ya.shape}")
    if xa.size < 2:
        return float("nan")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    r = float(dx @ dy) / (sx * sy)
    return max(-1.0, min(1.0, r))


def density(m: LiabilityMatrix, bank_count: int) -> float:
    """Directed edge density |E| / (b * (b - 1))."""
    if bank_count < 2:
        raise ValueError(f"density needs at least 2 banks, got {bank_count}")
    return len(m) / (bank_count * (bank_count - 1))


def exposure_cdf(samples: Sequence[float]) -> EmpiricalCdf:
    """Empirical CDF and CCDF over the unique sample values, ascending."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        empty = np.empty(0)
        return EmpiricalCdf(values=empty, cdf=empty.copy(), ccdf=empty.copy())
    values, counts = np.unique(arr, return_counts=True)
    cdf = np.cumsum(counts) / arr.size
    return EmpiricalCdf(values=values, cdf=cdf, ccdf=1.0 - cdf)


# ---------------------------------------------------------------------------
# cross-layer statistics
# ---------------------------------------------------------------------------


def _per_bank_vectors(matrix: LiabilityMatrix, order: Sequence[BankId]):
    index = {b: k for k, b in enumerate(order)}
    n = len(order)
    in_w = np.zeros(n)
    out_w = np.zeros(n)
    in_d = np.zeros(n)
    out_d = np.zeros(n)
    for (debtor, creditor), amount in matrix.entries.items():
        if debtor in index:
            out_w[index[debtor]] += amount
            out_d[index[debtor]] += 1
        if creditor in index:
            in_w[index[creditor]] += amount
            in_d[index[creditor]] += 1
    return in_w, out_w, in_d, out_d


def _layer_ranks(matrix: LiabilityMatrix, banks: Mapping[BankId, BankRecord], psi: float) -> dict[BankId, float]:
    if total_economic_value(matrix) <= 0.0:
        return {b: 0.0 for b in banks}
    return single_seed_debtranks(matrix, banks, psi)


def layer_pair_stats(
    snapshot: MultiLayerSnapshot,
    a: LayerId,
    b: LayerId,
    include_inactive: bool = True,
    psi: float = 1.0,
) -> LayerPairStats:
    """All pairwise similarity statistics of two layers on one date.

    The correlation vectors span every bank in the snapshot by default, so
    banks inactive in both layers contribute zeros; pass
    ``include_inactive=False`` to restrict to banks active in at least one
    of the two layers.  The cascade-index correlation uses each layer's
    own raw single-seed indices (Pearson is scale-free, so layer
    normalization would not change it).
    """
    for layer in (a, b):
        if layer not in snapshot.layers:
            raise KeyError(f"unknown layer {layer!r}")
    ma, mb = snapshot.layers[a], snapshot.layers[b]
    order = snapshot.bank_order()
    if not include_inactive:
        active = ma.banks() | mb.banks()
        order = [x for x in order if x in active]
    in_a, out_a, ind_a, outd_a = _per_bank_vectors(ma, order)
    in_b, out_b, ind_b, outd_b = _per_bank_vectors(mb, order)
    ranks_a = _layer_ranks(ma, snapshot.banks, psi)
    ranks_b = _layer_ranks(mb, snapshot.banks, psi)
    ra = np.array([ranks_a[x] for x in order])
    rb = np.array([ranks_b[x] for x in order])
    return LayerPairStats(
        pair=(a, b),
        jaccard=jaccard(ma, mb),
        rho_exposure=pearson(in_a, in_b),
        rho_liability=pearson(out_a, out_b),
        rho_debtrank=pearson(ra, rb),
        degree_corr=CorrelationTriple(
            total=pearson(ind_a + outd_a, ind_b + outd_b),
            incoming=pearson(ind_a, ind_b),
            outgoing=pearson(outd_a, outd_b),
        ),
        weight_corr=CorrelationTriple(
            total=pearson(in_a + out_a, in_b + out_b),
            incoming=pearson(in_a, in_b),
            outgoing=pearson(out_a, out_b),
        ),
    )


# ---------------------------------------------------------------------------
# null model
# ---------------------------------------------------------------------------


def _cent_amounts(amounts: Sequence[float]) -> np.ndarray | None:
    """Amounts as integer cents, or None if any is off the cent grid."""
    arr = np.asarray(amounts, dtype=np.float64) * 100.0
    cents = np.rint(arr)
    if np.all(np.abs(arr - cents) <= 1e-6 * np.maximum(1.0, np.abs(arr))):
        return cents.astype(np.int64)
    return None


def null_model_rewire(
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord] | Sequence[BankId],
    seed: int,
) -> NullModelSample:
    """Rewire every liability's debtor endpoint, keeping creditors fixed.

    Each entry's new debtor is drawn uniformly among all banks except the
    creditor (the original debtor stays eligible); entries landing on the
    same pair merge by summation.  Every creditor's total interbank assets
    are preserved exactly: amounts on the cent grid are accumulated in
    integer cents, so the preserved totals are bit-identical.
    """
    order = sorted(banks) if not isinstance(banks, Mapping) else sorted(banks.keys())
    if len(order) < 2:
        raise ValueError("rewiring needs at least 2 banks")
    index = {x: k for k, x in enumerate(order)}
    unknown = sorted(m.banks() - set(order))
    if unknown:
        raise KeyError(f"matrix banks missing from the bank set: {unknown}")
    keys = sorted(m.entries, key=lambda kc: (kc[1], kc[0]))
    amounts = [m.entries[k] for k in keys]
    cents = _cent_amounts(amounts)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(order) - 1, size=len(keys))
    acc: dict[tuple[BankId, BankId], object] = {}
    for pos, (_, creditor) in enumerate(keys):
        r = int(draws[pos])
        if r >= index[creditor]:
            r += 1
        key = (order[r], creditor)
        add = int(cents[pos]) if cents is not None else amounts[pos]
        acc[key] = acc.get(key, 0 if cents is not None else 0.0) + add
    if cents is not None:
        entries = {k: c / 100.0 for k, c in acc.items()}
    else:
        entries = dict(acc)
    rewired = LiabilityMatrix(entries)
    return NullModelSample(matrix=rewired, seed=seed, preserved=rewired.in_weights(order))


def null_model_band(
    statistic: Callable[[LiabilityMatrix], float],
    m: LiabilityMatrix,
    banks: Mapping[BankId, BankRecord] | Sequence[BankId],
    replicates: int = 1000,
    seed: int = 0,
) -> BandSummary:
    """Null distribution of ``statistic`` over independent rewires.

    Replicate i uses seed ``seed + i``.  The observed value is significant
    when it falls strictly outside the central 95% band, so a statistic
    the rewiring preserves (zero-width band at the observed value) is
    never flagged.
    """
    if replicates < 100:
        raise ValueError(f"need at least 100 replicates, got {replicates}")
    observed = float(statistic(m))
    samples = np.array(
        [float(statistic(null_model_rewire(m, banks, seed + i).matrix)) for i in range(replicates)]
    )
    return _summarize_band(observed, samples)


def _summarize_band(observed: float, samples: np.ndarray) -> BandSummary:
    finite = samples[np.isfinite(samples)]
    if finite.size == 0 or not math.isfinite(observed):
        return BandSummary(observed, float("nan"), float("nan"), float("nan"), float("nan"), False, samples.size)
    lower, upper = np.percentile(finite, [2.5, 97.5])
    significant = observed < lower or observed > upper
    std = float(finite.std(ddof=1)) if finite.size > 1 else 0.0
    return BandSummary(
        observed=observed,
        mean=float(finite.mean()),
        std=std,
        lower=float(lower),
        upper=float(upper),
        significant=bool(significant),
        replicates=int(samples.size),
    )


def pair_null_bands(
    snapshot: MultiLayerSnapshot,
    a: LayerId,
    b: LayerId,
    replicates: int = 200,
    seed: int = 0,
    include_inactive: bool = True,
) -> dict[str, BandSummary]:
    """Significance bands for two-layer statistics under the null model.

    Both layers are rewired independently in every replicate (seeds
    ``seed + 2i`` and ``seed + 2i + 1``); returns bands for the Jaccard
    overlap and the exposure/liability correlations.  Note the rewiring
    preserves in-weights, so the exposure correlation's band is degenerate
    by construction.
    """
    if replicates < 100:
        raise ValueError(f"need at least 100 replicates, got {replicates}")
    ma, mb = snapshot.layers[a], snapshot.layers[b]
    order = snapshot.bank_order()
    if not include_inactive:
        active = ma.banks() | mb.banks()
        order = [x for x in order if x in active]

    def stats_of(xa: LiabilityMatrix, xb: LiabilityMatrix) -> tuple[float, float, float]:
        in_a, out_a, _, _ = _per_bank_vectors(xa, order)
        in_b, out_b, _, _ = _per_bank_vectors(xb, order)
        return jaccard(xa, xb), pearson(in_a, in_b), pearson(out_a, out_b)

    observed = stats_of(ma, mb)
    draws = np.empty((replicates, 3))
    for i in range(replicates):
        ra = null_model_rewire(ma, snapshot.banks, seed + 2 * i).matrix
        rb = null_model_rewire(mb, snapshot.banks, seed + 2 * i + 1).matrix
        draws[i] = stats_of(ra, rb)
    names = ("jaccard", "rho_exposure", "rho_liability")
    return {name: _summarize_band(observed[k], draws[:, k]) for k, name in enumerate(names)}


# ---------------------------------------------------------------------------
# power-law tail fitting
# ---------------------------------------------------------------------------


def _candidate_positions(z: np.ndarray, max_candidates: int, min_tail: int) -> np.ndarray:
    """Positions into ascending ``z`` usable as tail cutoffs."""
    first = np.flatnonzero(np.diff(np.concatenate([[-np.inf], z])) > 0)
    first = first[z.size - first >= min_tail]
    if first.size > max_candidates:
        picks = np.unique(np.linspace(0, first.size - 1, max_candidates).round().astype(np.int64))
        first = first[picks]
    return first.astype(np.int64)


def _fixed_fit(z: np.ndarray, xmin: float, min_tail: int) -> tuple[float, float, int]:
    tail = z[z >= xmin]
    m = tail.size
    if m < min_tail:
        raise ValueError(f"insufficient tail: {m} values at or above xmin={xmin}")
    logsum = float(np.log(tail / xmin).sum())
    if logsum <= 0.0:
        raise ValueError("degenerate tail: all values equal xmin")
    alpha = 1.0 + m / logsum
    model = 1.0 - (xmin / tail) ** (alpha - 1.0)
    hi = np.arange(1, m + 1) / m
    lo = np.arange(0, m) / m
    d = max(float(np.abs(hi - model).max()), float(np.abs(lo - model).max()))
    return alpha, d, m


def _scan_fit(z: np.ndarray, max_candidates: int, min_tail: int) -> tuple[float, float, float, int]:
    cand = _candidate_positions(z, max_candidates, min_tail)
    if cand.size == 0:
        raise ValueError(f"insufficient data: need a tail of at least {min_tail} values")
    alphas, ds = _kernels.ks_scan(z, cand)
    best = int(np.argmin(ds))
    if not math.isfinite(ds[best]):
        raise ValueError("degenerate sample: no usable tail cutoff")
    c = int(cand[best])
    return float(z[c]), float(alphas[best]), float(ds[best]), z.size - c


def powerlaw_fit(
    samples: Sequence[float],
    xmin: float | None = None,
    bootstrap_replicates: int = 1000,
    seed: int = 0,
    max_candidates: int = 100,
    min_tail: int = 10,
) -> PowerLawFit:
    """Fit a continuous power-law tail to positive samples.

    With ``xmin=None`` the cutoff is scanned: every admissible cutoff is
    fitted by maximum likelihood (alpha = 1 + n_tail / sum log(x/xmin))
    and the one minimizing the Kolmogorov-Smirnov distance wins.  The
    p-value comes from a semi-parametric bootstrap: replicates draw tail
    points from the fitted law and body points from the empirical body,
    are refitted by the same procedure, and the p-value is the fraction
    of replicates whose KS distance reaches the observed one.  Small
    p-values reject the power-law hypothesis; ``bootstrap_replicates=0``
    skips the bootstrap (p-value None).
    """
    z = np.sort(np.asarray(samples, dtype=np.float64))
    if z.size == 0:
        raise ValueError("no samples")
    if not np.isfinite(z).all() or z[0] <= 0.0:
        raise ValueError("samples must be finite and positive")
    if xmin is None:
        strategy = SCAN
        fit_xmin, alpha, d_obs, n_tail = _scan_fit(z, max_candidates, min_tail)
    else:
        strategy = FIXED
        if xmin <= 0.0:
            raise ValueError(f"xmin must be positive, got {xmin}")
        fit_xmin = float(xmin)
        alpha, d_obs, n_tail = _fixed_fit(z, fit_xmin, min_tail)

    p_value = None
    if bootstrap_replicates > 0:
        rng = np.random.default_rng(seed)
        body = z[z < fit_xmin]
        p_tail = n_tail / z.size
        exceed = 0
        usable = 0
        for _ in range(bootstrap_replicates):
            take_tail = rng.random(z.size) < p_tail
            nt = int(take_tail.sum())
            parts = []
            if nt:
                parts.append(fit_xmin * (1.0 - rng.random(nt)) ** (-1.0 / (alpha - 1.0)))
            if z.size - nt:
                parts.append(rng.choice(body, size=z.size - nt, replace=True))
            rep = np.sort(np.concatenate(parts))
            try:
                if strategy == SCAN:
                    _, _, d_rep, _ = _scan_fit(rep, max_candidates, min_tail)
                else:
                    _, d_rep, _ = _fixed_fit(rep, fit_xmin, min_tail)
            except ValueError:
                continue
            usable += 1
            if d_rep >= d_obs:
                exceed += 1
        p_value = exceed / usable if usable else float("nan")
    return PowerLawFit(
        xmin=fit_xmin,
        alpha=float(alpha),
        ks_statistic=float(d_obs),
        p_value=p_value,
        n_tail=int(n_tail),
        strategy=strategy,
        replicates=int(bootstrap_replicates),
    )
