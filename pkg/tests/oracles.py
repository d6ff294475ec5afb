"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written against plain dicts and itertools,
not against the package's internals, so agreement between these oracles
and the library is a genuine dual-route check.
"""
from __future__ import annotations

import itertools
import math


def impact_of(liabilities, capitals):
    """(debtor, creditor) -> fraction of the creditor's capital wiped out."""
    w = {}
    for (debtor, creditor), amount in liabilities.items():
        if amount <= 0.0:
            continue
        cap = capitals[creditor]
        w[(debtor, creditor)] = 1.0 if cap == 0.0 else min(1.0, amount / cap)
    return w


def simulate(liabilities, capitals, seeds, psi=1.0):
    """Round-by-round distress propagation; returns (final h, rounds).

    A distressed bank passes w * h to each creditor-side neighbor exactly
    once, in the round after it became distressed, then goes inactive.
    """
    banks = sorted(capitals)
    w = impact_of(liabilities, capitals)
    h = {b: (psi if b in seeds else 0.0) for b in banks}
    state = {b: ("D" if b in seeds else "U") for b in banks}
    rounds = 0
    while any(state[b] == "D" for b in banks):
        impact = {b: 0.0 for b in banks}
        for j in banks:
            if state[j] == "D":
                for i in banks:
                    wji = w.get((j, i), 0.0)
                    if wji > 0.0:
                        impact[i] += wji * h[j]
                state[j] = "I"
        for i in banks:
            if impact[i] > 0.0:
                h[i] = min(1.0, h[i] + impact[i])
                if state[i] == "U":
                    state[i] = "D"
        rounds += 1
    return h, rounds


def dag_final_h(liabilities, capitals, seeds, psi=1.0):
    """Recursive (non-simulating) distress solution on acyclic networks.

    On a DAG the timing of the single transmission is the BFS round at
    which distress first arrives; the transmitted level is the inflow
    accumulated by exactly that round.  Final distress adds every
    transmission received, capped at 1.
    """
    banks = sorted(capitals)
    w = impact_of(liabilities, capitals)
    preds = {b: [] for b in banks}
    for (debtor, creditor) in w:
        preds[creditor].append(debtor)

    round_memo: dict[str, int | None] = {}

    def transmit_round(i):
        if i in round_memo:
            return round_memo[i]
        if i in seeds:
            round_memo[i] = 1
            return 1
        best = None
        for j in preds[i]:
            dj = transmit_round(j)
            if dj is not None and (best is None or dj + 1 < best):
                best = dj + 1
        round_memo[i] = best
        return best

    level_memo: dict[str, float] = {}

    def transmitted(i):
        if i in level_memo:
            return level_memo[i]
        if i in seeds:
            level_memo[i] = psi
            return psi
        di = transmit_round(i)
        if di is None:
            level_memo[i] = 0.0
            return 0.0
        total = sum(
            w[(j, i)] * transmitted(j) for j in preds[i] if transmit_round(j) == di - 1
        )
        level_memo[i] = min(1.0, total)
        return level_memo[i]

    h = {}
    for i in banks:
        inflow = sum(
            w[(j, i)] * transmitted(j) for j in preds[i] if transmit_round(j) is not None
        )
        h[i] = min(1.0, (psi if i in seeds else 0.0) + inflow)
    return h


def value_weights(liabilities, capitals):
    """Normalized per-bank interbank-asset weights; zeros when no value."""
    total = sum(liabilities.values())
    assets = {b: 0.0 for b in capitals}
    for (_, creditor), amount in liabilities.items():
        assets[creditor] += amount
    if total <= 0.0:
        return {b: 0.0 for b in capitals}
    return {b: assets[b] / total for b in capitals}


def rank_of(liabilities, capitals, seeds, psi=1.0):
    """Impact index of a seed set, including the seeds' initial distress."""
    h, _ = simulate(liabilities, capitals, seeds, psi)
    v = value_weights(liabilities, capitals)
    return min(1.0, sum(h[b] * v[b] for b in capitals))


def exact_loss(liabilities, capitals, p, psi=1.0):
    """Brute-force expected systemic loss over every default scenario."""
    banks = sorted(capitals)
    total_v = sum(liabilities.values())
    if total_v <= 0.0:
        return 0.0
    el = 0.0
    for r in range(1, len(banks) + 1):
        for subset in itertools.combinations(banks, r):
            inside = set(subset)
            prob = 1.0
            for b in banks:
                prob *= p[b] if b in inside else 1.0 - p[b]
            if prob == 0.0:
                continue
            el += prob * rank_of(liabilities, capitals, inside, psi)
    return total_v * el


def approx_loss(liabilities, capitals, p, psi=1.0):
    """First-order expected systemic loss: V * sum_i p_i * R_{i}."""
    total_v = sum(liabilities.values())
    return total_v * sum(
        p[b] * rank_of(liabilities, capitals, {b}, psi) for b in capitals
    )


def bracketed_sum(p, i):
    """sum over J subsets of B\\{i} of prod_{j in J} p_j prod_{k not in J+i} (1-p_k)."""
    others = [j for j in range(len(p)) if j != i]
    total = 0.0
    for r in range(len(others) + 1):
        for sub in itertools.combinations(others, r):
            inside = set(sub)
            prod = 1.0
            for j in others:
                prod *= p[j] if j in inside else 1.0 - p[j]
            total += prod
    return total


def binom_pmf(k, n, q):
    return math.comb(n, k) * q**k * (1.0 - q) ** (n - k)


def rewired_jaccard_estimate(entries_a, entries_b, bank_ids):
    """First-order expected edge overlap of two independently rewired layers.

    After rewiring, a creditor with k incoming entries hosts an edge from a
    specific other bank with probability 1 - (1 - 1/(b-1))^k; expected
    intersection and union sizes follow by independence across the layers.
    """
    b = len(bank_ids)
    keep = 1.0 - 1.0 / (b - 1)

    def creditor_counts(entries):
        out = {}
        for (_, creditor) in entries:
            out[creditor] = out.get(creditor, 0) + 1
        return out

    ka = creditor_counts(entries_a)
    kb = creditor_counts(entries_b)
    e_a = e_b = e_int = 0.0
    for c in bank_ids:
        qa = 1.0 - keep ** ka.get(c, 0)
        qb = 1.0 - keep ** kb.get(c, 0)
        e_a += (b - 1) * qa
        e_b += (b - 1) * qb
        e_int += (b - 1) * qa * qb
    return e_int / (e_a + e_b - e_int)


def random_instance(rng, b, n_edges=None, amount_high=10.0, cap_low=40.0, cap_high=80.0, acyclic=False):
    """One random liability network as plain dicts: (names, entries, capitals).

    Capitals several times the typical amount keep cascades mild (impact
    entries well below 1), the regime where the first-order loss tracks
    the exact one.
    """
    names = [f"N{k:02d}" for k in range(b)]
    entries = {}
    for _ in range(n_edges if n_edges is not None else 2 * b):
        i, j = rng.integers(0, b, size=2)
        if i == j:
            continue
        if acyclic and i > j:
            i, j = j, i
        key = (names[int(i)], names[int(j)])
        entries[key] = entries.get(key, 0.0) + float(rng.uniform(1.0, amount_high))
    capitals = {n: float(rng.uniform(cap_low, cap_high)) for n in names}
    return names, entries, capitals
