from __future__ import annotations

from datetime import date as Date

import numpy as np
import pytest

import oracles
from conftest import records_of, snapshot_of
from multirisk import (
    DISTRESSED,
    INACTIVE,
    INTERBANK_ONLY,
    UNDISTRESSED,
    WITH_EXTERNAL_ASSETS,
    BankRecord,
    LiabilityMatrix,
    MultiLayerSnapshot,
    average_debtrank,
    cascade_states,
    combined_debtranks,
    debtrank,
    economic_value,
    impact_matrix,
    layer_debtranks,
    normalized_layer_debtrank,
    single_seed_debtranks,
    sr_profile,
)

CHAIN_R = 57.0 / 130.0


# ---------------------------------------------------------------------------
# impact matrix
# ---------------------------------------------------------------------------


def test_impact_direct_ratio(two_bank):
    matrix, banks = two_bank
    assert impact_matrix(matrix, banks).value("A", "B") == 0.5


def test_impact_caps_at_one():
    m = LiabilityMatrix({("A", "B"): 200.0})
    banks = records_of({"A": 100.0, "B": 100.0})
    assert impact_matrix(m, banks).value("A", "B") == 1.0


def test_impact_zero_capital_means_total_wipeout():
    m = LiabilityMatrix({("A", "B"): 50.0})
    banks = records_of({"A": 100.0, "B": 0.0})
    w = impact_matrix(m, banks)
    assert w.value("A", "B") == 1.0
    assert w.value("B", "A") == 0.0  # absent liability


def test_impact_entries_stay_in_unit_interval():
    rng = np.random.default_rng(2)
    _, entries, capitals = oracles.random_instance(rng, 12, amount_high=150.0, cap_low=1.0, cap_high=60.0)
    w = impact_matrix(LiabilityMatrix(entries), records_of(capitals))
    assert (w.values >= 0.0).all() and (w.values <= 1.0).all()


def test_impact_rejects_unknown_banks_and_bad_capitals():
    m = LiabilityMatrix({("A", "B"): 50.0})
    with pytest.raises(KeyError):
        impact_matrix(m, records_of({"A": 100.0}))
    with pytest.raises(ValueError):
        impact_matrix(m, records_of({"A": 100.0, "B": -5.0}))


# ---------------------------------------------------------------------------
# economic value
# ---------------------------------------------------------------------------


def test_value_single_creditor(two_bank):
    matrix, banks = two_bank
    v = economic_value(matrix, banks)
    assert v.values == {"A": 0.0, "B": 1.0}
    assert v.mode == INTERBANK_ONLY


def test_value_chain(chain):
    matrix, banks = chain
    v = economic_value(matrix, banks)
    assert v.values["A"] == 0.0
    assert v.values["B"] == pytest.approx(50.0 / 130.0, rel=1e-12)
    assert v.values["C"] == pytest.approx(80.0 / 130.0, rel=1e-12)


def test_value_with_external_assets():
    m = LiabilityMatrix({("A", "B"): 50.0})
    banks = records_of({"A": 100.0, "B": 100.0}, total_assets={"A": 100.0, "B": 100.0})
    v = economic_value(m, banks, WITH_EXTERNAL_ASSETS, loss_rate=0.6)
    assert v.values["A"] == pytest.approx(60.0 / 170.0, rel=1e-12)
    assert v.values["B"] == pytest.approx(110.0 / 170.0, rel=1e-12)
    assert v.loss_rate == 0.6


def test_value_normalization_and_bounds():
    rng = np.random.default_rng(9)
    _, entries, capitals = oracles.random_instance(rng, 15)
    v = economic_value(LiabilityMatrix(entries), records_of(capitals))
    values = np.array(list(v.values.values()))
    assert values.sum() == pytest.approx(1.0, abs=1e-9)
    assert (values >= 0.0).all()


def test_value_error_cases(two_bank):
    matrix, banks = two_bank
    with pytest.raises(ValueError, match="total_assets"):
        economic_value(matrix, banks, WITH_EXTERNAL_ASSETS)
    with pytest.raises(ValueError, match="loss_rate"):
        economic_value(
            matrix,
            records_of({"A": 1.0, "B": 1.0}, total_assets={"A": 1.0, "B": 1.0}),
            WITH_EXTERNAL_ASSETS,
            loss_rate=1.5,
        )
    with pytest.raises(ValueError, match="mode"):
        economic_value(matrix, banks, "nonsense")
    with pytest.raises(ValueError, match="zero"):
        economic_value(LiabilityMatrix(), banks)


# ---------------------------------------------------------------------------
# cascade fixtures
# ---------------------------------------------------------------------------


def test_two_bank_seed_a(two_bank):
    matrix, banks = two_bank
    result = debtrank(matrix, banks, {"A"})
    assert result.r_including_initial == pytest.approx(0.5, abs=1e-12)
    assert result.r_excluding_initial == pytest.approx(0.5, abs=1e-12)
    assert result.final_h == {"A": 1.0, "B": 0.5}


def test_two_bank_seed_b(two_bank):
    matrix, banks = two_bank
    result = debtrank(matrix, banks, {"B"})
    assert result.r_including_initial == pytest.approx(1.0, abs=1e-12)
    assert result.r_excluding_initial == pytest.approx(0.0, abs=1e-12)


def test_two_bank_full_seeding_saturates(two_bank):
    matrix, banks = two_bank
    result = debtrank(matrix, banks, {"A", "B"})
    assert result.r_including_initial == pytest.approx(1.0, abs=1e-12)


def test_chain_fixture(chain):
    matrix, banks = chain
    result = debtrank(matrix, banks, {"A"})
    assert result.r_including_initial == pytest.approx(CHAIN_R, abs=1e-12)
    assert result.final_h["B"] == pytest.approx(0.5, abs=1e-12)
    assert result.final_h["C"] == pytest.approx(0.4, abs=1e-12)
    assert result.rounds == 3
    assert result.seeds == frozenset({"A"})


def test_chain_is_linear_in_initial_distress(chain):
    matrix, banks = chain
    for psi in (0.25, 0.5, 0.75):
        result = debtrank(matrix, banks, {"A"}, psi=psi)
        assert result.r_including_initial == pytest.approx(psi * CHAIN_R, abs=1e-12)
        assert result.r_excluding_initial == pytest.approx(psi * CHAIN_R, abs=1e-12)


def test_acyclic_uncapped_networks_scale_linearly_in_psi():
    rng = np.random.default_rng(21)
    for _ in range(10):
        _, entries, capitals = oracles.random_instance(rng, 6, acyclic=True, amount_high=8.0)
        m = LiabilityMatrix(entries)
        if not entries:
            continue
        banks = records_of(capitals)
        seed = sorted(m.banks())[0]
        full = debtrank(m, banks, {seed}, psi=1.0)
        half = debtrank(m, banks, {seed}, psi=0.5)
        assert half.r_excluding_initial == pytest.approx(
            0.5 * full.r_excluding_initial, rel=1e-9, abs=1e-12
        )


def test_seed_errors(two_bank):
    matrix, banks = two_bank
    with pytest.raises(ValueError, match="non-empty"):
        debtrank(matrix, banks, set())
    with pytest.raises(KeyError):
        debtrank(matrix, banks, {"Z"})
    with pytest.raises(ValueError, match="psi"):
        debtrank(matrix, banks, {"A"}, psi=1.5)


def test_custom_value_vector(two_bank):
    matrix, banks = two_bank
    banks = records_of({"A": 100.0, "B": 100.0}, total_assets={"A": 100.0, "B": 100.0})
    v = economic_value(matrix, banks, WITH_EXTERNAL_ASSETS, loss_rate=0.6)
    result = debtrank(matrix, banks, {"A"}, v=v)
    assert result.r_including_initial == pytest.approx(115.0 / 170.0, rel=1e-12)


def test_including_minus_excluding_is_seed_value():
    rng = np.random.default_rng(33)
    for _ in range(15):
        b = int(rng.integers(3, 9))
        _, entries, capitals = oracles.random_instance(rng, b)
        if not entries:
            continue
        m = LiabilityMatrix(entries)
        banks = records_of(capitals)
        psi = float(rng.uniform(0.1, 1.0))
        names = sorted(banks)
        seeds = set(rng.choice(names, size=int(rng.integers(1, b)), replace=False).tolist())
        result = debtrank(m, banks, seeds, psi=psi)
        v = economic_value(m, banks)
        seed_value = psi * sum(v.values[s] for s in seeds)
        assert result.r_including_initial - result.r_excluding_initial == pytest.approx(
            seed_value, abs=1e-9
        )


def test_bounds_hold_even_when_saturated():
    rng = np.random.default_rng(44)
    for _ in range(15):
        b = int(rng.integers(2, 10))
        _, entries, capitals = oracles.random_instance(
            rng, b, amount_high=500.0, cap_low=1.0, cap_high=20.0
        )
        if not entries:
            continue
        m = LiabilityMatrix(entries)
        banks = records_of(capitals)
        psi = float(rng.uniform(0.0, 1.0))
        seed = sorted(m.banks())[0]
        result = debtrank(m, banks, {seed}, psi=psi)
        assert 0.0 <= result.r_excluding_initial <= result.r_including_initial <= 1.0
        assert all(0.0 <= h <= 1.0 for h in result.final_h.values())


def test_capital_increase_never_increases_impact():
    rng = np.random.default_rng(55)
    for _ in range(10):
        _, entries, capitals = oracles.random_instance(rng, 8, amount_high=60.0, cap_low=5.0, cap_high=40.0)
        if not entries:
            continue
        m = LiabilityMatrix(entries)
        base = single_seed_debtranks(m, records_of(capitals))
        for factor in (1.2, 2.0, 10.0):
            raised = single_seed_debtranks(
                m, records_of({b: c * factor for b, c in capitals.items()})
            )
            for bank in base:
                assert raised[bank] <= base[bank] + 1e-12


def test_matches_recursive_oracle_on_acyclic_networks():
    rng = np.random.default_rng(66)
    checked = 0
    for _ in range(30):
        b = int(rng.integers(3, 9))
        _, entries, capitals = oracles.random_instance(
            rng, b, acyclic=True, amount_high=80.0, cap_low=10.0, cap_high=60.0
        )
        if not entries:
            continue
        m = LiabilityMatrix(entries)
        banks = records_of(capitals)
        seed = sorted(m.banks())[int(rng.integers(0, len(m.banks())))]
        psi = float(rng.uniform(0.2, 1.0))
        result = debtrank(m, banks, {seed}, psi=psi)
        expected_h = oracles.dag_final_h(entries, capitals, {seed}, psi)
        for bank in banks:
            assert result.final_h[bank] == pytest.approx(expected_h[bank], abs=1e-9)
        checked += 1
    assert checked >= 20


def test_matches_step_oracle_on_cyclic_networks():
    rng = np.random.default_rng(77)
    for _ in range(10):
        b = int(rng.integers(3, 8))
        _, entries, capitals = oracles.random_instance(rng, b, amount_high=120.0, cap_low=5.0, cap_high=50.0)
        if not entries:
            continue
        m = LiabilityMatrix(entries)
        banks = records_of(capitals)
        names = sorted(banks)
        seeds = set(rng.choice(names, size=2, replace=False).tolist())
        result = debtrank(m, banks, seeds)
        oracle_h, oracle_rounds = oracles.simulate(entries, capitals, seeds)
        assert result.rounds == oracle_rounds
        for bank in banks:
            assert result.final_h[bank] == pytest.approx(oracle_h[bank], abs=1e-9)


# ---------------------------------------------------------------------------
# round-by-round trace
# ---------------------------------------------------------------------------


def test_trace_matches_chain_dynamics(chain):
    matrix, banks = chain
    states = cascade_states(matrix, banks, {"A"})
    assert states[0].h == {"A": 1.0, "B": 0.0, "C": 0.0}
    assert states[0].status == {"A": DISTRESSED, "B": UNDISTRESSED, "C": UNDISTRESSED}
    assert states[1].h == {"A": 1.0, "B": 0.5, "C": 0.0}
    assert states[1].status == {"A": INACTIVE, "B": DISTRESSED, "C": UNDISTRESSED}
    assert states[2].h["C"] == pytest.approx(0.4, abs=1e-12)
    assert states[2].status == {"A": INACTIVE, "B": INACTIVE, "C": DISTRESSED}
    assert states[3].status["C"] == INACTIVE


def test_trace_monotone_distressed_once_inactive_absorbing():
    rng = np.random.default_rng(88)
    for _ in range(10):
        b = int(rng.integers(3, 9))
        _, entries, capitals = oracles.random_instance(rng, b, amount_high=100.0, cap_low=5.0, cap_high=50.0)
        if not entries:
            continue
        m = LiabilityMatrix(entries)
        banks = records_of(capitals)
        seed = sorted(m.banks())[0]
        states = cascade_states(m, banks, {seed})
        assert len(states) - 1 <= len(banks)  # at most b propagation rounds
        for bank in banks:
            trajectory = [s.status[bank] for s in states]
            distressed_steps = [k for k, s in enumerate(trajectory) if s == DISTRESSED]
            assert len(distressed_steps) <= 1
            if INACTIVE in trajectory:
                first = trajectory.index(INACTIVE)
                assert all(s == INACTIVE for s in trajectory[first:])
            levels = [s.h[bank] for s in states]
            assert all(a <= b_ + 1e-15 for a, b_ in zip(levels, levels[1:]))
            assert all(0.0 <= lv <= 1.0 for lv in levels)


def test_trace_final_state_agrees_with_kernel(chain):
    matrix, banks = chain
    states = cascade_states(matrix, banks, {"A"}, psi=0.7)
    result = debtrank(matrix, banks, {"A"}, psi=0.7)
    assert states[-1].h == pytest.approx(result.final_h, abs=1e-12)
    assert len(states) - 1 == result.rounds


# ---------------------------------------------------------------------------
# layer decomposition and profiles
# ---------------------------------------------------------------------------


def test_single_layer_normalized_equals_combined(two_bank):
    matrix, banks = two_bank
    snapshot = snapshot_of(matrix, banks)
    layered = layer_debtranks(snapshot, "dl")
    assert layered == combined_debtranks(snapshot)


def test_two_identical_layers_split_evenly(two_bank):
    matrix, banks = two_bank
    snapshot = MultiLayerSnapshot(
        date=Date(2013, 9, 30), layers={"dl": matrix, "fx": matrix}, banks=dict(banks)
    )
    full = single_seed_debtranks(matrix, banks)
    for layer in ("dl", "fx"):
        layered = layer_debtranks(snapshot, layer)
        for bank in banks:
            assert layered[bank] == pytest.approx(full[bank] / 2.0, rel=1e-12)
    assert normalized_layer_debtrank(snapshot, "dl", "A") == pytest.approx(full["A"] / 2.0, rel=1e-12)


def test_empty_layer_contributes_nothing(two_bank):
    matrix, banks = two_bank
    snapshot = MultiLayerSnapshot(
        date=Date(2013, 9, 30), layers={"dl": matrix, "fx": LiabilityMatrix()}, banks=dict(banks)
    )
    assert layer_debtranks(snapshot, "fx") == {"A": 0.0, "B": 0.0}


def test_layer_errors(two_bank):
    matrix, banks = two_bank
    snapshot = snapshot_of(matrix, banks)
    with pytest.raises(KeyError):
        layer_debtranks(snapshot, "missing")
    with pytest.raises(KeyError):
        normalized_layer_debtrank(snapshot, "dl", "Z")


def test_normalized_layer_value_never_exceeds_raw(standard_snapshot):
    for layer in standard_snapshot.layer_order():
        raw = single_seed_debtranks(standard_snapshot.layers[layer], standard_snapshot.banks)
        hat = layer_debtranks(standard_snapshot, layer)
        for bank in hat:
            assert hat[bank] <= raw[bank] + 1e-12


def test_average_debtrank_examples(two_bank):
    matrix, banks = two_bank
    assert average_debtrank(snapshot_of(matrix, banks)) == pytest.approx(0.75, abs=1e-12)
    with_isolated = dict(banks)
    with_isolated["Z"] = BankRecord("Z", 10.0)
    assert average_debtrank(snapshot_of(matrix, with_isolated)) == pytest.approx(0.5, abs=1e-12)


def test_average_debtrank_empty_network():
    snapshot = MultiLayerSnapshot(date=Date(2013, 9, 30), layers={}, banks={})
    assert average_debtrank(snapshot) == 0.0
    lonely = MultiLayerSnapshot(
        date=Date(2013, 9, 30), layers={"dl": LiabilityMatrix()}, banks={"A": BankRecord("A", 1.0)}
    )
    assert average_debtrank(lonely) == 0.0
    assert average_debtrank(lonely, scope="dl") == 0.0


def test_profile_orders_by_combined_impact(two_bank):
    matrix, banks = two_bank
    profile = sr_profile(snapshot_of(matrix, banks))
    assert [row.bank for row in profile.rows] == ["B", "A"]
    assert profile.rows[0].r_combined == pytest.approx(1.0, abs=1e-12)
    assert profile.rows[1].r_combined == pytest.approx(0.5, abs=1e-12)
    values = [row.r_combined for row in profile.rows]
    assert values == sorted(values, reverse=True)


def test_profile_breaks_ties_lexicographically():
    m = LiabilityMatrix({("A", "B"): 50.0, ("B", "A"): 50.0})
    banks = records_of({"A": 100.0, "B": 100.0})
    profile = sr_profile(snapshot_of(m, banks))
    assert [row.bank for row in profile.rows] == ["A", "B"]
    assert profile.rows[0].r_combined == profile.rows[1].r_combined


def test_profile_margin_is_combined_minus_layer_sum(standard_snapshot):
    profile = sr_profile(standard_snapshot)
    combined = combined_debtranks(standard_snapshot)
    for row in profile.rows:
        assert row.margin == pytest.approx(
            combined[row.bank] - sum(row.layer_values.values()), abs=1e-12
        )


def test_profile_single_layer_stack_matches_combined(two_bank):
    matrix, banks = two_bank
    profile = sr_profile(snapshot_of(matrix, banks))
    for row in profile.rows:
        assert row.layer_values["dl"] == pytest.approx(row.r_combined, rel=1e-12)
        assert row.margin == pytest.approx(0.0, abs=1e-12)
