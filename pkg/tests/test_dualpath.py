"""Dual-path selection, rotation, transaction costing and recovery tests.

The cost walk is checked against hand-summed unit costs and against the
codec-driven transact, which accrues the same terms while actually
wrapping, relaying and unwrapping messages.
"""

from random import Random

import pytest

from dualpath_sim.config import DualPathConfig, SimConfig
from dualpath_sim.dualpath import (
    DualPath,
    SelectionError,
    recover,
    select_paths,
    should_rotate,
    simulate_tick,
    static_transaction_ms,
    transact,
    walk_transaction,
)
from dualpath_sim.engine import NetworkView
from dualpath_sim.onion import Payload, TaggedCipher

REQ, PROV = 0, 1
CIPHER = TaggedCipher()

HOP, SEAL, OPEN = 1.92, 0.8, 9.3


def network(num_nodes=20, extras=None, up=None, cfg=None):
    cfg = cfg or SimConfig(num_nodes=num_nodes)
    extras = extras if extras is not None else [0.0] * num_nodes
    return NetworkView(cfg, extras, up)


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------

def test_disjoint_selection_uses_six_distinct_peers():
    rng = Random(1)
    cfg = DualPathConfig(path_length=3)
    for _ in range(100):
        path = select_paths(rng, range(8), REQ, PROV, cfg)
        peers = path.request_path + path.response_path
        assert len(peers) == 6
        assert len(set(peers)) == 6
        assert REQ not in peers and PROV not in peers
        assert path.request_hop_limit in (4, 5)
        assert path.response_hop_limit in (4, 5)


def test_path_length_zero_gives_direct_paths():
    path = select_paths(Random(2), range(8), REQ, PROV, DualPathConfig(path_length=0))
    assert path.request_path == () and path.response_path == ()
    assert path.request_hop_limit >= 1


def test_traffic_aware_picks_lowest_traffic_peers():
    # Eight candidates with known congestion; the four least congested win.
    traffic = {2: 9.0, 3: 1.0, 4: 8.0, 5: 2.0, 6: 7.0, 7: 3.0, 8: 0.0, 9: 4.0}
    cfg = DualPathConfig(path_length=2, selection_mode="traffic-aware")
    # Brute-force oracle: sort eligible peers by (traffic, id), take 2*length.
    oracle = set(sorted(traffic, key=lambda m: (traffic[m], m))[:4])
    assert oracle == {8, 3, 5, 7}
    for seed in range(20):
        path = select_paths(Random(seed), range(10), REQ, PROV, cfg, traffic)
        assert set(path.request_path + path.response_path) == oracle


def test_traffic_aware_tie_break_by_peer_id():
    cfg = DualPathConfig(path_length=1, selection_mode="traffic-aware")
    path = select_paths(Random(3), range(10), REQ, PROV, cfg, traffic={})
    assert set(path.request_path + path.response_path) == {2, 3}


def test_insufficient_members_raises():
    with pytest.raises(SelectionError):
        select_paths(Random(4), range(7), REQ, PROV, DualPathConfig(path_length=3))
    up = {m: m in (REQ, PROV, 2, 3) for m in range(10)}
    with pytest.raises(SelectionError):
        select_paths(Random(4), range(10), REQ, PROV,
                     DualPathConfig(path_length=2), up=up)


def test_non_disjoint_mode_allows_cross_path_overlap():
    cfg = DualPathConfig(path_length=3, disjoint_paths=False)
    rng = Random(5)
    overlapped = False
    for _ in range(200):
        path = select_paths(rng, range(8), REQ, PROV, cfg)
        assert len(set(path.request_path)) == 3
        assert len(set(path.response_path)) == 3
        if set(path.request_path) & set(path.response_path):
            overlapped = True
    assert overlapped


def test_selection_with_up_filter_avoids_down_peers():
    rng = Random(6)
    up = {m: m % 2 == 0 for m in range(30)}
    cfg = DualPathConfig(path_length=3)
    for _ in range(100):
        path = select_paths(rng, range(30), REQ, PROV, cfg, up=up)
        assert all(up[p] for p in path.request_path + path.response_path)


def test_traffic_aware_dominates_uniform_for_any_fixed_map():
    # The mean congestion of the traffic-aware choice never exceeds that of
    # any uniformly drawn choice over the same map.
    rng = Random(7)
    cfg_low = DualPathConfig(path_length=3, selection_mode="traffic-aware")
    cfg_uni = DualPathConfig(path_length=3)
    for _ in range(50):
        traffic = {m: rng.uniform(0, 50) for m in range(2, 40)}
        aware = select_paths(rng, range(40), REQ, PROV, cfg_low, traffic)
        aware_mean = sum(traffic[p] for p in aware.request_path + aware.response_path) / 6
        for _ in range(10):
            uni = select_paths(rng, range(40), REQ, PROV, cfg_uni, traffic)
            uni_mean = sum(traffic[p] for p in uni.request_path + uni.response_path) / 6
            assert aware_mean <= uni_mean + 1e-12


# ---------------------------------------------------------------------------
# Rotation
# ---------------------------------------------------------------------------

def test_rotation_probability_edges():
    rng = Random(8)
    assert not any(should_rotate(rng, 0.0) for _ in range(1000))
    assert all(should_rotate(rng, 1.0) for _ in range(1000))
    with pytest.raises(ValueError):
        should_rotate(rng, 1.5)


def test_rotation_frequency_matches_probability():
    rng = Random(9)
    n = 100_000
    hits = sum(should_rotate(rng, 0.5) for _ in range(n))
    assert abs(hits / n - 0.5) < 0.005


# ---------------------------------------------------------------------------
# Cost walk vs hand-summed oracle
# ---------------------------------------------------------------------------

def fig_style_path():
    return DualPath((2, 3, 4), (5, 6, 7), 4, 4)


def test_walk_matches_hand_summed_costs_one_kb():
    # Oracle, summed explicitly from unit costs at 1 KB:
    # request: wrap seal + 4 hops + provider open
    # response: provider seal + per relay (hop, open, seal) * 3 + final hop + open
    expected = (SEAL + 4 * HOP + OPEN) + (SEAL + 3 * (HOP + OPEN + SEAL) + HOP + OPEN)
    delay, hops, ok = walk_transaction(fig_style_path(), REQ, PROV,
                                       HOP, SEAL, OPEN, [0.0] * 8)
    assert ok and hops == 8
    assert delay == pytest.approx(expected)
    assert delay == pytest.approx(65.86)
    assert static_transaction_ms(3, 3, HOP, SEAL, OPEN) == pytest.approx(expected)


def test_walk_zero_length_baseline():
    # Direct exchange: one transmission, one seal, one open each way.
    path = DualPath((), (), 1, 1)
    delay, hops, ok = walk_transaction(path, REQ, PROV, HOP, SEAL, OPEN, [0.0] * 2)
    assert ok and hops == 2
    assert delay == pytest.approx(2 * (HOP + SEAL + OPEN))
    assert delay == pytest.approx(24.04)


def test_walk_adds_sender_congestion():
    extras = [0.0] * 8
    extras[2], extras[5] = 1.5, 0.25  # one request relay, one response relay
    delay, _, ok = walk_transaction(fig_style_path(), REQ, PROV,
                                    HOP, SEAL, OPEN, extras)
    assert ok
    assert delay == pytest.approx(65.86 + 1.5 + 0.25)


def test_walk_partial_cost_stops_before_down_peer():
    extras = [0.0] * 8
    up = [True] * 8
    up[3] = False  # second request relay down
    delay, hops, ok = walk_transaction(fig_style_path(), REQ, PROV,
                                       HOP, SEAL, OPEN, extras, up)
    assert not ok and hops == 1
    assert delay == pytest.approx(SEAL + HOP)
    up[3], up[6] = True, False  # second response relay down
    delay, hops, ok = walk_transaction(fig_style_path(), REQ, PROV,
                                       HOP, SEAL, OPEN, extras, up)
    assert not ok and hops == 5
    expected = (SEAL + 4 * HOP + OPEN) + SEAL + (HOP + OPEN + SEAL)
    assert delay == pytest.approx(expected)


def test_walk_terms_sum_to_delay():
    terms = []
    delay, _, _ = walk_transaction(fig_style_path(), REQ, PROV,
                                   HOP, SEAL, OPEN, [0.1] * 8, None, terms)
    assert sum(ms for _, ms in terms) == pytest.approx(delay)
    kinds = [k for k, _ in terms]
    assert kinds.count("hop") == 8
    assert kinds.count("seal") == 5 and kinds.count("open") == 5


# ---------------------------------------------------------------------------
# Codec-driven transact agrees with the walk
# ---------------------------------------------------------------------------

def test_transact_matches_walk_on_randomized_cases():
    rng = Random(10)
    cfg = SimConfig()
    for _ in range(60):
        req_len = rng.randrange(5)
        resp_len = rng.randrange(5)
        peers = rng.sample(range(2, 30), req_len + resp_len)
        path = DualPath(tuple(peers[:req_len]), tuple(peers[req_len:]),
                        req_len + 1, resp_len + 1)
        kb = rng.choice([0.0, 0.5, 1.0, 3.0])
        payload = Payload.of_kb(kb)
        extras = [0.0, 0.0] + [rng.uniform(0, 2) for _ in range(28)]
        up = None
        if rng.random() < 0.5:
            up = [rng.random() > 0.3 for _ in range(30)]
            up[REQ] = up[PROV] = True
        net = network(30, extras, up, cfg)
        walk_terms, tx_terms = [], []
        w_delay, w_hops, w_ok = walk_transaction(
            path, REQ, PROV, kb * HOP, kb * SEAL, kb * OPEN, extras, up, walk_terms)
        outcome = transact(REQ, PROV, path, payload, CIPHER, net, tx_terms)
        assert outcome.failed == (not w_ok)
        assert outcome.hops_used == w_hops
        assert outcome.delay_ms == pytest.approx(w_delay)
        assert [k for k, _ in tx_terms] == [k for k, _ in walk_terms]
        assert sum(ms for _, ms in tx_terms) == pytest.approx(outcome.delay_ms)


def test_transact_fig_style_value():
    net = network(8)
    outcome = transact(REQ, PROV, fig_style_path(), Payload.of_kb(1), CIPHER, net)
    assert not outcome.failed
    assert outcome.hops_used == 8
    assert outcome.delay_ms == pytest.approx(65.86)


def test_transact_fails_on_down_relay():
    up = [True] * 8
    up[5] = False
    net = network(8, up=up)
    outcome = transact(REQ, PROV, fig_style_path(), Payload.of_kb(1), CIPHER, net)
    assert outcome.failed
    assert outcome.delay_ms < 65.86


# ---------------------------------------------------------------------------
# Recovery
# ---------------------------------------------------------------------------

def test_recover_draws_up_path_and_prices_penalty():
    rng = Random(11)
    cfg = DualPathConfig(path_length=3)
    up = {m: m >= 10 for m in range(20)}
    up[REQ] = up[PROV] = True
    net = network(20, up=up)
    result = recover(rng, range(20), REQ, PROV, cfg, None, net, payload_kb=2.0)
    assert all(up[p] for p in result.path.request_path + result.path.response_path)
    # Penalty: membership fetch round trip at 1 KB plus re-wrap seal at 2 KB.
    assert result.penalty_ms == pytest.approx(2 * HOP + 2.0 * SEAL)


def test_recovery_composition_in_tick_loop():
    # One repetition whose first attempt fails: total = partial + penalty +
    # full retry. Reconstruct the total from independently priced parts.
    cfg = DualPathConfig(path_length=1, change_probability=0.0,
                         selection_mode="traffic-aware")
    eligible = [2, 3, 4, 5]
    ranked = [2, 3, 4, 5]
    up_rows = [[True, True, False, False, True, True]]  # peers 2,3 down
    extras = [0.0] * 6
    samples = []
    total, _, failures = simulate_tick(
        Random(0), 1, cfg, eligible, ranked, up_rows, extras,
        HOP, SEAL, OPEN, fetch_ms=2 * HOP, timeout_ms=1e9,
        requester=REQ, provider=PROV, samples=samples)
    assert failures == 1
    # Traffic-aware first selection picks {2, 3}, both down: partial = seal.
    partial = SEAL
    penalty = 2 * HOP + SEAL
    full = static_transaction_ms(1, 1, HOP, SEAL, OPEN)
    assert samples[0] == pytest.approx(partial + penalty + full)


def test_timeout_when_no_recovery_possible():
    cfg = DualPathConfig(path_length=1)
    up_rows = [[True, True, False, False]]  # every relay down
    total, _, failures = simulate_tick(
        Random(1), 1, cfg, [2, 3], [2, 3], up_rows, [0.0] * 4,
        HOP, SEAL, OPEN, fetch_ms=2 * HOP, timeout_ms=123.456,
        requester=REQ, provider=PROV)
    assert failures == 1
    assert total == pytest.approx(123.456)


def test_zero_failures_never_invokes_recovery():
    cfg = DualPathConfig(path_length=2, change_probability=0.5)
    samples = []
    total, _, failures = simulate_tick(
        Random(2), 50, cfg, list(range(2, 12)), list(range(2, 12)), None,
        [0.0] * 12, HOP, SEAL, OPEN, fetch_ms=2 * HOP, timeout_ms=1e9,
        requester=REQ, provider=PROV, samples=samples)
    assert failures == 0
    expected = static_transaction_ms(2, 2, HOP, SEAL, OPEN)
    assert all(s == pytest.approx(expected) for s in samples)


def test_rotation_persistence_and_redraw():
    # change_probability 0 keeps one path (constant congestion), 1 re-draws
    # every repetition (congestion varies across repetitions).
    extras = [0.0, 0.0] + [float(i) for i in range(10)]
    for change_p, expect_constant in ((0.0, True), (1.0, False)):
        cfg = DualPathConfig(path_length=2, change_probability=change_p)
        samples = []
        simulate_tick(Random(3), 80, cfg, list(range(2, 12)), list(range(2, 12)),
                      None, extras, HOP, SEAL, OPEN, 2 * HOP, 1e9,
                      REQ, PROV, samples=samples)
        assert (len(set(samples)) == 1) == expect_constant
