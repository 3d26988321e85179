import numpy as np
import pytest
from scipy.stats import chisquare

from movisim.core import VideoSpec
from movisim.errors import ConfigError
from movisim.sim import Event, Kind, Scenario, Simulation, flash_crowd, rng_stream, run, with_mode
from movisim.trust import TrustEvaluation

from audit import (
    accounting_errors,
    conservation_ok,
    out_of_order_requests,
    overlap_violations,
    replay_errors,
    run_audited,
    source_violations,
)

SHORT = VideoSpec(20, 262144, 524288.0)


def pair_scenario(**kw):
    return Scenario(node_count=2, video=SHORT, positions=[(0.0, 0.0), (0.0, 0.0)], start_offsets=[0.0, 60.0], **kw)


def test_single_node_p2p_equals_server_only():
    sc = flash_crowd(1, 3, video=SHORT)
    a, b = run(sc), run(with_mode(sc, "server-only"))
    assert a.improvement == b.improvement == 0.0
    assert [n.bytes_from_server for n in a.nodes] == [n.bytes_from_server for n in b.nodes]
    assert a.peer_bytes == 0


def test_late_joiner_gets_pieces_from_peer():
    r = run(pair_scenario())
    b = r.nodes[1]
    assert b.bytes_from_peers > 0
    peer = [t for t in r.transfers if t["source"] == 0 and t["dest"] == 1]
    assert peer
    # 256 KiB over 6 Mbit/s
    for t in peer:
        assert t["end"] - t["start"] == pytest.approx(2097152 / 6e6, rel=1e-12)
        assert t["end"] - t["start"] == pytest.approx(0.3495, abs=5e-5)


def test_server_transfer_duration():
    r = run(pair_scenario())
    srv = [t for t in r.transfers if t["source"] == "server"]
    assert all(t["end"] - t["start"] == pytest.approx(2097152 / 2e6) for t in srv)


def test_deterministic_reports():
    sc = flash_crowd(8, 11, video=SHORT)
    assert run(sc).to_json() == run(sc).to_json()


def test_different_seeds_differ():
    assert run(flash_crowd(8, 1, video=SHORT)).to_json() != run(flash_crowd(8, 2, video=SHORT)).to_json()


def test_rng_stream():
    a = rng_stream(5, "layout").random(4)
    b = rng_stream(5, "layout").random(4)
    c = rng_stream(5, "offsets").random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    draws = rng_stream(123, "uniformity").random(20000)
    counts, _ = np.histogram(draws, bins=20, range=(0, 1))
    assert chisquare(counts).pvalue > 1e-3


def test_probe_on_isolated_node_reschedules_itself():
    sc = Scenario(node_count=2, video=SHORT, positions=[(0.0, 0.0), (5000.0, 0.0)], start_offsets=[0.0, 0.0])
    sim = Simulation(sc)
    sim.advance(0.0)
    before = sim.neighbor_lists[0]
    probes = [e for e in sim._queue if e.kind == Kind.PROBE_ROUND and e.node == 0]
    (ev,) = probes
    sim._queue.remove(ev)
    sim.handle_event(ev)
    assert sim.neighbor_lists[0].entries == before.entries == ()
    again = [e for e in sim._queue if e.kind == Kind.PROBE_ROUND and e.node == 0]
    assert [e.at for e in again] == [ev.at + 2.0]


def test_event_tie_break_order():
    order = [Kind.TRANSFER_COMPLETE, Kind.PIECE_REQUEST, Kind.REPORT_TICK, Kind.PROBE_ROUND, Kind.PLAYOUT_TICK, Kind.TRUST_EVENT]
    events = sorted(Event(1.0, k, 0, i) for i, k in enumerate(reversed(order)))
    assert [e.kind for e in events] == order
    assert sorted([Event(1.0, Kind.PIECE_REQUEST, 5, 0), Event(1.0, Kind.PIECE_REQUEST, 2, 1)])[0].node == 2


def test_peer_moving_away_leaves_list_within_bound():
    leave = 20.0
    wp = [[(0.0, 0.0, 0.0)], [(0.0, 10.0, 0.0), (leave, 10.0, 0.0), (leave + 1e-3, 5000.0, 0.0)]]
    sc = Scenario(node_count=2, video=VideoSpec(40, 262144, 524288.0), waypoints=wp, start_offsets=[0.0, 0.0])
    sim = Simulation(sc)
    timers = sc.timers
    bound = timers.staleness_rounds * timers.probe_interval + timers.probe_interval
    sim.advance(leave)
    assert [r.neighbor for r in sim.neighbor_lists[0].entries] == [1]
    sim.advance(leave + bound)
    assert sim.neighbor_lists[0].entries == ()


def test_run_invariants_default_scenario_small():
    sc = flash_crowd(12, 4, video=SHORT)
    sim, r = run_audited(sc)
    a = sim.audit
    assert not r.truncated
    assert a.peer_decisions > 0
    assert a.sound, (a.predicate_failures, a.maximality_failures, a.blacklisted_picks)
    assert not a.rbt_mismatches and a.rbt_checks > 0
    assert not a.shrunk_holdings
    assert not a.unreported_views
    assert sim.busy_pairing_ok
    assert conservation_ok(r)
    assert not overlap_violations(r.transfers)
    assert not source_violations(r.transfers)
    assert not out_of_order_requests(r.decisions)
    assert not accounting_errors(r)
    assert not replay_errors(r)


def test_startup_delay_lower_bound():
    r = run(flash_crowd(10, 2, video=SHORT))
    fastest = 2097152 / 6e6
    for n in r.nodes:
        assert n.startup_delay >= fastest - 1e-12


def test_server_only_has_no_peer_bytes():
    r = run(flash_crowd(10, 5, video=SHORT, mode="server-only"))
    assert r.peer_bytes == 0 and r.improvement == 0.0
    assert all(d["source"] == "server" and d["audit"] is None for d in r.decisions)


def test_blacklisted_node_never_serves_after_event():
    offsets = [0.0] + [10.0 * i for i in range(1, 6)]
    events = [TrustEvaluation(k, 0, 0.0, 30.0) for k in (1, 2)]
    sc = Scenario(node_count=6, video=SHORT, square_side=20.0, start_offsets=offsets, trust_events=events)
    sim, r = run_audited(sc)
    picks = sim.audit.picks_by_source[0]
    assert any(t < 30.0 for t in picks)
    assert not [t for t in picks if t >= 30.0]


def test_truncated_run_is_reported_not_raised():
    r = run(flash_crowd(3, 0, video=SHORT, duration_cap=20.0))
    assert r.truncated
    assert r.run_duration == 20.0


def test_mobile_grouping_components_runs():
    sc = flash_crowd(6, 1, video=SHORT, grouping="components")
    r = run(sc)
    groups = {t["group"] for t in r.transfers if t["source"] != "server"}
    assert groups and all(g.startswith("g") for g in groups)


def test_cell_capacity_slows_server_transfers():
    from movisim.radio import RadioParams

    sc = flash_crowd(6, 1, video=SHORT, offset_range=(0.0, 0.0), mode="server-only", radio=RadioParams(cell_capacity=4e6))
    r = run(sc)
    longest = max(t["end"] - t["start"] for t in r.transfers)
    assert longest > 2097152 / 2e6 + 1e-9


def test_probe_loss_is_seeded():
    from movisim.discovery import DiscoveryTimers

    sc = flash_crowd(6, 1, video=SHORT, timers=DiscoveryTimers(probe_loss_prob=0.3))
    assert run(sc).to_json() == run(sc).to_json()


@pytest.mark.parametrize(
    "kw",
    [
        dict(node_count=0),
        dict(mode="hybrid"),
        dict(start_offsets=[0.0]),
        dict(trust_events=[TrustEvaluation(0, 9, 0.1, 1.0)]),
        dict(pipeline_depth=2),
        dict(rssi_threshold=-95.0),
        dict(prebuffer=40.0),
    ],
)
def test_invalid_scenarios(kw):
    with pytest.raises(ConfigError):
        Scenario(**{"node_count": 2, **kw})
