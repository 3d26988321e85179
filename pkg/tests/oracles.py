"""Independent reference computations used as test oracles.

Nothing here imports the code paths it checks beyond plain data types.
"""

import math

from movisim.core import SERVER


def scan_forward_rbt(held, playhead, piece_duration, piece_count):
    """RBT by walking forward one piece at a time from time zero."""
    k = 0
    # advance to the piece containing the playhead
    while k < piece_count and (k + 1) * piece_duration <= playhead:
        k += 1
    end = k * piece_duration
    while k < piece_count and k in held:
        k += 1
        end = k * piece_duration
    return max(0.0, end - playhead) if end > playhead else 0.0


def brute_force_schedule(requester, piece, neighbors, holdings, trust, threshold, rssi_threshold, busy, rbt):
    """Enumerate candidates, test every predicate, take the argmax.

    ``neighbors``: list of (node, rssi); ``holdings``: node -> set;
    ``trust``: node -> value (missing means 1.0); ``rbt``: node -> seconds.
    Returns (source, stage_counts, winning_rbt).
    """
    stage = [[], [], [], [], []]
    for node, level in neighbors:
        stage[0].append(node)
        has = piece in holdings.get(node, ())
        trusted = trust.get(node, 1.0) >= threshold
        strong = level >= rssi_threshold
        idle = node not in busy
        if has:
            stage[1].append(node)
            if trusted:
                stage[2].append(node)
                if strong:
                    stage[3].append(node)
                    if idle:
                        stage[4].append(node)
    counts = tuple(len(s) for s in stage)
    if not stage[4]:
        return SERVER, counts, None
    ranked = sorted(stage[4], key=lambda n: (-rbt.get(n, 0.0), n))
    best = ranked[0]
    return best, counts, rbt.get(best, 0.0)


def replay_playout(join_at, arrivals, piece_duration, piece_count, prebuffer):
    """Startup delay and stall list from piece arrival times alone.

    ``arrivals``: piece -> arrival time. Plays back sequentially: starts once
    the contiguous buffer reaches ``prebuffer`` seconds, then for each piece
    waits for its arrival if it is late.
    """
    order = sorted(arrivals.items())
    assert [p for p, _ in order] == list(range(len(order)))
    need = min(piece_count, math.ceil(prebuffer / piece_duration - 1e-12))
    if len(order) < need:
        return None, [], None
    start = order[need - 1][1]
    t = start
    stalls = []
    for piece, arrived in order:
        if arrived > t:
            stalls.append((t, arrived))
            t = arrived
        t += piece_duration
    done = t if len(order) == piece_count else None
    return start - join_at, stalls, done


def random_snapshot(rng, piece_count=8, max_neighbors=8):
    """A random server-state description with coarse value grids so that
    ties and threshold boundaries come up often."""
    requester = 0
    k = int(rng.integers(0, max_neighbors + 1))
    pool = list(range(1, 20))
    ids = sorted(int(x) for x in rng.choice(pool, size=k, replace=False))
    piece = int(rng.integers(0, piece_count))
    neighbors = [(n, float(rng.choice([-90.0, -80.0, -75.0, -74.5, -60.0, -40.0]))) for n in ids]
    holdings = {}
    for n in ids + [int(x) for x in rng.choice(pool, size=3)]:
        holdings[n] = {int(p) for p in range(piece_count) if rng.random() < 0.5}
    trust_evals = []
    for n in ids:
        for _ in range(int(rng.integers(0, 3))):
            trust_evals.append((int(rng.choice([0, 30, 31])), n, float(rng.choice([0.0, 0.2, 0.5, 0.8, 1.0]))))
    busy = {n for n in ids if rng.random() < 0.3}
    rbt = {n: float(rng.choice([0.0, 4.0, 8.0, 10.0, 12.0, 30.0])) for n in ids if rng.random() < 0.9}
    return dict(
        requester=requester,
        piece=piece,
        neighbors=neighbors,
        holdings=holdings,
        trust_evals=trust_evals,
        busy=busy,
        rbt=rbt,
    )
