"""One viewer's buffer over time, joining late next to an early viewer.

Prints the remaining buffer time (RBT) every few seconds together with
where each piece came from.
"""

from movisim.core import VideoSpec
from movisim.sim import Scenario, Simulation


def main():
    sc = Scenario(node_count=2, video=VideoSpec(20, 262144, 524288.0),
                  positions=[(0.0, 0.0), (8.0, 0.0)], start_offsets=[0.0, 30.0])
    sim = Simulation(sc)
    for t in range(30, 120, 6):
        sim.advance(float(t))
        # client state is advanced lazily; project it to t from its last event
        snap = sim.clients[1].snapshot(sc.video)
        print(f"t={t:>4}s  playhead {snap.playhead_at(t):6.2f}s  rbt {snap.rbt_at(t):6.2f}s  held {len(snap.held):>2}")
    report = sim.run()
    src = ["srv" if t["source"] == "server" else f"n{t['source']}" for t in report.transfers if t["dest"] == 1]
    print("piece sources for node 1:", " ".join(src))


if __name__ == "__main__":
    main()
