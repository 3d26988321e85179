"""A well-stocked phone gets bad reviews at t = 60 s and stops serving.

Node 0 starts first, so for a minute it is the obvious source for everyone.
Two peers then report it as untrustworthy; its mean trust drops under 0.5
and the scheduler routes around it from that instant on.
"""

from pathlib import Path

from movisim.config import load_scenario
from movisim.sim import run

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "blacklist_10.json"


def main():
    r = run(load_scenario(SCENARIO))
    event = min(e["at"] for e in r.config["trust_events"])
    picks = [d["at"] for d in r.decisions if d["source"] == 0]
    print(f"trust event at t = {event:g} s")
    for lo in range(0, int(event) + 60, 10):
        n = sum(1 for t in picks if lo <= t < lo + 10)
        print(f"  {lo:>4}-{lo + 10:<4} s  node 0 chosen {n:>2} times  {'*' * n}")
    print(f"offload with node 0 excluded after the event: {r.improvement:.3f}")


if __name__ == "__main__":
    main()
