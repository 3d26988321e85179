"""3G-only first, then the same crowd with ad-hoc Wi-Fi sharing switched on.

Thirty phones in a 50 m square start the same 4-minute clip over two
minutes. With sharing off every byte crosses the cellular link; with it on,
the server hands most piece requests to a nearby phone that already holds
the piece and has the deepest buffer.
"""

from dataclasses import replace

from movisim import flash_crowd, run
from movisim.metrics import compare


def main(seed=0):
    sc = flash_crowd(30, seed)
    base = run(replace(sc, mode="server-only"))
    p2p = run(sc)
    out = compare(base, p2p)
    print(f"{'':22}{'3G only':>14}{'P2P':>14}{'delta':>14}")
    for name, row in out["metrics"].items():
        a, b, d = row["a"], row["b"], row["delta"]
        fmt = "{:>14,.0f}" if name.endswith("bytes") else "{:>14.3f}"
        print(f"{name:22}" + "".join(fmt.format(v) for v in (a, b, d)))
    peers = sum(1 for t in p2p.transfers if t["source"] != "server")
    print(f"\n{peers} of {len(p2p.transfers)} pieces travelled phone to phone")


if __name__ == "__main__":
    main()
