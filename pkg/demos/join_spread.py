"""How much traffic leaves the cellular link depends on how spread out the
joins are.

Requests are strictly in order and a completed node keeps serving, so the
only pieces the server must send are the ones nobody nearby holds yet. When
everybody presses play at once nobody holds anything; when joins are spread
over minutes almost every piece already exists somewhere in the crowd.
"""

import numpy as np

from movisim import flash_crowd, run

SPREADS = [0, 2, 5, 10, 20, 60, 120]


def main(seeds=3):
    print("join spread (s)  improvement  mean startup (s)  mean stall (s)")
    for spread in SPREADS:
        reports = [run(flash_crowd(30, s, offset_range=(0.0, float(spread)))) for s in range(seeds)]
        imp = np.mean([r.improvement for r in reports])
        start = np.mean([r.mean_startup_delay() for r in reports])
        stall = np.mean([r.mean_stall_total() for r in reports])
        print(f"{spread:>15}  {imp:>11.3f}  {start:>16.3f}  {stall:>14.3f}")


if __name__ == "__main__":
    main()
