"""More phones, less cellular traffic: the same room with 1 to 30 viewers."""

from movisim.cli import sweep
from movisim.sim import flash_crowd


def main(seeds=3):
    res = sweep(flash_crowd(1, 0), [1, 2, 5, 10, 20, 30], seeds)
    for row in res["means"]:
        bar = "#" * round(40 * row["improvement"])
        print(f"{row['node_count']:>3} nodes  {row['improvement']:.3f}  {bar}")


if __name__ == "__main__":
    main()
