#!/usr/bin/env python3
"""Write the published-table attempt logs used as aggregator fixtures.

Each table row becomes a CSV in the simulator's attempt-log format. Failures are
spread over episodes deterministically; every record carries the row's mean
attempt time so the time column reproduces exactly.
"""
import argparse
import csv
import pathlib

HEADER = ["episode_id", "mode", "arm", "block_id", "direction", "result",
          "duration_s", "is_recovery", "corrected_later"]

# name: (mode, episodes, attempts, pick, stuck, fall, corrected stuck, mean time)
TABLES = {
    "table1_single": ("single", 20, 236, 3, 17, 11, 5, "10.020"),
    "table1_bilateral": ("bilateral", 5, 59, 2, 4, 7, 3, "5.720"),
    "table2_single": ("single", 2, 24, 0, 1, 0, 0, "5.080"),
    "table2_bilateral": ("bilateral", 2, 24, 1, 3, 0, 0, "3.450"),
    "table3_single": ("single", 10, 120, 0, 0, 0, 0, "4.610"),
    "table3_bilateral": ("bilateral", 10, 122, 2, 3, 0, 0, "2.710"),
}


def rows(mode, episodes, attempts, pick, stuck, fall, corrected, duration):
    results = ["PickFail"] * pick + ["PlaceStuck"] * stuck + ["PlaceFall"] * fall
    results += ["Success"] * (attempts - len(results))
    # Interleave failures through the log instead of front-loading them.
    stride = 7
    order = sorted(range(attempts), key=lambda i: ((i * stride) % attempts, i))
    placed = [None] * attempts
    for slot, res in zip(order, results):
        placed[slot] = res
    per_episode = [attempts // episodes + (1 if e < attempts % episodes else 0) for e in range(episodes)]
    out = []
    idx = 0
    stuck_seen = 0
    for ep, count in enumerate(per_episode):
        for k in range(count):
            res = placed[idx]
            direction = "LeftToRight" if k < count // 2 else "RightToLeft"
            arm = "Right" if mode == "single" else ("Left" if k % 2 == 0 else "Right")
            fixed = 0
            if res == "PlaceStuck" and stuck_seen < corrected:
                fixed = 1
                stuck_seen += 1
            recovery = 1 if k >= 12 else 0
            out.append([ep, mode, arm, k % 6, direction, res, duration, recovery, fixed])
            idx += 1
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in TABLES.items():
        with open(out / f"{name}.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(HEADER)
            w.writerows(rows(*spec))


if __name__ == "__main__":
    main()
