"""Regenerate the bundled toy city network (5x6 grid, 98 directed edges).

Attributes are drawn once with a fixed seed and committed as CSV; runs never
regenerate the file. Inclines are kept shallow enough that consumption stays
positive at any plausible speed.
"""

from pathlib import Path

import numpy as np

ROWS, COLS = 5, 6
LAT0, LON0 = 57.690, 11.920
DLAT, DLON = 0.0035, 0.0055
SPEED_CLASSES = [8.33, 13.89, 16.67]
SPEED_PROBS = [0.3, 0.5, 0.2]


def main() -> None:
    rng = np.random.default_rng(20260810)
    coords = {}
    for r in range(ROWS):
        for c in range(COLS):
            coords[r * COLS + c] = (LAT0 + DLAT * r, LON0 + DLON * c)

    adjacencies = []
    for r in range(ROWS):
        for c in range(COLS):
            u = r * COLS + c
            if c + 1 < COLS:
                adjacencies.append((u, u + 1))
            if r + 1 < ROWS:
                adjacencies.append((u, u + COLS))

    rows = []
    for u, v in adjacencies:
        length = float(rng.uniform(250.0, 700.0))
        # |incline| <= 0.006 keeps rolling + drag above the downhill grade
        # term at any speed, so consumption stays positive in both directions
        incline = float(rng.uniform(0.0, 0.006)) * (1 if rng.random() < 0.5 else -1)
        limit = float(rng.choice(SPEED_CLASSES, p=SPEED_PROBS))
        for a, b, grade in ((u, v, incline), (v, u, -incline)):
            mean_speed = limit * float(rng.uniform(0.55, 0.95))
            speed_var = (0.12 * mean_speed) ** 2
            lat1, lon1 = coords[a]
            lat2, lon2 = coords[b]
            rows.append(
                [a, b, repr(length), repr(grade), repr(limit), repr(mean_speed), repr(speed_var),
                 repr(lat1), repr(lon1), repr(lat2), repr(lon2)]
            )

    out = Path(__file__).resolve().parents[1] / "src" / "bandit_nav" / "data" / "toy_city.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    header = "from_id,to_id,length_m,incline_rad,speed_limit_mps,mean_speed_mps,speed_var,lat1,lon1,lat2,lon2"
    lines = [header] + [",".join(str(x) for x in row) for row in rows]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(rows)} edges, {ROWS * COLS} vertices)")


if __name__ == "__main__":
    main()
