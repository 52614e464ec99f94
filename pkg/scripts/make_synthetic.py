"""Regenerate data/synthetic_tiny.csv.

Two channels of sinusoid plus linear trend, sampled hourly.  Every future
sample of such a series is an exact linear function of a long enough
lookback window, so a linear forecaster can drive its training loss to
zero on this data.  The file is fully deterministic; rerunning this
script reproduces it byte for byte.
"""

import math
from datetime import datetime, timedelta
from pathlib import Path

LENGTH = 2048
OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic_tiny.csv"


def sample(t: int) -> tuple[float, float]:
    s1 = 0.9 * math.sin(2.0 * math.pi * t / 24.0) + 0.002 * t + 0.5
    s2 = 1.3 * math.sin(2.0 * math.pi * t / 16.0 + 0.7) - 0.0015 * t + 2.0
    return s1, s2


def main() -> None:
    OUT.parent.mkdir(parents=True, exist_ok=True)
    start = datetime(2020, 1, 1)
    lines = ["date,s1,s2"]
    for t in range(LENGTH):
        stamp = (start + timedelta(hours=t)).strftime("%Y-%m-%d %H:%M:%S")
        s1, s2 = sample(t)
        lines.append(f"{stamp},{s1!r},{s2!r}")
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({LENGTH} rows)")


if __name__ == "__main__":
    main()
