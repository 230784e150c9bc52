"""Generate the 48-hour desk-case forecast and realized traces.

Demand follows a daily cycle between roughly 24 and 40 GW. Wind is a slowly
varying capacity factor on 40 GW. The realized trace adds an AR(1) wind error.
"""

import argparse
from pathlib import Path

import numpy as np

from freqsuc.scenarios import write_profile_csv


def desk_profiles(hours: int = 72, capacity: float = 40000.0, seed: int = 7):
    h = np.arange(hours)
    demand = 32000 + 7000 * np.sin(2 * np.pi * (h - 10) / 24) + 1500 * np.sin(2 * np.pi * (h - 7) / 12)
    cf = 0.42 + 0.22 * np.sin(2 * np.pi * (h + 6) / 30) + 0.08 * np.sin(2 * np.pi * h / 9)
    wind = np.clip(cf, 0.02, 0.95) * capacity
    rng = np.random.default_rng(seed)
    err = np.zeros(hours)
    for k in range(1, hours):
        err[k] = 0.8 * err[k - 1] + rng.normal(0.0, 600.0)
    realized_wind = np.clip(wind + err, 0.0, capacity)
    return demand, wind, realized_wind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src" / "freqsuc" / "data"))
    ap.add_argument("--hours", type=int, default=72)
    args = ap.parse_args()
    demand, wind, realized = desk_profiles(args.hours)
    out = Path(args.out)
    write_profile_csv(out / "desk_forecast.csv", demand, wind)
    write_profile_csv(out / "desk_realized.csv", demand, realized)
    print(f"wrote {out / 'desk_forecast.csv'} and {out / 'desk_realized.csv'}")


if __name__ == "__main__":
    main()
