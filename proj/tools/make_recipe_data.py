"""Regenerate the synthetic data files read by the fit recipes in configs/."""

import argparse
import csv
from pathlib import Path

import numpy as np

import spinhole


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "configs" / "data")
    parser.add_argument("--seed", type=int, default=20)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    scheme = spinhole.LevelScheme()

    # 3 % multiplicative scatter on the rate law, 1.4 to 3.0 K.
    temps = np.round(np.arange(14, 31) / 10.0, 1)
    rates = [spinhole.gamma_of_t(t) * (1 + 0.03 * rng.standard_normal()) for t in temps]
    write(args.out / "relax_rates.csv", ["temperature_k", "rate_per_s"], zip(temps, rates))

    taus = np.linspace(0.05, 4.0, 50)
    amps = [spinhole.echo_amplitude(t, 1.3, 1.8) * (1 + 0.01 * rng.standard_normal()) for t in taus]
    write(args.out / "echo_decay.csv", ["tau_s", "amplitude"], zip(taus, amps))

    grid = np.linspace(-2.0e9, 0.5e9, 1001)
    pumped = spinhole.synthesize_absorption(scheme, spinhole.polarized_populations(7, 0.95), grid)
    pumped = pumped + 0.5 * rng.standard_normal(grid.size)
    write(args.out / "pumped_spectrum.csv", ["frequency_hz", "value"], zip(grid, pumped))

    gamma = spinhole.gamma_of_t(1.4)
    times = np.array([0.0, 300.0, 600.0, 1200.0, 2400.0])
    states = spinhole.evolve_populations(scheme, spinhole.polarized_populations(7, 0.95), gamma, 1.4, times)
    grid = np.linspace(-1.5e9, 1.5e9, 301)
    rows = []
    for t, p in zip(times, states):
        s = spinhole.synthesize_absorption(scheme, list(p), grid)
        s = s * (1 + 0.01 * rng.standard_normal(grid.size))
        rows.extend((t, f, v) for f, v in zip(grid, s))
    write(args.out / "relaxation_series.csv", ["time_s", "frequency_hz", "value"], rows)


if __name__ == "__main__":
    main()
