"""Sample-based entropy tracking versus the closed form.

For score models without tractable densities, the conditional entropy is
estimated by denoising two trajectory populations (one per decision side)
while each trajectory tracks its posterior from the gap between the two
conditional denoising means.  Here the exact mixture oracle drives the
sampler, so the estimate can be checked against the quadrature answer: the
agreement tightens as the population grows.
"""

import json
from pathlib import Path

import numpy as np

from diffentropy import (
    GmmScoreModel,
    MixtureModel,
    conditional_entropy_at,
    estimate_conditional_entropy,
    linear_schedule,
    make_partition,
)
from diffentropy.cli import main as cli

OUT = Path(__file__).resolve().parent / "output" / "02_tracking"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    mixture = MixtureModel.deltas([-8.0, -4.0, 6.0, 8.0])
    schedule = linear_schedule(1000)
    partition = make_partition(mixture, [3], [2])
    model = GmmScoreModel(mixture, schedule, partition)

    quad = np.array([conditional_entropy_at(mixture, partition, schedule.alpha_bar(t))
                     for t in range(1, 1001)])

    print("Decision: delta at 8 vs delta at 6 (even priors), T=1000, seed 42")
    for n in (100, 1000):
        est = estimate_conditional_entropy(model, schedule, n_z0=n, n_z1=n, seed=42)
        gap = np.max(np.abs(est.H_bits[1:] - quad))
        print(f"  N={n:>5} per side: max |H_tracked - H_quadrature| = {gap:.4f} bits")

    config = {
        "mixture": {"means": [-8.0, -4.0, 6.0, 8.0]},
        "schedule": {"num_steps": 1000, "beta_start": 1e-4, "beta_end": 0.02},
        "partitions": [{"preset": "one-vs-one", "classes": [3, 2], "name": "pair"}],
        "method": "montecarlo",
        "seed": 42,
        "samples": 1000,
    }
    config_path = OUT / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    assert cli(["estimate", "--config", str(config_path), "--out", str(OUT), "--svg"]) == 0
    print(f"\nWrote estimate.csv and estimate.svg under {OUT}")
    print("The tracked series reproduces the closed form to a few hundredths")
    print("of a bit at N=1000; the residual wiggle is Monte-Carlo noise.")


if __name__ == "__main__":
    main()
