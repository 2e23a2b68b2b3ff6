"""Diversity pressure in action on a bimodal regression task.

The data has two branches: y is close to +(1 + x^2) or -(1 + x^2) with
even odds. A pointwise regressor forced to commit to one value ends up
near the useless mean of the branches. A noise-fed sampler trained with
the diversity term can place candidates on both branches instead.
"""

import numpy as np

from disconet import (
    NetConfig,
    ObjectiveConfig,
    TrainConfig,
    gen_conditional_bimodal,
    sample_candidates,
    substream,
    train,
)

net = NetConfig(x_dim=1, y_dim=1, z_dim=8, encoder_widths=(32,), decoder_widths=(32, 32))
data = gen_conditional_bimodal(1024, substream(0, "demo-bimodal"))


def run(gamma):
    cfg = TrainConfig(
        objective=ObjectiveConfig(gamma=gamma, num_candidates=16),
        lr=0.01,
        momentum=0.9,
        batch_size=64,
        epochs=60,
        seed=0,
        val_count=256,
    )
    params, history = train(net, cfg, data)
    print(
        f"gamma={gamma}: train objective {history.epochs[0].train_objective:.3f} "
        f"(epoch 1) -> {history.final().train_objective:.3f} (epoch {cfg.epochs})"
    )
    return params


with_pressure = run(0.5)
without = run(0.0)

# sample 8 candidates at a few inputs and look at where they land
print("\ncandidates at selected inputs (8 draws each):")
for x0 in (-0.8, 0.0, 0.8):
    both = 1.0 + x0 * x0
    print(f"  x={x0:+.1f} (branches at ±{both:.2f}):")
    for name, params in (("gamma=0.5", with_pressure), ("gamma=0  ", without)):
        cs = sample_candidates(params, np.array([x0]), 8, substream(7, "demo-draws"))
        vals = ", ".join(f"{v:+.2f}" for v in sorted(cs.outputs[:, 0]))
        spread = cs.outputs[:, 0].max() - cs.outputs[:, 0].min()
        print(f"    {name}: [{vals}]  spread {spread:.2f}")

print(
    "\nwith pressure the draws split across both branches; without it they"
    "\ncollapse near a single value regardless of the noise input"
)
