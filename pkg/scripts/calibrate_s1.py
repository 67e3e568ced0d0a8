"""Scenario-1 analog calibration: 10 demos, desk config, snapshot evals.

Scratch calibration for picking the acceptance step budget; writes progress
to stdout. Run: python3 scripts/calibrate_s1.py
"""
import time

import numpy as np

from actvp.demos import DemoConfig, generate_demos
from actvp.episodes import save_dataset
from actvp.model import ActModel, ModelConfig
from actvp.runtime import evaluate
from actvp.trainer import TrainConfig, train


def main():
    t0 = time.perf_counter()
    demos = generate_demos(1, per_product=10, seed=0, config=DemoConfig())
    print(f"10 demos in {time.perf_counter()-t0:.0f}s, T: {[e.T for e in demos]}", flush=True)

    mc = ModelConfig()  # desk defaults, d64
    tc = TrainConfig(batch_size=8, steps=8000, learning_rate=1e-3, beta=10.0,
                     seed=0, checkpoint_every=2000)
    t0 = time.perf_counter()
    ckpt, metrics = train(demos, mc, tc, "/tmp/s1_calib")
    dt = time.perf_counter() - t0
    print(f"8000 steps in {dt/60:.1f} min ({dt/8000*1000:.0f} ms/step)", flush=True)
    for s in (1000, 2000, 4000, 6000, 7999):
        tail = np.mean([m[1] for m in metrics[s - 99:s + 1]])
        print(f"  l_rec@{s}: {tail:.4f}", flush=True)

    for step in (4000, 6000, 8000):
        path = f"/tmp/s1_calib/model_step{step:06d}.actw" if step < 8000 else ckpt
        model, stats, _, _ = ActModel.load(path)
        for mode in ("ensemble", "replan"):
            t0 = time.perf_counter()
            rep = evaluate(model, stats, scenario=1, trials_per_category=20, seed=100,
                           mode=mode)
            print(f"step {step} {mode}: {rep.overall_rate():.0%} "
                  f"({time.perf_counter()-t0:.0f}s)  {rep.rows[0].failures}", flush=True)


if __name__ == "__main__":
    main()
