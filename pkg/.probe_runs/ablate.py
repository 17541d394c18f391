"""REDQ desk-scale ablations: vary utd/batch, short budgets, seed 0."""
import sys
import time

sys.path.insert(0, "src")
from trackrl.harness import desk_config, run_seed

ARMS = {
    "utd1": {"agent.utd": 1, "train.total_steps": 15000},
    "utd5": {"agent.utd": 5, "train.total_steps": 15000},
    "utd20b256": {"agent.batch_size": 256, "train.total_steps": 12000},
    "utd20min": {"agent.policy_agg": "min", "train.total_steps": 12000},
}

for name in sys.argv[1:]:
    extra = dict(ARMS[name])
    extra["train.eval_every"] = 2500
    extra["train.seeds"] = "0"
    cfg = desk_config("redq", extra)
    t0 = time.time()
    print(f"=== arm {name} start", flush=True)
    run_seed(cfg, 0, f".probe_runs/ablate_{name}",
             log=lambda m: print(f"{name} {m}", flush=True))
    print(f"=== arm {name} done in {(time.time() - t0) / 60:.1f} min",
          flush=True)
