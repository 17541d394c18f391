import sys, time
from trackrl.harness import desk_config, run_experiment

for algo in ("sac", "redq", "mbpo", "pets-mppi"):
    cfg = desk_config(algo, {"train.seeds": "0"})
    t0 = time.time()
    print(f"=== {algo} start", flush=True)
    run_experiment(cfg, "/root/pkg/.probe_runs", log=lambda m: print(m, flush=True))
    print(f"=== {algo} done in {(time.time()-t0)/60:.1f} min", flush=True)
