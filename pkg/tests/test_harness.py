"""Harness tests: config resolution, seeded runs, metrics, plot tables."""

import json
import os

import numpy as np
import pytest

from trackrl.buffer import ReplayBuffer
from trackrl.env import OBS_DIM, TrackEnv, benchmark_track, observation_scale
from trackrl.errors import ConfigError, TrainingError, UsageError
from trackrl.harness import (
    ALGOS, CSV_HEADER, EvalRecord, desk_config, emit_plots, eval_row,
    evaluate, experiment_config, load_checkpoint, parse_config_file,
    read_metrics, resolve_keys, run_experiment, run_seed, write_config_file,
)
from trackrl.harness.run import _PolicyActor, _RandomActor, eval_actor_for


def tiny_overrides(**extra):
    over = {
        "train.total_steps": 40, "train.exploration_steps": 20,
        "train.episode_len": 25, "train.eval_every": 20,
        "train.eval_episodes": 2, "train.seeds": "0",
        "agent.policy_layers": 1, "agent.policy_width": 8,
        "agent.critic_layers": 1, "agent.critic_width": 8,
        "agent.batch_size": 8,
        "model.layers": 1, "model.width": 8, "model.members": 2,
        "model.epochs": 2, "model.patience": 2, "model.retrain_every": 20,
        "model.batch_size": 16,
        "planner.samples": 6, "planner.horizon": 3, "planner.iterations": 1,
        "planner.particles": 1,
        "mbpo.rollouts": 10, "mbpo.capacity": 500,
    }
    over.update(extra)
    return over


# ---------------------------------------------------------------- config

def test_benchmark_defaults_per_algorithm():
    sac = experiment_config("sac")
    assert sac.total_steps == 3_000_000
    assert sac.exploration_steps == 5000
    assert sac.keys["train.episode_len"] == 2000
    assert sac.keys["train.ect_threshold"] == 3.0
    assert sac.keys["train.sample_time_ms"] == 100.0
    acfg = sac.agent_config()
    assert acfg.n_critics == 2 and acfg.utd == 1
    assert acfg.policy_hidden == (512, 512, 512)
    assert acfg.critic_hidden == (512, 512, 512)
    assert acfg.batch_size == 512 and acfg.target_entropy == -2.0
    assert acfg.reg_lat == 100.0 and acfg.reg_long == 100.0

    redq = experiment_config("redq")
    assert redq.total_steps == 300_000
    rcfg = redq.agent_config()
    assert rcfg.n_critics == 10 and rcfg.subset == 2 and rcfg.utd == 20
    assert rcfg.policy_agg == "mean"

    mbpo = experiment_config("mbpo")
    assert mbpo.agent_config().utd == 20
    assert mbpo.agent_config().n_critics == 2
    assert mbpo.keys["model.retrain_every"] == 500

    pets = experiment_config("pets-mppi")
    pcfg = pets.planner_config()
    assert (pcfg.samples, pcfg.horizon, pcfg.iterations) == (200, 10, 2)
    mcfg = pets.model_config()
    assert mcfg.hidden == (256, 256, 256, 256) and mcfg.members == 5
    assert mcfg.epochs == 100 and mcfg.patience == 5
    assert mcfg.batch_size == 512


def test_buffer_capacity_defaults_to_budget():
    cfg = experiment_config("redq")
    assert cfg.buffer_capacity == cfg.total_steps
    cfg = experiment_config("redq", {"train.buffer_capacity": 777})
    assert cfg.buffer_capacity == 777


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "exp.cfg"
    write_config_file(path, {"train.total_steps": 6000,
                             "agent.lr": 0.001,
                             "agent.policy_agg": "mean"})
    with open(path, "a") as f:
        f.write("# a comment line\n\n  train.eval_every = 1000  # inline\n")
    overrides = parse_config_file(path)
    cfg = experiment_config("sac", overrides)
    assert cfg.total_steps == 6000
    assert cfg.eval_every == 1000
    assert cfg.agent_config().lr == 0.001
    assert cfg.agent_config().policy_agg == "mean"


def test_config_validation_errors(tmp_path):
    with pytest.raises(ConfigError):
        resolve_keys("dqn")
    with pytest.raises(ConfigError):
        experiment_config("sac", {"no.such.key": 1})
    with pytest.raises(ConfigError):
        experiment_config("sac", {"train.total_steps": "many"})
    with pytest.raises(ConfigError):
        experiment_config("sac", {"train.total_steps": 100,
                                  "train.exploration_steps": 200})
    with pytest.raises(ConfigError):
        experiment_config("sac", {"track.name": "oval"})
    with pytest.raises(ConfigError):
        experiment_config("sac", {"agent.policy_agg": "max"})
    bad = tmp_path / "bad.cfg"
    bad.write_text("train.total_steps\n")
    with pytest.raises(ConfigError):
        parse_config_file(bad)


def test_seed_list_parsing():
    cfg = experiment_config("sac", {"train.seeds": "3, 1,4"})
    assert cfg.seeds == (3, 1, 4)
    with pytest.raises(ConfigError):
        experiment_config("sac", {"train.seeds": "3;4"}).seeds


def test_desk_preset_scales_down():
    sac = desk_config("sac")
    redq = desk_config("redq")
    assert sac.total_steps == 150_000 and redq.total_steps == 30_000
    assert sac.keys["train.episode_len"] == 500
    assert sac.agent_config().policy_hidden == (64, 64)
    assert redq.agent_config().n_critics == 10
    assert redq.exploration_steps == 5000


# ------------------------------------------------------------- evaluate

def quick_env(episode_len=25):
    cfg = experiment_config(
        "sac", tiny_overrides(**{"train.episode_len": episode_len}))
    return cfg, cfg.make_env()


def test_standstill_agent_strongly_negative():
    class Still:
        def begin_episode(self):
            pass

        def __call__(self, env, obs):
            return np.zeros(2)

    cfg, env = quick_env()
    records = evaluate(Still(), env, 1)
    rec = records[0]
    optimum = cfg.keys["train.episode_len"] * cfg.env_config().weights.r_surv
    assert rec.ret < -0.5 * optimum
    assert rec.termination == "length"
    assert rec.laps == 0


def test_evaluate_records_are_reproducible():
    cfg, env = quick_env()
    rng = np.random.default_rng(5)
    agent_cfg = cfg.agent_config()
    from trackrl.agent import SacAgent
    agent = SacAgent(OBS_DIM, 2, agent_cfg, observation_scale(cfg.env_config()),
                     rng)
    actor = _PolicyActor(agent, cfg.env_config().delta_max)
    first = evaluate(actor, env, 2)
    second = evaluate(actor, env, 2)
    assert first == second


def test_evaluate_never_touches_buffer_or_params():
    cfg, env = quick_env()
    rng = np.random.default_rng(5)
    from trackrl.agent import SacAgent
    agent = SacAgent(OBS_DIM, 2, cfg.agent_config(),
                     observation_scale(cfg.env_config()), rng)
    buffer = ReplayBuffer(64, {"obs": OBS_DIM, "action": 2, "reward": 0,
                               "obs2": OBS_DIM, "done": 0})
    before = [p.copy() for p in
              agent.policy.params() + agent.critics.params()]
    t_before = (agent.policy_adam.t, agent.critic_adam.t, agent.temp_adam.t)
    evaluate(_PolicyActor(agent, cfg.env_config().delta_max), env, 2)
    after = agent.policy.params() + agent.critics.params()
    assert len(buffer) == 0
    assert t_before == (agent.policy_adam.t, agent.critic_adam.t,
                        agent.temp_adam.t)
    assert all(np.array_equal(a, b) for a, b in zip(before, after))


def test_eval_record_rejects_negative_kpis():
    with pytest.raises(UsageError):
        EvalRecord(step=0, ret=0.0, ect=-1.0, egamma=0.0, ex=0.0, ay=0.0,
                   alat=0.0, along=0.0, laps=0, termination="length",
                   distance=1.0)


def test_eval_row_aggregation():
    recs = [EvalRecord(step=10, ret=100.0, ect=1.0, egamma=0.5, ex=2.0,
                       ay=3.0, alat=0.1, along=0.2, laps=1,
                       termination="length", distance=50.0),
            EvalRecord(step=10, ret=200.0, ect=3.0, egamma=1.5, ex=4.0,
                       ay=5.0, alat=0.3, along=0.4, laps=2,
                       termination="threshold", distance=60.0),
            EvalRecord(step=10, ret=300.0, ect=5.0, egamma=2.5, ex=6.0,
                       ay=7.0, alat=0.5, along=0.6, laps=3,
                       termination="threshold", distance=70.0)]
    row = eval_row(recs, seed=4)
    cells = row.split(",")
    assert cells[0] == "10" and cells[1] == "4"
    assert float(cells[2]) == 200.0
    assert float(cells[3]) == 3.0
    assert float(cells[9]) == 2.0
    assert cells[10] == "threshold"
    with pytest.raises(UsageError):
        eval_row([], seed=0)


# -------------------------------------------------------- seeded runs

def test_metrics_header_and_shape(tmp_path):
    cfg = experiment_config("sac", tiny_overrides())
    path = run_seed(cfg, 0, str(tmp_path))
    lines = open(path).read().splitlines()
    assert lines[0] == CSV_HEADER
    # evals at steps 20 (cadence, == exploration) and 40 (cadence + final)
    assert len(lines) == 3
    rows = read_metrics(path)
    assert [r["step"] for r in rows] == [20, 40]
    assert all(r["seed"] == 0 for r in rows)
    assert all(r[k] >= 0.0 for r in rows
               for k in ("ect", "egamma", "ex", "ay", "alat", "along"))


def test_zero_post_exploration_only_random_eval(tmp_path):
    over = tiny_overrides(**{"train.total_steps": 30,
                             "train.exploration_steps": 30,
                             "train.eval_every": 1000})
    cfg = experiment_config("sac", over)
    path = run_seed(cfg, 1, str(tmp_path))
    rows = read_metrics(path)
    assert len(rows) == 1
    assert rows[0]["step"] == 30


def test_zero_post_exploration_pets_untrained_planner(tmp_path):
    over = tiny_overrides(**{"train.total_steps": 10,
                             "train.exploration_steps": 10,
                             "train.eval_every": 1000,
                             "model.retrain_every": 50})
    cfg = experiment_config("pets-mppi", over)
    path = run_seed(cfg, 1, str(tmp_path))
    rows = read_metrics(path)
    assert len(rows) == 1 and rows[0]["step"] == 10


def test_same_seed_byte_identical(tmp_path):
    cfg = experiment_config("redq", tiny_overrides())
    a = run_seed(cfg, 7, str(tmp_path / "a"))
    b = run_seed(cfg, 7, str(tmp_path / "b"))
    assert open(a, "rb").read() == open(b, "rb").read()
    ca = tmp_path / "a" / "ckpt_redq_seed7.bin"
    cb = tmp_path / "b" / "ckpt_redq_seed7.bin"
    assert ca.read_bytes() == cb.read_bytes()


def test_training_env_consumes_exact_budget(tmp_path, monkeypatch):
    import trackrl.harness.run as runmod

    instances = []

    class CountingEnv(TrackEnv):
        def __init__(self, *a, **kw):
            super().__init__(*a, **kw)
            self.calls = 0
            instances.append(self)

        def step(self, action):
            self.calls += 1
            return super().step(action)

    monkeypatch.setattr(runmod, "TrackEnv", CountingEnv)
    cfg = experiment_config("sac", tiny_overrides())
    run_seed(cfg, 0, str(tmp_path))
    assert len(instances) == 2
    train_env, eval_env = instances
    assert train_env.calls == cfg.total_steps
    # two evaluations, two episodes each, bounded by the episode limit
    assert 0 < eval_env.calls <= 2 * 2 * cfg.keys["train.episode_len"]


def test_nonfinite_reward_aborts_with_diagnostic(tmp_path, monkeypatch):
    import trackrl.harness.run as runmod

    class EvilEnv(TrackEnv):
        def __init__(self, *a, **kw):
            super().__init__(*a, **kw)
            self.calls = 0

        def step(self, action):
            self.calls += 1
            obs, r, done, info = super().step(action)
            if self.calls == 15:
                r = float("nan")
            return obs, r, done, info

    monkeypatch.setattr(runmod, "TrackEnv", EvilEnv)
    cfg = experiment_config("sac", tiny_overrides())
    with pytest.raises(TrainingError, match="non-finite"):
        run_seed(cfg, 0, str(tmp_path))
    dump = tmp_path / "diagnostic_sac_seed0.json"
    assert dump.exists()
    payload = json.loads(dump.read_text())
    assert payload["step"] == 15
    assert payload["algo"] == "sac"
    assert len(payload["sv"]) == 22


def test_checkpoint_roundtrip_matches_policy(tmp_path):
    cfg = experiment_config("mbpo", tiny_overrides())
    run_seed(cfg, 2, str(tmp_path))
    ckpt = tmp_path / "ckpt_mbpo_seed2.bin"
    loaded_cfg, seed, step, objects = load_checkpoint(str(ckpt))
    assert seed == 2 and step == cfg.total_steps
    assert loaded_cfg.keys == cfg.keys
    env = loaded_cfg.make_env()
    obs = env.reset()
    action = objects["agent"].act(obs, deterministic=True)
    assert action.shape == (2,) and np.all(np.abs(action) <= 1.0)
    # the run retrained twice, so the manifest marks the model fitted
    assert objects["model_fitted"]


def test_checkpoint_rejects_other_files(tmp_path):
    path = tmp_path / "not_ckpt.bin"
    path.write_bytes(b"\x00\x01binary junk\n")
    with pytest.raises(ConfigError):
        load_checkpoint(str(path))
    path2 = tmp_path / "wrong_kind.bin"
    path2.write_bytes(b'{"kind": "other"}\n')
    with pytest.raises(ConfigError):
        load_checkpoint(str(path2))


def test_run_experiment_covers_all_seeds(tmp_path):
    cfg = experiment_config("sac", tiny_overrides(**{"train.seeds": "0,3"}))
    paths = run_experiment(cfg, str(tmp_path))
    assert [os.path.basename(p) for p in paths] == \
        ["metrics_sac_seed0.csv", "metrics_sac_seed3.csv"]
    merged = [read_metrics(p) for p in paths]
    assert [r["seed"] for r in merged[0]] == [0, 0]
    assert [r["seed"] for r in merged[1]] == [3, 3]


def test_eval_actor_for_untrained_planner_is_random():
    cfg = experiment_config("pets-mppi", tiny_overrides())
    from trackrl.planner import PetsAgent
    pets = PetsAgent(cfg.make_track(), cfg.env_config(), cfg.model_config(),
                     cfg.planner_config(), np.random.default_rng(0))
    actor = eval_actor_for(cfg, {"pets": pets}, np.random.default_rng(1))
    assert isinstance(actor, _RandomActor)


# --------------------------------------------------- buffer uniformity

def test_buffer_sampling_uniform_within_five_sd():
    buf = ReplayBuffer(100, {"value": 0})
    for i in range(100):
        buf.add(value=float(i))
    rng = np.random.default_rng(42)
    counts = np.zeros(100)
    draws, batch = 10_000, 10
    for _ in range(draws):
        batch_vals = buf.sample(batch, rng)["value"]
        counts[batch_vals.astype(int)] += 1
    expected = draws * batch / 100
    sd = np.sqrt(draws * (batch / 100) * (1 - batch / 100))
    assert np.all(np.abs(counts - expected) <= 5 * sd)


# ------------------------------------------------------------- plots

def _write_metrics(path, seed, rows):
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for step, ret in rows:
            cells = [str(step), str(seed), repr(float(ret))] + \
                [repr(1.0)] * 6 + [repr(0.0), "length"]
            f.write(",".join(cells) + "\n")


def test_plot_mean_and_population_sd(tmp_path):
    _write_metrics(tmp_path / "metrics_sac_seed0.csv", 0, [(10, 10.0)])
    _write_metrics(tmp_path / "metrics_sac_seed1.csv", 1, [(10, 20.0)])
    out = tmp_path / "plots"
    written = emit_plots(str(tmp_path), str(out))
    assert sorted(os.path.basename(p) for p in written) == \
        ["plot_kpis_sac.csv", "plot_returns_sac.csv"]
    lines = (out / "plot_returns_sac.csv").read_text().splitlines()
    assert lines[0] == "step,mean,sd,n"
    step, mean, sd, n = lines[1].split(",")
    assert (step, n) == ("10", "2")
    assert float(mean) == 15.0 and float(sd) == 5.0


def test_plot_single_seed_sd_zero(tmp_path):
    _write_metrics(tmp_path / "metrics_redq_seed4.csv", 4,
                   [(10, 1.5), (20, 2.5)])
    out = tmp_path / "plots"
    emit_plots(str(tmp_path), str(out))
    rows = (out / "plot_returns_redq.csv").read_text().splitlines()[1:]
    assert len(rows) == 2
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)
    kpi_lines = (out / "plot_kpis_redq.csv").read_text().splitlines()
    assert kpi_lines[0].split(",")[:3] == ["step", "ect_mean", "ect_sd"]
    assert len(kpi_lines) == 3
    assert len(kpi_lines[1].split(",")) == 15


def test_plot_step_grid_intersection(tmp_path):
    _write_metrics(tmp_path / "metrics_sac_seed0.csv", 0,
                   [(10, 1.0), (20, 2.0), (30, 3.0)])
    _write_metrics(tmp_path / "metrics_sac_seed1.csv", 1,
                   [(10, 2.0), (20, 4.0)])
    out = tmp_path / "plots"
    emit_plots(str(tmp_path), str(out))
    rows = (out / "plot_returns_sac.csv").read_text().splitlines()[1:]
    assert [r.split(",")[0] for r in rows] == ["10", "20"]


def test_plot_best_k_selection(tmp_path):
    for seed, final in ((0, 10.0), (1, 30.0), (2, 20.0)):
        _write_metrics(tmp_path / f"metrics_mbpo_seed{seed}.csv", seed,
                       [(10, final)])
    out = tmp_path / "plots"
    emit_plots(str(tmp_path), str(out), best_k=2)
    row = (out / "plot_returns_mbpo.csv").read_text().splitlines()[1]
    assert float(row.split(",")[1]) == 25.0
    with pytest.raises(ConfigError):
        emit_plots(str(tmp_path), str(out), best_k=9)


def test_plot_requires_metrics(tmp_path):
    with pytest.raises(UsageError):
        emit_plots(str(tmp_path), str(tmp_path / "plots"))
    bad = tmp_path / "metrics_sac_seed0.csv"
    bad.write_text("wrong,header\n")
    with pytest.raises(ConfigError):
        read_metrics(str(bad))


# --------------------------------------------------------------- CLI

def test_cli_train_eval_plot(tmp_path):
    from trackrl.harness.cli import main

    cfg_path = tmp_path / "tiny.cfg"
    write_config_file(cfg_path, tiny_overrides())
    out = tmp_path / "runs"
    rc = main(["train", "--config", str(cfg_path), "--algo", "sac",
               "--seed", "0", "--out", str(out)])
    assert rc == 0
    assert (out / "metrics_sac_seed0.csv").exists()

    rc = main(["eval", "--checkpoint", str(out / "ckpt_sac_seed0.bin"),
               "--episodes", "2"])
    assert rc == 0

    rc = main(["plot", "--in", str(out), "--out", str(tmp_path / "plots")])
    assert rc == 0
    assert (tmp_path / "plots" / "plot_returns_sac.csv").exists()


def test_cli_bad_inputs(tmp_path):
    from trackrl.harness.cli import main

    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("bogus.key = 1\n")
    rc = main(["train", "--config", str(cfg_path), "--algo", "sac",
               "--seed", "0", "--out", str(tmp_path)])
    assert rc == 2
    with pytest.raises(SystemExit):
        main(["train", "--algo", "ppo", "--seed", "0", "--out", "x"])
    rc = main(["plot", "--in", str(tmp_path / "nothing"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_all_algo_tags_accepted():
    assert ALGOS == ("sac", "redq", "pets-mppi", "mbpo")
    for algo in ALGOS:
        experiment_config(algo, tiny_overrides())
