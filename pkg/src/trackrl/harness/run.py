"""Seeded training runs with periodic frozen evaluation.

One seed is one fully deterministic process: every random draw comes
from generators derived from the seed, metrics rows append to a per-seed
CSV as evaluations complete, and a checkpoint is written at the end.
Evaluation freezes the agent (policy mean action, planner on a fixed
generator derived from the training step) and never touches the replay
buffer or any parameter.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from ..agent import SacAgent
from ..buffer import ReplayBuffer
from ..env import OBS_DIM, SV_DIM, TrackEnv, observation_scale
from ..errors import ConfigError, TrainingError, UsageError
from ..mbpo import LEARNER_FIELDS, REAL_FIELDS, MbpoController
from ..model import ProbabilisticEnsemble
from ..planner import PetsAgent
from .config import ExperimentConfig, resolve_keys

CSV_HEADER = ("step,seed,return,ect_mean,egamma_mean,ex_mean,"
              "ay_mean,alat_mean,along_mean,laps,termination")

# Distinct entropy tags keep the training and evaluation generator
# families disjoint even for coinciding seed integers.
_TRAIN_TAG = 0x7231
_EVAL_TAG = 0x6576


@dataclass
class EvalRecord:
    """One frozen-policy episode, KPIs normalized per meter driven."""

    step: int
    ret: float
    ect: float
    egamma: float
    ex: float
    ay: float
    alat: float
    along: float
    laps: int
    termination: str
    distance: float

    def __post_init__(self):
        for name in ("ect", "egamma", "ex", "ay", "alat", "along"):
            if getattr(self, name) < 0.0:
                raise UsageError(f"KPI {name} must be nonnegative")


class _PolicyActor:
    """Deterministic policy-mean actions scaled to environment units."""

    def __init__(self, agent, delta_max):
        self.agent = agent
        self.delta_max = delta_max

    def begin_episode(self):
        pass

    def __call__(self, env, obs):
        return self.agent.act(obs, deterministic=True) * self.delta_max


class _PlannerActor:
    """Receding-horizon planner driven by a caller-owned generator."""

    def __init__(self, pets, rng):
        self.pets = pets
        self.rng = rng

    def begin_episode(self):
        self.pets.episode_start()

    def __call__(self, env, obs):
        return self.pets.act(env.sv, env.pose, float(env.fp.arc), self.rng)


class _RandomActor:
    def __init__(self, rng, delta_max):
        self.rng = rng
        self.delta_max = delta_max

    def begin_episode(self):
        pass

    def __call__(self, env, obs):
        return self.rng.uniform(-self.delta_max, self.delta_max, 2)


def evaluate(actor, env, episodes, step=0):
    """Run frozen-policy episodes and compute per-episode records.

    KPI means divide accumulated magnitudes by meters driven (floored at
    one meter so a stalled vehicle cannot divide by zero). Does not
    write to any buffer and does not update any parameter.
    """
    records = []
    for _ in range(episodes):
        actor.begin_episode()
        obs = env.reset()
        ret = 0.0
        sums = np.zeros(6)
        while True:
            action = actor(env, obs)
            obs, r, done, info = env.step(action)
            ret += r
            sums += (abs(info["e_ct"]), abs(info["e_gamma"]),
                     abs(info["e_vx"]), abs(info["ay"]),
                     abs(info["action"][0]), abs(info["action"][1]))
            if done:
                break
        denom = max(info["distance"], 1.0)
        kpis = sums / denom
        records.append(EvalRecord(
            step=step, ret=ret, ect=float(kpis[0]), egamma=float(kpis[1]),
            ex=float(kpis[2]), ay=float(kpis[3]), alat=float(kpis[4]),
            along=float(kpis[5]), laps=int(info["laps"]),
            termination=info["termination"], distance=float(info["distance"])))
    return records


def eval_row(records, seed):
    """Aggregate one evaluation's records into a metrics CSV line."""
    if not records:
        raise UsageError("cannot aggregate an empty evaluation")
    step = records[0].step
    means = [float(np.mean([getattr(rec, name) for rec in records]))
             for name in ("ret", "ect", "egamma", "ex", "ay", "alat",
                          "along", "laps")]
    causes = sorted(rec.termination for rec in records)
    majority = max(set(causes), key=lambda c: (causes.count(c), c))
    cells = [str(step), str(seed)] + [repr(v) for v in means] + [majority]
    return ",".join(cells)


def _dump_diagnostic(out_dir, algo, seed, step, episodes, env, note):
    path = os.path.join(out_dir, f"diagnostic_{algo}_seed{seed}.json")
    payload = {
        "algo": algo, "seed": seed, "step": step, "episodes": episodes,
        "note": note,
        "sv": [float(v) for v in env.sv],
        "pose": [float(v) for v in env.pose],
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
    return path


def save_checkpoint(path, cfg, seed, step, agent=None, ensemble=None,
                    model_fitted=True):
    """Manifest line plus the binary payloads the algorithm needs.

    The fitted flag records whether the saved ensemble weights have been
    trained; the blob alone cannot distinguish that.
    """
    manifest = {"kind": "trackrl-checkpoint", "algo": cfg.algo, "seed": seed,
                "step": step, "model_fitted": bool(model_fitted),
                "keys": cfg.keys}
    with open(path, "wb") as f:
        f.write((json.dumps(manifest, sort_keys=True) + "\n").encode())
        if agent is not None:
            agent.save(f)
        if ensemble is not None:
            ensemble.save(f)


def load_checkpoint(path):
    """Rebuild the frozen agent a checkpoint describes.

    Returns (cfg, seed, step, objects) where objects holds "agent",
    "ensemble", or "pets" entries as the algorithm requires.
    """
    with open(path, "rb") as f:
        try:
            manifest = json.loads(f.readline().decode())
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ConfigError(f"{path} is not a checkpoint file")
        if manifest.get("kind") != "trackrl-checkpoint":
            raise ConfigError(f"{path} is not a checkpoint file")
        algo = manifest["algo"]
        cfg = ExperimentConfig(algo, resolve_keys(algo, manifest["keys"]))
        env_cfg = cfg.env_config()
        rng0 = np.random.default_rng(0)
        objects = {}
        if algo in ("sac", "redq", "mbpo"):
            agent = SacAgent(OBS_DIM, 2, cfg.agent_config(),
                             observation_scale(env_cfg), rng0)
            agent.load_params(f)
            objects["agent"] = agent
        if algo == "mbpo":
            ensemble = ProbabilisticEnsemble(cfg.model_config())
            ensemble.load_params(f)
            objects["ensemble"] = ensemble
            objects["model_fitted"] = bool(manifest.get("model_fitted", True))
        if algo == "pets-mppi":
            pets = PetsAgent(cfg.make_track(), env_cfg, cfg.model_config(),
                             cfg.planner_config(), rng0)
            pets.ensemble.load_params(f)
            pets.trained = bool(manifest.get("model_fitted", True))
            objects["pets"] = pets
    return cfg, int(manifest["seed"]), int(manifest["step"]), objects


def eval_actor_for(cfg, objects, rng):
    """Frozen evaluation actor for a (possibly untrained) experiment."""
    delta_max = cfg.env_config().delta_max
    if cfg.algo == "pets-mppi":
        pets = objects["pets"]
        if pets.trained:
            return _PlannerActor(pets, rng)
        return _RandomActor(rng, delta_max)
    return _PolicyActor(objects["agent"], delta_max)


def _eval_rng(seed, step):
    return np.random.default_rng(
        np.random.SeedSequence([_EVAL_TAG, seed, step]))


def run_seed(cfg, seed, out_dir, log=None):
    """Train one seed end to end; returns the metrics file path.

    Exploration uses uniform random actions for the configured number of
    steps, then the algorithm acts and learns. Every evaluation cadence
    (and at the final step) the frozen agent runs evaluation episodes on
    a separate environment instance and one aggregated CSV row is
    appended and flushed. The environment step budget is consumed
    exactly; a non-finite reward, observation, or training loss aborts
    the run after writing a diagnostic dump.
    """
    os.makedirs(out_dir, exist_ok=True)
    algo = cfg.algo
    total = cfg.total_steps
    explo = cfg.exploration_steps
    retrain_every = cfg.keys["model.retrain_every"]
    env_cfg = cfg.env_config()
    dmax = env_cfg.delta_max
    track = cfg.make_track()
    env = TrackEnv(track, cfg.env_config())
    env_eval = TrackEnv(track, cfg.env_config())

    ss = np.random.SeedSequence([_TRAIN_TAG, seed])
    rng_init, rng_explore, rng_train = \
        (np.random.default_rng(c) for c in ss.spawn(3))
    scale = observation_scale(env_cfg)

    objects = {}
    buffer = controller = pets = agent = None
    data_sv = data_a = data_sv2 = None
    if algo in ("sac", "redq"):
        agent = SacAgent(OBS_DIM, 2, cfg.agent_config(), scale, rng_init)
        buffer = ReplayBuffer(cfg.buffer_capacity, LEARNER_FIELDS)
        objects["agent"] = agent
    elif algo == "mbpo":
        agent = SacAgent(OBS_DIM, 2, cfg.agent_config(), scale, rng_init)
        ensemble = ProbabilisticEnsemble(cfg.model_config(), rng_init)
        real = ReplayBuffer(cfg.buffer_capacity, REAL_FIELDS)
        controller = MbpoController(track, env_cfg, agent, ensemble,
                                    cfg.mbpo_config(), real=real)
        objects["agent"] = agent
        objects["ensemble"] = ensemble
    else:
        pets = PetsAgent(track, env_cfg, cfg.model_config(),
                         cfg.planner_config(), rng_init)
        data_sv = np.zeros((total, SV_DIM))
        data_a = np.zeros((total, 2))
        data_sv2 = np.zeros((total, SV_DIM))
        objects["pets"] = pets

    metrics_path = os.path.join(out_dir, f"metrics_{algo}_seed{seed}.csv")
    steps_done = 0
    episodes = 0
    obs = env.reset()
    if pets is not None:
        pets.episode_start()

    def abort(note):
        path = _dump_diagnostic(out_dir, algo, seed, steps_done, episodes,
                                env, note)
        raise TrainingError(f"{note} at step {steps_done} (seed {seed}); "
                            f"diagnostic written to {path}")

    with open(metrics_path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        f.flush()
        while steps_done < total:
            exploring = steps_done < explo
            if exploring:
                a_env = rng_explore.uniform(-dmax, dmax, 2)
            elif algo == "pets-mppi":
                if pets.trained:
                    a_env = pets.act(env.sv, env.pose, float(env.fp.arc),
                                     rng_train)
                else:
                    a_env = rng_explore.uniform(-dmax, dmax, 2)
            else:
                a_env = agent.act(obs, rng=rng_train) * dmax

            pre_sv = env.sv
            pre_pose = env.pose.copy()
            pre_arc = float(env.fp.arc)
            obs2, r, done, info = env.step(a_env)
            steps_done += 1
            if not np.isfinite(r) or not np.all(np.isfinite(obs2)):
                abort("non-finite environment signal")

            done_flag = 1.0 if info["termination"] == "threshold" else 0.0
            a_unit = info["action"] / dmax
            try:
                if algo in ("sac", "redq"):
                    buffer.add(obs=obs, action=a_unit, reward=r, obs2=obs2,
                               done=done_flag)
                    if not exploring:
                        agent.agent_step(buffer, rng_train)
                elif algo == "mbpo":
                    controller.observe(obs, a_unit, r, obs2, done_flag,
                                       pre_pose, pre_arc, rng_train,
                                       learn=not exploring)
                else:
                    data_sv[steps_done - 1] = pre_sv
                    data_a[steps_done - 1] = info["action"]
                    data_sv2[steps_done - 1] = env.sv
                    if steps_done % retrain_every == 0:
                        pets.fit_model(data_sv[:steps_done],
                                       data_a[:steps_done],
                                       data_sv2[:steps_done], rng_train)
            except TrainingError as err:
                abort(f"non-finite training signal ({err})")

            obs = obs2
            if done:
                obs = env.reset()
                episodes += 1
                if pets is not None:
                    pets.episode_start()

            at_cadence = steps_done % cfg.eval_every == 0 and \
                steps_done >= explo
            if at_cadence or steps_done == total:
                actor = eval_actor_for(cfg, objects,
                                       _eval_rng(seed, steps_done))
                records = evaluate(actor, env_eval, cfg.eval_episodes,
                                   step=steps_done)
                f.write(eval_row(records, seed) + "\n")
                f.flush()
                if log is not None:
                    rets = [rec.ret for rec in records]
                    log(f"{algo} seed {seed} step {steps_done}: "
                        f"eval return {np.mean(rets):.1f}")

    if steps_done != total:
        raise TrainingError(
            f"step budget mismatch: consumed {steps_done}, budget {total}")
    ckpt = os.path.join(out_dir, f"ckpt_{algo}_seed{seed}.bin")
    ensemble = objects.get("ensemble") or \
        (pets.ensemble if pets is not None else None)
    fitted = pets.trained if pets is not None else \
        (ensemble.fitted if ensemble is not None else True)
    save_checkpoint(ckpt, cfg, seed, steps_done,
                    agent=objects.get("agent"), ensemble=ensemble,
                    model_fitted=fitted)
    return metrics_path


def run_experiment(cfg, out_dir, log=None):
    """Run every configured seed sequentially; returns metrics paths.

    Seeds are independent: for process-level parallelism, invoke the
    train CLI once per seed with the same output directory instead.
    """
    return [run_seed(cfg, seed, out_dir, log=log) for seed in cfg.seeds]
