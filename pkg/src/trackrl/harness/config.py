"""Experiment configuration: per-algorithm defaults plus flat key files.

Every hyperparameter of the benchmark is a flat dotted key with a typed
default. A config file is plain text, one ``key = value`` per line, with
``#`` comments; unknown keys and malformed values are startup errors.
Defaults reproduce the paper-scale benchmark settings; the desk preset
(see ``desk_overrides``) shrinks networks and budgets so a full
comparison fits on one workstation core.
"""

from dataclasses import dataclass, field

from ..agent import AgentConfig
from ..env import EnvConfig, TrackEnv, benchmark_track
from ..errors import ConfigError
from ..mbpo import MbpoConfig
from ..model import ModelConfig
from ..planner import PlannerConfig

ALGOS = ("sac", "redq", "pets-mppi", "mbpo")

# Canonical key table. Tuples of (default, type); per-algorithm
# overrides below adjust the handful of settings that differ by method.
_BASE = {
    "train.total_steps": (300_000, int),
    "train.exploration_steps": (5000, int),
    "train.episode_len": (2000, int),
    "train.ect_threshold": (3.0, float),
    "train.sample_time_ms": (100.0, float),
    "train.eval_every": (5000, int),
    "train.eval_episodes": (5, int),
    "train.buffer_capacity": (0, int),       # 0: use total_steps
    "train.seeds": ("0,1,2,3,4", str),
    "agent.policy_layers": (3, int),
    "agent.policy_width": (512, int),
    "agent.critic_layers": (3, int),
    "agent.critic_width": (512, int),
    "agent.n_critics": (2, int),
    "agent.subset": (2, int),
    "agent.utd": (1, int),
    "agent.batch_size": (512, int),
    "agent.target_entropy": (-2.0, float),
    "agent.reg_lat": (100.0, float),
    "agent.reg_long": (100.0, float),
    "agent.gamma": (0.99, float),
    "agent.tau": (0.005, float),
    "agent.lr": (3e-4, float),
    "agent.policy_agg": ("min", str),
    "planner.samples": (200, int),
    "planner.horizon": (10, int),
    "planner.iterations": (2, int),
    "planner.temperature": (20.0, float),
    "planner.sigma": (0.08, float),
    "planner.smooth": (0.7, float),
    "planner.particles": (5, int),
    "model.epochs": (100, int),
    "model.patience": (5, int),
    "model.retrain_every": (500, int),
    "model.batch_size": (512, int),
    "model.members": (5, int),
    "model.layers": (4, int),
    "model.width": (256, int),
    "model.lr": (3e-4, float),
    "mbpo.rollout_len": (3, int),
    "mbpo.rollouts": (400, int),
    "mbpo.capacity": (100_000, int),
    "mbpo.real_frac": (0.05, float),
    "track.name": ("benchmark", str),
    "track.spacing": (2.0, float),
}

_PER_ALGO = {
    "sac": {"train.total_steps": 3_000_000},
    "redq": {"agent.n_critics": 10, "agent.utd": 20,
             "agent.policy_agg": "mean"},
    "mbpo": {"agent.utd": 20},
    "pets-mppi": {},
}


def parse_config_file(path):
    """Read a flat ``key = value`` file into a string-valued dict."""
    overrides = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            overrides[key.strip()] = value.strip()
    return overrides


def _coerce(key, value, typ):
    if isinstance(value, str) and typ is not str:
        try:
            value = typ(value)
        except ValueError:
            raise ConfigError(
                f"config key {key}: cannot parse {value!r} as {typ.__name__}")
    if typ is int and isinstance(value, float):
        if value != int(value):
            raise ConfigError(f"config key {key}: {value} is not an integer")
        value = int(value)
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, typ):
        raise ConfigError(
            f"config key {key}: expected {typ.__name__}, "
            f"got {type(value).__name__}")
    return value


def resolve_keys(algo, overrides=None):
    """Merge defaults, per-algorithm values, and overrides into one dict."""
    if algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {algo!r}; choose from {ALGOS}")
    keys = {k: default for k, (default, _) in _BASE.items()}
    keys.update(_PER_ALGO[algo])
    for key, value in (overrides or {}).items():
        if key not in _BASE:
            raise ConfigError(f"unknown config key {key!r}")
        keys[key] = _coerce(key, value, _BASE[key][1])
    return keys


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one training experiment."""

    algo: str
    keys: dict = field(repr=False)

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ConfigError(
                f"unknown algorithm {self.algo!r}; choose from {ALGOS}")
        k = self.keys
        if k["train.total_steps"] < k["train.exploration_steps"]:
            raise ConfigError(
                "total steps must be at least the exploration steps")
        if k["train.total_steps"] < 1:
            raise ConfigError("total steps must be positive")
        if k["train.eval_every"] < 1 or k["train.eval_episodes"] < 1:
            raise ConfigError("evaluation cadence and episodes must be >= 1")
        if k["track.name"] != "benchmark":
            raise ConfigError(f"unknown track {k['track.name']!r}")
        # Sub-configs validate their own ranges on construction.
        self.env_config()
        self.agent_config()
        self.planner_config()
        self.model_config()
        self.mbpo_config()

    @property
    def total_steps(self):
        return self.keys["train.total_steps"]

    @property
    def exploration_steps(self):
        return self.keys["train.exploration_steps"]

    @property
    def eval_every(self):
        return self.keys["train.eval_every"]

    @property
    def eval_episodes(self):
        return self.keys["train.eval_episodes"]

    @property
    def buffer_capacity(self):
        cap = self.keys["train.buffer_capacity"]
        return cap if cap > 0 else self.total_steps

    @property
    def seeds(self):
        raw = str(self.keys["train.seeds"])
        try:
            return tuple(int(s) for s in raw.split(",") if s.strip() != "")
        except ValueError:
            raise ConfigError(f"cannot parse seed list {raw!r}")

    def env_config(self):
        k = self.keys
        return EnvConfig(dt=k["train.sample_time_ms"] / 1000.0,
                         episode_len=k["train.episode_len"],
                         ect_threshold=k["train.ect_threshold"],
                         wp_spacing=k["track.spacing"])

    def agent_config(self):
        k = self.keys
        return AgentConfig(
            n_critics=k["agent.n_critics"], subset=k["agent.subset"],
            utd=k["agent.utd"], gamma=k["agent.gamma"], tau=k["agent.tau"],
            lr=k["agent.lr"], batch_size=k["agent.batch_size"],
            target_entropy=k["agent.target_entropy"],
            reg_lat=k["agent.reg_lat"], reg_long=k["agent.reg_long"],
            policy_agg=k["agent.policy_agg"],
            policy_hidden=(k["agent.policy_width"],) * k["agent.policy_layers"],
            critic_hidden=(k["agent.critic_width"],) * k["agent.critic_layers"])

    def planner_config(self):
        k = self.keys
        return PlannerConfig(
            samples=k["planner.samples"], horizon=k["planner.horizon"],
            iterations=k["planner.iterations"],
            temperature=k["planner.temperature"], sigma=k["planner.sigma"],
            smooth=k["planner.smooth"], particles=k["planner.particles"])

    def model_config(self):
        k = self.keys
        return ModelConfig(hidden=(k["model.width"],) * k["model.layers"],
                           members=k["model.members"], lr=k["model.lr"],
                           batch_size=k["model.batch_size"],
                           epochs=k["model.epochs"],
                           patience=k["model.patience"])

    def mbpo_config(self):
        k = self.keys
        return MbpoConfig(retrain_every=k["model.retrain_every"],
                          rollout_len=k["mbpo.rollout_len"],
                          rollouts=k["mbpo.rollouts"],
                          capacity=k["mbpo.capacity"],
                          real_frac=k["mbpo.real_frac"])

    def make_track(self):
        return benchmark_track(spacing=self.keys["track.spacing"])

    def make_env(self, track=None):
        return TrackEnv(track if track is not None else self.make_track(),
                        self.env_config())


def experiment_config(algo, overrides=None):
    """Build an ExperimentConfig from defaults plus optional overrides."""
    return ExperimentConfig(algo, resolve_keys(algo, overrides))


def desk_overrides(algo):
    """Workstation-scale preset: small nets, short episodes, small budgets.

    Keeps the benchmark's structure (exploration length, cadences, model
    sizes relative to task difficulty) while fitting each run on a single
    CPU core: SAC trains for 150k steps, the data-efficient methods for
    30k, preserving the 5x budget ratio the comparison is about.
    """
    over = {
        "train.total_steps": 150_000 if algo == "sac" else 30_000,
        "train.episode_len": 500,
        "agent.policy_layers": 2, "agent.policy_width": 64,
        "agent.critic_layers": 2, "agent.critic_width": 64,
        "agent.batch_size": 128,
        "model.layers": 2, "model.width": 64,
        "model.batch_size": 256,
        "planner.samples": 64,
        "planner.particles": 2,
    }
    return over


def desk_config(algo, extra=None):
    over = desk_overrides(algo)
    over.update(extra or {})
    return experiment_config(algo, over)


def write_config_file(path, overrides):
    """Write a flat key-value file that ``parse_config_file`` reads back."""
    with open(path, "w") as f:
        for key in sorted(overrides):
            f.write(f"{key} = {overrides[key]}\n")
