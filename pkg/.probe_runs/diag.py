"""Instrumented desk-scale run: log learner internals every 250 steps."""
import sys
import time

import numpy as np

sys.path.insert(0, "src")
from trackrl.agent import SacAgent
from trackrl.buffer import ReplayBuffer
from trackrl.env import observation_scale
from trackrl.harness.config import desk_config
from trackrl.mbpo import LEARNER_FIELDS

utd = int(sys.argv[1]) if len(sys.argv) > 1 else 20
total = int(sys.argv[2]) if len(sys.argv) > 2 else 9000

cfg = desk_config("redq", {"agent.utd": utd, "train.seeds": "0"})
env = cfg.make_env()
acfg = cfg.agent_config()
rng = np.random.default_rng(7)
agent = SacAgent(55, 2, acfg, observation_scale(cfg.env_config()), rng)
buf = ReplayBuffer(total, LEARNER_FIELDS)
dmax = cfg.env_config().delta_max
explo = cfg.exploration_steps

obs = env.reset()
probe = None
ep_ret, ep_steps, rets = 0.0, 0, []
t0 = time.time()
for step in range(1, total + 1):
    if step <= explo:
        a_env = rng.uniform(-dmax, dmax, 2)
    else:
        a_env = agent.act(obs, rng) * dmax
    obs2, r, done, info = env.step(a_env)
    buf.add(obs=obs, action=info["action"] / dmax, reward=r, obs2=obs2,
            done=1.0 if info["termination"] == "threshold" else 0.0)
    ep_ret += r
    ep_steps += 1
    obs = obs2
    if done:
        rets.append(ep_ret)
        ep_ret, ep_steps = 0.0, 0
        obs = env.reset()
    if step == explo:
        probe = buf.sample(256, np.random.default_rng(99))
    if step > explo:
        agent.agent_step(buf, rng)
    if step > explo and step % 250 == 0:
        po = agent.scale_obs(probe["obs"])
        x = np.concatenate([po, probe["action"]], axis=-1)
        q = agent.critics.forward_np(x.astype(acfg.dtype)).astype(np.float64)
        a_s, logp = agent.sample_actions_np(po, np.random.default_rng(5))
        mean, log_std = agent._policy_out_np(po)
        batch = buf.sample(256, np.random.default_rng(98))
        y = agent.compute_target(batch, np.random.default_rng(97))
        print(f"step {step:5d} temp {agent.temperature:9.2e} "
              f"H {-logp.mean():6.2f} std {np.exp(log_std).mean():6.3f} "
              f"|mean| {np.abs(np.tanh(mean)).mean():5.2f} "
              f"Q[{q.min():10.1f},{q.mean():10.1f},{q.max():10.1f}] "
              f"spread {q.std(axis=0).mean():8.1f} "
              f"y[{y.min():9.1f},{y.mean():9.1f}] "
              f"ep_ret {np.mean(rets[-8:]) if rets else 0.0:9.1f}",
              flush=True)
print(f"done utd={utd} {total} steps in {(time.time()-t0)/60:.1f} min")
