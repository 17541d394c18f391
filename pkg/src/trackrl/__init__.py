"""Data-efficient RL for vehicle trajectory control.

Subpackages:
    nn       - tape autodiff, MLP stacks, Adam, Gaussian heads
    env      - surrogate vehicle, track geometry, rewards, gym-style env
    model    - probabilistic ensemble and the split prediction scheme
    planner  - MPPI action-sequence optimizer
    agents   - SAC / REDQ learners and the MBPO orchestrator
    harness  - configs, replay buffer, experiment runner, CLI
"""

__version__ = "0.1.0"
