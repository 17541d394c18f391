from .sac import AgentConfig, SacAgent, redq_config, sac_config, soft_update

__all__ = [
    "AgentConfig",
    "SacAgent",
    "redq_config",
    "sac_config",
    "soft_update",
]
