"""Desk-scale multi-cell handover lab.

Simulates an outdoor macro-cell network with obstacle-driven coverage
holes, generates labeled full-stack feature traces via deterministic
handover campaigns, trains sequence regressors on the traces, and
compares learned handover target selection against an A2-RSRP benchmark.
"""

from holab.config import ScenarioConfig, TrainConfig

__all__ = ["ScenarioConfig", "TrainConfig"]
__version__ = "0.1.0"
