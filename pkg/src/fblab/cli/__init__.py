"""Experiment runner, strict configuration and FBL1 snapshots."""
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, parse_config
from .snapshot import decode_snapshot, encode_snapshot, load_snapshot, save_snapshot

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "decode_snapshot", "encode_snapshot", "load_config",
           "load_snapshot", "parse_config", "save_snapshot"]
