"""Service configuration: JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

ENV_PORT = "TEACHER_SERVICE_PORT"
ENV_DEVICE = "TEACHER_SERVICE_DEVICE"

VALID_MODES = ("neural", "mock-linear")


@dataclass
class ServiceConfig:
    mode: str = "mock-linear"
    model: str = ""
    max_batch_size: int = 64
    device: str = "cpu"
    weights_file: Optional[str] = None
    port: int = 8500

    def __post_init__(self):
        if self.mode not in VALID_MODES:
            raise ValueError(f"mode must be one of {VALID_MODES}, "
                             f"got {self.mode!r}")
        if self.max_batch_size <= 0:
            raise ValueError("max_batch_size must be positive")
        if not 0 < self.port < 65536:
            raise ValueError(f"invalid port {self.port}")
        if self.mode == "mock-linear":
            if not self.weights_file:
                raise ValueError("mock-linear mode requires weights_file")
            if not self.model:
                self.model = f"mock-linear:{Path(self.weights_file).name}"
        elif not self.model:
            raise ValueError("neural mode requires a model identifier")


def load_config(path: str | Path) -> ServiceConfig:
    """Read a JSON config file; TEACHER_SERVICE_PORT and
    TEACHER_SERVICE_DEVICE environment variables override the file."""
    with open(path) as f:
        raw = json.load(f)
    known = {k: raw[k] for k in
             ("mode", "model", "max_batch_size", "device", "weights_file",
              "port") if k in raw}
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if ENV_PORT in os.environ:
        known["port"] = int(os.environ[ENV_PORT])
    if ENV_DEVICE in os.environ:
        known["device"] = os.environ[ENV_DEVICE]
    return ServiceConfig(**known)
