"""Scale presets tying workspace, camera, crop size and network together."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .errors import ConfigError
from .learn import NetSpec, desk_net, paper_net
from .render import CameraModel, camera_for
from .scene import Workspace


@dataclass(frozen=True)
class Preset:
    name: str
    workspace: Workspace
    camera: CameraModel
    crop: int  # px cropped around a grasp centre
    net: NetSpec  # its input_size is the resized patch side

    @property
    def net_input(self):
        return self.net.input_size


def desk_preset() -> Preset:
    """400 mm bin imaged at 0.64 px/mm (256 px); 40 px crops resized to 32."""
    ws = Workspace(0.0, 0.0, 400.0, 400.0)
    return Preset("desk", ws, camera_for(ws, 0.64), 40, desk_net())


def paper_preset() -> Preset:
    """1280 x 720 px camera over an 800 x 450 mm bin; 160 px crops resized to 227."""
    ws = Workspace(0.0, 0.0, 800.0, 450.0)
    return Preset("paper", ws, camera_for(ws, 1.6), 160, paper_net())


PRESETS = {"desk": desk_preset, "paper": paper_preset}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def stable_hash(obj) -> str:
    """SHA-256 of the canonical JSON encoding of ``obj``."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def thread_cap(default=1) -> int:
    """Worker cap from ``GRASPLAB_THREADS`` (at least 1)."""
    raw = os.environ.get("GRASPLAB_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GRASPLAB_THREADS must be an integer, got {raw!r}") from None
