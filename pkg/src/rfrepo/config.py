"""Node configuration: one JSON file describes a deployable repository node."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import DEFAULT_MAX_DUTY, DEFAULT_MIN_SAMPLES, DEFAULT_THRESHOLD_DBM
from .model import BUILTIN_PLANS, ChannelPlan, DeviceKind
from .state import NodeRole


@dataclass
class PeerConfig:
    url: str
    token: str = ""


@dataclass
class NodeConfig:
    node_id: str = "node-1"
    role: NodeRole = NodeRole.REGIONAL
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    data_dir: str | None = None
    peers: list[PeerConfig] = field(default_factory=list)
    admin_token: str = ""
    peer_token: str = ""
    sync_interval_s: float = 30.0
    snapshot_interval: int = 10_000
    channel_plans: dict[str, ChannelPlan] = field(default_factory=dict)
    calibration_db: dict[DeviceKind, float] = field(default_factory=dict)
    threshold_dbm: float = DEFAULT_THRESHOLD_DBM
    max_duty: float = DEFAULT_MAX_DUTY
    min_samples: int = DEFAULT_MIN_SAMPLES

    def plans(self) -> dict[str, ChannelPlan]:
        merged = dict(BUILTIN_PLANS)
        merged.update(self.channel_plans)
        return merged


def load_config(path) -> NodeConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = NodeConfig()
    cfg.node_id = raw.get("node_id", cfg.node_id)
    cfg.role = NodeRole(raw.get("role", cfg.role.value))
    listen = raw.get("listen", f"{cfg.listen_host}:{cfg.listen_port}")
    host, _, port = listen.rpartition(":")
    cfg.listen_host = host or cfg.listen_host
    cfg.listen_port = int(port)
    cfg.data_dir = raw.get("data_dir")
    cfg.peers = [PeerConfig(p["url"], p.get("token", "")) for p in raw.get("peers", [])]
    cfg.admin_token = raw.get("admin_token", "")
    cfg.peer_token = raw.get("peer_token", "")
    cfg.sync_interval_s = float(raw.get("sync_interval_s", cfg.sync_interval_s))
    cfg.snapshot_interval = int(raw.get("snapshot_interval", cfg.snapshot_interval))
    for p in raw.get("channel_plans", []):
        plan = ChannelPlan(
            name=p["name"],
            base_hz=int(p["base_hz"]),
            channel_width_hz=int(p["channel_width_hz"]),
            first_index=int(p.get("first_index", 0)),
            count=int(p["count"]),
        )
        cfg.channel_plans[plan.name] = plan
    for kind, offset in raw.get("calibration_db", {}).items():
        cfg.calibration_db[DeviceKind(kind)] = float(offset)
    defaults = raw.get("defaults", {})
    cfg.threshold_dbm = float(defaults.get("threshold_dbm", cfg.threshold_dbm))
    cfg.max_duty = float(defaults.get("max_duty", cfg.max_duty))
    cfg.min_samples = int(defaults.get("min_samples", cfg.min_samples))
    return cfg
