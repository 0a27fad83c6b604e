"""Engine configuration: a sectioned, commented TOML file.

Secrets (endpoints, keys) come from the environment only; the file holds
structure and tuning. Unknown keys are rejected at load.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

from ..agents.types import AgentConfig
from ..errors import InvalidConfig
from ..watersim import TankConfig


@dataclass(frozen=True)
class EngineConfig:
    tank: TankConfig = field(default_factory=TankConfig)
    agents: tuple[AgentConfig, ...] = field(
        default_factory=lambda: tuple(AgentConfig(agent_id=k) for k in range(7)))
    emotion_provider: str = "reference"
    tts_provider: str = "reference"
    output_dir: str = "out"
    frame_rate: float = 20.0
    out_rate: int = 8000
    retain_sealed: bool = True
    rounds_2_3_repeats: int = 1
    key_id: str = "default"
    contemplation_seconds: float = 4.0

    def __post_init__(self):
        if len(self.agents) != 7 or sorted(a.agent_id for a in self.agents) != list(range(7)):
            raise InvalidConfig("agents must be the six speakers plus summarizer (ids 0..6)")
        if self.emotion_provider not in ("reference", "external"):
            raise InvalidConfig(f"unknown emotion_provider {self.emotion_provider!r}")
        if self.frame_rate <= 0 or self.out_rate < 1000:
            raise InvalidConfig("frame_rate must be positive and out_rate >= 1000")
        self.tank.validate()


_ENGINE_KEYS = {
    "emotion_provider", "tts_provider", "output_dir", "frame_rate", "out_rate",
    "retain_sealed", "rounds_2_3_repeats", "key_id", "contemplation_seconds",
}
_TANK_KEYS = {
    "length_m", "width_m", "depth_m", "grid_nx", "grid_ny",
    "wave_speed_mps", "damping_per_s", "source_radius_m",
}
_AGENT_KEYS = {"provider", "model_hint", "system_prompt"}


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise InvalidConfig(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


def parse_config(text: str) -> EngineConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig(f"config parse error: {exc}") from exc
    _check_keys("", raw, {"engine", "tank", "agents"})
    engine = raw.get("engine", {})
    _check_keys("engine", engine, _ENGINE_KEYS)
    tank_raw = raw.get("tank", {})
    _check_keys("tank", tank_raw, _TANK_KEYS)
    tank = TankConfig(**tank_raw)
    agents_raw = raw.get("agents", {})
    _check_keys("agents", agents_raw, {f"a{k}" for k in range(7)})
    agents = []
    for k in range(7):
        spec = agents_raw.get(f"a{k}", {})
        _check_keys(f"agents.a{k}", spec, _AGENT_KEYS)
        agents.append(AgentConfig(
            agent_id=k,
            provider_name=spec.get("provider", "mock"),
            model_hint=spec.get("model_hint", ""),
            system_prompt=spec.get("system_prompt", ""),
        ))
    return EngineConfig(tank=tank, agents=tuple(agents), **engine)


def load_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    return parse_config(Path(path).read_text())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(cfg: EngineConfig) -> str:
    """Serialize back to the same sectioned format (round-trip stable)."""
    lines = ["# whisperwater engine configuration", "", "[engine]"]
    for key in sorted(_ENGINE_KEYS):
        lines.append(f"{key} = {_toml_value(getattr(cfg, key))}")
    lines += ["", "# tank geometry and wave physics", "[tank]"]
    for key in sorted(_TANK_KEYS):
        lines.append(f"{key} = {_toml_value(getattr(cfg.tank, key))}")
    for agent in cfg.agents:
        lines += ["", f"[agents.a{agent.agent_id}]"]
        lines.append(f"provider = {_toml_value(agent.provider_name)}")
        lines.append(f"model_hint = {_toml_value(agent.model_hint)}")
        lines.append(f"system_prompt = {_toml_value(agent.system_prompt)}")
    return "\n".join(lines) + "\n"
