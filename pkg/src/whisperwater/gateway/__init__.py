from .config import EngineConfig, load_config, dump_config
from .asr import transcribe

__all__ = ["EngineConfig", "load_config", "dump_config", "transcribe"]
