"""Service/CLI configuration: llada.toml plus environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .llm import ENV_CASSETTE, ENV_KEY, ENV_MODE, ENV_MODEL, ENV_URL

DEFAULT_CONFIG_NAME = "llada.toml"


@dataclass
class LlmConfig:
    mode: str = "replay"
    url: str | None = None
    api_key: str | None = None
    model_id: str = "gpt-4"
    cassette: str | None = None


@dataclass
class ServiceConfig:
    corpus_dir: str = "corpus"
    sessions_path: str = "sessions.jsonl"
    port: int = 8000
    cors_origin: str = "*"
    llm: LlmConfig = field(default_factory=LlmConfig)


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Read llada.toml (explicit path, else ./llada.toml if present) and
    apply LLADA_* environment overrides on top."""
    data: dict = {}
    candidate = Path(path) if path else Path(DEFAULT_CONFIG_NAME)
    if candidate.exists():
        with candidate.open("rb") as fh:
            data = tomllib.load(fh)
    elif path is not None:
        raise FileNotFoundError(f"config file not found: {path}")

    service = data.get("service", {})
    llm = data.get("llm", {})
    config = ServiceConfig(
        corpus_dir=service.get("corpus_dir", "corpus"),
        sessions_path=service.get("sessions_path", "sessions.jsonl"),
        port=int(service.get("port", 8000)),
        cors_origin=service.get("cors_origin", "*"),
        llm=LlmConfig(
            mode=llm.get("mode", "replay"),
            url=llm.get("url"),
            api_key=llm.get("api_key"),
            model_id=llm.get("model_id", "gpt-4"),
            cassette=llm.get("cassette"),
        ),
    )
    env = os.environ
    config.llm.mode = env.get(ENV_MODE, config.llm.mode)
    config.llm.url = env.get(ENV_URL, config.llm.url)
    config.llm.api_key = env.get(ENV_KEY, config.llm.api_key)
    config.llm.model_id = env.get(ENV_MODEL, config.llm.model_id)
    config.llm.cassette = env.get(ENV_CASSETTE, config.llm.cassette)
    return config
