"""Service configuration (environment variables overridden by CLI flags)."""

import os
from dataclasses import dataclass

DEFAULT_MODEL = "hash-trigram-256"


@dataclass(frozen=True)
class ServiceConfig:
    model: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8765
    max_batch: int = 256
    normalize: bool = True  # always on: clients rely on unit-norm vectors

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if not self.normalize:
            raise ValueError("normalization cannot be disabled")

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        values = {
            "model": os.environ.get("EMBED_SERVICE_MODEL", DEFAULT_MODEL),
            "host": os.environ.get("EMBED_SERVICE_HOST", "127.0.0.1"),
            "port": int(os.environ.get("EMBED_SERVICE_PORT", "8765")),
            "max_batch": int(os.environ.get("EMBED_SERVICE_MAX_BATCH", "256")),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
