"""Run configuration: a TOML document mapped onto typed settings."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .distill import DEFAULT_EXCLUDED_FIELDS, SECTIONS, DistillationConfig
from .gateway import ModelProfile, RetryPolicy
from .summarizer import PromptTemplate, default_template

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class GatewaySettings:
    timeout_s: float = 60.0
    max_attempts: int = 3
    backoff_base_ms: int = 500
    jitter: float = 0.2
    max_in_flight: int = 4
    embed_batch_size: int = 128

    def retry_policy(self) -> RetryPolicy:
        return RetryPolicy(self.max_attempts, self.backoff_base_ms / 1000.0, self.jitter)


@dataclass(frozen=True)
class RunConfig:
    distillation: DistillationConfig
    template: PromptTemplate
    profiles: tuple[ModelProfile, ...]
    embedder_profile: ModelProfile
    keyphrase_k: int = 10
    parallelism: int = 1
    output_dir: Path = Path("out")
    gateway: GatewaySettings = field(default_factory=GatewaySettings)

    def __post_init__(self) -> None:
        if not self.profiles:
            raise ConfigError("profiles: at least one model profile is required")
        names = [p.model_name for p in self.profiles]
        if len(set(names)) != len(names):
            raise ConfigError("profiles: model_name values must be unique")
        if self.parallelism < 1:
            raise ConfigError("parallelism: must be >= 1")
        if self.keyphrase_k < 1:
            raise ConfigError("keyphrase_k: must be >= 1")

    def effective(self) -> dict[str, Any]:
        """Secret-free view of the configuration, used for the config digest."""
        d = self.distillation
        return {
            "distillation": {
                "excluded_fields": sorted(d.excluded_fields),
                "token_budget": d.token_budget,
                "section_priority": list(d.section_priority),
                "max_calls_per_process": d.max_calls_per_process,
            },
            "template": self.template.to_dict(),
            "profiles": [p.public_dict() for p in self.profiles],
            "embedder": self.embedder_profile.public_dict(),
            "keyphrase_k": self.keyphrase_k,
            "gateway": {
                "timeout_s": self.gateway.timeout_s,
                "max_attempts": self.gateway.max_attempts,
                "backoff_base_ms": self.gateway.backoff_base_ms,
                "jitter": self.gateway.jitter,
                "embed_batch_size": self.gateway.embed_batch_size,
            },
        }

    def digest(self) -> str:
        # parallelism and output_dir do not change results, so they stay out
        canonical = json.dumps(self.effective(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _require_table(data: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = data.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"{key}: must be a table")
    return value


def _build(what: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


_PROFILE_KEYS = {"model_name", "endpoint_url", "api_key", "quantization_hint", "max_output_tokens",
                 "temperature", "api_key_env"}


def _profile(where: str, raw: Any) -> ModelProfile:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{where}: must be a table")
    unknown = set(raw) - _PROFILE_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    for key in ("model_name", "endpoint_url"):
        if key not in raw:
            raise ConfigError(f"{where}.{key}: required")
    return _build(where, ModelProfile, **dict(raw))


def config_from_mapping(data: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    dist = _require_table(data, "distillation")
    unknown = set(dist) - {"excluded_fields", "token_budget", "section_priority", "max_calls_per_process"}
    if unknown:
        raise ConfigError(f"distillation: unknown keys {sorted(unknown)}")
    distillation = _build(
        "distillation",
        DistillationConfig,
        excluded_fields=frozenset(dist.get("excluded_fields", DEFAULT_EXCLUDED_FIELDS)),
        token_budget=dist.get("token_budget", 3000),
        section_priority=tuple(dist.get("section_priority", SECTIONS)),
        max_calls_per_process=dist.get("max_calls_per_process", 20),
    )

    tmpl = _require_table(data, "template")
    template = _build("template", PromptTemplate.from_mapping, data=tmpl) if tmpl else default_template()

    raw_profiles = data.get("profiles", [])
    if not isinstance(raw_profiles, list):
        raise ConfigError("profiles: must be an array of tables")
    profiles = tuple(_profile(f"profiles[{i}]", p) for i, p in enumerate(raw_profiles))
    if "embedder" not in data:
        raise ConfigError("embedder: required table")
    embedder = _profile("embedder", data["embedder"])

    gw = _require_table(data, "gateway")
    gateway = _build("gateway", GatewaySettings, **dict(gw))
    if gateway.timeout_s <= 0:
        raise ConfigError("gateway.timeout_s: must be > 0")
    if gateway.max_attempts < 1:
        raise ConfigError("gateway.max_attempts: must be >= 1")
    if gateway.max_in_flight < 1 or gateway.embed_batch_size < 1:
        raise ConfigError("gateway.max_in_flight/embed_batch_size: must be >= 1")

    output_dir = Path(data.get("output_dir", "out"))
    if base_dir is not None and not output_dir.is_absolute():
        output_dir = base_dir / output_dir

    for key in ("parallelism", "keyphrase_k"):
        if key in data and (not isinstance(data[key], int) or isinstance(data[key], bool)):
            raise ConfigError(f"{key}: must be an integer")

    return RunConfig(
        distillation=distillation,
        template=template,
        profiles=profiles,
        embedder_profile=embedder,
        keyphrase_k=data.get("keyphrase_k", 10),
        parallelism=data.get("parallelism", 1),
        output_dir=output_dir,
        gateway=gateway,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None
    return config_from_mapping(data, base_dir=path.parent)
