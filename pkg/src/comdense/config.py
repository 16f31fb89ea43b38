"""Run configuration: one JSON document describing a whole experiment.

Sections: ``data_dir``, ``out_dir``, ``model`` (architecture), ``train``
(loop settings), ``adam`` (optimizer), ``seeds`` (one fit per entry).
Unknown keys anywhere are rejected by name, so a typo fails before any
compute.  Omitted sections fall back to defaults; the fully resolved
config embeds into training summaries for reproducibility.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .adam import AdamHyper
from .model import ModelConfig
from .training import TrainSettings


class ConfigError(ValueError):
    """Invalid configuration: bad value, unknown key, or unusable file."""


def _section_from_dict(cls, obj: dict, section: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"section {section!r} must be an object, got {type(obj).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(f"unknown keys in section {section!r}: {', '.join(unknown)}")
    return cls(**obj)


@dataclass
class RunConfig:
    data_dir: str = ""
    out_dir: str = ""
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSettings = field(default_factory=TrainSettings)
    adam: AdamHyper = field(default_factory=AdamHyper)
    seeds: list[int] = field(default_factory=lambda: [0])

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError(f"config root must be an object, got {type(obj).__name__}")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(
            data_dir=obj.get("data_dir", ""),
            out_dir=obj.get("out_dir", ""),
            model=_section_from_dict(ModelConfig, obj.get("model", {}), "model"),
            train=_section_from_dict(TrainSettings, obj.get("train", {}), "train"),
            adam=_section_from_dict(AdamHyper, obj.get("adam", {}), "adam"),
            seeds=list(obj.get("seeds", [0])),
        )
        return cfg

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {path} ({exc})") from exc
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return {
            "data_dir": self.data_dir,
            "out_dir": self.out_dir,
            "model": dataclasses.asdict(self.model),
            "train": dataclasses.asdict(self.train),
            "adam": dataclasses.asdict(self.adam),
            "seeds": list(self.seeds),
        }

    def validate(self, require_paths: bool = True) -> None:
        """Check every section; ValueErrors surface as ConfigError with the field name."""
        if require_paths:
            if not self.data_dir:
                raise ConfigError("data_dir must be set")
            if not self.out_dir:
                raise ConfigError("out_dir must be set")
        if not self.seeds:
            raise ConfigError("seeds must contain at least one integer")
        for s in self.seeds:
            if not isinstance(s, int):
                raise ConfigError(f"seeds must all be integers, got {s!r}")
        try:
            self.model.validate()
            self.train.validate()
            self.adam.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
