"""Flat ``key=value`` pipeline configuration and run manifests."""

from __future__ import annotations

import dataclasses
import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from cocite.errors import ConfigError
from cocite.kinetics import DetectionCriteria, FlashCriteria, VanRaanCriteria, exact

# Settings that change how fast a run goes but never what it produces.
EXECUTION_ONLY = frozenset({"workdir", "spill_dir", "memory_budget", "partitions", "batch"})


@dataclass
class PipelineConfig:
    nodelist: str = ""
    edgelist: str = ""
    workdir: str = "work"
    spill_dir: str = ""
    subjects_override: str = ""
    window_start: int = 1985
    window_end: int = 1995
    min_refs: int = 5
    pub_type: str = "article"
    end_year: int | None = None
    memory_budget: int = 2_000_000
    partitions: int = 1
    batch: int = 1000
    kinetics_min_total: int = 20
    kinetics_wide: bool = False
    min_total: int = 100
    min_peak: int = 20
    min_member_year: int = 1970
    min_sleep_years: int = 10
    sleep_max_per_year: int = 2
    sleep_avg_max: float = 1.0
    vr_min_sleep_years: int = 10
    vr_sleep_avg_max: float = 1.0
    vr_awakening_window: int = 5
    vr_min_awakening_intensity: float = 5.0
    vr_awakening_threshold: int = 2
    band_low: int = 20
    band_high: int = 100
    flash_min_span: int = 10
    flash_burst: int = 20
    hist_top: int = 2048
    percentiles: str = "90,95,99"
    citation_years_start: int = 1970
    seed: int = 42

    @property
    def criteria(self) -> DetectionCriteria:
        return DetectionCriteria(
            self.min_total,
            self.min_peak,
            self.min_member_year,
            self.min_sleep_years,
            self.sleep_max_per_year,
            self.sleep_avg_max,
        )

    @property
    def vanraan(self) -> VanRaanCriteria:
        return VanRaanCriteria(
            self.vr_min_sleep_years,
            self.vr_sleep_avg_max,
            self.vr_awakening_window,
            self.vr_min_awakening_intensity,
            self.vr_awakening_threshold,
        )

    @property
    def flash(self) -> FlashCriteria:
        return FlashCriteria((self.band_low, self.band_high), self.flash_min_span, self.flash_burst)

    @property
    def requested_percentiles(self) -> list[float]:
        try:
            return [float(p) for p in self.percentiles.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"percentiles: not a comma-separated number list: {self.percentiles!r}") from None

    def require_end_year(self) -> int:
        if self.end_year is None:
            raise ConfigError("end_year: required (the kinetics horizon, e.g. 2018)")
        return self.end_year

    def validate(self) -> PipelineConfig:
        if self.window_start > self.window_end:
            raise ConfigError(
                f"window_start: {self.window_start} is after window_end {self.window_end}"
            )
        if self.end_year is not None and self.end_year <= self.window_end:
            raise ConfigError(
                f"end_year: {self.end_year} must be after window_end {self.window_end}"
            )
        if self.min_refs < 2:
            raise ConfigError(f"min_refs: must be at least 2, got {self.min_refs}")
        for name in ("partitions", "batch", "memory_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be at least 1, got {getattr(self, name)}")
        if not 0 < self.band_low < self.band_high:
            raise ConfigError(f"band_low/band_high: need 0 < {self.band_low} < {self.band_high}")
        if self.kinetics_min_total > min(self.band_low, self.min_total):
            raise ConfigError(
                f"kinetics_min_total: {self.kinetics_min_total} would hide series the "
                f"detectors need (band_low {self.band_low}, min_total {self.min_total})"
            )
        for p in self.requested_percentiles:
            if not 0 < p <= 100:
                raise ConfigError(f"percentiles: {p} outside (0, 100]")
        _ = (self.criteria, self.vanraan)  # construction validates the thresholds
        return self

    # -- serialisation -------------------------------------------------------

    def items(self) -> list[tuple[str, str]]:
        return [(f.name, _format(getattr(self, f.name))) for f in dataclasses.fields(self)]

    def config_hash(self) -> str:
        text = "".join(f"{k}={v}\n" for k, v in self.items() if k not in EXECUTION_ONLY)
        return hashlib.sha256(text.encode()).hexdigest()

    def updated(self, values: dict[str, str]) -> PipelineConfig:
        types = {f.name: f.type for f in dataclasses.fields(self)}
        changes: dict[str, Any] = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"{key}: unknown configuration key")
            changes[key] = _parse(key, types[key], raw)
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> PipelineConfig:
        return cls().updated(read_key_values(path))

    @classmethod
    def from_manifest(cls, path: str | os.PathLike) -> PipelineConfig:
        values = read_key_values(path)
        return cls().updated({k[len("config."):]: v for k, v in values.items() if k.startswith("config.")})

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key, value in self.items():
                fh.write(f"{key}={value}\n")


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _parse(key: str, type_name: str, raw: str) -> Any:
    raw = raw.strip()
    try:
        if type_name == "int | None":
            return int(raw) if raw else None
        if type_name == "int":
            return int(raw)
        if type_name == "float":
            exact(raw)  # rejects nan/inf spellings Fraction cannot take
            return float(raw)
        if type_name == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {type_name}, got {raw!r}") from None
    return raw


def read_key_values(path: str | os.PathLike) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Manifest:
    """``manifest.txt`` in the work directory: config snapshot, config hash,
    completed stages and artifact digests."""

    NAME = "manifest.txt"

    def __init__(self, workdir: str | os.PathLike) -> None:
        self.path = Path(workdir) / self.NAME
        self.config_hash = ""
        self.completed: list[str] = []
        self.artifacts: dict[str, str] = {}
        if self.path.exists():
            values = read_key_values(self.path)
            self.config_hash = values.get("config_hash", "")
            self.completed = [s for s in values.get("completed", "").split(",") if s]
            self.artifacts = {
                k[len("artifact."):]: v for k, v in values.items() if k.startswith("artifact.")
            }

    @property
    def exists(self) -> bool:
        return self.path.exists()

    def reset(self) -> None:
        self.completed = []
        self.artifacts = {}

    def record(self, stage: str, artifacts: list[Path]) -> None:
        if stage not in self.completed:
            self.completed.append(stage)
        for path in artifacts:
            self.artifacts[path.name] = file_digest(path)

    def save(self, config: PipelineConfig) -> None:
        lines = ["# cocite run manifest"]
        lines += [f"config.{k}={v}" for k, v in config.items()]
        lines.append(f"config_hash={config.config_hash()}")
        lines.append(f"completed={','.join(self.completed)}")
        lines += [f"artifact.{name}={digest}" for name, digest in sorted(self.artifacts.items())]
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)
