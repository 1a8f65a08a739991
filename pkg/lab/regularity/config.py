"""
Experiment configuration: YAML documents validated by the serializers.

One document describes one experiment. ``--set a.b=value`` overrides are
parsed as YAML scalars and may only address keys that exist in the document
or are declared by the serializers.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass
from io import StringIO
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from django.conf import settings as django_settings
from ruamel.yaml import YAML
from ruamel.yaml.error import MarkedYAMLError, YAMLError

from .exceptions import ConfigError
from .fields import Grid2, scalar_catalog, velocity_catalog
from .flow import TimeGrid
from .modcont import DirectionSweep, GridSampler, ModulusFamily, geometric_radii
from .serializers import (
    ExperimentConfigSerializer,
    SamplerSerializer,
    TolerancesSerializer,
)

logger = logging.getLogger(__name__)


def _plain(value):
    """ruamel/DRF containers to plain dicts, lists, floats and ints."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, str):
        return str(value)
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return int(value)
    if isinstance(value, float):
        return float(value)
    return value


def _defaults(serializer_class) -> dict:
    serializer = serializer_class(data={})
    serializer.is_valid(raise_exception=True)
    return dict(serializer.validated_data)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    settings: dict
    source: Optional[str] = None

    @property
    def seed(self) -> int:
        return self.settings["seed"]

    @property
    def jobs(self) -> int:
        return self.settings.get("jobs") or django_settings.HOLDERLAB["DEFAULT_JOBS"]

    @property
    def output_dir(self) -> Optional[str]:
        return self.settings.get("output_dir")

    @property
    def tolerances(self) -> dict:
        merged = _defaults(TolerancesSerializer)
        merged.update(self.settings.get("tolerances", {}))
        return merged

    @property
    def center(self) -> tuple:
        return tuple(self.settings["center"])

    def as_dict(self) -> dict:
        return copy.deepcopy(self.settings)

    def time_grid(self) -> TimeGrid:
        section = self.settings["time"]
        return TimeGrid(section["t_end"], section["dt"])

    def output_times(self) -> tuple:
        section = self.settings["time"]
        return tuple(section.get("output_times") or (section["t_end"],))

    def velocity(self):
        params = dict(self.settings["velocity"])
        return velocity_catalog(params.pop("kind"), params)

    def families(self) -> list:
        section = self.settings["modulus"]
        return [ModulusFamily(section["family"], e) for e in section["exponents"]]

    def data_field(self, family: Optional[ModulusFamily] = None):
        """Initial data; a missing ``exponent`` follows the modulus exponent."""
        params = {k: v for k, v in self.settings["data"].items() if k != "name"}
        if family is not None and "exponent" not in params and self.settings["data"]["name"] != "zero":
            params["exponent"] = family.exponent
        return scalar_catalog(self.settings["data"]["name"], params)

    def grid(self) -> Grid2:
        section = self.settings["grid"]
        return Grid2(section["n"], section["half_period"])

    def radii(self, spacing: float = 0.0) -> np.ndarray:
        section = self.settings["radii"]
        if section.get("values"):
            return np.asarray(section["values"], dtype=float)
        floor = section.get("floor_cells", 0) * spacing
        return geometric_radii(section["start"], section.get("stop", 0.0), section.get("ratio", 0.5), floor)

    def sampler(self):
        merged = _defaults(SamplerSerializer)
        merged.update(self.settings.get("sampler", {}))
        if merged["kind"] == "grid":
            return GridSampler()
        return DirectionSweep(merged["directions"], merged["shells_per_step"], merged["offset"])

    def log_ratio_radii(self) -> list:
        section = self.settings["log_ratio"]
        return [math.exp(-k) for k in range(section["k_min"], section["k_max"] + 1)]


def _load_document(text: str):
    try:
        document = YAML().load(text)
    except MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem or exc}", line=line) from exc
    except YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("the configuration must be a mapping at the top level", line=1)
    return document


def _parse_scalar(text: str) -> Any:
    try:
        return YAML(typ="safe").load(StringIO(text))
    except YAMLError:
        return text


def apply_overrides(document: dict, overrides: Sequence[str]) -> dict:
    """Apply ``a.b=value`` overrides in place; every path must already be known."""
    for item in overrides or ():
        path, sep, raw = item.partition("=")
        parts = [p for p in path.strip().split(".") if p]
        if not sep or not parts:
            raise ConfigError(f"invalid override '{item}'; expected key=value")
        target = document
        serializer_fields = ExperimentConfigSerializer().fields
        for depth, key in enumerate(parts[:-1]):
            declared = serializer_fields.get(key) if serializer_fields is not None else None
            if key not in target:
                if declared is None or not hasattr(declared, "fields"):
                    raise ConfigError(f"override '{item}' addresses an unknown section", key=".".join(parts[: depth + 1]))
                target[key] = {}
            target = target[key]
            if not isinstance(target, dict):
                raise ConfigError(f"override '{item}' traverses a non-mapping", key=".".join(parts[: depth + 1]))
            serializer_fields = getattr(declared, "fields", None)
        leaf = parts[-1]
        known = serializer_fields is not None and leaf in serializer_fields
        if leaf not in target and not known:
            raise ConfigError(f"override '{item}' addresses an unknown key", key=".".join(parts))
        target[leaf] = _parse_scalar(raw)
    return document


def _flatten_errors(errors, prefix=""):
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = prefix if key == "non_field_errors" else f"{prefix}.{key}" if prefix else str(key)
            yield from _flatten_errors(value, name)
    elif isinstance(errors, list) and errors and not isinstance(errors[0], (dict, list)):
        for message in errors:
            yield prefix, str(message)
    elif isinstance(errors, list):
        for index, value in enumerate(errors):
            if value:
                yield from _flatten_errors(value, f"{prefix}.{index}")
    else:
        yield prefix, str(errors)


def _line_of(document, dotted: str) -> Optional[int]:
    node, line = document, None
    for key in dotted.split(".") if dotted else ():
        lc = getattr(node, "lc", None)
        try:
            index = int(key) if isinstance(node, list) else key
            if lc is not None:
                position = lc.key(index) if isinstance(node, dict) else lc.item(index)
                line = position[0] + 1
            node = node[index]
        except (KeyError, IndexError, ValueError, TypeError):
            break
    return line


def parse_config(text: str, overrides: Sequence[str] = (), source: Optional[str] = None) -> ExperimentConfig:
    document = apply_overrides(_load_document(text), overrides)
    serializer = ExperimentConfigSerializer(data=document)
    if not serializer.is_valid():
        problems = list(_flatten_errors(serializer.errors))
        key, message = problems[0]
        raise ConfigError(message, key=key or None, line=_line_of(document, key))
    data = _plain(serializer.validated_data)
    logger.debug("parsed %s config from %s", data["kind"], source or "<text>")
    return ExperimentConfig(data["kind"], data, source)


def load_config(path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config(text, overrides, source=str(path))
