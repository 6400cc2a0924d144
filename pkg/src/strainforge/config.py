"""JSON configuration: schema validation and typed accessors.

The shipped ``data/default_config.json`` is both the default configuration
and the schema reference; user files may override any subset of keys but
unknown keys are rejected outright. All units are explicit in key names.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import SivParameters
from .errors import ConfigError, InvalidGeometry
from .mechanics import CrossSection, Layer, LayerStack
from .population import IntrinsicStrainModel, PositionDistribution
from .thermal import OCCUPATION_MODELS, ThermalReference

__all__ = ["Config", "load_config", "default_config", "ENV_CONFIG_PATH"]

ENV_CONFIG_PATH = "STRAINFORGE_CONFIG"


def _load_defaults() -> dict:
    with resources.files("strainforge.data").joinpath("default_config.json").open() as fh:
        return json.load(fh)


_DEFAULTS = _load_defaults()


def _validate(user: dict, defaults: dict, path: str = "") -> dict:
    """Merge user values over defaults, rejecting unknown keys and type
    mismatches (bools are not numbers; ints pass where floats are
    expected)."""
    merged = {}
    for key, default_value in defaults.items():
        where = f"{path}.{key}" if path else key
        if key not in user:
            merged[key] = default_value
            continue
        value = user[key]
        if isinstance(default_value, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected an object")
            merged[key] = _validate(value, default_value, where)
        elif isinstance(default_value, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{where}: expected a boolean")
            merged[key] = value
        elif isinstance(default_value, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{where}: expected a number")
            merged[key] = type(default_value)(value) if not isinstance(
                default_value, float
            ) else float(value)
        elif isinstance(default_value, str):
            if not isinstance(value, str):
                raise ConfigError(f"{where}: expected a string")
            merged[key] = value
        elif isinstance(default_value, list):
            if not isinstance(value, list):
                raise ConfigError(f"{where}: expected a list")
            merged[key] = value
        else:  # pragma: no cover - schema only holds the types above
            raise ConfigError(f"{where}: unsupported schema type")
    unknown = set(user) - set(defaults)
    if unknown:
        where = path or "top level"
        raise ConfigError(f"unknown key(s) at {where}: {sorted(unknown)}")
    return merged


@dataclass(frozen=True)
class Config:
    """Validated configuration with typed builders for each module."""

    data: dict
    source: str = "<defaults>"

    def siv_parameters(self) -> SivParameters:
        siv = self.data["siv"]
        return SivParameters(
            lambda_so_ghz=siv["lambda_so_ghz"],
            d_ghz_per_strain=siv["d_ghz_per_strain"],
            f_ghz_per_strain=siv["f_ghz_per_strain"],
        )

    def layer_stack(self) -> LayerStack:
        mech = self.data["mechanics"]
        try:
            polygon = np.asarray(mech["cross_section_polygon_nm"], dtype=float)
            cs = CrossSection(polygon)
        except (TypeError, ValueError, InvalidGeometry) as exc:
            raise ConfigError(f"mechanics.cross_section_polygon_nm: {exc}") from exc
        substrate = Layer(
            thickness_nm=cs.depth_extent_nm,
            youngs_modulus_gpa=mech["substrate"]["youngs_modulus_gpa"],
            poisson_ratio=mech["substrate"]["poisson_ratio"],
        )
        film = Layer(
            thickness_nm=mech["film"]["thickness_nm"],
            youngs_modulus_gpa=mech["film"]["youngs_modulus_gpa"],
            poisson_ratio=mech["film"]["poisson_ratio"],
            intrinsic_stress_mpa=mech["film"]["intrinsic_stress_mpa"],
        )
        return LayerStack(
            substrate=substrate,
            cross_section=cs,
            film=film,
            beam_axis_crystal_direction=tuple(mech["beam_axis_crystal_direction"]),
            biaxiality_factor=mech["biaxiality_factor"],
        )

    def position_distribution(self) -> PositionDistribution:
        pos = self.data["position"]
        return PositionDistribution(
            aperture_x_nm=pos["aperture_x_nm"],
            aperture_y_nm=pos["aperture_y_nm"],
            depth_mean_nm=pos["depth_mean_nm"],
            depth_straggle_nm=pos["depth_straggle_nm"],
        )

    def intrinsic_model(self) -> IntrinsicStrainModel:
        return IntrinsicStrainModel(sigma=self.data["population"]["sigma_unstrained"])

    def thermal_reference(self) -> ThermalReference:
        th = self.data["thermal"]
        return ThermalReference(gss_ref_ghz=th["gss_ref_ghz"], temp_ref_k=th["temp_ref_k"])

    @property
    def occupation_model(self) -> str:
        return self.data["thermal"]["occupation_model"]

    @property
    def sample_frame(self) -> str:
        return self.data["population"]["sample_frame"]

    @property
    def include_intrinsic_post(self) -> bool:
        return self.data["population"]["include_intrinsic_post"]

    @property
    def smoothing_window(self) -> int:
        return self.data["spectra"]["smoothing_window"]

    @property
    def min_prominence(self) -> float:
        return self.data["spectra"]["min_prominence_fraction"]

    @property
    def default_n(self) -> int:
        return self.data["monte_carlo"]["n"]

    @property
    def default_seed(self) -> int:
        return self.data["monte_carlo"]["seed"]


def _check_values(cfg: Config) -> None:
    try:
        cfg.siv_parameters()
        cfg.layer_stack()
        cfg.position_distribution()
        cfg.intrinsic_model()
        cfg.thermal_reference()
    except ConfigError:
        raise
    except (ValueError, TypeError, InvalidGeometry) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.occupation_model not in OCCUPATION_MODELS:
        raise ConfigError(
            f"thermal.occupation_model must be one of {OCCUPATION_MODELS}"
        )
    if cfg.sample_frame not in ("defect", "crystal"):
        raise ConfigError("population.sample_frame must be 'defect' or 'crystal'")
    if cfg.default_n < 1:
        raise ConfigError("monte_carlo.n must be >= 1")
    if cfg.smoothing_window < 1 or cfg.smoothing_window % 2 == 0:
        raise ConfigError("spectra.smoothing_window must be a positive odd integer")
    if not 0 < cfg.min_prominence <= 1:
        raise ConfigError("spectra.min_prominence_fraction must be in (0, 1]")


def default_config() -> Config:
    cfg = Config(data=_validate({}, _DEFAULTS))
    _check_values(cfg)
    return cfg


def load_config(path: str | Path | None = None) -> Config:
    """Load and validate a config file.

    With no explicit path, the STRAINFORGE_CONFIG environment variable is
    consulted; failing that, built-in defaults are used.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH) or None
    if path is None:
        return default_config()
    path = Path(path)
    try:
        user = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = Config(data=_validate(user, _DEFAULTS), source=str(path))
    _check_values(cfg)
    return cfg
