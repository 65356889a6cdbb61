"""JSON run configuration: one parameter set, one input state and the blocks of each command."""
import json
import logging
import math
from typing import Any, Dict, Mapping, Optional, Tuple

import attr
import numpy as np

from lattice_gravimeter.config import Config
from lattice_gravimeter.errors import ConfigError
from lattice_gravimeter.lattice.oracle import SequenceOptions
from lattice_gravimeter.lattice.params import HBAR, PhysicalParams
from lattice_gravimeter.spin.dicke import StateKind, SymmetricSpinState, prepare_state, state_options

log = logging.getLogger(__name__)


def _section(raw: Mapping[str, Any], key: str, allowed: Tuple[str, ...]) -> Dict[str, Any]:
    section = raw.get(key, {})
    if not isinstance(section, Mapping):
        raise ConfigError(f"'{key}' must be an object", key=key)
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key '{key}.{unknown[0]}'", key=f"{key}.{unknown[0]}")
    return dict(section)


def _setting(settings: Optional[Mapping[str, Any]], key: str) -> Any:
    return getattr(Config, key) if settings is None else settings[key]


def _optional_float(raw_dict: Mapping[str, Any], key: str, path: str) -> Optional[float]:
    value = raw_dict.get(key)
    if value is None:
        return None
    if isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a number, got {value!r}", key=path)
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{path}' must be a number, got {value!r}", key=path)
    if not math.isfinite(value):
        raise ConfigError(f"'{path}' must be finite, got {value!r}", key=path)
    return value


def _number_list(section: Mapping[str, Any], key: str, path: str, cast=float) -> Tuple:
    values = section[key]
    if not isinstance(values, list) or not values:
        raise ConfigError(f"'{path}' must be a non-empty list", key=path)
    try:
        return tuple(cast(v) for v in values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value in '{path}': {e}", key=path)


@attr.s(frozen=True)
class StateSpec:
    kind = attr.ib(type=StateKind, converter=StateKind)
    n_particles = attr.ib(type=int, converter=int)
    mu = attr.ib(default=None, type=Optional[float])
    beta = attr.ib(default=None, type=Optional[float])

    DICT_KEY_KIND = "kind"
    DICT_KEY_N = "N"
    DICT_KEY_MU = "mu"
    DICT_KEY_BETA = "beta"

    @classmethod
    def from_dict(cls, raw_dict: Mapping[str, Any]) -> "StateSpec":
        for key in (cls.DICT_KEY_KIND, cls.DICT_KEY_N):
            if key not in raw_dict:
                raise ConfigError(f"missing key 'state.{key}'", key=f"state.{key}")
        try:
            kind = StateKind(raw_dict[cls.DICT_KEY_KIND])
        except ValueError:
            kinds = ", ".join(k.value for k in StateKind)
            raise ConfigError(f"'state.kind' must be exactly one of {kinds}", key="state.kind")
        n_particles = raw_dict[cls.DICT_KEY_N]
        if not isinstance(n_particles, int) or n_particles < 1:
            raise ConfigError(f"'state.N' must be a positive integer, got {n_particles!r}", key="state.N")
        if kind is StateKind.CSS and (cls.DICT_KEY_MU in raw_dict or cls.DICT_KEY_BETA in raw_dict):
            raise ConfigError("'state.mu' and 'state.beta' only apply to sss states", key="state.mu")
        return cls(
            kind=kind,
            n_particles=n_particles,
            mu=_optional_float(raw_dict, cls.DICT_KEY_MU, "state.mu"),
            beta=_optional_float(raw_dict, cls.DICT_KEY_BETA, "state.beta"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            self.DICT_KEY_KIND: self.kind.value,
            self.DICT_KEY_N: self.n_particles,
            self.DICT_KEY_MU: self.mu,
            self.DICT_KEY_BETA: self.beta,
        }

    def build(self, settings: Optional[Mapping[str, Any]] = None) -> SymmetricSpinState:
        """Input state, with the state cap and optimizer grid of the loaded settings when given."""
        if settings is None:
            return prepare_state(self.kind, self.n_particles, self.mu, self.beta)
        state = prepare_state(self.kind, self.n_particles, self.mu, self.beta, **state_options(settings))
        state.check_normalized(settings["NORM_TOLERANCE"])
        return state


@attr.s(frozen=True)
class RunConfig:
    params = attr.ib(type=PhysicalParams)
    state = attr.ib(type=StateSpec)
    options = attr.ib(factory=SequenceOptions, type=SequenceOptions)
    phi_grid = attr.ib(default=(), type=Tuple[float, ...])
    n_list = attr.ib(default=(10, 100, 1000, 10000), type=Tuple[int, ...])
    scaling_kind = attr.ib(default=None, type=Optional[StateKind])
    delta_list = attr.ib(default=(), type=Tuple[float, ...])
    validation_draws = attr.ib(default=Config.VALIDATION_DRAWS, type=int)
    out_dir = attr.ib(default=None, type=Optional[str])

    DICT_KEY_PARAMS = "params"
    DICT_KEY_STATE = "state"
    DICT_KEY_OPTIONS = "options"
    DICT_KEY_FRINGE = "fringe"
    DICT_KEY_SCALING = "scaling"
    DICT_KEY_ROBUSTNESS = "robustness"
    DICT_KEY_VALIDATE = "validate"
    DICT_KEY_OUT_DIR = "out_dir"

    TOP_LEVEL_KEYS = (
        DICT_KEY_PARAMS,
        DICT_KEY_STATE,
        DICT_KEY_OPTIONS,
        DICT_KEY_FRINGE,
        DICT_KEY_SCALING,
        DICT_KEY_ROBUSTNESS,
        DICT_KEY_VALIDATE,
        DICT_KEY_OUT_DIR,
    )

    DEFAULT_N_LIST = (10, 100, 1000, 10000)

    # Default dislocation scan, in units of hbar / T_h
    DEFAULT_DELTA_HOLD_UNITS = (-0.2, -0.1, 0.0, 0.1, 0.2)

    @classmethod
    def from_dict(cls, raw_dict: Mapping[str, Any], settings: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        """Build from the parsed JSON, section defaults taken from the loaded settings when given."""
        unknown = sorted(set(raw_dict) - set(cls.TOP_LEVEL_KEYS))
        if unknown:
            raise ConfigError(f"unknown key '{unknown[0]}'", key=unknown[0])
        for key in (cls.DICT_KEY_PARAMS, cls.DICT_KEY_STATE):
            if key not in raw_dict:
                raise ConfigError(f"missing key '{key}'", key=key)

        params = PhysicalParams.from_dict(raw_dict[cls.DICT_KEY_PARAMS])
        state = StateSpec.from_dict(raw_dict[cls.DICT_KEY_STATE])

        options_raw = _section(raw_dict, cls.DICT_KEY_OPTIONS, tuple(attr.fields_dict(SequenceOptions)))
        try:
            options = SequenceOptions(**{k: float(v) for k, v in options_raw.items()})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid value in 'options': {e}", key=cls.DICT_KEY_OPTIONS)

        fringe = _section(raw_dict, cls.DICT_KEY_FRINGE, ("phi_grid", "phi_start", "phi_stop", "points"))
        if "phi_grid" in fringe:
            if {"phi_start", "phi_stop", "points"} & set(fringe):
                raise ConfigError("'fringe.phi_grid' excludes a phi_start/phi_stop/points range", key="fringe.phi_grid")
            phi_grid = _number_list(fringe, "phi_grid", "fringe.phi_grid")
        else:
            try:
                start = float(fringe.get("phi_start", 0.0))
                stop = float(fringe.get("phi_stop", 2 * math.pi))
                points = int(fringe.get("points", _setting(settings, "FRINGE_POINTS")))
            except (TypeError, ValueError) as e:
                raise ConfigError(f"invalid value in 'fringe': {e}", key=cls.DICT_KEY_FRINGE)
            if points < 1:
                raise ConfigError("'fringe.points' must be >= 1", key="fringe.points")
            phi_grid = tuple(float(phi) for phi in np.linspace(start, stop, points))

        scaling = _section(raw_dict, cls.DICT_KEY_SCALING, ("N_list", "kind"))
        n_list = _number_list(scaling, "N_list", "scaling.N_list", int) if "N_list" in scaling else cls.DEFAULT_N_LIST
        try:
            scaling_kind = StateKind(scaling["kind"]) if "kind" in scaling else None
        except ValueError:
            raise ConfigError("'scaling.kind' must be css or sss", key="scaling.kind")

        robustness = _section(raw_dict, cls.DICT_KEY_ROBUSTNESS, ("delta_list", "delta_list_hold"))
        if "delta_list" in robustness and "delta_list_hold" in robustness:
            raise ConfigError("'delta_list' and 'delta_list_hold' are exclusive", key="robustness.delta_list_hold")
        if "delta_list" in robustness:
            delta_list = _number_list(robustness, "delta_list", "robustness.delta_list")
        elif "delta_list_hold" in robustness:
            if params.hold_time <= 0:
                raise ConfigError(
                    "'robustness.delta_list_hold' needs a positive params.hold_time", key="robustness.delta_list_hold"
                )
            hold_units = _number_list(robustness, "delta_list_hold", "robustness.delta_list_hold")
            delta_list = tuple(x * HBAR / params.hold_time for x in hold_units)
        elif params.hold_time > 0:
            delta_list = tuple(x * HBAR / params.hold_time for x in cls.DEFAULT_DELTA_HOLD_UNITS)
        else:
            # No default scan without a hold time, the robustness command asks for delta_list
            delta_list = ()

        validate = _section(raw_dict, cls.DICT_KEY_VALIDATE, ("draws",))
        draws = validate.get("draws", _setting(settings, "VALIDATION_DRAWS"))
        if not isinstance(draws, int) or draws < 0:
            raise ConfigError(f"'validate.draws' must be a non-negative integer, got {draws!r}", key="validate.draws")

        out_dir = raw_dict.get(cls.DICT_KEY_OUT_DIR)
        return cls(
            params=params,
            state=state,
            options=options,
            phi_grid=phi_grid,
            n_list=n_list,
            scaling_kind=scaling_kind,
            delta_list=delta_list,
            validation_draws=draws,
            out_dir=None if out_dir is None else str(out_dir),
        )

    @classmethod
    def from_file(cls, path: str, settings: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        try:
            with open(path, "r") as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"configuration file {path} not found")
        except json.decoder.JSONDecodeError as e:
            raise ConfigError(f"configuration file {path} is not valid JSON: {e}")
        if not isinstance(raw, Mapping):
            raise ConfigError(f"configuration file {path} must hold a JSON object")
        log.debug(f"Loaded run configuration {path}")
        return cls.from_dict(raw, settings)
