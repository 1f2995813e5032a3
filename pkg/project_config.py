# project_config.py
import copy
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from dual_transform import DualTransform, IdentityTransform
from energy import EnergyModel
from errors import ConfigError
from model import BUILTIN, CONSTANT, NONVANISHING, REMARK13, SEMILINEAR, VANISHING, Nonlinearity, Potential
from radial_mesh import build_grid
from run_logger import logger
from solvers import SolverOptions

load_dotenv()

ENV_OUTPUT_DIR = 'QNS_OUTPUT_DIR'
ENV_THREADS = 'QNS_THREADS'

DEFAULT_CONFIG: Dict[str, Any] = {
    'grid': {'N': 3, 'R': 30.0, 'n': 6000},
    'model': {
        'nonlinearity': BUILTIN,
        'l': 1.0,
        'potential': CONSTANT,
        'V0': 1.0,
        'mode': NONVANISHING,
    },
    'solve': {'k': 1, 'sign': '+', 'random_seed': None, 'restarts': 0, 'polish_glued': True},
    'tolerances': {'nehari': 1e-10, 'el_residual': 1e-6, 'radius_tol': 1e-3},
    'iterations': {'max_iters': 2000, 'newton_switch': 1e-3, 'max_sweeps': 12},
    'sweep': {'threshold': 1e-2, 'threads': 2},
    'output': {'dir': './runs'},
}


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


class Config:
    """YAML configuration addressed by key paths; missing keys fall back to DEFAULT_CONFIG."""

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path is not None else None
        self.data = self._load_config()

    def _load_config(self) -> Dict:
        data = copy.deepcopy(DEFAULT_CONFIG)
        if self.config_path is None:
            return data
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f)
        except FileNotFoundError:
            logger.critical(f"Configuration file not found at: {self.config_path}")
            raise ConfigError(f"Configuration file missing: {self.config_path}")
        except yaml.YAMLError as e:
            logger.critical(f"Error parsing configuration file: {e}")
            raise ConfigError(f"Invalid YAML in config: {e}")
        if loaded is None:
            return data
        if not isinstance(loaded, dict):
            raise ConfigError(f"Configuration root must be a mapping, got {type(loaded).__name__}")
        return _merge(data, loaded)

    def get(self, *keys: str, default: Any = None) -> Any:
        value = self.data
        try:
            for key in keys:
                value = value[key]
            return value
        except KeyError:
            return default
        except TypeError:
            logger.error(
                f"Config structure error: Tried to access key '{keys[-1]}' on non-dictionary element at '{'.'.join(keys[:-1])}'")
            return default

    def set(self, value: Any, *keys: str):
        d = self.data
        for i, key in enumerate(keys[:-1]):
            if key in d and not isinstance(d[key], dict):
                logger.warning(f"Overwriting non-dict value at config key '{'.'.join(keys[:i + 1])}'")
                d[key] = {}
            d = d.setdefault(key, {})
        d[keys[-1]] = value

    def apply_overrides(self, overrides: Iterable[str]):
        """Applies ``a.b=value`` strings; values are parsed as YAML scalars."""
        for item in overrides or ():
            key, sep, raw = item.partition('=')
            if not sep or not key.strip():
                raise ConfigError(f"Override '{item}' is not of the form key.path=value")
            try:
                value = yaml.safe_load(raw) if raw.strip() else None
            except yaml.YAMLError as e:
                raise ConfigError(f"Override '{item}' has an unparsable value: {e}")
            # a bare '-' parses as a sequence
            if isinstance(value, (list, dict)) and not raw.strip().startswith(('[', '{')):
                value = raw.strip()
            self.set(value, *key.strip().split('.'))
            logger.debug(f"Config override {key.strip()} = {value!r}")

    def save(self, path: Optional[Path] = None):
        target = Path(path) if path is not None else self.config_path
        if target is None:
            raise ConfigError("No path to save the configuration to")
        try:
            with open(target, 'w', encoding='utf-8') as f:
                yaml.safe_dump(self.data, f, default_flow_style=False, sort_keys=False, allow_unicode=True)
        except IOError as e:
            logger.error(f"Error writing configuration file: {e}")


class SolverConfig(BaseModel):
    """Validated solver settings; ``echo()`` is what the run record stores."""
    model_config = ConfigDict(extra='forbid')

    N: int = Field(3, ge=3)
    R: float = Field(30.0, gt=0)
    n: int = Field(6000, ge=16)
    nonlinearity: Literal['builtin_asymptotic', 'semilinear_diagnostic'] = BUILTIN
    l: float = Field(1.0, gt=0)
    potential: Literal['constant', 'remark13_piecewise'] = CONSTANT
    V0: float = Field(1.0, ge=0)
    mode: Literal['nonvanishing', 'vanishing'] = NONVANISHING
    k: int = Field(1, ge=0)
    sign: int = 1
    nehari_tol: float = 1e-10
    el_tol: float = 1e-6
    radius_tol: float = 1e-3
    newton_switch: float = 1e-3
    max_iters: int = Field(2000, ge=1)
    max_sweeps: int = Field(12, ge=1)
    restarts: int = Field(0, ge=0)
    polish_glued: bool = True
    random_seed: Optional[int] = None

    @field_validator('sign', mode='before')
    @classmethod
    def _parse_sign(cls, v):
        if v in ('+', '+1', 1, '1', 'plus'):
            return 1
        if v in ('-', '-1', -1, 'minus'):
            return -1
        raise ValueError(f"sign must be '+' or '-', got {v!r}")

    @field_validator('nehari_tol', 'el_tol', 'radius_tol', 'newton_switch')
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("tolerances must be positive")
        return v

    @model_validator(mode='after')
    def _consistent(self) -> 'SolverConfig':
        if self.mode == VANISHING and self.potential != REMARK13:
            raise ValueError("vanishing mode needs a potential with declared zero-set subdomains (remark13_piecewise)")
        if self.nonlinearity == SEMILINEAR and self.l != 1.0:
            raise ValueError("the semilinear diagnostic has l = 1")
        return self

    @classmethod
    def from_config(cls, cfg: Config) -> 'SolverConfig':
        try:
            return cls(
                N=cfg.get('grid', 'N'), R=cfg.get('grid', 'R'), n=cfg.get('grid', 'n'),
                nonlinearity=cfg.get('model', 'nonlinearity'), l=cfg.get('model', 'l'),
                potential=cfg.get('model', 'potential'), V0=cfg.get('model', 'V0'),
                mode=cfg.get('model', 'mode'),
                k=cfg.get('solve', 'k'), sign=cfg.get('solve', 'sign'),
                random_seed=cfg.get('solve', 'random_seed'), restarts=cfg.get('solve', 'restarts'),
                polish_glued=cfg.get('solve', 'polish_glued'),
                nehari_tol=cfg.get('tolerances', 'nehari'), el_tol=cfg.get('tolerances', 'el_residual'),
                radius_tol=cfg.get('tolerances', 'radius_tol'),
                max_iters=cfg.get('iterations', 'max_iters'),
                newton_switch=cfg.get('iterations', 'newton_switch'),
                max_sweeps=cfg.get('iterations', 'max_sweeps'),
            )
        except ValidationError as e:
            raise ConfigError(f"Invalid solver configuration:\n{e}")

    def echo(self) -> Dict[str, Any]:
        data = self.model_dump()
        data['sign'] = '+' if self.sign > 0 else '-'
        return data

    def nonlinearity_obj(self) -> Nonlinearity:
        return Nonlinearity.semilinear() if self.nonlinearity == SEMILINEAR else Nonlinearity.builtin(self.l)

    def potential_obj(self) -> Potential:
        return Potential.remark13() if self.potential == REMARK13 else Potential.constant(self.V0)

    def transform(self) -> DualTransform:
        return IdentityTransform() if self.nonlinearity == SEMILINEAR else DualTransform()

    def build_model(self) -> EnergyModel:
        return EnergyModel(self.transform(), self.nonlinearity_obj(), self.potential_obj(),
                           build_grid(self.N, self.R, self.n))

    def solver_options(self, progress: bool = False) -> SolverOptions:
        return SolverOptions(el_tol=self.el_tol, nehari_tol=self.nehari_tol, max_iters=self.max_iters,
                             newton_switch=self.newton_switch, radius_tol=self.radius_tol,
                             max_sweeps=self.max_sweeps, polish_glued=self.polish_glued,
                             random_seed=self.random_seed, restarts=self.restarts, progress=progress)


def output_dir(cfg: Config, override: Optional[Path] = None) -> Path:
    """CLI flag, then QNS_OUTPUT_DIR, then the config value."""
    if override is not None:
        return Path(override)
    env = os.getenv(ENV_OUTPUT_DIR)
    return Path(env) if env else Path(cfg.get('output', 'dir', default='./runs'))


def worker_count(cfg: Config) -> int:
    env = os.getenv(ENV_THREADS)
    raw = env if env else cfg.get('sweep', 'threads', default=1)
    try:
        count = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"Worker count must be an integer, got {raw!r}")
    if count < 1:
        raise ConfigError(f"Worker count must be positive, got {count}")
    return count
