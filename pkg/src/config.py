"""
Project configuration: a flat YAML mapping (mutation.yaml) with command-line overrides.
"""

import logging
import shlex
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from src.executor import DEFAULT_COMPILE_ERROR_MARKERS
from src.mutation_engine import parse_operator_names
from src.sampler import STRATEGIES
from src.utils import MutationToolError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "mutation.yaml"
DEFAULT_INITIAL_TIMEOUT = 600.0
PATH_KEYS = ("source_root", "output_dir", "build_dir")


class ConfigError(MutationToolError):
    pass


@dataclass
class ProjectConfig:
    source_root: Path = Path("src/main/java")
    output_dir: Path = Path("mutation-results")
    build_command: list = field(default_factory=list)
    build_dir: Path = None
    timeout: float = None
    initial_timeout: float = DEFAULT_INITIAL_TIMEOUT
    jobs: int = 1
    operators: list = field(default_factory=lambda: ["classic"])
    include: list = field(default_factory=lambda: ["*.java"])
    exclude: list = field(default_factory=list)
    compile_error_markers: list = field(default_factory=lambda: list(DEFAULT_COMPILE_ERROR_MARKERS))
    env: dict = field(default_factory=dict)
    clean_command: list = field(default_factory=list)
    sample_rate: float = None
    sample_strategy: str = "uniform"
    higher_order: bool = False
    seed: int = 0
    test_patterns: list = field(default_factory=lambda: ["surefire"])

    @property
    def working_dir(self):
        return self.build_dir if self.build_dir is not None else self.source_root

    @property
    def enabled_operators(self):
        return parse_operator_names(self.operators)

    def to_dict(self):
        return {key: str(value) if isinstance(value, Path) else value for key, value in asdict(self).items()}

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _command(value, key):
    if value is None:
        return []
    if isinstance(value, str):
        return shlex.split(value)
    if isinstance(value, (list, tuple)):
        return [str(part) for part in value]
    raise ConfigError(f"{key} must be a string or a list, got {type(value).__name__}")


def _as_list(value):
    if value is None:
        return []
    return [value] if isinstance(value, str) else list(value)


def load_config(path=None, overrides=None, require_config=False):
    """
    Read the YAML file at path (default mutation.yaml when it exists), apply the
    non-None overrides and validate. Relative paths in the file resolve against
    its directory; relative paths given as overrides resolve against the cwd.
    """
    config_path = Path(path) if path is not None else Path(DEFAULT_CONFIG_FILE)
    data = {}
    base = Path.cwd()
    if config_path.is_file():
        with open(config_path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{config_path} must hold a mapping of keys to values")
        base = config_path.resolve().parent
    elif path is not None or require_config:
        raise ConfigError(f"config file {config_path} does not exist")

    known = {item.name for item in fields(ProjectConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for key in PATH_KEYS:
        if data.get(key) is not None:
            data[key] = base / Path(data[key]).expanduser()
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config key {key}")
        data[key] = Path(value).expanduser().resolve() if key in PATH_KEYS else value

    try:
        config = ProjectConfig(**data)
    except TypeError as error:
        raise ConfigError(str(error))
    return validate(config)


def validate(config):
    config.source_root = Path(config.source_root)
    config.output_dir = Path(config.output_dir)
    if config.build_dir is not None:
        config.build_dir = Path(config.build_dir)
    config.build_command = _command(config.build_command, "build_command")
    config.clean_command = _command(config.clean_command, "clean_command")
    config.operators = _as_list(config.operators)
    config.include = _as_list(config.include)
    config.exclude = _as_list(config.exclude)
    config.compile_error_markers = _as_list(config.compile_error_markers)
    config.test_patterns = _as_list(config.test_patterns)
    config.env = {str(key): str(value) for key, value in (config.env or {}).items()}

    if not config.source_root.is_dir():
        raise ConfigError(f"source root {config.source_root} is not a directory")
    try:
        config.enabled_operators
    except ValueError as error:
        raise ConfigError(str(error))
    if config.timeout is not None and config.timeout <= 0:
        raise ConfigError(f"timeout must be positive, got {config.timeout}")
    if config.initial_timeout is None or config.initial_timeout <= 0:
        raise ConfigError(f"initial_timeout must be positive, got {config.initial_timeout}")
    if int(config.jobs) < 1:
        raise ConfigError(f"jobs must be at least 1, got {config.jobs}")
    config.jobs = int(config.jobs)
    if config.sample_rate is not None and not 0 < float(config.sample_rate) <= 1:
        raise ConfigError(f"sample_rate must lie in (0, 1], got {config.sample_rate}")
    if config.sample_strategy not in STRATEGIES:
        raise ConfigError(f"sample_strategy must be one of {', '.join(STRATEGIES)}")
    if config.build_dir is not None and not config.build_dir.is_dir():
        raise ConfigError(f"build dir {config.build_dir} is not a directory")
    return config
