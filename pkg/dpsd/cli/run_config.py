# Copyright (c) 2026, the dpsd authors
import os
import enum
import math
import typing
import argparse
from pathlib import Path
from dataclasses import dataclass, fields
from yaml import load as yaml_load
# Try and use LibYAML where available, fall back to the python implementation
try:
    from yaml import CLoader as YamlLoader
except ImportError:
    from yaml import Loader as YamlLoader
from dpsd.sketch.hamming_sketch import KExceedsNError
from dpsd.database.sketch_store import SketchMode
from dpsd.lcp.dp_lcp import LcpBackend

THREADS_ENV = 'DPSD_THREADS'


class ConfigError(ValueError):
    pass


class Command(enum.Enum):
    GEN = 0
    BUILD = 1
    QUERY = 2
    AUDIT = 3
    BENCH = 4


class OutputFormat(enum.Enum):
    JSON = 0
    TSV = 1


@dataclass
class RunConfig:
    """
    Everything a command needs, already validated
    """
    command: Command
    input: typing.Optional[Path] = None
    output: typing.Optional[Path] = None
    query: typing.Optional[Path] = None
    truth: typing.Optional[Path] = None
    n: int = 64
    m: int = 10
    k: int = 8
    eps: float = 1.0
    beta: float = 0.05
    mode: SketchMode = SketchMode.HAMMING
    backend: LcpBackend = LcpBackend.WINDOW_ENCODE
    seed: typing.Optional[int] = None
    trials: int = 1000
    format: OutputFormat = OutputFormat.JSON
    threads: int = 1
    copies: typing.Optional[int] = None
    planted_distance: typing.Optional[int] = None
    # Fields set by a flag or the config file, as opposed to left at their defaults
    given: typing.FrozenSet[str] = frozenset()

    def validate(self) -> None:
        """
        Check the configuration before doing any work
        :raises ConfigError: For invalid values or missing files
        :raises KExceedsNError: When k > n for commands that build or generate
        """
        if self.n < 1 or self.k < 1:
            raise ConfigError(f"n and k must be at least 1, got n={self.n}, k={self.k}")
        if self.m < 0:
            raise ConfigError(f"m must not be negative, got {self.m}")
        if not (self.eps > 0 or math.isinf(self.eps)) or math.isnan(self.eps):
            raise ConfigError(f"eps must be positive or inf, got {self.eps}")
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta must be in (0, 1), got {self.beta}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if self.copies is not None and self.copies < 1:
            raise ConfigError(f"copies must be at least 1, got {self.copies}")
        if self.command in {Command.GEN, Command.AUDIT, Command.BENCH} and self.input is None and self.k > self.n:
            raise KExceedsNError(self.k, self.n)
        if self.planted_distance is not None and not 0 <= self.planted_distance <= self.n:
            raise ConfigError(f"Planted distance must be in [0, n], got {self.planted_distance}")

        required_inputs = {
            Command.BUILD: ['input'],
            Command.QUERY: ['input', 'query']
        }.get(self.command, [])
        required_outputs = {
            Command.GEN: ['output'],
            Command.BUILD: ['output']
        }.get(self.command, [])
        for name in required_inputs:
            if getattr(self, name) is None:
                raise ConfigError(f"{self.command.name.lower()} needs --{name}")
        for name in required_outputs:
            if getattr(self, name) is None:
                raise ConfigError(f"{self.command.name.lower()} needs --{name}")
        for name in ('input', 'query', 'truth'):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise ConfigError(f"--{name} file {path} does not exist")
        if self.output is not None and not self.output.resolve().parent.is_dir():
            raise ConfigError(f"Output directory {self.output.parent} does not exist")


def load_config_file(path: typing.Union[str, Path]) -> dict:
    """
    Read flag values from a YAML mapping, keys are the long flag names
    """
    with open(path, 'r') as config_file:
        data = yaml_load(config_file, Loader=YamlLoader)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a mapping of flag names to values")
    return {str(key).replace('-', '_'): value for key, value in data.items()}


def _parse_eps(value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"eps must be a number or inf, got {value!r}")


def _parse_enum(enum_type, value):
    if isinstance(value, enum_type):
        return value
    name = str(value).strip().upper().replace('-', '_')
    if name not in enum_type.__members__:
        raise ConfigError(f"Unknown value '{value}', expected one of "
                          f"{', '.join(member.lower() for member in enum_type.__members__)}")
    return enum_type[name]


def from_args(args: argparse.Namespace, environ: typing.Optional[typing.Mapping[str, str]] = None) -> RunConfig:
    """
    Build a RunConfig from parsed flags.
    Precedence: explicit flag, then the --config YAML file, then the environment, then defaults.
    Flags left unset are None in the namespace.
    :param args:
    :param environ: Environment variables, os.environ if not given
    :return: A validated config
    """
    if environ is None:
        environ = os.environ
    values = {}
    if getattr(args, 'config', None) is not None:
        values.update(load_config_file(args.config))
    for field in fields(RunConfig):
        flag_value = getattr(args, field.name, None)
        if flag_value is not None:
            values[field.name] = flag_value
    given = frozenset(name for name, value in values.items() if value is not None)
    if values.get('threads') is None and environ.get(THREADS_ENV):
        try:
            values['threads'] = int(environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {environ[THREADS_ENV]!r}")
    if values.get('threads') is None:
        values['threads'] = os.cpu_count() or 1
    unknown = set(values.keys()) - ({field.name for field in fields(RunConfig)} - {'given'})
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}")

    values['command'] = _parse_enum(Command, values.get('command', args.command))
    for name in ('input', 'output', 'query', 'truth'):
        if values.get(name) is not None:
            values[name] = Path(values[name])
    if 'eps' in values:
        values['eps'] = _parse_eps(values['eps'])
    if 'mode' in values:
        values['mode'] = _parse_enum(SketchMode, values['mode'])
    if 'backend' in values:
        values['backend'] = _parse_enum(LcpBackend, values['backend'])
    if 'format' in values:
        values['format'] = _parse_enum(OutputFormat, values['format'])
    try:
        for name in ('n', 'm', 'k', 'trials', 'threads', 'seed', 'copies', 'planted_distance'):
            if values.get(name) is not None:
                values[name] = int(values[name])
        if values.get('beta') is not None:
            values['beta'] = float(values['beta'])
    except (TypeError, ValueError) as err:
        raise ConfigError(f"Invalid numeric value: {err}") from err
    config = RunConfig(given=given, **{key: value for key, value in values.items() if value is not None})
    config.validate()
    return config
