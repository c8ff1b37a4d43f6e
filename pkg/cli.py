"""
Command-line entry point: one subcommand per experiment.
Flat `key = value` config files with `#` comments; command-line options win over file values.
"""

import argparse
import logging
import os
import sys
from typing import Dict, List, Mapping, Optional, Tuple

from pydantic import ValidationError

from data_models import RunManifest
from errors import ConfigError, LabError
from experiments import EXPERIMENTS, Experiment
from reporting import write_outputs
from settings import settings

logger = logging.getLogger(__name__)

CONFIG_OPTIONS = ("config", "output_dir")


def parse_config(text: str, source: str = "<config>") -> Dict[str, Tuple[str, int]]:
    """key -> (raw value, line number). Later keys override earlier ones."""
    entries: Dict[str, Tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", source, number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", source, number)
        entries[key] = (value, number)
    return entries


def read_config(path: str) -> Dict[str, Tuple[str, int]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}")
    return parse_config(text, path)


def resolve_params(experiment: Experiment, entries: Mapping[str, Tuple[str, int]],
                   overrides: Mapping[str, str], source: str = "<config>"):
    """Merge config entries and overrides into the experiment's parameter model."""
    fields = experiment.params.model_fields
    for key, (_, line) in entries.items():
        if key not in fields:
            raise ConfigError(f"unknown key {key!r}", source, line)
    for key in overrides:
        if key not in fields:
            raise ConfigError(f"unknown option {key!r}")

    values = {key: value for key, (value, _) in entries.items()}
    values.update(overrides)
    try:
        return experiment.params(**values)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else ""
        message = f"{key}: {error['msg']} (got {values.get(key)!r})" if key else error["msg"]
        if key in entries and key not in overrides:
            raise ConfigError(message, source, entries[key][1])
        raise ConfigError(message)


def _option(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magnon-gadget-lab", description=settings.APP_TITLE)
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, experiment in EXPERIMENTS.items():
        sub = subparsers.add_parser(name, help=experiment.description, description=experiment.description)
        sub.add_argument("--config", help="flat key = value config file")
        sub.add_argument("--output-dir", help=f"output directory (default: $LAB_OUTPUT_DIR or {settings.LAB_OUTPUT_DIR})")
        for field_name, field in experiment.params.model_fields.items():
            default = field.default.value if hasattr(field.default, "value") else field.default
            sub.add_argument(_option(field_name), dest=field_name, default=None, metavar="VALUE",
                             help=f"{field.description} (default: {default})")
    return parser


def run(subcommand: str, config_file: Optional[str] = None, overrides: Optional[Mapping[str, str]] = None,
        output_dir: Optional[str] = None) -> int:
    """Run one experiment and write its outputs. Returns the process exit status."""
    try:
        experiment = EXPERIMENTS.get(subcommand)
        if experiment is None:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        entries = read_config(config_file) if config_file else {}
        params = resolve_params(experiment, entries, overrides or {}, config_file or "<config>")
        logger.info(f"Running {subcommand} with {params.model_dump(mode='json')}")

        try:
            tables = experiment.runner(params)
        except ValidationError as e:
            raise ConfigError(f"invalid parameters: {e.errors()[0]['msg']}")

        manifest = RunManifest(
            subcommand=subcommand,
            parameters=params.model_dump(mode="json"),
            seed=getattr(params, "seed", None),
            version=settings.APP_VERSION,
            settings=settings.as_dict(),
        )
        final = write_outputs(tables, manifest, output_dir or settings.LAB_OUTPUT_DIR)
        logger.info(f"{subcommand} finished: {', '.join(final.checksums)}")
        return 0
    except LabError as e:
        logger.error(f"{subcommand} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"{subcommand} failed unexpectedly: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    options = vars(args)
    overrides = {
        key: value for key, value in options.items()
        if key not in CONFIG_OPTIONS + ("subcommand",) and value is not None
    }
    return run(args.subcommand, args.config, overrides, args.output_dir or os.getenv("LAB_OUTPUT_DIR"))
