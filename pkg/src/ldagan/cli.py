import logging
import os
import re
import sys
from argparse import Action, ArgumentParser, ArgumentTypeError, Namespace
from datetime import datetime
from os.path import expanduser
from pathlib import Path
from typing import Any, Callable, Dict, List

import argcomplete
from argcomplete.completers import DirectoriesCompleter, FilesCompleter

import ldagan
from ldagan.config.cfg_item import validate_int
from ldagan.config.cfg_manager import ENV_PREFIX, ConfigManager
from ldagan.config.static_config import LogsConfigItems
from ldagan.config.train_config import TrainConfig, load_train_config
from ldagan.data import GENERATOR_COLUMN, SYNTH_KINDS, estimate_spec, load_dataset, save_dataset, save_points, synth_dataset
from ldagan.errors import LdaganException, ResultCode
from ldagan.folders import RunFolders
from ldagan.gan import balanced_sample_fakes
from ldagan.logs.logs_utils import add_rotating_handler, clean_rotating_handler
from ldagan.metrics import coverage_report
from ldagan.oracle import ORACLE_SUITES, run_suite
from ldagan.persist import save_json_document
from ldagan.plot import save_scatter
from ldagan.special_math import RngStream
from ldagan.trainer import Trainer, load_checkpoint

# Config item parameter syntax
CONFIG_ITEM_DEF_PATTERN = re.compile("([A-Za-z][A-Za-z0-9_]*)=(.*)")

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGENCE = 2
EXIT_IO = 3

# Commands defaults
DEFAULT_SYNTH_SAMPLES = 4096
DEFAULT_EVAL_SAMPLES = 512
DEFAULT_SEED = 0

# Manifest artifact identification
MANIFEST_VERSION = 1

LOGGER = logging.getLogger("ldagan")


def expanded_path(arg: str) -> Path:
    # Path with user expanded value
    return Path(expanduser(arg))


class ConfigDictAction(Action):
    """
    Custom action to store config items as a dict
    """

    def __call__(self, parser, namespace, values, option_string=None):
        # First, validate name=value syntax
        m = CONFIG_ITEM_DEF_PATTERN.match(values)
        if m is None:
            raise ArgumentTypeError(f"Invalid syntax for config item definition: {values}")
        name = m.group(1)
        value = m.group(2)

        # Get map (initialized by default arg), and store value
        config_map = getattr(namespace, self.dest)
        config_map[name] = value


class UsageArgumentParser(ArgumentParser):
    """
    Argument parser exiting with the usage exit code on syntax errors
    """

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class LdaganCliParser:
    """
    CLI arguments parser for ldagan commands

    Constructor arguments:
        description:
            Description string to be displayed in help
        version:
            Version string to be displayed with -V option
    """

    def __init__(self, description: str, version: str = None):
        # Initialize parser
        self.__parser = UsageArgumentParser(description=description)
        self.__commands = self.__parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

        # Add version command
        if version is not None:
            self.parser.add_argument("-V", "--version", action="version", version=version)

    @property
    def parser(self) -> ArgumentParser:
        return self.__parser

    def _add_command(self, name: str, help: str, handler: Callable[[Namespace], int]) -> ArgumentParser:
        p = self.__commands.add_parser(name, help=help, description=help)
        p.set_defaults(handler=handler)
        return p

    def _add_seed_arg(self, p: ArgumentParser):
        p.add_argument("--seed", type=int, action="store", default=None, help=f"Random seed (default: ${ENV_PREFIX}SEED, or {DEFAULT_SEED})")

    def with_synth_command(self):
        p = self._add_command("synth", "Generate a synthetic 2D dataset", lambda a: cmd_synth(a.kind, a.n, a.seed, a.out))
        p.add_argument("kind", choices=SYNTH_KINDS, help="Dataset kind")
        p.add_argument("--n", type=int, action="store", default=DEFAULT_SYNTH_SAMPLES, help=f"Samples count (default: {DEFAULT_SYNTH_SAMPLES})")
        self._add_seed_arg(p)
        p.add_argument("--out", type=expanded_path, action="store", required=True, help="Output CSV file").completer = FilesCompleter
        return self

    def with_train_command(self):
        p = self._add_command(
            "train",
            "Train a generators bank on a dataset",
            lambda a: cmd_train(a.config, a.data, a.out, a.items, iterations=a.iterations, seed=a.seed, resume=a.resume),
        )
        p.add_argument("--config", type=expanded_path, action="store", default=None, help="JSON config file").completer = FilesCompleter
        p.add_argument("--data", type=expanded_path, action="store", required=True, help="Input dataset CSV file").completer = FilesCompleter
        p.add_argument("--out", type=expanded_path, action="store", required=True, help="Output folder").completer = DirectoriesCompleter
        p.add_argument("-c", "--config-item", dest="items", metavar="NAME=VALUE", action=ConfigDictAction, default={}, help="Override config item value")
        p.add_argument("--iterations", type=int, action="store", default=None, help="Override total iterations")
        self._add_seed_arg(p)
        p.add_argument("--resume", type=expanded_path, action="store", default=None, help="Resume from this checkpoint").completer = FilesCompleter
        return self

    def with_eval_command(self):
        p = self._add_command("eval", "Evaluate a trained generators bank", lambda a: cmd_eval(a.checkpoint, a.data, a.n, a.out, seed=a.seed))
        p.add_argument("--checkpoint", type=expanded_path, action="store", required=True, help="Input checkpoint file").completer = FilesCompleter
        p.add_argument("--data", type=expanded_path, action="store", required=True, help="Reference dataset CSV file").completer = FilesCompleter
        p.add_argument("--n", type=int, action="store", default=DEFAULT_EVAL_SAMPLES, help=f"Fake samples count (default: {DEFAULT_EVAL_SAMPLES})")
        self._add_seed_arg(p)
        p.add_argument("--out", type=expanded_path, action="store", required=True, help="Output folder").completer = DirectoriesCompleter
        return self

    def with_oracle_command(self):
        p = self._add_command("oracle", "Run a numerical self-check suite", lambda a: cmd_oracle(a.suite, seed=a.seed))
        p.add_argument("suite", choices=ORACLE_SUITES, help="Suite name")
        self._add_seed_arg(p)
        return self

    def parse(self, input_args: list = None) -> Namespace:
        # By default, parse from CLI args
        input_args = input_args if input_args is not None else sys.argv[1:]
        argcomplete.autocomplete(self.parser)
        return self.parser.parse_args(input_args)


def exit_code(e: LdaganException) -> int:
    """
    Maps an error to the command exit code
    """
    if e.rc == ResultCode.ERROR_DIVERGENCE:
        return EXIT_DIVERGENCE
    if e.rc in (ResultCode.ERROR_IO, ResultCode.ERROR_MODEL_INVALID, ResultCode.ERROR_VERSION):
        return EXIT_IO
    return EXIT_USAGE


def resolve_seed(seed: int = None) -> int:
    # Command-line seed, or environment fallback
    if seed is not None:
        return seed
    env_seed = os.environ.get(f"{ENV_PREFIX}SEED")
    return DEFAULT_SEED if env_seed is None else validate_int("seed", env_seed)


def _run(command: str, body: Callable[[], None], out_dir: Path = None) -> int:
    # Command wrapper: file logging in output folder (if any), and errors mapping
    root = logging.getLogger()
    if out_dir is not None:
        if root.getEffectiveLevel() > logging.INFO:
            root.setLevel(logging.INFO)
        add_rotating_handler(RunFolders(out_dir).logs, root)
    try:
        LOGGER.info(f"Running {command} command (ldagan {ldagan.__version__})")
        body()
        LOGGER.info(f"{command} command done")
        return EXIT_OK
    except LdaganException as e:
        LOGGER.error(f"{command} command failed: {e}")
        print(f"ERROR: {e}", file=sys.stderr)
        return exit_code(e)
    finally:
        if out_dir is not None:
            clean_rotating_handler(root)


def _load_config(config_path: Path, overrides: Dict[str, Any]) -> TrainConfig:
    # Config document errors are usage errors
    try:
        return load_train_config(config_path, overrides)
    except LdaganException as e:
        if e.rc == ResultCode.ERROR_MODEL_INVALID:
            raise LdaganException(str(e), ResultCode.ERROR_PARAM_INVALID)
        raise


def cmd_synth(kind: str, n: int, seed: int, out_path: Path) -> int:
    """
    Writes a synthetic dataset CSV file
    """

    def body():
        if n < 1:
            raise LdaganException(f"Invalid samples count: {n}", ResultCode.ERROR_PARAM_INVALID)
        s = resolve_seed(seed)
        save_dataset(out_path, synth_dataset(kind, n, RngStream(s)))
        LOGGER.info(f"Generated {n} {kind} samples (seed {s}) to {out_path}")

    return _run("synth", body)


def cmd_train(
    config_path: Path, data_path: Path, out_dir: Path, overrides: Dict[str, Any] = None, iterations: int = None, seed: int = None, resume: Path = None
) -> int:
    """
    Trains a generators bank, and writes checkpoint, metrics and run manifest in the output folder
    """

    def body():
        start = datetime.now()
        folders = RunFolders(out_dir)
        items = dict(overrides) if overrides is not None else {}
        if iterations is not None:
            items["total_iterations"] = iterations

        if resume is not None:
            # Resumed config is the checkpoint one (only iterations count can be changed)
            if config_path is not None or seed is not None or len(items.keys() - {"total_iterations"}):
                raise LdaganException("Only the iterations count can be overridden when resuming", ResultCode.ERROR_PARAM_INVALID)
            state = load_checkpoint(resume)
            cfg = _load_config(None, {**state.config.to_dict(), **items})
            state.config = cfg
        else:
            if seed is not None:
                items["seed"] = seed
            cfg = _load_config(config_path, items)
            state = None
            folders.metrics.write_text("", encoding="utf-8")

        dataset = load_dataset(data_path)
        state, records = Trainer(cfg, dataset, folders=folders).train(state)

        # Run manifest
        manifest = {
            "artifact": ldagan.__title__,
            "version": ldagan.__version__,
            "manifest_version": MANIFEST_VERSION,
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "start": start.isoformat(),
            "end": datetime.now().isoformat(),
            "iterations": state.iteration,
            "records": len(records),
            "inputs": {"data": str(data_path), "config": None if config_path is None else str(config_path), "resume": None if resume is None else str(resume)},
            "outputs": {"checkpoint": str(folders.checkpoint), "metrics": str(folders.metrics), "logs": str(folders.logs)},
        }
        save_json_document(folders.manifest, manifest)

    return _run("train", body, out_dir)


def cmd_eval(checkpoint_path: Path, data_path: Path, n_samples: int, out_dir: Path, seed: int = None) -> int:
    """
    Draws fakes from a checkpoint (balanced over generators), and writes fakes CSV, coverage report and SVG scatter
    """

    def body():
        if n_samples < 1:
            raise LdaganException(f"Invalid samples count: {n_samples}", ResultCode.ERROR_PARAM_INVALID)
        folders = RunFolders(out_dir)
        state = load_checkpoint(checkpoint_path)
        dataset = load_dataset(data_path)
        spec = estimate_spec(dataset)
        if spec.n_modes != state.bank.K:
            raise LdaganException(f"Dataset modes count ({spec.n_modes}) doesn't match checkpoint generators count ({state.bank.K})", ResultCode.ERROR_SHAPE)

        fakes = balanced_sample_fakes(state.bank, n_samples, RngStream(resolve_seed(seed)))
        report = coverage_report(fakes, spec, state.bank.K, state.config.capture_radius_sigmas)
        save_points(folders.fakes, fakes.samples, fakes.mode_ids, GENERATOR_COLUMN)
        save_json_document(folders.coverage, {"checkpoint": str(checkpoint_path), "iteration": state.iteration, "K": state.bank.K, **report.to_dict()})
        save_scatter(folders.scatter, dataset, fakes, state.bank.K)
        LOGGER.info(f"Evaluation: {report.modes_covered}/{spec.n_modes} modes covered, hq ratio {report.hq_ratio}, usage entropy {report.usage_entropy}")

    return _run("eval", body, out_dir)


def cmd_oracle(suite: str, seed: int = None) -> int:
    """
    Runs a self-check suite, and prints a pass/fail table; exits with usage code if any check fails
    """
    checks = []

    def body():
        checks.extend(run_suite(suite, resolve_seed(seed)))
        width = max(len(c.name) for c in checks)
        for c in checks:
            print(f"{c.name.ljust(width)}  {'PASS' if c.passed else 'FAIL'}  value={c.value:.6g}  threshold={c.threshold:.6g}  {c.detail}".rstrip())

    rc = _run("oracle", body)
    if rc == EXIT_OK and not all(c.passed for c in checks):
        print(f"ERROR: {suite} oracle suite failed", file=sys.stderr)
        return EXIT_USAGE
    return rc


def main(args: List[str] = None) -> int:
    # Logs settings are resolved from environment only
    try:
        ConfigManager([LogsConfigItems])
    except LdaganException as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE

    parser = LdaganCliParser("LDA over a bank of GAN generators: synthetic data, training, evaluation and self-checks", ldagan.__version__)
    parsed = parser.with_synth_command().with_train_command().with_eval_command().with_oracle_command().parse(args)
    return parsed.handler(parsed)


def entry():  # pragma: no cover
    sys.exit(main())
