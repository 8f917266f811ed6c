from configparser import ConfigParser
from pathlib import Path

from pkg_resources import DistributionNotFound, get_distribution

__title__ = "ldagan"
try:
    __version__ = get_distribution(__title__).version
except DistributionNotFound:  # pragma: no cover
    # For debug
    with (Path(__file__).parent.parent.parent / "setup.cfg").open("r") as f:
        c = ConfigParser()
        c.read_file(f.readlines())
        __version__ = c.get("metadata", "version")

# Public API
from ldagan.config import TrainConfig, load_train_config
from ldagan.data import Dataset2D, GaussianMixtureSpec, load_dataset, ring_spec, sample_lda_mixture, sample_mixture, save_dataset
from ldagan.errors import LdaganException, ResultCode
from ldagan.folders import RunFolders
from ldagan.gan import DiscriminatorNet, FakeBatch, GeneratorBank, NoiseBatch
from ldagan.inference import DirichletParams, VariationalState, e_step, e_step_batch
from ldagan.metrics import CoverageReport, coverage_report
from ldagan.special_math import RngStream
from ldagan.trainer import MetricsRecord, Trainer, TrainState, load_checkpoint, save_checkpoint, train, train_step

__all__ = [
    "LdaganException",
    "ResultCode",
    "TrainConfig",
    "load_train_config",
    "RunFolders",
    "RngStream",
    "DirichletParams",
    "VariationalState",
    "e_step",
    "e_step_batch",
    "GeneratorBank",
    "DiscriminatorNet",
    "NoiseBatch",
    "FakeBatch",
    "GaussianMixtureSpec",
    "Dataset2D",
    "ring_spec",
    "sample_mixture",
    "sample_lda_mixture",
    "load_dataset",
    "save_dataset",
    "CoverageReport",
    "coverage_report",
    "TrainState",
    "MetricsRecord",
    "Trainer",
    "train_step",
    "train",
    "save_checkpoint",
    "load_checkpoint",
]
