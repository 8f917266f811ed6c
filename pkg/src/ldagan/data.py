"""
Synthetic 2D datasets (Gaussian rings, LDA-mixed rings), and their CSV import/export.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.inference import DirichletParams
from ldagan.special_math import RngStream, SimplexVector, as_simplex, sample_categorical, sample_dirichlet

LOGGER = logging.getLogger("data")

# Synthetic data constants
RING_MODES = 8
RING_RADIUS = 2.0
RING_VARIANCE = 0.08
SMALL_RING_RADIUS = 0.5
SMALL_RING_VARIANCE = 0.02
LDA_RING_ALPHA = [8.0, 4.0] * 4

# Synthetic data kinds
RING = "ring"
LDA_RING = "lda-ring"
SMALL_RING = "small-ring"
SYNTH_KINDS = [RING, LDA_RING, SMALL_RING]

# CSV columns
X_COLUMN = "x"
Y_COLUMN = "y"
LABEL_COLUMN = "label"
GENERATOR_COLUMN = "generator_id"


@dataclass
class GaussianMixtureSpec:
    """
    Isotropic Gaussians mixture: covariance is variance * I for all components
    """

    centers: np.ndarray
    variance: float
    weights: SimplexVector

    def __post_init__(self):
        self.centers = np.array(self.centers, dtype=np.float64)
        self.weights = as_simplex(self.weights, "weights")
        if self.centers.ndim != 2 or self.centers.shape[1] != 2 or len(self.centers) < 1 or self.weights.shape != (len(self.centers),):
            raise LdaganException(f"Inconsistent mixture: centers shape {self.centers.shape}, weights shape {self.weights.shape}", ResultCode.ERROR_SHAPE)
        if not np.isfinite(self.variance) or self.variance <= 0:
            raise LdaganException(f"Mixture variance must be positive, got {self.variance}", ResultCode.ERROR_DOMAIN)

    @property
    def n_modes(self) -> int:
        return len(self.centers)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance))


@dataclass
class Dataset2D:
    """
    N x 2 samples, with the optional true component of each sample
    """

    samples: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        self.samples = np.array(self.samples, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(self.samples)):
            raise LdaganException("Dataset samples must be finite", ResultCode.ERROR_DOMAIN)
        if self.labels is not None:
            self.labels = np.array(self.labels, dtype=np.int64).reshape(-1)
            if len(self.labels) != len(self.samples) or np.any(self.labels < 0):
                raise LdaganException("Dataset labels must be non-negative, one per sample", ResultCode.ERROR_SHAPE)

    @property
    def N(self) -> int:  # NOQA: N802
        return len(self.samples)


def ring_spec(n_modes: int, radius: float, variance: float) -> GaussianMixtureSpec:
    """
    n_modes equally weighted Gaussians, centered at angles 2.pi.j/n_modes (counterclockwise from the x axis) on a circle
    """
    if n_modes < 1:
        raise LdaganException(f"Invalid modes count: {n_modes}", ResultCode.ERROR_PARAM_INVALID)
    angles = 2.0 * np.pi * np.arange(n_modes) / n_modes
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return GaussianMixtureSpec(centers, variance, np.full(n_modes, 1.0 / n_modes))


def _draw_points(spec: GaussianMixtureSpec, labels: np.ndarray, rng: RngStream) -> Dataset2D:
    return Dataset2D(spec.centers[labels] + spec.sigma * rng.normal((len(labels), 2)), labels)


def sample_mixture(spec: GaussianMixtureSpec, n: int, rng: RngStream) -> Dataset2D:
    """
    Per sample: component ~ weights, point ~ Normal(center, variance.I)
    """
    if n < 1:
        raise LdaganException(f"Invalid samples count: {n}", ResultCode.ERROR_PARAM_INVALID)
    return _draw_points(spec, sample_categorical(spec.weights, rng, size=n), rng)


def sample_lda_mixture(alpha: DirichletParams, spec: GaussianMixtureSpec, n: int, rng: RngStream) -> Dataset2D:
    """
    Per sample: pi ~ Dir(alpha), component ~ Mult(pi), point ~ Normal(center, variance.I)
    """
    if n < 1:
        raise LdaganException(f"Invalid samples count: {n}", ResultCode.ERROR_PARAM_INVALID)
    if alpha.K != spec.n_modes:
        raise LdaganException(f"Dirichlet parameters length ({alpha.K}) doesn't match mixture components ({spec.n_modes})", ResultCode.ERROR_SHAPE)
    pi = sample_dirichlet(alpha, rng, size=n)
    return _draw_points(spec, sample_categorical(pi, rng), rng)


def synth_dataset(kind: str, n: int, rng: RngStream) -> Dataset2D:
    """
    One of the three synthetic data types (ring, LDA-mixed ring, small ring)
    """
    if kind == RING:
        return sample_mixture(ring_spec(RING_MODES, RING_RADIUS, RING_VARIANCE), n, rng)
    if kind == LDA_RING:
        return sample_lda_mixture(DirichletParams(np.array(LDA_RING_ALPHA)), ring_spec(RING_MODES, RING_RADIUS, RING_VARIANCE), n, rng)
    if kind == SMALL_RING:
        return sample_mixture(ring_spec(RING_MODES, SMALL_RING_RADIUS, SMALL_RING_VARIANCE), n, rng)
    raise LdaganException(f"Unknown dataset kind: {kind}", ResultCode.ERROR_PARAM_INVALID)


def estimate_spec(dataset: Dataset2D) -> GaussianMixtureSpec:
    """
    Mixture description recovered from a labeled dataset: per-label means, pooled per-axis variance, label frequencies
    """
    if dataset.labels is None:
        raise LdaganException("Can't estimate mixture from an unlabeled dataset", ResultCode.ERROR_PARAM_MISSING)
    counts = np.bincount(dataset.labels)
    if np.any(counts == 0):
        raise LdaganException(f"Labels without samples: {np.nonzero(counts == 0)[0].tolist()}", ResultCode.ERROR_PARAM_INVALID)
    centers = np.stack([np.bincount(dataset.labels, weights=dataset.samples[:, i]) / counts for i in range(2)], axis=1)
    variance = float(np.sum((dataset.samples - centers[dataset.labels]) ** 2) / (2 * dataset.N))
    return GaussianMixtureSpec(centers, variance, counts / dataset.N)


def save_points(path: Path, samples: np.ndarray, ids: Any, id_column: str):
    """
    Writes a "x,y,<id_column>" CSV file; ids may be None (empty id column)
    """
    rows = len(samples)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow([X_COLUMN, Y_COLUMN, id_column])
            for i in range(rows):
                w.writerow([repr(float(samples[i, 0])), repr(float(samples[i, 1])), "" if ids is None else int(ids[i])])
    except OSError as e:
        raise LdaganException(f"Can't write file {path}: {e}", ResultCode.ERROR_IO)
    LOGGER.debug(f"Saved {rows} points to {path}")


def save_dataset(path: Path, dataset: Dataset2D):
    save_points(path, dataset.samples, dataset.labels, LABEL_COLUMN)


def load_dataset(path: Path) -> Dataset2D:
    """
    Reads a "x,y,label" CSV file; labels are either all present or all empty
    """
    if not path.is_file():
        raise LdaganException(f"Missing file: {path}", ResultCode.ERROR_IO)
    samples: List[List[float]] = []
    labels: List[str] = []
    try:
        with path.open("r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != [X_COLUMN, Y_COLUMN, LABEL_COLUMN]:
                raise LdaganException(f"Invalid dataset header in {path}: {header}", ResultCode.ERROR_MODEL_INVALID)
            for row in reader:
                try:
                    x, y, label = row
                    samples.append([float(x), float(y)])
                    labels.append(label)
                except ValueError:
                    raise LdaganException(f"Invalid dataset row at {path}:{reader.line_num}: {row}", ResultCode.ERROR_MODEL_INVALID)
    except (OSError, UnicodeDecodeError) as e:
        raise LdaganException(f"Can't read file {path}: {e}", ResultCode.ERROR_IO)

    if len(samples) == 0:
        raise LdaganException(f"Empty dataset: {path}", ResultCode.ERROR_MODEL_INVALID)
    if not np.all(np.isfinite(samples)):
        raise LdaganException(f"Non-finite coordinates in dataset: {path}", ResultCode.ERROR_MODEL_INVALID)
    if all(label == "" for label in labels):
        parsed = None
    else:
        try:
            parsed = [int(label) for label in labels]
        except ValueError:
            raise LdaganException(f"Invalid labels column in {path} (expecting all integers, or all empty)", ResultCode.ERROR_MODEL_INVALID)
    try:
        out = Dataset2D(np.array(samples), parsed)
    except LdaganException as e:
        raise LdaganException(f"Invalid dataset {path}: {e}", ResultCode.ERROR_MODEL_INVALID)
    LOGGER.debug(f"Loaded {out.N} points from {path}")
    return out
