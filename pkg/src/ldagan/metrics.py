"""
Mode coverage and sample quality diagnostics for 2D generated samples.
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ldagan.data import GaussianMixtureSpec
from ldagan.errors import LdaganException, ResultCode
from ldagan.gan import FakeBatch

# Default capture radius, in standard deviations
CAPTURE_RADIUS_SIGMAS = 3.0

# Reference evaluation size, and samples required (at that size) to count a mode as covered
REFERENCE_SAMPLES = 512
REFERENCE_MIN_COUNT = 5


@dataclass
class CoverageReport:
    """
    Coverage/quality report for a generated samples set
    """

    n_samples: int
    modes_covered: int
    hq_ratio: float
    per_mode_counts: np.ndarray
    usage: np.ndarray
    usage_entropy: float
    purity: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_samples": self.n_samples,
            "modes_covered": self.modes_covered,
            "hq_ratio": self.hq_ratio,
            "per_mode_counts": [int(c) for c in self.per_mode_counts],
            "usage": [float(u) for u in self.usage],
            "usage_entropy": self.usage_entropy,
            "purity": [float(p) for p in self.purity],
        }


def default_min_count(n: int) -> int:
    return max(1, (n * REFERENCE_MIN_COUNT) // REFERENCE_SAMPLES)


def _check_samples(samples: Any) -> np.ndarray:
    values = np.array(samples, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 2 or len(values) == 0:
        raise LdaganException(f"Expecting a non-empty N x 2 samples matrix, got shape {values.shape}", ResultCode.ERROR_SHAPE)
    return values


def nearest_centers(samples: Any, spec: GaussianMixtureSpec) -> (np.ndarray, np.ndarray):
    """
    Index of the nearest center for each sample, and the distance to it
    """
    values = _check_samples(samples)
    dist = np.linalg.norm(values[:, None, :] - spec.centers[None, :, :], axis=2)
    ids = np.argmin(dist, axis=1)
    return ids, dist[np.arange(len(values)), ids]


def mode_coverage(samples: Any, spec: GaussianMixtureSpec, capture_radius_sigmas: float = CAPTURE_RADIUS_SIGMAS, min_count: int = None) -> (int, np.ndarray):
    """
    Counts, for each mode, the samples assigned to it (nearest center) and within capture radius;
    a mode is covered if this count is at least min_count (default: see default_min_count)
    """
    ids, dist = nearest_centers(samples, spec)
    if min_count is None:
        min_count = default_min_count(len(ids))
    captured = dist <= capture_radius_sigmas * spec.sigma
    counts = np.bincount(ids[captured], minlength=spec.n_modes)
    return int(np.sum(counts >= min_count)), counts


def high_quality_ratio(samples: Any, spec: GaussianMixtureSpec, radius_sigmas: float = CAPTURE_RADIUS_SIGMAS) -> float:
    """
    Fraction of samples within radius_sigmas standard deviations of their nearest center
    """
    _, dist = nearest_centers(samples, spec)
    return float(np.mean(dist <= radius_sigmas * spec.sigma))


def _check_fakes(fakes: FakeBatch, K: int) -> (np.ndarray, int):  # NOQA: N803
    ids = np.asarray(fakes.mode_ids, dtype=np.int64)
    if len(ids) == 0:
        raise LdaganException("Empty fake batch", ResultCode.ERROR_SHAPE)
    k = int(np.max(ids)) + 1 if K is None else K
    if np.any(ids < 0) or np.any(ids >= k):
        raise LdaganException(f"Generator ids out of range [0, {k})", ResultCode.ERROR_PARAM_INVALID)
    return ids, k


def generator_usage(fakes: FakeBatch, K: int = None) -> (np.ndarray, float):  # NOQA: N803
    """
    Generator ids frequencies, and their Shannon entropy (nats)
    """
    ids, k = _check_fakes(fakes, K)
    freqs = np.bincount(ids, minlength=k) / len(ids)
    nz = freqs[freqs > 0]
    return freqs, float(max(0.0, -np.sum(nz * np.log(nz))))


def assignment_purity(fakes: FakeBatch, spec: GaussianMixtureSpec, K: int = None) -> np.ndarray:  # NOQA: N803
    """
    For each generator, fraction of its samples whose nearest center is its plurality center (0 for unused generators)
    """
    ids, k = _check_fakes(fakes, K)
    centers, _ = nearest_centers(fakes.samples, spec)
    purity = np.zeros(k)
    for g in range(k):
        mine = centers[ids == g]
        if len(mine):
            purity[g] = np.max(np.bincount(mine)) / len(mine)
    return purity


def coverage_report(
    fakes: FakeBatch, spec: GaussianMixtureSpec, K: int = None, capture_radius_sigmas: float = CAPTURE_RADIUS_SIGMAS, min_count: int = None  # NOQA: N803
) -> CoverageReport:
    """
    All diagnostics at once for a fake batch
    """
    covered, counts = mode_coverage(fakes.samples, spec, capture_radius_sigmas, min_count)
    usage, entropy = generator_usage(fakes, K)
    return CoverageReport(
        n_samples=fakes.M,
        modes_covered=covered,
        hq_ratio=high_quality_ratio(fakes.samples, spec, capture_radius_sigmas),
        per_mode_counts=counts,
        usage=usage,
        usage_entropy=entropy,
        purity=assignment_purity(fakes, spec, K),
    )
