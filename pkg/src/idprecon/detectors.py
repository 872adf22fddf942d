"""Attacker-side classification of mechanism answers.

A noise-free answer is bit-exactly 0.0 or 1.0, so exact float comparison is
the whole direct test. Rounded answers need repetition, and the hardened
mechanism needs the rescaled sample variance of many repeats.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class NoiseVerdict(enum.Enum):
    CLEAN_ZERO = "clean-zero"
    CLEAN_ONE = "clean-one"
    NOISY = "noisy"

    @property
    def clean(self) -> bool:
        return self is not NoiseVerdict.NOISY


class ScaleVerdict(enum.Enum):
    LOW_SCALE = 0   # Laplace(m/eps): k-local sensitivity 0 under the hardened mechanism
    HIGH_SCALE = 1  # Laplace(2m/eps): sensitivity 1

    @property
    def sensitivity(self) -> int:
        return self.value


@dataclass(frozen=True)
class VarianceTestConfig:
    m: int = 1000
    threshold: float = 5.0
    eps_total: float = 1e-7

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m}")
        if not 2.0 < self.threshold < 8.0:
            raise ValueError("threshold must lie between the expected values 2 and 8")
        if not self.eps_total > 0:
            raise ValueError("eps_total must be positive")

    @property
    def eps_per_call(self) -> float:
        return self.eps_total / self.m


def classify_direct(value: float) -> NoiseVerdict:
    if value == 0.0:
        return NoiseVerdict.CLEAN_ZERO
    if value == 1.0:
        return NoiseVerdict.CLEAN_ONE
    return NoiseVerdict.NOISY


def classify_repeated(answers: Sequence[float]) -> NoiseVerdict:
    """Verdict from repeated {0,1}-rounded answers: any disagreement means noise."""
    a = np.asarray(answers, dtype=np.float64)
    if a.size == 0:
        raise ValueError("need at least one answer")
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError("repeated answers must each be 0 or 1")
    if np.all(a == a[0]):
        return NoiseVerdict.CLEAN_ONE if a[0] == 1.0 else NoiseVerdict.CLEAN_ZERO
    return NoiseVerdict.NOISY


def psi_statistic(samples: Sequence[float], eps_total: float, m: int | None = None) -> float:
    """``(eps/m)^2`` times the unbiased sample variance of the m answers."""
    z = np.asarray(samples, dtype=np.float64)
    if m is None:
        m = z.size
    if m < 2:
        raise ValueError(f"need m >= 2 samples, got {m}")
    if z.size != m:
        raise ValueError(f"expected {m} samples, got {z.size}")
    centred = z - z.mean()
    var = float(np.dot(centred, centred)) / (m - 1)
    return (eps_total / m) ** 2 * var


def psi_statistics(batch: np.ndarray, eps_total: float) -> np.ndarray:
    """Row-wise ``psi_statistic`` for a (trials, m) array."""
    batch = np.asarray(batch, dtype=np.float64)
    m = batch.shape[1]
    if m < 2:
        raise ValueError(f"need m >= 2 samples, got {m}")
    return (eps_total / m) ** 2 * batch.var(axis=1, ddof=1)


def classify_variance(samples: Sequence[float], config: VarianceTestConfig) -> ScaleVerdict:
    psi = psi_statistic(samples, config.eps_total, config.m)
    if math.isnan(psi):
        raise ValueError("samples contain NaN")
    return ScaleVerdict.HIGH_SCALE if psi >= config.threshold else ScaleVerdict.LOW_SCALE
