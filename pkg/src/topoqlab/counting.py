"""Photon-pair coincidence model, cross-correlation g2 and its exponential fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError, UndefinedCorrelationError
from .lattice import Propagator


@dataclass(frozen=True)
class SourceModel:
    """Per-window pair and background probabilities of the pair source.

    ``window_count`` is the number of coincidence windows in one 700 s
    integration (7e8, i.e. 1 us windows).
    """

    pair_probability: float = 3e-3
    background_s: float = 1e-4
    background_i: float = 1e-4
    window_count: int = 700_000_000

    def __post_init__(self):
        for name in ("pair_probability", "background_s", "background_i"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise DomainError(f"{name} must lie in [0, 1), got {v}")
        if self.pair_probability + max(self.background_s, self.background_i) >= 1:
            raise DomainError("pair probability plus background must stay below 1")
        if self.window_count <= 0:
            raise DomainError("window_count must be positive")

    @classmethod
    def from_integration(cls, seconds: float = 700.0, window_ns: float = 1000.0, **kwargs) -> SourceModel:
        return cls(window_count=int(round(seconds / (window_ns * 1e-9))), **kwargs)


@dataclass(frozen=True)
class CoincidenceRecord:
    """Singles and coincidence counts over ``window_count`` windows.

    ``expectation=True`` marks a record of mean values rather than observed
    counts. The ``coincidences <= singles`` check is skipped for such records:
    the accidental term ``p_s * p_i`` lets the mean coincidence rate exceed a
    singles rate when backgrounds are tiny compared with ``q**2``.
    """

    singles_s: float
    singles_i: float
    coincidences: float
    window_count: int
    expectation: bool = False

    def __post_init__(self):
        if min(self.singles_s, self.singles_i, self.coincidences) < 0:
            raise DomainError("counts must be non-negative")
        if not self.expectation and self.coincidences > min(self.singles_s, self.singles_i):
            raise DomainError("coincidences exceed singles")
        if self.window_count <= 0:
            raise DomainError("window_count must be positive")

    @property
    def p_s(self) -> float:
        return self.singles_s / self.window_count

    @property
    def p_i(self) -> float:
        return self.singles_i / self.window_count

    @property
    def p_si(self) -> float:
        return self.coincidences / self.window_count


def channel_transmission(u: Propagator, input_site: int, output_site: int) -> float:
    """``|U[output, input]|^2`` with 1-based sites."""
    return u.transmission(input_site, output_site)


def detection_probabilities(src: SourceModel, eta_s: float, eta_i: float) -> tuple[float, float, float]:
    """Per-window ``(p_s, p_i, p_si)``; true plus accidental coincidences."""
    for eta in (eta_s, eta_i):
        if not 0 <= eta <= 1:
            raise DomainError(f"transmission {eta} outside [0, 1]")
    q = src.pair_probability
    p_s = q * eta_s + src.background_s
    p_i = q * eta_i + src.background_i
    p_si = q * eta_s * eta_i + p_s * p_i
    if max(p_s, p_i, p_si) > 1:
        raise DomainError("detection probability exceeds 1")
    return p_s, p_i, p_si


def expected_record(src: SourceModel, eta_s: float, eta_i: float) -> CoincidenceRecord:
    """Noise-free record: counts equal their means."""
    p_s, p_i, p_si = detection_probabilities(src, eta_s, eta_i)
    w = src.window_count
    return CoincidenceRecord(p_s * w, p_i * w, p_si * w, w, expectation=True)


def simulate_counts(src: SourceModel, eta_s: float, eta_i: float, seed: int) -> CoincidenceRecord:
    p_s, p_i, p_si = detection_probabilities(src, eta_s, eta_i)
    w = src.window_count
    if p_si > min(p_s, p_i):
        raise DomainError("coincidence probability exceeds a singles probability; counts cannot be sampled")
    rng = np.random.default_rng(seed)
    singles_s, singles_i, coinc = rng.poisson([p_s * w, p_i * w, p_si * w])
    coinc = min(coinc, singles_s, singles_i)
    return CoincidenceRecord(int(singles_s), int(singles_i), int(coinc), w)


def g2(record: CoincidenceRecord) -> float:
    """Cross-correlation ``p_si / (p_s p_i)``."""
    if record.singles_s <= 0 or record.singles_i <= 0:
        raise UndefinedCorrelationError("g2 undefined with zero singles")
    return record.p_si / (record.p_s * record.p_i)


def g2_closed_form(src: SourceModel, eta_s: float, eta_i: float) -> float:
    q = src.pair_probability
    return 1 + q * eta_s * eta_i / ((q * eta_s + src.background_s) * (q * eta_i + src.background_i))


@dataclass(frozen=True)
class ExponentialFit:
    amplitude: float
    rate: float
    residual_norm: float

    def __call__(self, z):
        return self.amplitude * np.exp(-self.rate * np.asarray(z, dtype=float))


def fit_exponential(z_values, g2_values) -> ExponentialFit:
    """Least-squares line through ``ln g2 = ln A - k z``.

    ``residual_norm`` is the 2-norm of the log-space residuals.
    """
    z = np.asarray(z_values, dtype=float)
    g = np.asarray(g2_values, dtype=float)
    if z.shape != g.shape or z.size < 3:
        raise FitError("need at least 3 matching (z, g2) points")
    if np.any(g <= 0):
        raise DomainError("g2 values must be positive for a log-space fit")
    design = np.column_stack([np.ones_like(z), -z])
    if np.linalg.matrix_rank(design) < 2:
        raise FitError("all z values coincide; rate is unidentifiable")
    coef, *_ = np.linalg.lstsq(design, np.log(g), rcond=None)
    residual = float(np.linalg.norm(design @ coef - np.log(g)))
    return ExponentialFit(float(np.exp(coef[0])), float(coef[1]), residual)
