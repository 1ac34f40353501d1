"""Polarisation projectors, tomography setting sets and synthetic counts.

Phase convention: R = (H + iV)/sqrt(2), L = (H - iV)/sqrt(2).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError

_S2 = 1 / np.sqrt(2)
JONES = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S2, _S2], dtype=complex),
    "A": np.array([_S2, -_S2], dtype=complex),
    "R": np.array([_S2, 1j * _S2], dtype=complex),
    "L": np.array([_S2, -1j * _S2], dtype=complex),
}
COMPLEMENT = {"H": "V", "V": "H", "D": "A", "A": "D", "R": "L", "L": "R"}

STATE_TOMO_LABELS = ("H", "V", "D", "R")
PROCESS_INPUT_LABELS = ("H", "V", "D", "R")
PROCESS_OUTPUT_LABELS = ("H", "V", "D", "R", "A", "L")


def jones(label: str) -> np.ndarray:
    try:
        return JONES[label]
    except KeyError:
        raise DomainError(f"unknown polarisation label {label!r}") from None


def projector(label: str) -> np.ndarray:
    v = jones(label)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class MeasurementSetting:
    """One or two polarisation labels and the rank-1 projector they define."""

    labels: tuple[str, ...]

    @property
    def projector(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for lab in self.labels:
            out = np.kron(out, projector(lab))
        return out


@dataclass(frozen=True)
class ProcessSetting:
    """Input preparation paired with an output projection."""

    preparation: str
    output: str

    @property
    def input_state(self) -> np.ndarray:
        return projector(self.preparation)

    @property
    def projector(self) -> np.ndarray:
        return projector(self.output)


def build_state_tomo_settings() -> list[MeasurementSetting]:
    """The 16 two-photon settings {H,V,D,R} x {H,V,D,R}, first photon outermost."""
    return [MeasurementSetting((a, b)) for a, b in product(STATE_TOMO_LABELS, STATE_TOMO_LABELS)]


def build_process_tomo_settings() -> list[ProcessSetting]:
    """The 24 pairs {H,V,D,R} (prepared) x {H,V,D,R,A,L} (analysed)."""
    return [ProcessSetting(a, b) for a, b in product(PROCESS_INPUT_LABELS, PROCESS_OUTPUT_LABELS)]


def design_matrix(projectors: Sequence[np.ndarray]) -> np.ndarray:
    """Rows are conj(vec(P)) so that ``row @ vec(rho) = tr(P rho)``."""
    return np.array([np.asarray(p).conj().ravel() for p in projectors])


@dataclass(frozen=True)
class CountsTable:
    """Expected and (optionally) observed counts for a list of settings.

    ``projectors`` defaults to the ideal projectors of ``settings`` and can be
    overridden to model imperfect or relabelled analysers. ``exposure`` is the
    number of trials N per setting.
    """

    settings: tuple
    expected: np.ndarray
    exposure: np.ndarray
    observed: np.ndarray | None = None
    projectors: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        k = len(self.settings)
        object.__setattr__(self, "settings", tuple(self.settings))
        object.__setattr__(self, "expected", np.asarray(self.expected, dtype=float).reshape(k))
        object.__setattr__(self, "exposure", np.broadcast_to(np.asarray(self.exposure, dtype=float), (k,)).copy())
        if self.projectors is None:
            object.__setattr__(self, "projectors", np.array([s.projector for s in self.settings]))
        if self.observed is not None:
            obs = np.asarray(self.observed)
            if obs.shape != (k,) or np.any(obs < 0):
                raise DomainError("observed counts must be k non-negative values")
            object.__setattr__(self, "observed", obs.astype(np.int64))

    @property
    def dimension(self) -> int:
        return self.projectors.shape[1]

    def counts(self) -> np.ndarray:
        """Observed counts, or the expectations when nothing was sampled."""
        return self.expected if self.observed is None else self.observed.astype(float)

    def labels(self) -> list[tuple[str, str]]:
        out = []
        for s in self.settings:
            if isinstance(s, ProcessSetting):
                out.append((s.preparation, s.output))
            else:
                labs = tuple(s.labels) + ("",) * (2 - len(s.labels))
                out.append(labs[:2])
        return out

    def to_csv(self, path: str | Path | None = None, header: Sequence[str] = ()) -> str:
        """CSV with columns setting_1, setting_2, expected, observed (12 significant digits).

        ``header`` lines are written first as ``# ...`` comments.
        """
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting_1", "setting_2", "expected", "observed"])
        obs = self.observed if self.observed is not None else [None] * len(self.settings)
        for (a, b), e, o in zip(self.labels(), self.expected, obs):
            w.writerow([a, b, f"{e:.12g}", "" if o is None else int(o)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def read_counts_csv(path: str | Path, exposure: float, kind: str = "state") -> CountsTable:
    """Inverse of :meth:`CountsTable.to_csv`.

    ``kind="state"`` rebuilds measurement settings from both columns;
    ``kind="process"`` reads (preparation, output) pairs.
    """
    rows = [r for r in csv.DictReader(line for line in Path(path).read_text().splitlines() if not line.startswith("#"))]
    if kind == "process":
        settings = [ProcessSetting(r["setting_1"], r["setting_2"]) for r in rows]
    else:
        settings = [MeasurementSetting(tuple(x for x in (r["setting_1"], r["setting_2"]) if x)) for r in rows]
    expected = [float(r["expected"]) for r in rows]
    observed = None
    if rows and all(r["observed"] != "" for r in rows):
        observed = [int(r["observed"]) for r in rows]
    return CountsTable(tuple(settings), expected, exposure, observed)


def expected_counts(rho: np.ndarray, settings: Sequence, exposure: float = 1e4) -> CountsTable:
    """Born-rule expectations ``N tr(rho P)`` for each setting."""
    if np.any(np.asarray(exposure) <= 0):
        raise DomainError("exposure must be positive")
    rho = np.asarray(rho, dtype=complex)
    projs = np.array([s.projector for s in settings])
    if projs.shape[1:] != rho.shape:
        raise DomainError(f"state shape {rho.shape} does not match projector shape {projs.shape[1:]}")
    probs = np.real(np.einsum("kij,ji->k", projs, rho))
    if probs.min() < -1e-9:
        raise DomainError("negative Born probability; state is not PSD")
    probs = np.clip(probs, 0, None)
    return CountsTable(tuple(settings), np.asarray(exposure) * probs, exposure, projectors=projs)


def sample_counts(table: CountsTable, seed: int) -> CountsTable:
    """Poisson shot noise around the expected counts."""
    rng = np.random.default_rng(seed)
    return replace(table, observed=rng.poisson(table.expected))
