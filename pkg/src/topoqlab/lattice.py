"""SSH waveguide chain: Hamiltonian, spectrum, zero-mode densities, disorder, propagation.

Sites are 1-based in every public signature (site 1 is the topological edge);
arrays are indexed from 0 internally.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import ConstructionError, DomainError, NumericalError

# Weak/strong couplings (1/mm) of the default chip, and the separations (um)
# that realise them.
DEFAULT_WEAK_COUPLING = 0.002
DEFAULT_STRONG_COUPLING = 0.01
SEPARATION_WEAK_UM = 15.0
SEPARATION_STRONG_UM = 8.5


def calibrate_exponential_coupling(
    weak: float, strong: float, d_weak: float, d_strong: float
) -> tuple[float, float]:
    """Return ``(c0, d0)`` such that ``c0*exp(-d/d0)`` hits both target couplings."""
    if not (0 < weak < strong) or not (d_weak > d_strong > 0):
        raise DomainError("need 0 < weak < strong and d_weak > d_strong > 0")
    d0 = (d_weak - d_strong) / math.log(strong / weak)
    c0 = strong * math.exp(d_strong / d0)
    return c0, d0


DEFAULT_C0, DEFAULT_D0 = calibrate_exponential_coupling(
    DEFAULT_WEAK_COUPLING, DEFAULT_STRONG_COUPLING, SEPARATION_WEAK_UM, SEPARATION_STRONG_UM
)


def coupling_from_separation(d: float, c0: float, d0: float) -> float:
    """Evanescent coupling ``c0 * exp(-d / d0)`` between two waveguides.

    ``d`` in um, ``c0`` in 1/mm, ``d0`` in um. ``d = 0`` is accepted as the
    limiting case and returns ``c0``.
    """
    if d < 0 or c0 <= 0 or d0 <= 0:
        raise DomainError(f"coupling_from_separation needs d >= 0, c0 > 0, d0 > 0 (got {d}, {c0}, {d0})")
    return c0 * math.exp(-d / d0)


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of the dimerised chain.

    ``defect_site=None`` builds a plain SSH chain (weak bond first) with no
    domain wall; this is what the two-site sanity configurations use.
    """

    n_sites: int = 50
    defect_site: int | None = 26
    separation_weak: float = SEPARATION_WEAK_UM
    separation_strong: float = SEPARATION_STRONG_UM
    c0: float = DEFAULT_C0
    d0: float = DEFAULT_D0
    port_a: int | None = None
    port_b: int | None = None
    port_c: int | None = None

    def __post_init__(self):
        if self.n_sites < 2:
            raise DomainError("n_sites must be >= 2")
        if self.defect_site is not None and not (1 < self.defect_site < self.n_sites):
            raise DomainError(f"defect_site must satisfy 1 < defect_site < {self.n_sites}")
        if self.separation_weak <= 0 or self.separation_strong <= 0:
            raise DomainError("separations must be positive")
        if self.c0 <= 0 or self.d0 <= 0:
            raise DomainError("coupling parameters must be positive")
        # ports default to edge / defect / far edge
        object.__setattr__(self, "port_a", self.port_a or 1)
        object.__setattr__(self, "port_b", self.port_b or (self.defect_site or self.n_sites))
        object.__setattr__(self, "port_c", self.port_c or self.n_sites)
        for p in (self.port_a, self.port_b, self.port_c):
            if not 1 <= p <= self.n_sites:
                raise DomainError(f"port {p} outside 1..{self.n_sites}")

    @property
    def weak_coupling(self) -> float:
        return coupling_from_separation(self.separation_weak, self.c0, self.d0)

    @property
    def strong_coupling(self) -> float:
        return coupling_from_separation(self.separation_strong, self.c0, self.d0)

    @classmethod
    def from_couplings(cls, weak: float, strong: float, **kwargs) -> LatticeSpec:
        """Spec whose default separations map to the requested couplings."""
        d_w = kwargs.pop("separation_weak", SEPARATION_WEAK_UM)
        d_s = kwargs.pop("separation_strong", SEPARATION_STRONG_UM)
        c0, d0 = calibrate_exponential_coupling(weak, strong, d_w, d_s)
        return cls(separation_weak=d_w, separation_strong=d_s, c0=c0, d0=d0, **kwargs)


@dataclass(frozen=True)
class Hamiltonian:
    """Real symmetric tridiagonal coupled-mode Hamiltonian (units 1/mm)."""

    off_diagonal: np.ndarray
    diagonal: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.off_diagonal, dtype=float)
        diag = np.asarray(self.diagonal, dtype=float)
        if diag.ndim != 1 or off.shape != (diag.size - 1,):
            raise DomainError("need n diagonal and n-1 off-diagonal entries")
        object.__setattr__(self, "off_diagonal", off)
        object.__setattr__(self, "diagonal", diag)

    @classmethod
    def from_couplings(cls, couplings, diagonal=None) -> Hamiltonian:
        couplings = np.asarray(couplings, dtype=float)
        if diagonal is None:
            diagonal = np.zeros(couplings.size + 1)
        return cls(couplings, np.asarray(diagonal, dtype=float))

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.dense(), 2))


def dimerization_pattern(n_sites: int, defect_site: int | None) -> np.ndarray:
    """Boolean array over the ``n_sites - 1`` bonds, True where the bond is weak.

    Bond ``j`` joins sites ``j`` and ``j+1``. Site 1 always sits on a weak bond.
    With a defect, both bonds touching ``defect_site`` are weak and the last
    bond is strong.
    """
    j = np.arange(1, n_sites)
    weak = j % 2 == 1
    if defect_site is None:
        return weak
    if defect_site % 2 == 1:
        raise ConstructionError(
            f"defect_site={defect_site} is odd: the bond entering it is strong when site 1 "
            "starts weak, so no weak-weak domain wall can sit there"
        )
    if (n_sites - defect_site) % 2 == 1:
        raise ConstructionError(
            f"n_sites - defect_site = {n_sites - defect_site} is odd: site {n_sites} would "
            "terminate on a weak bond instead of the strong (trivial) one"
        )
    right = j >= defect_site
    weak[right] = (j[right] - defect_site) % 2 == 0
    return weak


def build_hamiltonian(spec: LatticeSpec) -> Hamiltonian:
    weak = dimerization_pattern(spec.n_sites, spec.defect_site)
    couplings = np.where(weak, spec.weak_coupling, spec.strong_coupling)
    return Hamiltonian.from_couplings(couplings)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and column eigenvectors ``vectors[:, m]``."""

    energies: np.ndarray
    vectors: np.ndarray

    def mid_gap_indices(self, ratio: float = 1e-3) -> np.ndarray:
        """Indices of modes separated from the rest by a ``ratio`` jump in ``|E|``.

        The modes are ordered by ``|E|``; the first position where the next
        magnitude exceeds the current one by ``1/ratio`` closes the mid-gap set.
        Returns an empty array when no such jump exists in the lower half.
        """
        order = np.argsort(np.abs(self.energies), kind="stable")
        mags = np.abs(self.energies[order])
        for k in range(1, mags.size // 2 + 1):
            if mags[k - 1] < ratio * mags[k]:
                return np.sort(order[:k])
        return np.array([], dtype=int)

    def gap(self, ratio: float = 1e-3) -> float:
        """Smallest ``|E|`` among the modes that are not mid-gap."""
        mid = set(self.mid_gap_indices(ratio).tolist())
        rest = [abs(e) for m, e in enumerate(self.energies) if m not in mid]
        return float(min(rest))


def eigendecompose(h: Hamiltonian) -> SpectralDecomposition:
    try:
        energies, vectors = scipy.linalg.eigh_tridiagonal(h.diagonal, h.off_diagonal, lapack_driver="stemr")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"tridiagonal eigensolver failed (n={h.dimension}): {exc}") from exc

    # sign convention: largest-magnitude component positive
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    vectors = vectors * signs

    scale = max(h.norm(), np.finfo(float).tiny)
    hv = h.dense() @ vectors
    residual = np.abs(hv - vectors * energies).max()
    if residual > 1e-10 * scale:
        raise NumericalError(f"eigen-residual {residual:.3e} exceeds 1e-10*|H| = {1e-10 * scale:.3e}")
    return SpectralDecomposition(energies, vectors)


@dataclass(frozen=True)
class ModeDensity:
    site: int
    energies: np.ndarray
    density: np.ndarray
    width: float
    coarse_grid: bool = False

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.energies))


def default_energy_grid(dec: SpectralDecomposition, width: float, points_per_width: int = 10) -> np.ndarray:
    lo = dec.energies.min() - 10 * width
    hi = dec.energies.max() + 10 * width
    n = int(math.ceil((hi - lo) / width * points_per_width)) + 1
    return np.linspace(lo, hi, n)


def mode_density(
    dec: SpectralDecomposition, site: int, grid: np.ndarray | None = None, width: float | None = None
) -> ModeDensity:
    """Local density of states at ``site`` with each delta line replaced by a unit-area Gaussian.

    ``width`` defaults to a twentieth of the spectral gap. A grid coarser than
    ``width`` sets ``coarse_grid`` and warns.
    """
    n = dec.energies.size
    if not 1 <= site <= n:
        raise DomainError(f"site {site} outside 1..{n}")
    if width is None:
        width = dec.gap() / 20 if n > 1 else 1.0
    if width <= 0:
        raise DomainError("width must be positive")
    if grid is None:
        grid = default_energy_grid(dec, width)
    grid = np.asarray(grid, dtype=float)

    coarse = bool(grid.size < 2 or np.max(np.diff(grid)) > width)
    if coarse:
        warnings.warn("energy grid spacing exceeds broadening width", RuntimeWarning, stacklevel=2)

    weights = dec.vectors[site - 1, :] ** 2
    x = (grid[:, None] - dec.energies[None, :]) / width
    kernel = np.exp(-0.5 * x**2) / (width * math.sqrt(2 * math.pi))
    return ModeDensity(site, grid, kernel @ weights, width, coarse)


@dataclass(frozen=True)
class Propagator:
    matrix: np.ndarray
    z: float

    def transmission(self, input_site: int, output_site: int) -> float:
        n = self.matrix.shape[0]
        for s in (input_site, output_site):
            if not 1 <= s <= n:
                raise DomainError(f"site {s} outside 1..{n}")
        return float(abs(self.matrix[output_site - 1, input_site - 1]) ** 2)


def propagator(h: Hamiltonian | SpectralDecomposition, z: float) -> Propagator:
    """Coupled-mode evolution ``U(z) = exp(-i H z)`` assembled from the eigenbasis."""
    if z < 0:
        raise DomainError("z must be >= 0")
    dec = h if isinstance(h, SpectralDecomposition) else eigendecompose(h)
    phases = np.exp(-1j * dec.energies * z)
    return Propagator((dec.vectors * phases) @ dec.vectors.T, float(z))


DisorderKind = Literal["coupling", "on_site"]


def add_disorder(spec: LatticeSpec, strength: float, kind: DisorderKind = "coupling", seed: int = 0) -> Hamiltonian:
    """Ideal Hamiltonian with uniform fabrication disorder.

    ``coupling``: each bond scaled by ``1 + u``, ``u ~ U[-strength, strength]``.
    Chiral symmetry survives.
    ``on_site``: diagonal ``u * strength * strong_coupling``, ``u ~ U[-1, 1]``.
    Chiral symmetry is broken.
    """
    if not 0 <= strength < 1:
        raise DomainError(f"disorder strength must lie in [0, 1), got {strength}")
    h = build_hamiltonian(spec)
    rng = np.random.default_rng(seed)
    if kind == "coupling":
        u = rng.uniform(-strength, strength, size=h.off_diagonal.size)
        return Hamiltonian(h.off_diagonal * (1 + u), h.diagonal.copy())
    if kind == "on_site":
        u = rng.uniform(-1.0, 1.0, size=h.dimension)
        return Hamiltonian(h.off_diagonal.copy(), h.diagonal + u * strength * spec.strong_coupling)
    raise DomainError(f"unknown disorder kind {kind!r}")


@dataclass(frozen=True)
class LocalizationMetrics:
    participation_ratio: float
    probabilities: np.ndarray = field(repr=False)

    def site_overlap(self, site: int) -> float:
        return float(self.probabilities[site - 1])


def localization_metrics(vector: np.ndarray) -> LocalizationMetrics:
    p = np.abs(np.asarray(vector)) ** 2
    if abs(p.sum() - 1) > 1e-8:
        raise DomainError(f"state not normalised: |psi|^2 = {p.sum():.12g}")
    return LocalizationMetrics(float(1.0 / np.sum(p**2)), p)


def chiral_operator(n_sites: int) -> np.ndarray:
    """``diag(+1, -1, +1, ...)``."""
    return np.diag((-1.0) ** np.arange(n_sites))
