"""Projections of standard operators onto a truncated space, and their spectra.

The projected operator ("natural extension") of T is the matrix of
``<b_i| T b_j>`` over the space's basis.  For the hermite family the matrix
elements of position, momentum, the second derivative, and polynomial
potentials are assembled from exact ladder-algebra formulas; a general
callable potential is sampled with Gauss-Hermite quadrature of order at
least twice the dimension.  Grid-family operators use the standard
midpoint/central-difference stencils and serve as a cross-check
discretization only.

Diagonalization is deterministic: eigenvalues ascending, degenerate blocks
re-orthonormalized, each eigenvector's phase fixed so its largest-magnitude
component is real positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, NumericalError, UsageError
from .statespace import (
    GRID,
    HERMITE,
    StateVector,
    TruncatedSpace,
    basis_function_values,
)

HERMITICITY_TOL = 1e-12

POSITION = "position"
MOMENTUM = "momentum"
KINETIC = "kinetic"
POTENTIAL = "potential"
HAMILTONIAN = "hamiltonian"
CUSTOM = "custom"

PotentialSpec = Union[Sequence[float], Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class ObservableMatrix:
    """Hermitian matrix of a projected operator over a space's basis."""

    space: TruncatedSpace
    kind: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise UsageError(
                f"matrix shape {m.shape} does not match space dim {self.space.dim}"
            )
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


def _position_band(dim: int, scale: float) -> np.ndarray:
    """Superdiagonal of the position matrix: scale * sqrt((n+1)/2)."""
    n = np.arange(dim - 1, dtype=float)
    return scale * np.sqrt((n + 1) / 2.0)


def _position_matrix(dim: int, scale: float) -> np.ndarray:
    m = np.zeros((dim, dim))
    band = _position_band(dim, scale)
    idx = np.arange(dim - 1)
    m[idx, idx + 1] = band
    m[idx + 1, idx] = band
    return m


def _second_derivative_matrix(dim: int, scale: float) -> np.ndarray:
    """Matrix of d^2/dx^2 over the scaled Hermite basis (exact)."""
    m = np.zeros((dim, dim))
    n = np.arange(dim, dtype=float)
    m[np.arange(dim), np.arange(dim)] = -(2.0 * n + 1.0) / (2.0 * scale**2)
    if dim > 2:
        k = np.arange(dim - 2, dtype=float)
        band = np.sqrt((k + 1) * (k + 2)) / (2.0 * scale**2)
        idx = np.arange(dim - 2)
        m[idx, idx + 2] = band
        m[idx + 2, idx] = band
    return m


def _polynomial_potential_matrix(
    coefficients: Sequence[float], space: TruncatedSpace
) -> np.ndarray:
    """Exact <b_i| V(x) b_j> for polynomial V via an enlarged position matrix.

    Multiplication by x couples mode n only to n +/- 1, so computing inside a
    space enlarged by the polynomial degree makes every matrix power exact on
    the retained block.
    """
    coeffs = [float(c) for c in coefficients]
    degree = len(coeffs) - 1
    big = _position_matrix(space.dim + max(degree, 0), space.scale)
    n = space.dim
    acc = np.zeros((n, n))
    power = np.eye(big.shape[0])
    for k, c in enumerate(coeffs):
        if k > 0:
            power = power @ big
        if c:
            acc += c * power[:n, :n]
    return acc


def _sampled_potential_matrix(
    potential: Callable[[np.ndarray], np.ndarray],
    space: TruncatedSpace,
    order: Optional[int] = None,
) -> np.ndarray:
    order = order or max(2 * space.dim, 64)
    from .statespace import hermite_function_values

    nodes, weights = np.polynomial.hermite.hermgauss(order)
    x = nodes * space.scale
    values = np.asarray(potential(x))
    basis = hermite_function_values(space.dim, x, space.scale)
    w = weights * np.exp(nodes**2) * values * space.scale
    return (basis * w) @ basis.T


def natural_extension(
    kind: str,
    space: TruncatedSpace,
    potential: Optional[PotentialSpec] = None,
    *,
    quadrature_order: Optional[int] = None,
) -> ObservableMatrix:
    """Project a standard operator onto ``space``.

    ``kind`` is one of position, momentum, kinetic, potential, hamiltonian.
    ``potential`` (required for the last two) is either a sequence of
    polynomial coefficients, lowest order first, or a callable evaluated on
    sample points.

    Raises :class:`NumericalError` if a sampled potential leaves the matrix
    non-Hermitian beyond tolerance, reporting the measured defect.
    """
    needs_potential = kind in (POTENTIAL, HAMILTONIAN)
    if needs_potential and potential is None:
        raise ConfigError(f"operator kind {kind!r} requires a potential")
    if not needs_potential and potential is not None:
        raise ConfigError(f"operator kind {kind!r} does not take a potential")

    if space.family == HERMITE:
        matrix = _hermite_operator(kind, space, potential, quadrature_order)
    elif space.family == GRID:
        matrix = _grid_operator(kind, space, potential)
    else:
        raise ConfigError(f"unknown basis family {space.family!r}")

    obs = ObservableMatrix(space, kind, matrix)
    defect = obs.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise NumericalError(
            f"projected {kind} operator is non-Hermitian: defect {defect:.3e} "
            f"exceeds {HERMITICITY_TOL:.0e}"
        )
    return obs


def _potential_matrix(
    potential: PotentialSpec, space: TruncatedSpace, order: Optional[int]
) -> np.ndarray:
    if callable(potential):
        return _sampled_potential_matrix(potential, space, order)
    return _polynomial_potential_matrix(potential, space)


def _hermite_operator(
    kind: str,
    space: TruncatedSpace,
    potential: Optional[PotentialSpec],
    order: Optional[int],
) -> np.ndarray:
    dim, scale = space.dim, space.scale
    hbar = space.constants.hbar
    if kind == POSITION:
        return _position_matrix(dim, scale)
    if kind == MOMENTUM:
        band = (hbar / scale) * np.sqrt((np.arange(dim - 1) + 1) / 2.0)
        m = np.zeros((dim, dim), dtype=complex)
        idx = np.arange(dim - 1)
        m[idx, idx + 1] = -1j * band
        m[idx + 1, idx] = 1j * band
        return m
    if kind == KINETIC:
        coeff = space.constants.kinetic_coefficient()
        return -coeff * _second_derivative_matrix(dim, scale)
    if kind == POTENTIAL:
        return _potential_matrix(potential, space, order)
    if kind == HAMILTONIAN:
        coeff = space.constants.kinetic_coefficient()
        return -coeff * _second_derivative_matrix(dim, scale) + _potential_matrix(
            potential, space, order
        )
    raise ConfigError(f"unknown operator kind {kind!r}")


def _grid_operator(
    kind: str, space: TruncatedSpace, potential: Optional[PotentialSpec]
) -> np.ndarray:
    dim = space.dim
    h = space.spacing
    hbar = space.constants.hbar
    points = space.grid_points()
    if kind == POSITION:
        return np.diag(points)
    if kind == MOMENTUM:
        m = np.zeros((dim, dim), dtype=complex)
        idx = np.arange(dim - 1)
        m[idx, idx + 1] = -1j * hbar / (2.0 * h)
        m[idx + 1, idx] = 1j * hbar / (2.0 * h)
        return m
    if kind == KINETIC:
        coeff = space.constants.kinetic_coefficient()
        lap = np.zeros((dim, dim))
        np.fill_diagonal(lap, -2.0 / h**2)
        idx = np.arange(dim - 1)
        lap[idx, idx + 1] = 1.0 / h**2
        lap[idx + 1, idx] = 1.0 / h**2
        return -coeff * lap
    if kind == POTENTIAL:
        return np.diag(_evaluate_potential(potential, points))
    if kind == HAMILTONIAN:
        return _grid_operator(KINETIC, space, None) + np.diag(
            _evaluate_potential(potential, points)
        )
    raise ConfigError(f"unknown operator kind {kind!r}")


def _evaluate_potential(potential: PotentialSpec, x: np.ndarray) -> np.ndarray:
    if callable(potential):
        return np.asarray(potential(x), dtype=float)
    return np.polynomial.polynomial.polyval(x, [float(c) for c in potential])


def custom_observable(space: TruncatedSpace, matrix: np.ndarray) -> ObservableMatrix:
    """Wrap a user-supplied Hermitian matrix as an observable."""
    obs = ObservableMatrix(space, CUSTOM, np.asarray(matrix, dtype=complex))
    defect = obs.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise NumericalError(
            f"custom observable is non-Hermitian: defect {defect:.3e}"
        )
    return obs


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors of an observable."""

    observable: ObservableMatrix
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column i is the eigenvector for eigenvalue i

    def __post_init__(self):
        for name in ("eigenvalues", "eigenvectors"):
            arr = getattr(self, name)
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def space(self) -> TruncatedSpace:
        return self.observable.space

    @property
    def dim(self) -> int:
        return self.observable.space.dim

    def eigenstate(self, i: int) -> StateVector:
        return StateVector(
            self.space, self.eigenvectors[:, i], label=f"eigenstate[{i}]"
        )


DEGENERACY_TOL = 1e-10


def diagonalize(observable: ObservableMatrix) -> SpectralDecomposition:
    """Spectral decomposition with a deterministic ordering and phase.

    Eigenvalues come out ascending.  Within a degenerate block the vectors
    are re-orthonormalized by QR; every vector's phase is set so that its
    largest-magnitude component (lowest index on ties) is real positive.
    """
    m = observable.matrix
    try:
        if np.abs(m.imag).max() == 0.0:
            evals, evecs = np.linalg.eigh(m.real)
            evecs = evecs.astype(complex)
        else:
            evals, evecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}") from exc

    # canonicalize degenerate blocks
    scale = max(1.0, float(np.abs(evals).max()))
    start = 0
    for stop in range(1, len(evals) + 1):
        if stop == len(evals) or evals[stop] - evals[stop - 1] > DEGENERACY_TOL * scale:
            if stop - start > 1:
                q, _ = np.linalg.qr(evecs[:, start:stop])
                evecs[:, start:stop] = q
            start = stop

    # phase convention
    lead = np.argmax(np.abs(evecs), axis=0)
    pivots = evecs[lead, np.arange(evecs.shape[1])]
    phases = pivots / np.abs(pivots)
    evecs = evecs / phases

    return SpectralDecomposition(observable, evals, evecs)


def nearest_eigenvalue(value: float, spec: SpectralDecomposition) -> tuple[float, float]:
    """Closest eigenvalue to ``value`` and its distance; ties go downward."""
    evals = spec.eigenvalues
    pos = int(np.searchsorted(evals, value))
    candidates = []
    if pos > 0:
        candidates.append(float(evals[pos - 1]))
    if pos < len(evals):
        candidates.append(float(evals[pos]))
    best = min(candidates, key=lambda lam: (abs(value - lam), lam))
    return best, abs(value - best)


@dataclass(frozen=True)
class LocalizationProfile:
    """Diagnostic reconstruction profile of one eigenvector on a probe grid."""

    grid: np.ndarray
    density: np.ndarray
    eigenvalue: float
    peak_location: float
    peak_offset: float


def eigenvector_localization(
    spec: SpectralDecomposition, index: int, probe_grid: np.ndarray
) -> LocalizationProfile:
    """Reconstruct |psi_i(x)|^2 on ``probe_grid`` and locate its peak."""
    grid = np.asarray(probe_grid, dtype=float)
    basis = basis_function_values(spec.space, grid)
    values = spec.eigenvectors[:, index] @ basis
    density = np.abs(values) ** 2
    peak = grid[int(np.argmax(density))]
    lam = float(spec.eigenvalues[index])
    return LocalizationProfile(
        grid=grid,
        density=density,
        eigenvalue=lam,
        peak_location=float(peak),
        peak_offset=float(peak - lam),
    )
