"""Finite orthonormal truncations of the one-dimensional continuum space.

A :class:`TruncatedSpace` is the span of the first ``dim`` members of an
orthonormal basis family of L^2(R): either Hermite functions with a length
scale, or normalized indicator functions on a uniform grid.  States are
coefficient vectors in that basis.  Embedding an analytic state truncates
its expansion, renormalizes, and reports the projection residual computed
from the closed-form coefficient tail where one exists (otherwise from the
same quadrature used to obtain the coefficients).

Spaces and states are immutable after construction and safe to share
between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, UsageError

NORM_TOL = 1e-10

HERMITE = "hermite"
GRID = "grid"

#: Kinetic-term prefactor conventions: hbar**2/(2m) or hbar/(2m).
KINETIC_HBAR_SQUARED = "hbar-squared"
KINETIC_HBAR_LINEAR = "hbar-linear"


@dataclass(frozen=True)
class Constants:
    """Physical constants attached to a space."""

    hbar: float = 1.0
    mass: float = 1.0
    kinetic_prefactor: str = KINETIC_HBAR_SQUARED

    def kinetic_coefficient(self) -> float:
        """Coefficient multiplying the (negated) second-derivative operator."""
        if self.kinetic_prefactor == KINETIC_HBAR_SQUARED:
            return self.hbar**2 / (2.0 * self.mass)
        if self.kinetic_prefactor == KINETIC_HBAR_LINEAR:
            return self.hbar / (2.0 * self.mass)
        raise ConfigError(
            f"kinetic_prefactor must be '{KINETIC_HBAR_SQUARED}' or "
            f"'{KINETIC_HBAR_LINEAR}', got {self.kinetic_prefactor!r}"
        )


@dataclass(frozen=True)
class TruncatedSpace:
    """Span of the first ``dim`` basis functions of the chosen family.

    For the hermite family ``scale`` is the length scale of the Hermite
    functions.  For the grid family the basis consists of ``dim`` indicator
    functions (normalized to unit L^2 norm) on cells of width ``spacing``
    covering ``[-extent/2, extent/2]``.
    """

    family: str
    dim: int
    scale: float = 1.0
    extent: float = 0.0
    spacing: float = 0.0
    constants: Constants = field(default_factory=Constants)

    def grid_points(self) -> np.ndarray:
        """Cell midpoints of the grid family."""
        if self.family != GRID:
            raise UsageError("grid_points is only defined for the grid family")
        n = np.arange(self.dim)
        return -self.extent / 2.0 + (n + 0.5) * self.spacing


def build_space(
    family: str,
    dim: int,
    scale: float = 1.0,
    *,
    extent: Optional[float] = None,
    constants: Optional[Constants] = None,
) -> TruncatedSpace:
    """Construct a truncated space after validating its parameters."""
    constants = constants or Constants()
    constants.kinetic_coefficient()  # validate prefactor switch early
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ConfigError(f"dim must be a positive integer, got {dim!r}")
    if family == HERMITE:
        if not (scale > 0):
            raise ConfigError(f"scale must be positive, got {scale!r}")
        return TruncatedSpace(HERMITE, int(dim), float(scale), constants=constants)
    if family == GRID:
        if extent is None or not (extent > 0):
            raise ConfigError(f"extent must be positive, got {extent!r}")
        spacing = float(extent) / int(dim)
        return TruncatedSpace(
            GRID, int(dim), extent=float(extent), spacing=spacing, constants=constants
        )
    raise ConfigError(f"unknown basis family {family!r}")


def hermite_function_values(n_max: int, x: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Values of the first ``n_max`` unit-norm Hermite functions on ``x``.

    Returns an array of shape (n_max, len(x)).  Uses the stable three-term
    recurrence on the normalized functions.
    """
    x = np.asarray(x, dtype=float)
    u = x / scale
    out = np.empty((n_max, u.size), dtype=float)
    h_prev = np.pi ** (-0.25) * np.exp(-0.5 * u * u) / math.sqrt(scale)
    out[0] = h_prev
    if n_max > 1:
        h_cur = math.sqrt(2.0) * u * h_prev
        out[1] = h_cur
        for n in range(1, n_max - 1):
            h_next = math.sqrt(2.0 / (n + 1)) * u * h_cur - math.sqrt(
                n / (n + 1.0)
            ) * h_prev
            h_prev, h_cur = h_cur, h_next
            out[n + 1] = h_cur
    return out


def basis_function_values(space: TruncatedSpace, x: np.ndarray) -> np.ndarray:
    """Values of all basis functions of ``space`` on the points ``x``."""
    x = np.asarray(x, dtype=float)
    if space.family == HERMITE:
        return hermite_function_values(space.dim, x, space.scale)
    points = space.grid_points()
    half = space.spacing / 2.0
    out = np.zeros((space.dim, x.size), dtype=float)
    for n, center in enumerate(points):
        inside = (x >= center - half) & (x < center + half)
        out[n, inside] = 1.0 / math.sqrt(space.spacing)
    return out


@dataclass(frozen=True)
class StateVector:
    """Normalized coefficient vector in a space's basis."""

    space: TruncatedSpace
    coefficients: np.ndarray
    label: str = ""
    unnormalized: bool = False

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (self.space.dim,):
            raise UsageError(
                f"coefficient vector has shape {coeffs.shape}, space has dim {self.space.dim}"
            )
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)
        if not self.unnormalized and abs(self.norm() - 1.0) > NORM_TOL:
            raise UsageError(
                f"state {self.label!r} has norm {self.norm():.6g}; "
                "flag it unnormalized or renormalize"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def relabel(self, label: str) -> "StateVector":
        return replace(self, label=label)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    if a.space != b.space:
        raise UsageError("inner product of states from different spaces")
    return complex(np.vdot(a.coefficients, b.coefficients))


@dataclass(frozen=True)
class StatePreset:
    """Description of an analytic state to embed into a truncated space.

    Kinds: ``ho_eigenstate`` (index ``n``), ``coherent`` (complex ``z``),
    ``gaussian`` (``center`` and ``width``), ``custom`` (raw coefficients).
    """

    kind: str
    n: Optional[int] = None
    z: Optional[complex] = None
    center: Optional[float] = None
    width: Optional[float] = None
    coefficients: Optional[tuple] = None

    @classmethod
    def ho_eigenstate(cls, n: int) -> "StatePreset":
        return cls("ho_eigenstate", n=n)

    @classmethod
    def coherent(cls, z: complex) -> "StatePreset":
        return cls("coherent", z=complex(z))

    @classmethod
    def gaussian(cls, center: float, width: float) -> "StatePreset":
        return cls("gaussian", center=float(center), width=float(width))

    @classmethod
    def custom(cls, coefficients: Sequence[complex]) -> "StatePreset":
        return cls("custom", coefficients=tuple(complex(c) for c in coefficients))

    @classmethod
    def from_dict(cls, spec: dict) -> "StatePreset":
        kind = spec.get("kind")
        if kind == "ho_eigenstate":
            return cls.ho_eigenstate(int(spec["n"]))
        if kind == "coherent":
            return cls.coherent(complex(spec.get("z_re", 0.0), spec.get("z_im", 0.0)))
        if kind == "gaussian":
            return cls.gaussian(spec["center"], spec["width"])
        if kind == "custom":
            return cls.custom(spec["coefficients"])
        raise ConfigError(f"unknown state preset kind {kind!r}")

    def describe(self) -> str:
        if self.kind == "ho_eigenstate":
            return f"ho_eigenstate(n={self.n})"
        if self.kind == "coherent":
            return f"coherent(z={self.z})"
        if self.kind == "gaussian":
            return f"gaussian(center={self.center}, width={self.width})"
        return "custom"


@dataclass(frozen=True)
class EmbeddingReport:
    """An embedded state together with its projection residual.

    ``residual`` is the L^2 distance between the analytic source state and
    its projection onto the space, i.e. the norm of the cut coefficient
    tail.
    """

    state: StateVector
    residual: float


def coherent_log_weights(z: complex, n: np.ndarray) -> np.ndarray:
    """log |c_n|^2 for the coherent-state expansion coefficients."""
    a2 = abs(z) ** 2
    with np.errstate(divide="ignore"):
        log_a2 = np.log(a2) if a2 > 0 else -np.inf
    return -a2 + n * log_a2 - gammaln(n + 1)


def coherent_tail_weight(z: complex, n_from: int, terms: int = 256) -> float:
    """Closed-form tail sum_{n >= n_from} |c_n|^2, evaluated in log space."""
    n = np.arange(n_from, n_from + terms, dtype=float)
    logs = coherent_log_weights(z, n)
    m = logs.max()
    if m == -np.inf:
        return 0.0
    return float(np.exp(m) * np.exp(logs - m).sum())


def _coherent_coefficients(z: complex, dim: int) -> np.ndarray:
    n = np.arange(dim, dtype=float)
    mags = np.exp(0.5 * coherent_log_weights(z, n))
    if abs(z) == 0:
        phases = np.ones(dim, dtype=complex)
    else:
        phases = (z / abs(z)) ** np.arange(dim)
    return mags * phases


def _gaussian_quadrature_coefficients(
    center: float, width: float, space: TruncatedSpace
) -> np.ndarray:
    """Hermite-basis coefficients of a unit-norm Gaussian, by quadrature."""
    order = max(2 * space.dim, 96)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    x = nodes * space.scale
    basis = hermite_function_values(space.dim, x, space.scale)
    psi = (math.pi * width**2) ** (-0.25) * np.exp(
        -((x - center) ** 2) / (2.0 * width**2)
    )
    # integrate basis_n(x) psi(x) dx with the e^{-u^2} weight factored out
    integrand = basis * psi * np.exp(nodes**2) * weights
    return integrand.sum(axis=1) * space.scale


def embed_state(preset: StatePreset, space: TruncatedSpace) -> EmbeddingReport:
    """Embed an analytic state into ``space``; see :class:`EmbeddingReport`."""
    if preset.kind == "ho_eigenstate":
        if preset.n is None or preset.n < 0:
            raise ConfigError(f"ho_eigenstate index must be >= 0, got {preset.n!r}")
        if preset.n >= space.dim:
            raise ConfigError(
                f"ho_eigenstate index {preset.n} does not fit in dim {space.dim}"
            )
        if space.family == HERMITE:
            coeffs = np.zeros(space.dim, dtype=complex)
            coeffs[preset.n] = 1.0
            state = StateVector(space, coeffs, label=preset.describe())
            return EmbeddingReport(state, residual=0.0)
        return _embed_by_sampling(preset, space)

    if preset.kind == "coherent":
        if space.family != HERMITE:
            return _embed_by_sampling(preset, space)
        coeffs = _coherent_coefficients(preset.z, space.dim)
        tail = coherent_tail_weight(preset.z, space.dim)
        head = math.sqrt(float(np.vdot(coeffs, coeffs).real))
        state = StateVector(space, coeffs / head, label=preset.describe())
        return EmbeddingReport(state, residual=math.sqrt(tail))

    if preset.kind == "gaussian":
        if not (preset.width and preset.width > 0):
            raise ConfigError(f"gaussian width must be positive, got {preset.width!r}")
        if space.family != HERMITE:
            return _embed_by_sampling(preset, space)
        coeffs = _gaussian_quadrature_coefficients(preset.center, preset.width, space)
        head_sq = float(np.dot(coeffs, coeffs))
        residual = math.sqrt(max(0.0, 1.0 - head_sq))
        state = StateVector(
            space, coeffs.astype(complex) / math.sqrt(head_sq), label=preset.describe()
        )
        return EmbeddingReport(state, residual=residual)

    if preset.kind == "custom":
        coeffs = np.asarray(preset.coefficients, dtype=complex)
        if coeffs.shape != (space.dim,):
            raise ConfigError(
                f"custom coefficients have length {coeffs.size}, space has dim {space.dim}"
            )
        norm = np.linalg.norm(coeffs)
        if norm == 0:
            raise ConfigError("custom coefficients must not all vanish")
        state = StateVector(space, coeffs / norm, label="custom")
        return EmbeddingReport(state, residual=0.0)

    raise ConfigError(f"unknown state preset kind {preset.kind!r}")


def _analytic_values(preset: StatePreset, x: np.ndarray) -> np.ndarray:
    if preset.kind == "ho_eigenstate":
        return hermite_function_values(preset.n + 1, x)[preset.n]
    if preset.kind == "gaussian":
        return (math.pi * preset.width**2) ** (-0.25) * np.exp(
            -((x - preset.center) ** 2) / (2.0 * preset.width**2)
        )
    if preset.kind == "coherent":
        mu = math.sqrt(2.0) * preset.z.real
        kick = math.sqrt(2.0) * preset.z.imag
        return (
            math.pi ** (-0.25)
            * np.exp(-0.5 * (x - mu) ** 2)
            * np.exp(1j * kick * x)
        )
    raise ConfigError(f"preset {preset.kind!r} has no sampling rule")


def _embed_by_sampling(preset: StatePreset, space: TruncatedSpace) -> EmbeddingReport:
    """Grid-family embedding: per-cell Gauss-Legendre quadrature overlaps."""
    glx, glw = np.polynomial.legendre.leggauss(8)
    points = space.grid_points()
    half = space.spacing / 2.0
    coeffs = np.zeros(space.dim, dtype=complex)
    for n, center in enumerate(points):
        x = center + half * glx
        vals = _analytic_values(preset, x)
        coeffs[n] = (glw * vals).sum() * half / math.sqrt(space.spacing)
    head_sq = float(np.vdot(coeffs, coeffs).real)
    if head_sq <= 0:
        raise ConfigError("state has no support on the grid; enlarge the extent")
    residual = math.sqrt(max(0.0, 1.0 - head_sq))
    state = StateVector(
        space, coeffs / math.sqrt(head_sq), label=preset.describe()
    )
    return EmbeddingReport(state, residual=residual)


def orthonormality_defect(space: TruncatedSpace, order: Optional[int] = None) -> float:
    """Max deviation of the basis Gram matrix from the identity, by quadrature.

    Construction-time check used by the test builds; quadrature order
    defaults to enough points to integrate all pairwise products.
    """
    if space.family == GRID:
        # indicator cells are disjoint and unit-normalized by construction
        return 0.0
    order = order or max(2 * space.dim + 16, 64)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    x = nodes * space.scale
    basis = hermite_function_values(space.dim, x, space.scale)
    scaled = basis * (weights * np.exp(nodes**2)) * space.scale
    gram = scaled @ basis.T
    return float(np.abs(gram - np.eye(space.dim)).max())
