"""Divergence-free spectral fields on the periodic torus [0, 2*pi)^dim.

Fields are stored as full complex Fourier coefficient arrays in numpy FFT
layout, one array axis per spatial dimension plus a leading component axis:
``coeffs[j, k1, k2, ...]`` is the coefficient of ``exp(i k.x)`` for velocity
component ``j``.  Three invariants are maintained by every operation here:

* Hermitian symmetry (the physical field is real),
* zero mean mode (Galilean frame pinned),
* zero divergence, ``k . vhat(k) = 0`` for every wavevector.

Norms are exact in the sense of Parseval: the squared L2 norm is
``(2*pi)^dim * sum |vhat|^2`` and the squared gradient norm carries an extra
``|k|^2`` weight.  Nyquist rows are kept identically zero so that quadrature
of quadratic quantities on the collocation grid is alias-free.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "leray_project",
    "l2_norm_sq",
    "grad_norm_sq",
    "mollify",
    "taylor_green",
    "random_divfree",
    "single_mode",
    "make_grid",
    "to_physical",
    "from_physical",
]

TWO_PI = 2.0 * np.pi


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` Fourier modes per axis.

    The domain period is fixed to 2*pi so wavevectors are integers.
    """

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)) or self.n < 4:
            raise ValueError(f"n must be a power of two >= 4, got {self.n}")

    @property
    def length(self) -> float:
        return TWO_PI

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n) ** self.dim

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n


def make_grid(dim: int, n: int) -> Grid:
    """Construct a validated grid; rejects non power-of-two ``n``."""
    return Grid(dim=dim, n=int(n))


@lru_cache(maxsize=None)
def _wavevectors(dim: int, n: int):
    """Integer wavevector components, shape (dim, n, ..., n), read-only."""
    k1 = np.fft.fftfreq(n, d=1.0 / n)  # 0, 1, ..., n/2-1, -n/2, ..., -1
    axes = np.meshgrid(*([k1] * dim), indexing="ij")
    k = np.stack(axes).astype(np.float64)
    k.setflags(write=False)
    return k

@lru_cache(maxsize=None)
def _ksq(dim: int, n: int):
    k = _wavevectors(dim, n)
    ksq = np.sum(k * k, axis=0)
    ksq.setflags(write=False)
    return ksq

@lru_cache(maxsize=None)
def _nyquist_mask(dim: int, n: int):
    """True where no component sits on the (unpaired) Nyquist row -n/2."""
    k = _wavevectors(dim, n)
    mask = np.all(k != -n // 2, axis=0)
    mask.setflags(write=False)
    return mask

@lru_cache(maxsize=None)
def _dealias_mask(dim: int, n: int):
    """Two-thirds rule: keep |k_i| < n/3 on every axis."""
    k = _wavevectors(dim, n)
    mask = np.all(np.abs(k) < n / 3.0, axis=0)
    mask.setflags(write=False)
    return mask


def wavevectors(grid: Grid):
    return _wavevectors(grid.dim, grid.n)

def ksq(grid: Grid):
    return _ksq(grid.dim, grid.n)

def dealias_mask(grid: Grid):
    return _dealias_mask(grid.dim, grid.n)


def hermitian_conjugate(coeffs: np.ndarray) -> np.ndarray:
    """conj(vhat(-k)) in FFT index layout, applied to the spatial axes."""
    out = coeffs.conj()
    for ax in range(1, coeffs.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def _project_coeffs(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Remove the gradient part: vhat -> vhat - k (k.vhat)/|k|^2, pin k=0 to 0."""
    k = wavevectors(grid)
    k2 = ksq(grid)
    div = np.sum(k * coeffs, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(k2 > 0, div / np.where(k2 > 0, k2, 1.0), 0.0)
    out = coeffs - k * scale
    out[(slice(None),) + (0,) * grid.dim] = 0.0
    out *= _nyquist_mask(grid.dim, grid.n)
    return out


@dataclass(frozen=True)
class SpectralField:
    """Immutable divergence-free velocity field in coefficient space."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient shape {self.coeffs.shape}, expected {expected}")
        if self.coeffs.flags.writeable:
            self.coeffs.setflags(write=False)

    # -- invariant diagnostics (cheap, used by tests and validation) --
    def max_divergence(self) -> float:
        k = wavevectors(self.grid)
        return float(np.abs(np.sum(k * self.coeffs, axis=0)).max())

    def hermitian_defect(self) -> float:
        return float(np.abs(self.coeffs - hermitian_conjugate(self.coeffs)).max())

    def mean_mode(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.grid.dim]


def field_from_coeffs(grid: Grid, coeffs: np.ndarray, project: bool = False) -> SpectralField:
    """Wrap raw coefficients, optionally Leray-projecting them first."""
    c = np.array(coeffs, dtype=np.complex128, copy=True)
    if project:
        c = 0.5 * (c + hermitian_conjugate(c))  # enforce a real physical field
        c = _project_coeffs(c, grid)
    return SpectralField(grid=grid, coeffs=c)


def leray_project(field, grid: Grid | None = None) -> SpectralField:
    """Orthogonal projection onto divergence-free, mean-free fields.

    Accepts a SpectralField or a raw coefficient array (with ``grid``).
    Gradient fields map to zero; solenoidal fields are unchanged up to
    round-off, and the projection is idempotent at machine precision.
    """
    if isinstance(field, SpectralField):
        grid = field.grid
        coeffs = field.coeffs
    else:
        if grid is None:
            raise ValueError("grid is required when projecting a raw array")
        coeffs = np.asarray(field, dtype=np.complex128)
    return SpectralField(grid=grid, coeffs=_project_coeffs(coeffs, grid))


def l2_norm_sq(field: SpectralField) -> float:
    """Squared L2 norm of the velocity via Parseval."""
    return float((TWO_PI ** field.grid.dim) * np.sum(np.abs(field.coeffs) ** 2))


def grad_norm_sq(field: SpectralField) -> float:
    """Squared L2 norm of the velocity gradient, sum of |k|^2 |vhat|^2."""
    k2 = ksq(field.grid)
    return float((TWO_PI ** field.grid.dim) * np.sum(k2 * np.abs(field.coeffs) ** 2))


def mollifier_factor(grid: Grid, m: int, profile: str = "sharp") -> np.ndarray:
    """Low-pass multiplier indexed by m, acting on the max-norm of k.

    ``sharp`` zeroes every mode with max_i |k_i| > m; ``smooth`` keeps those
    modes and damps the rest with a Gaussian taper in (|k|_inf/m - 1).
    Either way the factor lies in [0, 1] and depends only on |k|_inf, so
    divergence-freeness and Hermitian symmetry are preserved.
    """
    if m < 1:
        raise ValueError(f"mollifier index must be >= 1, got {m}")
    k = wavevectors(grid)
    kinf = np.max(np.abs(k), axis=0)
    if profile == "sharp":
        return (kinf <= m).astype(np.float64)
    if profile == "smooth":
        r = np.maximum(kinf / float(m) - 1.0, 0.0)
        return np.exp(-4.0 * r * r)
    raise ValueError(f"unknown mollifier profile {profile!r}")


def mollify(field: SpectralField, m: int, profile: str = "sharp") -> SpectralField:
    """Apply the spectral low-pass smoother of index m."""
    factor = mollifier_factor(field.grid, m, profile)
    return SpectralField(grid=field.grid, coeffs=field.coeffs * factor)


def to_physical(field: SpectralField) -> np.ndarray:
    """Collocation values on the n^dim grid, shape (dim, n, ..., n)."""
    n_total = field.grid.n ** field.grid.dim
    axes = tuple(range(1, field.grid.dim + 1))
    return np.fft.ifftn(field.coeffs * n_total, axes=axes).real


def from_physical(grid: Grid, values: np.ndarray, project: bool = True) -> SpectralField:
    """Transform collocation values to a (projected) spectral field."""
    axes = tuple(range(1, grid.dim + 1))
    coeffs = np.fft.fftn(np.asarray(values, dtype=np.float64), axes=axes) / (grid.n ** grid.dim)
    return field_from_coeffs(grid, coeffs, project=project)


# ----------------------------------------------------------------------
# initial-condition library
# ----------------------------------------------------------------------

def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """Taylor-Green vortex.

    2D: A (sin x cos y, -cos x sin y); its advection term is a pure
    gradient, so the projected dynamics are exactly Stokes decay.
    3D: A (sin x cos y cos z, -cos x sin y cos z, 0).
    """
    n = grid.n
    x1 = np.arange(n) * grid.spacing
    if grid.dim == 2:
        x, y = np.meshgrid(x1, x1, indexing="ij")
        u = amplitude * np.sin(x) * np.cos(y)
        v = -amplitude * np.cos(x) * np.sin(y)
        phys = np.stack([u, v])
    else:
        x, y, z = np.meshgrid(x1, x1, x1, indexing="ij")
        u = amplitude * np.sin(x) * np.cos(y) * np.cos(z)
        v = -amplitude * np.cos(x) * np.sin(y) * np.cos(z)
        w = np.zeros_like(u)
        phys = np.stack([u, v, w])
    return from_physical(grid, phys, project=True)


def single_mode(grid: Grid, kvec, amplitude: float = 1.0) -> SpectralField:
    """One real Fourier mode with a deterministic polarization normal to k.

    Scaled so the squared L2 norm equals ``amplitude**2``.  A single mode
    (plus its conjugate) is an exact steady solution of the advection term,
    so under the full equations it decays like exp(-|k|^2 t).
    """
    kvec = np.asarray(kvec, dtype=int)
    if kvec.shape != (grid.dim,) or not np.any(kvec):
        raise ValueError(f"kvec must be a nonzero integer vector of length {grid.dim}")
    if np.max(np.abs(kvec)) >= grid.n // 2:
        raise ValueError("mode outside resolved range")
    if grid.dim == 2:
        pol = np.array([-kvec[1], kvec[0]], dtype=np.float64)
    else:
        trial = np.array([0.0, 0.0, 1.0]) if (kvec[0] or kvec[1]) else np.array([1.0, 0.0, 0.0])
        pol = np.cross(kvec, trial)
    pol /= np.linalg.norm(pol)
    c = np.zeros((grid.dim,) + grid.shape, dtype=np.complex128)
    idx_p = tuple(int(k) % grid.n for k in kvec)
    idx_m = tuple(int(-k) % grid.n for k in kvec)
    for j in range(grid.dim):
        c[(j,) + idx_p] = 0.5 * pol[j]
        c[(j,) + idx_m] = 0.5 * pol[j]
    field = SpectralField(grid=grid, coeffs=c)
    norm = np.sqrt(l2_norm_sq(field))
    return SpectralField(grid=grid, coeffs=c * (amplitude / norm))


def random_divfree(grid: Grid, spectrum_slope: float = -3.0, seed: int = 0,
                   amplitude: float = 1.0, k_cut: int | None = None) -> SpectralField:
    """Random solenoidal field with shell energy ~ |k|^spectrum_slope.

    Deterministic in ``seed``; support restricted to 1 <= |k| <= k_cut
    (default n/3 - 1, inside the dealiased range); scaled so the squared
    L2 norm equals ``amplitude**2``.
    """
    if k_cut is None:
        k_cut = max(1, grid.n // 3 - 1)
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.shape
    raw = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    raw = 0.5 * (raw + hermitian_conjugate(raw))
    kmag = np.sqrt(ksq(grid))
    shell = np.zeros_like(kmag)
    active = (kmag >= 1.0) & (kmag <= k_cut)
    # |vhat|^2 ~ k^(slope - (dim-1)) makes the shell-integrated energy ~ k^slope
    shell[active] = kmag[active] ** (0.5 * (spectrum_slope - (grid.dim - 1)))
    coeffs = _project_coeffs(raw * shell, grid)
    field = SpectralField(grid=grid, coeffs=coeffs)
    norm = np.sqrt(l2_norm_sq(field))
    if norm == 0.0:
        raise ValueError("degenerate random field (empty shell range)")
    return SpectralField(grid=grid, coeffs=coeffs * (amplitude / norm))
