"""Sine-sine spectral machinery on the torus [-1, 1]^2.

Fields in this package are odd in both coordinates, so they are stored as
coefficients a[j-1, k-1] of sin(j pi x1) sin(k pi x2), 1 <= j, k <= n/2.
With the grid x_i = -1 + i h, h = 2/n, the discrete orthogonality

    h * sum_i sin(j pi x_i) sin(k pi x_i) = delta_jk,   1 <= j, k < n/2

gives Parseval in the form ``l2(f)**2 == sum(a**2)`` with no extra factors.
The j = n/2 mode vanishes at every node and is kept at zero.

Derivatives of sine series produce cosine series in one or both
directions. Synthesis is done on the closed first quadrant (node offsets
m = 0..n/2) with DST-I / DCT-I and then extended to the full grid by parity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

SYMMETRY_TOL = 1e-10


class SymmetryError(ValueError):
    """Raised when grid samples are not odd in both coordinates."""

    def __init__(self, violation: float):
        super().__init__(f"field is not odd-odd: relative violation {violation:.3e}")
        self.violation = violation


@dataclass(frozen=True)
class Grid:
    """Uniform n x n grid on [-1, 1)^2 with nodes x_i = -1 + i*h."""

    n: int

    @property
    def h(self) -> float:
        return 2.0 / self.n

    @property
    def half(self) -> int:
        """Number of sine modes per direction (n/2); also the index of x = 0."""
        return self.n // 2

    @property
    def x(self) -> np.ndarray:
        return -1.0 + self.h * np.arange(self.n)

    @property
    def xq(self) -> np.ndarray:
        """Interior first-quadrant coordinates m*h, m = 1..n/2-1."""
        return self.h * np.arange(1, self.half)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.half + 1, dtype=float)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")


def make_grid(n: int) -> Grid:
    if not isinstance(n, (int, np.integer)) or n < 32 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 32, got {n!r}")
    return Grid(int(n))


@dataclass
class ScalarField:
    """Grid samples of an odd-odd field plus (optionally) its sine-sine spectrum."""

    grid: Grid
    values: np.ndarray | None = None
    spectrum: np.ndarray | None = None

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum: np.ndarray) -> "ScalarField":
        spectrum = np.asarray(spectrum, dtype=float)
        if spectrum.shape != (grid.half, grid.half):
            raise ValueError(f"spectrum shape {spectrum.shape} does not match grid n={grid.n}")
        return cls(grid, to_physical(spectrum, grid), spectrum)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        """Sample ``func(x1, x2)`` on the grid and transform."""
        x1, x2 = grid.mesh()
        return to_spectral(cls(grid, np.asarray(func(x1, x2), dtype=float)))


@dataclass
class VectorField:
    grid: Grid
    u1: np.ndarray
    u2: np.ndarray
    extra: dict = field(default_factory=dict)


# --- quadrant <-> full grid ------------------------------------------------

def quadrant(values: np.ndarray) -> np.ndarray:
    """Interior first-quadrant block (x1, x2 in (0, 1)) of full-grid samples."""
    N = values.shape[0] // 2
    return values[N + 1:, N + 1:]


def _extend(half: np.ndarray, parity: tuple[int, int]) -> np.ndarray:
    """Full-grid array from samples at m = 0..N on both axes, given axis parities."""
    N = half.shape[0] - 1
    n = 2 * N
    idx = np.empty(n, dtype=int)
    idx[N:] = np.arange(N)              # x = m*h, m = 0..N-1
    idx[0] = N                          # x = -1 is x = +1
    idx[1:N] = np.arange(N - 1, 0, -1)  # x = -m*h
    out = half
    for axis, p in enumerate(parity):
        sign = np.ones(n)
        sign[1:N] = p
        shape = [1, 1]
        shape[axis] = n
        out = np.take(out, idx, axis=axis) * sign.reshape(shape)
    return out


def odd_extend(q: np.ndarray) -> np.ndarray:
    """Full n x n array from interior quadrant samples of an odd-odd field."""
    N = q.shape[0] + 1
    half = np.zeros((N + 1, N + 1))
    half[1:N, 1:N] = q
    return _extend(half, (-1, -1))


def symmetry_violation(values: np.ndarray) -> float:
    """Relative departure of full-grid samples from odd-odd symmetry."""
    ref = odd_extend(quadrant(values))
    scale = max(np.max(np.abs(values)), 1e-300)
    return float(np.max(np.abs(values - ref)) / scale) if np.any(values) else 0.0


# --- transforms ------------------------------------------------------------

def forward_quadrant(q: np.ndarray) -> np.ndarray:
    """Sine-sine coefficients (N x N) from interior quadrant samples."""
    N = q.shape[0] + 1
    a = np.zeros((N, N))
    a[:-1, :-1] = sfft.dstn(q, type=1) / N**2
    return a


def _synth_axis(c: np.ndarray, axis: int, kind: str, closed: bool) -> np.ndarray:
    """Evaluate a 1D sine ('s') or cosine ('c') series along ``axis``.

    ``c`` holds coefficients for modes 1..N along the axis (mode N is ignored).
    Returns samples at m = 1..N-1, or m = 0..N when ``closed``.
    """
    c = np.moveaxis(c, axis, 0)[:-1]
    if kind == "s":
        vals = sfft.dst(c, type=1, axis=0) / 2
        if closed:
            pad = np.zeros((1,) + vals.shape[1:])
            vals = np.concatenate([pad, vals, pad])
    else:
        pad = np.zeros((1,) + c.shape[1:])
        vals = sfft.dct(np.concatenate([pad, c, pad]), type=1, axis=0) / 2
        if not closed:
            vals = vals[1:-1]
    return np.moveaxis(vals, 0, axis)


def synthesize(coef: np.ndarray, kinds: str = "ss", closed: bool = False) -> np.ndarray:
    """Quadrant samples of sum coef[j,k] f_j(pi j x1) g_k(pi k x2), f, g in {sin, cos}."""
    out = _synth_axis(coef, 0, kinds[0], closed)
    return _synth_axis(out, 1, kinds[1], closed)


def synthesize_full(coef: np.ndarray, kinds: str = "ss") -> np.ndarray:
    half = synthesize(coef, kinds, closed=True)
    return _extend(half, tuple(-1 if k == "s" else 1 for k in kinds))


def to_physical(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    return odd_extend(synthesize(spectrum, "ss"))


def to_spectral(f: ScalarField) -> ScalarField:
    """Populate the sine-sine spectrum of ``f`` from its grid samples."""
    if f.values is None:
        raise ValueError("field has no grid samples")
    values = np.asarray(f.values, dtype=float)
    if values.shape != (f.grid.n, f.grid.n):
        raise ValueError(f"values shape {values.shape} does not match grid n={f.grid.n}")
    violation = symmetry_violation(values)
    if violation > SYMMETRY_TOL:
        raise SymmetryError(violation)
    return ScalarField(f.grid, values, forward_quadrant(quadrant(values)))


def ensure_spectrum(f: ScalarField) -> np.ndarray:
    if f.spectrum is None:
        raise ValueError("field has no spectrum; call to_spectral first")
    return f.spectrum


# --- spectral operators ----------------------------------------------------

def wavenumbers(N: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.pi * np.arange(1, N + 1, dtype=float)
    return j[:, None], j[None, :]


def stream_function(spectrum: np.ndarray) -> np.ndarray:
    """Coefficients of psi with -Laplacian(psi) = omega."""
    kj, kk = wavenumbers(spectrum.shape[0])
    return spectrum / (kj**2 + kk**2)


def velocity_coefficients(spectrum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """u1 = -d2 psi (sin-cos series), u2 = d1 psi (cos-sin series)."""
    psi = stream_function(spectrum)
    kj, kk = wavenumbers(spectrum.shape[0])
    return -kk * psi, kj * psi


def biot_savart(omega: ScalarField) -> VectorField:
    c1, c2 = velocity_coefficients(ensure_spectrum(omega))
    return VectorField(omega.grid, synthesize_full(c1, "sc"), synthesize_full(c2, "cs"))


def gradient(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    a = ensure_spectrum(f)
    kj, kk = wavenumbers(a.shape[0])
    return synthesize_full(kj * a, "cs"), synthesize_full(kk * a, "sc")


def velocity_gradient_norm(spectrum: np.ndarray) -> float:
    """Grid max over the closed quadrant of the operator 2-norm of grad(u).

    The quadrant covers every node magnitude by symmetry.
    """
    psi = stream_function(spectrum)
    kj, kk = wavenumbers(spectrum.shape[0])
    d11 = synthesize(-kj * kk * psi, "cc", closed=True)   # d1 u1 = -d2 u2
    d12 = synthesize(kk**2 * psi, "ss", closed=True)      # d2 u1
    d21 = synthesize(-kj**2 * psi, "ss", closed=True)     # d1 u2
    fro2 = 2 * d11**2 + d12**2 + d21**2
    det = -d11**2 - d12 * d21
    disc = np.sqrt(np.maximum(fro2**2 - 4 * det**2, 0.0))
    return float(np.sqrt(np.max((fro2 + disc) / 2)))


def dealias(spectrum: np.ndarray, n: int | None = None) -> np.ndarray:
    """Zero modes with j > n/3 or k > n/3 (2/3 rule).

    ``n`` defaults to twice the number of stored modes per axis.
    """
    spectrum = np.asarray(spectrum)
    if n is None:
        n = 2 * spectrum.shape[0]
    cut = n // 3
    out = spectrum.copy()
    out[cut:, :] = 0.0
    out[:, cut:] = 0.0
    return out


def linf(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))


def l2(values: np.ndarray, h: float) -> float:
    return float(np.sqrt(h * h * np.sum(np.square(values))))


def l2_vector(v: VectorField) -> float:
    return float(np.sqrt(v.grid.h**2 * np.sum(v.u1**2 + v.u2**2)))


# --- Fourier-side checks independent of the sine transforms -----------------

def _fft_wavenumbers(n: int) -> np.ndarray:
    # period 2 => angular wavenumber pi * integer
    return np.pi * np.fft.fftfreq(n, d=1.0 / n)


def fft_curl(v: VectorField) -> np.ndarray:
    """d2 u1 - d1 u2 by full complex FFT on the periodic grid.

    With u = (-d2 psi, d1 psi) and -lap psi = omega this is the orientation
    that returns omega (it is minus the counter-clockwise curl).
    """
    k = _fft_wavenumbers(v.grid.n)
    u1h, u2h = np.fft.fft2(v.u1), np.fft.fft2(v.u2)
    w = 1j * k[None, :] * u1h - 1j * k[:, None] * u2h
    return np.real(np.fft.ifft2(w))


def fft_divergence(v: VectorField) -> np.ndarray:
    k = _fft_wavenumbers(v.grid.n)
    u1h, u2h = np.fft.fft2(v.u1), np.fft.fft2(v.u2)
    return np.real(np.fft.ifft2(1j * k[:, None] * u1h + 1j * k[None, :] * u2h))


# --- off-grid evaluation -----------------------------------------------------

def evaluate(coef: np.ndarray, kinds: str, points: np.ndarray) -> np.ndarray:
    """Direct summation of a two-dimensional sine/cosine series at arbitrary points.

    Cost is O(N^2) per point, exact for every represented mode.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    modes = np.pi * np.arange(1, coef.shape[0] + 1)
    basis = {"s": np.sin, "c": np.cos}
    b1 = basis[kinds[0]](np.outer(pts[:, 0], modes))
    b2 = basis[kinds[1]](np.outer(pts[:, 1], modes))
    return np.einsum("pj,jk,pk->p", b1, coef, b2)
