"""Uniform position lattice, its conjugate momentum lattice, and pure states.

Everything downstream operates on these types.  Units are dimensionless with
hbar = 1.  The momentum lattice is the exact Fourier conjugate of the position
lattice (dx * dp * n = 2*pi) and is stored in increasing order.  The single
transform convention used everywhere is <p|x> = exp(-i*x*p) / sqrt(2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Relative amplitude below which a state is considered to have decayed at the
# lattice edges.  States that do not satisfy this are rejected rather than
# silently wrapped by the periodic transforms.
EDGE_DECAY = 1e-12

NORM_TOL = 1e-9


class EnvelopeError(ValueError):
    """State does not decay below EDGE_DECAY at the lattice edges."""


class ResolutionError(ValueError):
    """A Gaussian width is too small for the lattice spacing."""


class Basis(str, Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


class Observable(str, Enum):
    X = "x"
    P = "p"
    X2 = "x2"
    P2 = "p2"
    NUMBER = "number"


@dataclass(frozen=True)
class Grid:
    """Uniform 1D position lattice with its conjugate momentum lattice.

    x_k = x_min + k*dx for k = 0..n-1, and p_j = (j - n/2)*dp with
    dp = 2*pi/(n*dx), so p spans [-pi/dx, pi/dx).
    """

    n: int
    x_min: float
    dx: float

    @property
    def dp(self) -> float:
        return 2.0 * math.pi / (self.n * self.dx)

    @property
    def x_max(self) -> float:
        return self.x_min + self.n * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def p(self) -> np.ndarray:
        return self.dp * (np.arange(self.n) - self.n // 2)

    def spacing(self, basis: Basis) -> float:
        return self.dx if basis is Basis.POSITION else self.dp

    def axis(self, basis: Basis) -> np.ndarray:
        return self.x if basis is Basis.POSITION else self.p


def make_grid(n: int, x_min: float, x_max: float) -> Grid:
    """Build a lattice of n points (power of two, >= 16) over [x_min, x_max)."""
    if n < 16 or (n & (n - 1)) != 0:
        raise ValueError(f"grid size must be a power of two >= 16, got {n}")
    if not (x_min < 0.0 < x_max):
        raise ValueError(f"domain [{x_min}, {x_max}] must contain the origin")
    return Grid(n=int(n), x_min=float(x_min), dx=(float(x_max) - float(x_min)) / n)


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes of a pure state over a Grid, tagged by basis."""

    grid: Grid
    basis: Basis
    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=np.complex128)
        if amp.shape != (self.grid.n,):
            raise ValueError(f"amplitude array has shape {amp.shape}, expected ({self.grid.n},)")
        amp.flags.writeable = False
        object.__setattr__(self, "amp", amp)

    @property
    def spacing(self) -> float:
        return self.grid.spacing(self.basis)

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.amp) ** 2)) * self.spacing)

    def density(self) -> np.ndarray:
        return np.abs(self.amp) ** 2


def normalize(psi: WaveFunction) -> WaveFunction:
    nrm = psi.norm()
    if nrm < 1e-300:
        raise ValueError("cannot normalize a zero state")
    return WaveFunction(psi.grid, psi.basis, psi.amp / nrm)


def _check_envelope(grid: Grid, x0: float, p0: float, delta: float) -> None:
    for edge in (grid.x[0], grid.x[-1]):
        env = math.exp(-((edge - x0) ** 2) / (2.0 * delta))
        if env > EDGE_DECAY:
            raise EnvelopeError(
                f"position envelope {env:.3g} at x = {edge:g} exceeds {EDGE_DECAY:g}; "
                "enlarge the grid or reduce delta"
            )
    for edge in (grid.p[0], grid.p[-1]):
        env = math.exp(-delta * (edge - p0) ** 2 / 2.0)
        if env > EDGE_DECAY:
            raise EnvelopeError(
                f"momentum envelope {env:.3g} at p = {edge:g} exceeds {EDGE_DECAY:g}"
            )


def coherent_state(grid: Grid, x0: float, p0: float, delta: float = 1.0) -> WaveFunction:
    """Squeezed coherent state centered at (x0, p0) with width parameter delta.

    Position amplitudes proportional to exp(-(x - x0)^2/(2*delta) + i*x*p0);
    the position density has variance delta/2, the momentum density 1/(2*delta).
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    _check_envelope(grid, x0, p0, delta)
    x = grid.x
    amp = np.exp(-((x - x0) ** 2) / (2.0 * delta) + 1j * x * p0)
    return normalize(WaveFunction(grid, Basis.POSITION, amp))


def fock_state(grid: Grid, m: int) -> WaveFunction:
    """m-th harmonic oscillator eigenstate (Hermite-Gaussian), m <= 20.

    Built by the three-term recurrence on the normalized functions
    phi_m = sqrt(2/m) x phi_{m-1} - sqrt((m-1)/m) phi_{m-2}, which stays
    well-scaled where raw Hermite polynomials would overflow.
    """
    if not (0 <= m <= 20):
        raise ValueError(f"fock index must be in [0, 20], got {m}")
    x = grid.x
    phi_prev = np.zeros_like(x)
    phi = math.pi ** -0.25 * np.exp(-(x**2) / 2.0)
    for k in range(1, m + 1):
        phi, phi_prev = (
            math.sqrt(2.0 / k) * x * phi - math.sqrt((k - 1) / k) * phi_prev,
            phi,
        )
    peak = float(np.max(np.abs(phi)))
    if max(abs(phi[0]), abs(phi[-1])) > EDGE_DECAY * peak:
        raise EnvelopeError(f"fock_state({m}) envelope does not decay at the grid edges")
    return normalize(WaveFunction(grid, Basis.POSITION, phi.astype(np.complex128)))


def superpose(a: complex, psi1: WaveFunction, b: complex, psi2: WaveFunction) -> WaveFunction:
    """Normalized a*psi1 + b*psi2 (same grid, same basis)."""
    if psi1.grid != psi2.grid or psi1.basis != psi2.basis:
        raise ValueError("superpose requires the same grid and basis")
    out = WaveFunction(psi1.grid, psi1.basis, a * psi1.amp + b * psi2.amp)
    if out.norm() < 1e-12:
        raise ValueError("superposition is numerically the zero vector")
    return normalize(out)


def fourier_sum(f, src: np.ndarray, dst: np.ndarray, weight: float, sign: int, axis: int = -1):
    """weight * sum_j f_j exp(sign*i*dst_l*src_j) for every dst_l, via FFT.

    Exact (up to round-off) whenever the lattices are conjugate,
    i.e. (dst spacing)*(src spacing) = 2*pi/len(src).
    """
    f = np.asarray(f)
    n = src.size
    ds, dk = src[1] - src[0], dst[1] - dst[0]
    if abs(ds * dk * n / (2.0 * math.pi) - 1.0) > 1e-12:
        raise ValueError("lattices are not Fourier-conjugate")
    f = np.moveaxis(f, axis, -1)
    inner = f * np.exp(sign * 1j * dst[0] * src)
    if sign < 0:
        out = np.fft.fft(inner, axis=-1)
    else:
        out = n * np.fft.ifft(inner, axis=-1)
    out *= weight * np.exp(sign * 1j * np.arange(n) * dk * src[0])
    return np.moveaxis(out, -1, axis)


def to_momentum(psi: WaveFunction) -> WaveFunction:
    """<p|psi> on the conjugate lattice; unitary together with to_position."""
    if psi.basis is not Basis.POSITION:
        raise ValueError("to_momentum expects a position-basis state")
    g = psi.grid
    amp = fourier_sum(psi.amp, g.x, g.p, g.dx / math.sqrt(2.0 * math.pi), sign=-1)
    return WaveFunction(g, Basis.MOMENTUM, amp)


def to_position(psi: WaveFunction) -> WaveFunction:
    if psi.basis is not Basis.MOMENTUM:
        raise ValueError("to_position expects a momentum-basis state")
    g = psi.grid
    amp = fourier_sum(psi.amp, g.p, g.x, g.dp / math.sqrt(2.0 * math.pi), sign=+1)
    return WaveFunction(g, Basis.POSITION, amp)


def as_position(psi: WaveFunction) -> WaveFunction:
    return psi if psi.basis is Basis.POSITION else to_position(psi)


def as_momentum(psi: WaveFunction) -> WaveFunction:
    return psi if psi.basis is Basis.MOMENTUM else to_momentum(psi)


def inner(psi: WaveFunction, phi: WaveFunction) -> complex:
    """Quadrature inner product <psi|phi> (same grid and basis)."""
    if psi.grid != phi.grid or psi.basis != phi.basis:
        raise ValueError("inner requires the same grid and basis")
    return complex(np.vdot(psi.amp, phi.amp) * psi.spacing)


def expectation(psi: WaveFunction, obs: Observable) -> float:
    """<psi|A|psi> for the five polynomial observables, by direct quadrature."""
    if obs is Observable.X or obs is Observable.X2:
        q = as_position(psi)
        axis = q.grid.x
        power = 1 if obs is Observable.X else 2
        return float(np.sum(axis**power * q.density()) * q.grid.dx)
    if obs is Observable.P or obs is Observable.P2:
        q = as_momentum(psi)
        axis = q.grid.p
        power = 1 if obs is Observable.P else 2
        return float(np.sum(axis**power * q.density()) * q.grid.dp)
    if obs is Observable.NUMBER:
        return (expectation(psi, Observable.X2) + expectation(psi, Observable.P2) - 1.0) / 2.0
    raise ValueError(f"unsupported observable {obs}")
