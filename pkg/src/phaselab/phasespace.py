"""Phase-space quasi-probability distributions and their identities.

Computes the s-parameterized characteristic function, the Wigner function,
the Husimi function (two independent routes), marginals, trace-product
expectations and Husimi-moment expectations with ordering corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import (
    Basis,
    Grid,
    Observable,
    ResolutionError,
    WaveFunction,
    as_momentum,
    as_position,
    fourier_sum,
)

TWO_PI = 2.0 * math.pi


class DistributionKind(str, Enum):
    WIGNER = "wigner"
    HUSIMI = "husimi"
    HISTOGRAM = "histogram"


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """A real distribution sampled on a rectangular (x, p) lattice.

    values[i, j] is the density at (x[i], p[j]).  For grid-backed
    distributions both axes are uniform; histograms use bin centers.
    """

    x: np.ndarray
    p: np.ndarray
    kind: DistributionKind
    values: np.ndarray
    delta: Optional[float] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (x.size, p.size):
            raise ValueError(f"values shape {v.shape} does not match axes")
        for name, arr in (("x", x), ("p", p), ("values", v)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def weight(self) -> float:
        """Quadrature cell area dx*dp."""
        return self.dx * self.dp

    def normalization(self) -> float:
        return float(np.sum(self.values)) * self.weight


@dataclass(frozen=True)
class CharacteristicGrid:
    """Characteristic function w(u, v, s) on lattices conjugate to (x, p)."""

    u: np.ndarray
    v: np.ndarray
    s: float
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.u.size, self.v.size):
            raise ValueError("values shape does not match (u, v) lattices")


def _shifted_family(psi: WaveFunction, v: np.ndarray) -> np.ndarray:
    """Rows psi(x - v_m), computed by a momentum-space phase (band-limited shift)."""
    g = psi.grid
    phi = as_momentum(psi).amp
    phases = np.exp(-1j * np.outer(v, g.p))
    return fourier_sum(phi * phases, g.p, g.x, g.dp / math.sqrt(TWO_PI), sign=+1, axis=-1)


def characteristic(psi: WaveFunction, s: float) -> CharacteristicGrid:
    """w(u, v, s) = <psi| exp(-i*u*x_op - i*v*p_op) |psi> * exp(s*(u^2+v^2)/4).

    The displacement is evaluated through the symmetric operator splitting
    exp(-i*u*x_op) exp(-i*v*p_op) exp(i*u*v/2); the u lattice coincides with
    the momentum lattice and the v lattice with the position lattice.
    """
    if not (-1.0 <= s <= 1.0):
        raise ValueError(f"s must lie in [-1, 1], got {s}")
    g = psi.grid
    u, v = g.p, g.x
    pos = as_position(psi)
    shifted = _shifted_family(pos, v)  # (n_v, n_x)
    integrand = np.conj(pos.amp)[None, :] * shifted
    overlap = fourier_sum(integrand, g.x, u, g.dx, sign=-1, axis=-1)  # (n_v, n_u)
    values = overlap.T * np.exp(0.5j * np.outer(u, v))
    values = values * np.exp(0.25 * s * (u[:, None] ** 2 + v[None, :] ** 2))
    return CharacteristicGrid(u=u, v=v, s=float(s), values=values)


def wigner(psi: WaveFunction) -> PhaseSpaceGrid:
    """W(x, p) = (1/2pi) Int dy exp(i*p*y) psi(x - y/2) psi*(x + y/2).

    The half-point samples of psi come from band-limited interpolation onto a
    doubled lattice, so the y quadrature runs at spacing dx and the full
    momentum lattice is alias-free.
    """
    pos = as_position(psi)
    g = pos.grid
    n, dx = g.n, g.dx
    # band-limited interpolation onto 2n points of spacing dx/2
    phi = as_momentum(pos).amp
    xf = g.x_min + (dx / 2.0) * np.arange(2 * n)
    psi_f = (g.dp / math.sqrt(TWO_PI)) * np.exp(1j * np.outer(xf, g.p)) @ phi

    M = 4 * n
    corr = np.zeros((n, M), dtype=np.complex128)
    for m in range(-(2 * n - 1), 2 * n):
        k0 = (abs(m) + 1) // 2
        k1 = (2 * n - 1 - abs(m)) // 2
        if k1 < k0:
            continue
        ks = np.arange(k0, k1 + 1)
        corr[ks, m % M] = psi_f[2 * ks - m] * np.conj(psi_f[2 * ks + m])
    spectrum = M * np.fft.ifft(corr, axis=1)
    cols = (4 * (np.arange(n) - n // 2)) % M
    w = (dx / TWO_PI) * spectrum[:, cols]
    resid = float(np.max(np.abs(w.imag)))
    if resid > 1e-10:
        raise ArithmeticError(f"Wigner imaginary residue {resid:g} exceeds 1e-10")
    return PhaseSpaceGrid(x=g.x, p=g.p, kind=DistributionKind.WIGNER, values=w.real)


def _check_window(grid: Grid, delta: float) -> None:
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if delta < 4.0 * grid.dx**2:
        raise ResolutionError(
            f"delta = {delta:g} under-resolved on spacing dx = {grid.dx:g} "
            f"(need delta >= 4*dx^2 = {4 * grid.dx**2:g})"
        )


def husimi(psi: WaveFunction, delta: float = 1.0) -> PhaseSpaceGrid:
    """Q(x, p; delta) = |<x, p; delta|psi>|^2 / (2*pi).

    Evaluated as a Gaussian-windowed Fourier transform of the position
    amplitudes: each x row windows psi with exp(-(x - x')^2/(2*delta)) and
    transforms the result to momentum.
    """
    pos = as_position(psi)
    g = pos.grid
    _check_window(g, delta)
    window = np.exp(-((g.x[:, None] - g.x[None, :]) ** 2) / (2.0 * delta))
    rows = window * pos.amp[None, :]
    overlap = fourier_sum(rows, g.x, g.p, g.dx, sign=-1, axis=-1)
    q = (1.0 / TWO_PI) / math.sqrt(delta * math.pi) * np.abs(overlap) ** 2
    return PhaseSpaceGrid(x=g.x, p=g.p, kind=DistributionKind.HUSIMI, values=q, delta=float(delta))


def invert_characteristic(cg: CharacteristicGrid, grid: Grid) -> np.ndarray:
    """(1/(2pi)^2) Int du dv w(u,v) exp(i*u*x + i*v*p) on the grid's (x, p) lattice."""
    du = float(cg.u[1] - cg.u[0])
    dv = float(cg.v[1] - cg.v[0])
    out = fourier_sum(cg.values, cg.u, grid.x, du / TWO_PI, sign=+1, axis=0)
    out = fourier_sum(out, cg.v, grid.p, dv / TWO_PI, sign=+1, axis=1)
    return out


def husimi_via_characteristic(psi: WaveFunction) -> PhaseSpaceGrid:
    """Husimi function through the s = -1 characteristic function (delta = 1 route)."""
    g = as_position(psi).grid
    cg = characteristic(psi, -1.0)
    q = invert_characteristic(cg, g)
    resid = float(np.max(np.abs(q.imag)))
    if resid > 1e-9:
        raise ArithmeticError(f"Husimi inverse-transform imaginary residue {resid:g}")
    return PhaseSpaceGrid(x=g.x, p=g.p, kind=DistributionKind.HUSIMI, values=q.real, delta=1.0)


class MarginalAxis(str, Enum):
    OVER_P = "over_p"  # integrate p out, leaving a function of x
    OVER_X = "over_x"  # integrate x out, leaving a function of p


def marginal(dist: PhaseSpaceGrid, axis: MarginalAxis) -> np.ndarray:
    """Quadrature sum along one axis times the eliminated spacing."""
    if axis is MarginalAxis.OVER_P:
        return np.sum(dist.values, axis=1) * dist.dp
    return np.sum(dist.values, axis=0) * dist.dx


# Ordering corrections for the polynomial observables, pinned by the
# pre-build oracle in the test suite (constancy across random states):
# the Wigner symbols of x^2 and p^2 carry no constant, so c2x = c2p = 0.
C2X = 0.0
C2P = 0.0


def observable_wigner(grid: Grid, obs: Observable) -> PhaseSpaceGrid:
    """Wigner symbol of a polynomial observable, scaled so that
    trace_product(wigner(psi), observable_wigner(grid, A)) = <A>."""
    X = grid.x[:, None] + 0.0 * grid.p[None, :]
    P = 0.0 * grid.x[:, None] + grid.p[None, :]
    if obs is Observable.X:
        sym = X
    elif obs is Observable.P:
        sym = P
    elif obs is Observable.X2:
        sym = X**2 - C2X
    elif obs is Observable.P2:
        sym = P**2 - C2P
    elif obs is Observable.NUMBER:
        sym = (X**2 - C2X + P**2 - C2P - 1.0) / 2.0
    else:
        raise ValueError(f"unsupported observable {obs}")
    return PhaseSpaceGrid(
        x=grid.x, p=grid.p, kind=DistributionKind.WIGNER, values=sym / TWO_PI
    )


def trace_product(wa: PhaseSpaceGrid, wb: PhaseSpaceGrid) -> float:
    """Tr(A B) = 2*pi * Int W_A W_B dx dp for Wigner-kind grids on shared axes."""
    if wa.kind is not DistributionKind.WIGNER or wb.kind is not DistributionKind.WIGNER:
        raise ValueError("trace_product requires Wigner-kind grids")
    if wa.values.shape != wb.values.shape or not np.allclose(wa.x, wb.x) or not np.allclose(wa.p, wb.p):
        raise ValueError("trace_product requires matching lattices")
    return TWO_PI * float(np.sum(wa.values * wb.values)) * wa.weight


def moment_correction(obs: Observable, delta: float) -> float:
    """Anti-normal-ordering correction subtracted from the raw Husimi moment.

    First moments need none; the second moments pick up the coherent-state
    width: delta/2 in x, 1/(2*delta) in p.  Values pinned by the constancy
    oracle in the test suite.
    """
    if obs in (Observable.X, Observable.P):
        return 0.0
    if obs is Observable.X2:
        return delta / 2.0
    if obs is Observable.P2:
        return 1.0 / (2.0 * delta)
    if obs is Observable.NUMBER:
        return (delta / 2.0 + 1.0 / (2.0 * delta)) / 2.0
    raise ValueError(f"unsupported observable {obs}")


def q_moment(q: PhaseSpaceGrid, obs: Observable) -> float:
    """<A> from the Husimi function: raw polynomial moment minus the ordering correction."""
    if q.kind is not DistributionKind.HUSIMI:
        raise ValueError("q_moment requires a Husimi-kind grid")
    if q.delta is None:
        raise ValueError("Husimi grid is missing its delta parameter")
    X = q.x[:, None]
    P = q.p[None, :]
    if obs is Observable.X:
        poly = X + 0.0 * P
    elif obs is Observable.P:
        poly = 0.0 * X + P
    elif obs is Observable.X2:
        poly = X**2 + 0.0 * P
    elif obs is Observable.P2:
        poly = 0.0 * X + P**2
    elif obs is Observable.NUMBER:
        poly = (X**2 + P**2 - 1.0) / 2.0
    else:
        raise ValueError(f"unsupported observable {obs}")
    raw = float(np.sum(poly * q.values)) * q.weight
    return raw - moment_correction(obs, q.delta)
