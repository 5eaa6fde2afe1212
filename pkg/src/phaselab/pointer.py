"""Von Neumann pointer realization of the Gaussian position measurement.

A measurement device in a squeezed vacuum state couples to the system through
an impulsive interaction that shifts the device position by g times the system
position.  Reading the device position and the system momentum yields a joint
density equal to the Husimi function; the weak-coupling regime maps onto
delta = 1/g^2 after rescaling the device readout by 1/g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Basis,
    EnvelopeError,
    Grid,
    WaveFunction,
    as_position,
    fourier_sum,
)
from .measurement import successive_density
from .phasespace import DistributionKind, PhaseSpaceGrid

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CouplingSpec:
    """Coupling strength g and device squeeze parameter delta_device."""

    g: float
    delta_device: float = 1.0

    def __post_init__(self):
        if self.g <= 0.0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.delta_device <= 0.0:
            raise ValueError(f"delta_device must be positive, got {self.delta_device}")


@dataclass(frozen=True)
class CompositeWaveFunction:
    """Amplitudes over device position (axis 0) x system position (axis 1)."""

    device_grid: Grid
    system_grid: Grid
    amp: np.ndarray
    delta_device: float

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=np.complex128)
        if amp.shape != (self.device_grid.n, self.system_grid.n):
            raise ValueError(f"composite amplitude shape {amp.shape} does not match grids")
        amp.flags.writeable = False
        object.__setattr__(self, "amp", amp)

    def norm(self) -> float:
        return math.sqrt(
            float(np.sum(np.abs(self.amp) ** 2)) * self.device_grid.dx * self.system_grid.dx
        )


def device_grid_for(system_grid: Grid, spec: CouplingSpec) -> Grid:
    """Default device grid: spacing g*dx so the rescaled readout lattice
    contains the system lattice exactly, widened to hold the shifted envelope."""
    g = spec.g
    dx_d = g * system_grid.dx
    sigma = math.sqrt(spec.delta_device / 2.0)
    half_width = g * (system_grid.x_max - system_grid.x_min) / 2.0 + 8.0 * sigma + 8.0 * g
    n_d = max(system_grid.n, 1 << math.ceil(math.log2(2.0 * half_width / dx_d)))
    margin = (n_d - system_grid.n) // 2
    x_min_d = g * (system_grid.x_min - margin * system_grid.dx)
    return Grid(n=n_d, x_min=x_min_d, dx=dx_d)


def make_composite(device_grid: Grid, delta: float, psi: WaveFunction) -> CompositeWaveFunction:
    """Product of the normalized device Gaussian exp(-x^2/(2*delta)) with the system state."""
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    xd = device_grid.x
    env = np.exp(-(xd**2) / (2.0 * delta))
    if max(env[0], env[-1]) > 1e-12:
        raise EnvelopeError("device Gaussian does not decay at the device grid edges")
    env = env / math.sqrt(float(np.sum(env**2)) * device_grid.dx)
    pos = as_position(psi)
    amp = np.outer(env, pos.amp)
    return CompositeWaveFunction(
        device_grid=device_grid,
        system_grid=pos.grid,
        amp=amp,
        delta_device=float(delta),
    )


def apply_interaction(comp: CompositeWaveFunction, g: float) -> CompositeWaveFunction:
    """Impulsive coupling exp(-i*g*x_sys*p_dev): shifts the device by g*x_sys.

    Applied exactly on the lattice by a momentum-space phase on the device
    axis, one phase column per system lattice point.
    """
    gd, gs = comp.device_grid, comp.system_grid
    if g == 0.0:
        return comp
    phi = fourier_sum(comp.amp, gd.x, gd.p, gd.dx / math.sqrt(TWO_PI), sign=-1, axis=0)
    phi = phi * np.exp(-1j * g * np.outer(gd.p, gs.x))
    amp = fourier_sum(phi, gd.p, gd.x, gd.dp / math.sqrt(TWO_PI), sign=+1, axis=0)
    out = CompositeWaveFunction(gd, gs, amp, comp.delta_device)
    edge = max(float(np.max(np.abs(amp[0]))), float(np.max(np.abs(amp[-1]))))
    if edge > 1e-10 * float(np.max(np.abs(amp))):
        raise EnvelopeError(
            f"shifted device envelope reaches the device grid edge (relative edge "
            f"amplitude {edge / float(np.max(np.abs(amp))):.3g}); widen the device grid"
        )
    return out


def readout_joint(comp: CompositeWaveFunction) -> PhaseSpaceGrid:
    """Joint density of device position and system momentum, |<p|<x|Psi>|^2."""
    gd, gs = comp.device_grid, comp.system_grid
    phi = fourier_sum(comp.amp, gs.x, gs.p, gs.dx / math.sqrt(TWO_PI), sign=-1, axis=1)
    return PhaseSpaceGrid(
        x=gd.x,
        p=gs.p,
        kind=DistributionKind.HUSIMI,
        values=np.abs(phi) ** 2,
        delta=comp.delta_device,
    )


def weak_rescale(joint: PhaseSpaceGrid, g: float) -> PhaseSpaceGrid:
    """Substitute the rescaled readout x_bar = x/g, with the Jacobian factor g
    keeping the density normalized; comparable to the Husimi function with
    delta = delta_device/g^2."""
    if g <= 0.0:
        raise ValueError(f"g must be positive, got {g}")
    delta = None if joint.delta is None else joint.delta / g**2
    return PhaseSpaceGrid(
        x=joint.x / g, p=joint.p, kind=joint.kind, values=g * joint.values, delta=delta
    )


def pointer_vs_direct(psi: WaveFunction, spec: CouplingSpec) -> float:
    """L-inf deviation between the rescaled pointer-model joint density and the
    direct successive-measurement density with delta = delta_device/g^2."""
    pos = as_position(psi)
    sg = pos.grid
    dg = device_grid_for(sg, spec)
    comp = make_composite(dg, spec.delta_device, pos)
    comp = apply_interaction(comp, spec.g)
    joint = weak_rescale(readout_joint(comp), spec.g)
    direct = successive_density(pos, spec.delta_device / spec.g**2)
    margin = round((sg.x[0] - joint.x[0]) / sg.dx)
    block = joint.values[margin : margin + sg.n, :]
    if not np.allclose(joint.x[margin : margin + sg.n], sg.x, atol=1e-9):
        raise AssertionError("rescaled device lattice does not contain the system lattice")
    return float(np.max(np.abs(block - direct.values)))
