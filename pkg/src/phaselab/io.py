"""File formats for states and distributions.

WaveFunction: JSON header {n, x_min, dx, basis} with interleaved (re, im)
amplitudes, either inline or in a little-endian float64 binary sidecar; CSV
alternative with columns x, re, im.  PhaseSpaceGrid: CSV of (x, p, value)
triples row-major in x, or JSON with the same header fields.

All floats in text formats are written with 17 significant digits so that
identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Basis, Grid, WaveFunction
from .phasespace import DistributionKind, PhaseSpaceGrid

FMT = "%.17g"


def _f(value: float) -> str:
    return FMT % value


def save_wavefunction(psi: WaveFunction, path, fmt: str = "json", binary_sidecar: bool = False) -> None:
    path = Path(path)
    g = psi.grid
    if fmt == "csv":
        if psi.basis is not Basis.POSITION:
            raise ValueError("CSV wavefunction files carry position-basis states only")
        axis = g.x
        lines = ["x,re,im"]
        for xv, a in zip(axis, psi.amp):
            lines.append(f"{_f(xv)},{_f(a.real)},{_f(a.imag)}")
        path.write_text("\n".join(lines) + "\n")
        return
    if fmt != "json":
        raise ValueError(f"unknown wavefunction format {fmt!r}")
    header = {"n": g.n, "x_min": g.x_min, "dx": g.dx, "basis": psi.basis.value}
    interleaved = np.empty(2 * g.n)
    interleaved[0::2] = psi.amp.real
    interleaved[1::2] = psi.amp.imag
    if binary_sidecar:
        sidecar = path.with_suffix(path.suffix + ".bin")
        interleaved.astype("<f8").tofile(sidecar)
        header["amp_file"] = sidecar.name
    else:
        header["amp"] = [float(v) for v in interleaved]
    path.write_text(json.dumps(header, sort_keys=True) + "\n")


def load_wavefunction(path) -> WaveFunction:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv" or text.startswith("x,"):
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        xs = np.array([float(r[0]) for r in rows])
        amp = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
        grid = Grid(n=xs.size, x_min=float(xs[0]), dx=float(xs[1] - xs[0]))
        return WaveFunction(grid, Basis.POSITION, amp)
    header = json.loads(text)
    grid = Grid(n=int(header["n"]), x_min=float(header["x_min"]), dx=float(header["dx"]))
    basis = Basis(header["basis"])
    if "amp_file" in header:
        interleaved = np.fromfile(path.parent / header["amp_file"], dtype="<f8")
    else:
        interleaved = np.asarray(header["amp"], dtype=np.float64)
    amp = interleaved[0::2] + 1j * interleaved[1::2]
    return WaveFunction(grid, basis, amp)


def save_distribution(dist: PhaseSpaceGrid, path, fmt: str = "csv") -> None:
    path = Path(path)
    if fmt == "csv":
        lines = ["x,p,value"]
        for i, xv in enumerate(dist.x):
            for j, pv in enumerate(dist.p):
                lines.append(f"{_f(xv)},{_f(pv)},{_f(dist.values[i, j])}")
        path.write_text("\n".join(lines) + "\n")
        return
    if fmt != "json":
        raise ValueError(f"unknown distribution format {fmt!r}")
    doc = {
        "n": int(dist.x.size),
        "x_min": float(dist.x[0]),
        "dx": dist.dx,
        "kind": dist.kind.value,
        "delta": dist.delta,
        "p_min": float(dist.p[0]),
        "dp": dist.dp,
        "values": [[float(v) for v in row] for row in dist.values],
    }
    path.write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_distribution(path) -> PhaseSpaceGrid:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv" or text.startswith("x,"):
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        xs = sorted({float(r[0]) for r in rows})
        ps = sorted({float(r[1]) for r in rows})
        values = np.array([float(r[2]) for r in rows]).reshape(len(xs), len(ps))
        return PhaseSpaceGrid(
            x=np.array(xs), p=np.array(ps), kind=DistributionKind.HISTOGRAM, values=values
        )
    doc = json.loads(text)
    n = int(doc["n"])
    x = doc["x_min"] + doc["dx"] * np.arange(n)
    p = doc["p_min"] + doc["dp"] * np.arange(len(doc["values"][0]))
    return PhaseSpaceGrid(
        x=x,
        p=p,
        kind=DistributionKind(doc["kind"]),
        values=np.asarray(doc["values"]),
        delta=doc.get("delta"),
    )
