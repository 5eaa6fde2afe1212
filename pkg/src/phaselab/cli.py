"""Command-line front end for reproducible phase-space experiments.

Subcommands: state, dist, sample, pointer, report.  Each run writes its data
files plus a machine-readable report; the exit code is 0 iff every embedded
check passed.  Identical configuration and seed produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as plio
from .core import (
    EnvelopeError,
    Observable,
    ResolutionError,
    WaveFunction,
    coherent_state,
    expectation,
    fock_state,
    make_grid,
    superpose,
)
from .measurement import (
    OutcomeIncompatibleError,
    coarsen,
    sample_joint,
    shot_noise_bound,
    tv_distance,
)
from .phasespace import (
    DistributionKind,
    MarginalAxis,
    characteristic,
    husimi,
    marginal,
    wigner,
)
from .pointer import CouplingSpec, pointer_vs_direct

_MODULE_ORIGIN = {
    EnvelopeError: "core",
    ResolutionError: "measurement",
    OutcomeIncompatibleError: "measurement",
}


@dataclass
class RunConfig:
    grid_n: int = 256
    x_min: float = -16.0
    x_max: float = 16.0
    state: str = "coherent 0 0 1"
    delta: float = 1.0
    g: float = 1.0
    delta_device: float = 1.0
    s: float = -1.0
    shots: int = 0
    seed: int = 0
    bins: tuple = (32, 32)
    out: str = "."
    format: str = "json"

    def to_json(self) -> str:
        doc = asdict(self)
        doc["bins"] = list(self.bins)
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        doc = json.loads(text)
        if "bins" in doc:
            doc["bins"] = tuple(doc["bins"])
        return cls(**doc)


def _merge_config(args) -> RunConfig:
    cfg = RunConfig()
    cli_fields = {}
    for name in vars(cfg):
        value = getattr(args, name, None)
        if value is not None:
            cli_fields[name] = value
    if getattr(args, "config", None):
        file_cfg = RunConfig.from_json(Path(args.config).read_text())
        overridden = [
            k for k, v in cli_fields.items() if getattr(file_cfg, k) != v
        ]
        if overridden:
            print(
                f"warning: config file overrides flags: {', '.join(sorted(overridden))}",
                file=sys.stderr,
            )
        return file_cfg
    for k, v in cli_fields.items():
        setattr(cfg, k, v)
    return cfg


def _build_state(cfg: RunConfig) -> WaveFunction:
    spec = cfg.state.strip()
    if Path(spec).is_file():
        return plio.load_wavefunction(spec)
    grid = make_grid(cfg.grid_n, cfg.x_min, cfg.x_max)
    tokens = spec.split()
    kind, params = tokens[0], [float(t) for t in tokens[1:]]
    if kind == "coherent":
        x0, p0 = params[0], params[1]
        delta = params[2] if len(params) > 2 else 1.0
        return coherent_state(grid, x0, p0, delta)
    if kind == "fock":
        return fock_state(grid, int(params[0]))
    if kind == "cat":
        a = params[0]
        delta = params[1] if len(params) > 1 else 1.0
        left = coherent_state(grid, -a, 0.0, delta)
        right = coherent_state(grid, a, 0.0, delta)
        return superpose(1.0, left, 1.0, right)
    raise ValueError(f"unknown state spec {spec!r}")


def _state_metadata(psi: WaveFunction) -> dict:
    ex = expectation(psi, Observable.X)
    ep = expectation(psi, Observable.P)
    return {
        "norm": psi.norm(),
        "mean_x": ex,
        "mean_p": ep,
        "var_x": expectation(psi, Observable.X2) - ex**2,
        "var_p": expectation(psi, Observable.P2) - ep**2,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True) + "\n")


def cmd_state(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    psi = _build_state(cfg)
    ext = "csv" if cfg.format == "csv" else "json"
    plio.save_wavefunction(psi, out / f"state.{ext}", fmt=ext)
    _write_json(out / "state.meta.json", _state_metadata(psi))
    return 0


def cmd_dist(cfg: RunConfig, which: str) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    psi = _build_state(cfg)
    summary = {"which": which}
    ok = True
    if which == "characteristic":
        cg = characteristic(psi, cfg.s)
        origin = cg.values[cg.u.size // 2, int(np.argmin(np.abs(cg.v)))]
        summary["origin_value"] = [float(origin.real), float(origin.imag)]
        ok = abs(origin - 1.0) < 1e-9
        doc = {
            "s": cg.s,
            "u_min": float(cg.u[0]),
            "du": float(cg.u[1] - cg.u[0]),
            "v_min": float(cg.v[0]),
            "dv": float(cg.v[1] - cg.v[0]),
            "values_re": [[float(v.real) for v in row] for row in cg.values],
            "values_im": [[float(v.imag) for v in row] for row in cg.values],
        }
        _write_json(out / "characteristic.json", doc)
    else:
        if which == "wigner":
            dist = wigner(psi)
            pos_err = float(
                np.max(np.abs(marginal(dist, MarginalAxis.OVER_P) - _position_density(psi)))
            )
            summary["marginal_position_error"] = pos_err
            ok = pos_err < 1e-6
        elif which == "husimi":
            dist = husimi(psi, cfg.delta)
            ok = float(dist.values.min()) >= -1e-12
        else:
            raise ValueError(f"unknown distribution {which!r}")
        summary["normalization"] = dist.normalization()
        summary["min_value"] = float(dist.values.min())
        summary["negativity_flagged"] = bool(dist.values.min() < 0.0)
        ok = ok and abs(summary["normalization"] - 1.0) < 1e-6
        plio.save_distribution(dist, out / f"{which}.{cfg.format}", fmt=cfg.format)
    summary["pass"] = bool(ok)
    _write_json(out / f"{which}.summary.json", summary)
    return 0 if ok else 1


def _position_density(psi: WaveFunction) -> np.ndarray:
    from .core import as_position

    return as_position(psi).density()


def cmd_sample(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    psi = _build_state(cfg)
    result = sample_joint(psi, cfg.delta, cfg.shots, cfg.seed, bins=cfg.bins)
    lines = ["shot,x,p"]
    for i in range(result.shots):
        lines.append(f"{i},{plio.FMT % result.x[i]},{plio.FMT % result.p[i]}")
    (out / "records.csv").write_text("\n".join(lines) + "\n")
    plio.save_distribution(result.histogram, out / f"histogram.{cfg.format}", fmt=cfg.format)
    report = {"shots": cfg.shots, "seed": cfg.seed, "rejected": result.rejected}
    if cfg.shots == 0:
        report["status"] = "SKIPPED"
        ok = True
    else:
        reference = coarsen(husimi(psi, cfg.delta), cfg.bins)
        sampled = result.histogram.values * result.histogram.weight
        tv = tv_distance(sampled, reference)
        bound = shot_noise_bound(reference, cfg.shots)
        threshold = max(0.02, 5.0 * bound)
        report.update(tv=tv, shot_noise_bound=bound, threshold=threshold)
        ok = tv < threshold
        report["status"] = "PASS" if ok else "FAIL"
    _write_json(out / "sample.report.json", report)
    return 0 if ok else 1


def cmd_pointer(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    psi = _build_state(cfg)
    spec = CouplingSpec(g=cfg.g, delta_device=cfg.delta_device)
    deviation = pointer_vs_direct(psi, spec)
    ok = deviation < 1e-5
    _write_json(
        out / "pointer.report.json",
        {
            "g": cfg.g,
            "delta_device": cfg.delta_device,
            "max_deviation": deviation,
            "status": "PASS" if ok else "FAIL",
        },
    )
    return 0 if ok else 1


def cmd_report(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    docs = {}
    for path in sorted(out.glob("*.json")):
        if path.name.endswith(".report.json") or path.name.endswith(".summary.json"):
            docs[path.name] = json.loads(path.read_text())
    ok = all(
        doc.get("pass", True) and doc.get("status", "PASS") != "FAIL" for doc in docs.values()
    )
    _write_json(out / "report.json", {"sources": docs, "pass": bool(ok)})
    lines = [f"{name}: {'PASS' if (d.get('pass', True) and d.get('status', 'PASS') != 'FAIL') else 'FAIL'}"
             for name, d in sorted(docs.items())]
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 1


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; wins over flags on conflict")
    sub.add_argument("--grid-n", dest="grid_n", type=int)
    sub.add_argument("--x-min", dest="x_min", type=float)
    sub.add_argument("--x-max", dest="x_max", type=float)
    sub.add_argument("--state", help="constructor spec ('coherent x0 p0 delta', 'fock m', 'cat a delta') or a state file path")
    sub.add_argument("--delta", type=float)
    sub.add_argument("--g", type=float)
    sub.add_argument("--delta-device", dest="delta_device", type=float)
    sub.add_argument("--s", type=float)
    sub.add_argument("--shots", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--bins", nargs=2, type=int)
    sub.add_argument("--out")
    sub.add_argument("--format", choices=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaselab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("state", "dist", "sample", "pointer", "report"):
        sub = subs.add_parser(name)
        _add_common(sub)
        if name == "dist":
            sub.add_argument(
                "--which", choices=["wigner", "husimi", "characteristic"], default="husimi"
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "bins", None) is not None:
        args.bins = tuple(args.bins)
    cfg = _merge_config(args)
    try:
        if args.command == "state":
            return cmd_state(cfg)
        if args.command == "dist":
            return cmd_dist(cfg, args.which)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "pointer":
            return cmd_pointer(cfg)
        if args.command == "report":
            return cmd_report(cfg)
    except (ValueError, ArithmeticError) as exc:
        origin = _MODULE_ORIGIN.get(type(exc), "phaselab")
        print(f"error [{origin}]: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
