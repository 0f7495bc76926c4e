"""Command-line runner: each command computes a table, checks its gates and writes one file.

Exit status: 0 when every gate passes, 1 when a named gate fails, 2 for usage
errors (bad flags, invalid parameters, empty results) and 3 for I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import coherent_dynamics as cd
from .errors import (
    ConditioningError,
    IholabError,
    MatrixOverflowError,
    NumericalConsistencyError,
)
from .fock_engine import (
    SystemParams,
    dilated_spectrum,
    eigen_residuals,
    similarity_spectrum,
    verify_similarity,
)
from .pseudo_metric import biorthonormality_gram, divergence_exponent

COMMANDS = ("spectrum", "biorth", "quasiherm", "coherent", "evolve", "classical", "divergence", "all")
FORMATS = ("csv", "json")
SEED_DIR_ENV = "IOL_SEED_DIR"

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    dim: int = 256
    n_max: int = 6
    alpha_mod: float = 1.0
    omega: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    t_max: float = 1.0
    dt: float = 0.01
    nodes: int = 200
    output_path: str | None = None
    format: str = "csv"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}")
        for name in ("dim", "n_max", "nodes"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")
        for name in ("omega", "mass", "hbar", "dt"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise UsageError(f"{name} must be positive")
        # zero amplitude and zero duration are meaningful runs
        for name in ("alpha_mod", "t_max"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise UsageError(f"{name} must be non-negative")

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.mass, self.omega, self.hbar, self.dim)

    @property
    def times(self) -> np.ndarray:
        steps = int(round(self.t_max / self.dt))
        return np.linspace(0.0, self.t_max, steps + 1)

    def canonical(self) -> str:
        payload = asdict(self)
        payload["artifact_version"] = __version__
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_header(cls, text: str) -> "RunConfig":
        """Inverse of the config echo: accepts a CSV header line or a JSON artifact."""
        text = text.strip()
        if text.startswith("# config: "):
            payload = json.loads(text[len("# config: "):])
        else:
            payload = json.loads(text)["config"]
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in payload.items() if k in names})


@dataclass(frozen=True)
class Gate:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


@dataclass
class Result:
    columns: list[str]
    records: list[dict]
    gates: list[Gate]


# ---------------------------------------------------------------- commands


def run_spectrum(cfg: RunConfig) -> Result:
    params = cfg.params
    levels = np.arange(cfg.n_max + 1)
    expected = 1j * params.energy_scale * (levels + 0.5)
    dilated = dilated_spectrum(params, cfg.n_max + 1)
    residuals = eigen_residuals(params, cfg.n_max, block=cd.default_block(cfg.dim) * 2)
    literal, _ = similarity_spectrum(params)
    records = []
    for n, e, d, r in zip(levels, expected, dilated, residuals):
        records.append(
            {
                "n": int(n),
                "expected": complex(e),
                "dilated": complex(d),
                "dilated_error": float(abs(d - e)),
                "literal_error": float(np.min(np.abs(literal - e))),
                "eigen_residual_block": r.block,
                "eigen_residual_full": r.full,
            }
        )
    gates = [
        Gate("dilated_spectrum", max(r["dilated_error"] for r in records), 1e-8),
        Gate("eigen_residual_block", max(r["eigen_residual_block"] for r in records), 1e-6),
    ]
    return Result(list(records[0]), records, gates)


def run_biorth(cfg: RunConfig) -> Result:
    params = cfg.params
    contour = biorthonormality_gram(cfg.n_max, "contour", params, cfg.nodes).gram
    fock = biorthonormality_gram(cfg.n_max, "fock", params).gram
    eye = np.eye(cfg.n_max + 1)
    records = [
        {
            "m": m,
            "n": n,
            "contour": complex(contour[m, n]),
            "fock": complex(fock[m, n]),
            "contour_dev": float(abs(contour[m, n] - eye[m, n])),
            "fock_dev": float(abs(fock[m, n] - eye[m, n])),
        }
        for m in range(cfg.n_max + 1)
        for n in range(cfg.n_max + 1)
    ]
    gates = [Gate("biorth_contour", max(r["contour_dev"] for r in records), 1e-8)]
    return Result(list(records[0]), records, gates)


def run_quasiherm(cfg: RunConfig) -> Result:
    rep = verify_similarity(cfg.params, max_condition=np.inf, block=17)
    records = [
        {"check": "ladder_form", "block": rep.block, "residual": rep.ladder_residual, "condition": 1.0},
        {"check": "rho_similarity", "block": rep.block, "residual": rep.rho_residual, "condition": rep.rho_condition},
        {"check": "eta_similarity", "block": rep.block, "residual": rep.eta_residual, "condition": rep.eta_condition},
    ]
    gates = [
        Gate("ladder_form", rep.ladder_residual, 1e-8),
        Gate("eta_similarity", rep.eta_residual, 1e-6),
    ]
    return Result(list(records[0]), records, gates)


def _moment_gates(reports: list[cd.ExpectationReport], hbar: float) -> list[Gate]:
    product = max(abs(r.product - hbar / 2) for r in reports)
    imag = max(
        abs(getattr(r, k).imag) / max(1.0, abs(getattr(r, k)))
        for r in reports
        for k in ("x_mean", "p_mean", "x2_mean", "p2_mean")
    )
    return [Gate("uncertainty_product", product, 1e-8), Gate("real_moments", imag, 1e-8)]


def run_coherent(cfg: RunConfig) -> Result:
    params = cfg.params
    base = cd.CoherentSpec(cfg.alpha_mod).alpha
    reports = []
    for t in cfg.times:
        wt = cfg.omega * float(t)
        state = cd.make_coherent(cd.CoherentSpec(cfg.alpha_mod, time=wt), params)
        scaled = cd.FockState(cd.evolution_amplitude(base, wt) * state.coeffs, cd.Family.INVERTED)
        reports.append(cd.uncertainties(scaled, params, float(t), nodes=cfg.nodes))
    return Result(list(cd.ExpectationReport.COLUMNS), [r.row() for r in reports], _moment_gates(reports, cfg.hbar))


def run_evolve(cfg: RunConfig) -> Result:
    params = cfg.params
    times = [float(t) for t in cfg.times]
    base = cd.CoherentSpec(cfg.alpha_mod).alpha
    start = cd.make_coherent(cd.CoherentSpec(cfg.alpha_mod), params)
    states = cd.evolve_many(start, times, params)
    reports = [cd.uncertainties(s, params, t, nodes=cfg.nodes) for t, s in zip(times, states)]
    seed = reports[0]
    traj = cd.classical_trajectory(seed.x_mean.real, seed.p_mean.real, times, params) if len(times) > 1 else None
    x_c = traj.x_c if traj else (seed.x_mean.real,)
    p_c = traj.p_c if traj else (seed.p_mean.real,)
    records = []
    deviation = 0.0
    classical = 0.0
    for t, s, r, xc, pc in zip(times, states, reports, x_c, p_c):
        wt = cfg.omega * t
        ref = cd.make_coherent(cd.CoherentSpec(cfg.alpha_mod, time=wt), params)
        ref = cd.FockState(cd.evolution_amplitude(base, wt) * ref.coeffs, cd.Family.INVERTED)
        dev = cd.block_deviation(s, ref)
        deviation = max(deviation, dev)
        scale = max(abs(xc), abs(pc), 1e-300)
        classical = max(classical, abs(r.x_mean - xc) / scale, abs(r.p_mean - pc) / scale)
        records.append({**r.row(), "reconstruction_dev": dev, "x_c": xc, "p_c": pc})
    gates = _moment_gates(reports, cfg.hbar) + [Gate("reconstruction", deviation, 1e-5), Gate("classical_match", classical, 1e-5)]
    return Result(list(records[0]), records, gates)


def run_classical(cfg: RunConfig) -> Result:
    """Seeds are the coherent-state means at t = 0, x0 = |alpha| l and p0 = |alpha| hbar / l."""
    params = cfg.params
    x0 = cfg.alpha_mod * params.length_scale
    p0 = cfg.alpha_mod * params.momentum_scale
    times = [float(t) for t in cfg.times]
    cf = cd.classical_trajectory(x0, p0, times, params)
    rk = cd.classical_trajectory(x0, p0, times, params, method="rk4", dt=min(cfg.dt, 1e-3))
    records = [
        {"t": t, "x_c": a, "p_c": b, "x_rk4": c, "p_rk4": d}
        for t, a, b, c, d in zip(times, cf.x_c, cf.p_c, rk.x_c, rk.p_c)
    ]
    err = max(
        max(abs(r["x_c"] - r["x_rk4"]), abs(r["p_c"] - r["p_rk4"])) / max(1.0, abs(r["x_c"]), abs(r["p_c"]))
        for r in records
    )
    return Result(list(records[0]), records, [Gate("rk4_vs_closed_form", err, 1e-8)])


def run_divergence(cfg: RunConfig) -> Result:
    params = cfg.params
    cutoffs = np.geomspace(10, 100, 8) * params.length_scale
    records = []
    for n in range(cfg.n_max + 1):
        slope = divergence_exponent(n, cutoffs, params)
        records.append({"n": n, "exponent": slope, "expected": float(2 * n + 1), "error": abs(slope - (2 * n + 1))})
    return Result(list(records[0]), records, [Gate("divergence_exponent", max(r["error"] for r in records), 0.1)])


def run_all(cfg: RunConfig) -> Result:
    from .acceptance import run_all as acceptance

    results = acceptance()
    records = [c.row() for c in results]
    gates = [Gate(f"C{c.id}", 0.0 if c.passed else 1.0, 0.0) for c in results]
    for c in results:
        print(c.line())
    return Result(list(records[0]), records, gates)


RUNNERS: dict[str, Callable[[RunConfig], Result]] = {
    "spectrum": run_spectrum,
    "biorth": run_biorth,
    "quasiherm": run_quasiherm,
    "coherent": run_coherent,
    "evolve": run_evolve,
    "classical": run_classical,
    "divergence": run_divergence,
    "all": run_all,
}


# ---------------------------------------------------------------- output


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        return repr(complex(value)).strip("()")
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _json_value(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def render(cfg: RunConfig, columns: list[str], records: list[dict]) -> str:
    if not records:
        raise UsageError("refusing to emit an empty record list")
    if cfg.format == "csv":
        buf = io.StringIO()
        buf.write(f"# config: {cfg.canonical()}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in records:
            writer.writerow([_csv_cell(r[c]) for c in columns])
        return buf.getvalue()
    payload = {
        "artifact_version": __version__,
        "config": json.loads(cfg.canonical()),
        "records": [{c: _json_value(r[c]) for c in columns} for r in records],
    }
    return json.dumps(payload, sort_keys=True, indent=1, allow_nan=False) + "\n"


def resolve_output(cfg: RunConfig) -> Path:
    root = Path(os.environ.get(SEED_DIR_ENV) or ".")
    if cfg.output_path is None:
        return root / f"{cfg.command}.{cfg.format}"
    path = Path(cfg.output_path)
    return path if path.is_absolute() else root / path


def emit(text: str, path: Path) -> None:
    """Write via a temporary file in the target directory and an atomic rename."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        result = RUNNERS[cfg.command](cfg)
        text = render(cfg, result.columns, result.records)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalConsistencyError, ConditioningError, MatrixOverflowError) as exc:
        print(f"gate failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GATE
    except IholabError as exc:
        print(f"usage error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        emit(text, resolve_output(cfg))
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = [g for g in result.gates if not g.passed]
    for g in failed:
        print(f"gate failed: {g.name} value={g.value:.3e} tolerance={g.tolerance:.1e}", file=sys.stderr)
    return EXIT_GATE if failed else EXIT_OK


# ---------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    d = RunConfig("all")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=d.dim)
    common.add_argument("--n-max", type=int, default=d.n_max)
    common.add_argument("--alpha-mod", type=float, default=d.alpha_mod)
    common.add_argument("--omega", type=float, default=d.omega)
    common.add_argument("--mass", type=float, default=d.mass)
    common.add_argument("--hbar", type=float, default=d.hbar)
    common.add_argument("--t-max", type=float, default=d.t_max)
    common.add_argument("--dt", type=float, default=d.dt)
    common.add_argument("--nodes", type=int, default=d.nodes)
    common.add_argument("--output", dest="output_path", default=None)
    common.add_argument("--format", choices=FORMATS, default=d.format)
    parser = argparse.ArgumentParser(prog="iholab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "imaginary levels i(n+1/2) by complex dilation plus eigen-residuals",
        "biorth": "Gram matrix of the bi-orthogonal families by contour and Fock routes",
        "quasiherm": "central-block residuals of the similarity relations",
        "coherent": "eta moments of coherent states along alpha(t) = alpha e^{wt}",
        "evolve": "propagate a coherent state and compare with alpha(t) and the classical path",
        "classical": "classical inverted-oscillator trajectory, closed form and RK4",
        "divergence": "growth exponent of truncated eigenfunction norms",
        "all": "run the acceptance checks and tabulate pass/fail",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(**vars(ns))


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
