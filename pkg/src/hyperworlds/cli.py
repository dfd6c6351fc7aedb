"""Batch command-line front end.

One subcommand per experiment; every run resolves its configuration from an
optional JSON file plus flag overrides (flags win), validates it before any
computation, and writes self-describing CSV or JSON files whose header
records the tool version, a hash of the resolved configuration, and the
master seed.  Identical resolved configuration and seed produce
byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, HyperworldsError, NumericalError, UsageError
from . import nsa
from .statespace import Constants, StatePreset, build_space, embed_state
from .operators import diagonalize, natural_extension
from .dynamics import dynamics_deviation, evolve, hamiltonian_spec
from .worlds import (
    BranchMeasureQuery,
    branch_measure,
    decompose,
    endpoint_warnings,
    faithfulness_measure_report,
    spin_measurement_preset,
)
from .limits import (
    RepeatedExperiment,
    continuous_frequency_law,
    frequency_law_measure,
    randomness_battery,
    sample_branches,
)

OUTDIR_ENV = "HYPERWORLDS_OUTDIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(value) -> str:
    """17-significant-digit decimal rendering, '.' separator, round-trip safe."""
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, complex):
        return f"{_fmt(value.real)}{'+' if value.imag >= 0 else '-'}{_fmt(abs(value.imag))}j"
    return str(value)


@dataclass
class RunConfig:
    """Fully resolved run configuration; hashed into every output header."""

    family: str = "hermite"
    dim: int = 64
    dims: Optional[list[int]] = None
    scale: float = 1.0
    extent: float = 20.0
    hbar: float = 1.0
    mass: float = 1.0
    kinetic_prefactor: str = "hbar-squared"
    state: dict = field(default_factory=lambda: {"kind": "ho_eigenstate", "n": 0})
    observable: str = "position"
    potential: Optional[list[float]] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    time_start: float = 0.0
    time_stop: float = 10.0
    time_steps: int = 21
    intervals: list = field(default_factory=lambda: [[-k / 2, k / 2] for k in range(2, 7)])
    delta: float = 0.0
    repetitions: int = 10000
    repetition_sweep: Optional[list[int]] = None
    p: float = 0.36
    eps: float = 0.02
    sample_count: int = 20
    seed: int = 20250810
    sequence_preset: str = "sampled"
    significance: float = 0.01
    window: float = 50.0
    outdir: str = "."
    format: str = "csv"

    @classmethod
    def load(cls, args: argparse.Namespace) -> "RunConfig":
        config = cls()
        env_outdir = os.environ.get(OUTDIR_ENV)
        if env_outdir:
            config.outdir = env_outdir
        if getattr(args, "config", None):
            path = Path(args.config)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            try:
                data = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
            for key, value in data.items():
                if not hasattr(config, key):
                    raise ConfigError(f"unknown config field {key!r}")
                setattr(config, key, value)
        for key, value in vars(args).items():
            if key in ("command", "config"):
                continue
            if value is not None and hasattr(config, key):
                setattr(config, key, value)
        config.validate()
        return config

    def validate(self) -> None:
        if self.family not in ("hermite", "grid"):
            raise ConfigError(f"field 'family' must be hermite or grid, got {self.family!r}")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ConfigError(f"field 'dim' must be a positive integer, got {self.dim!r}")
        if self.dims is not None and (
            not self.dims or any(not isinstance(n, int) or n < 1 for n in self.dims)
        ):
            raise ConfigError(f"field 'dims' must list positive integers, got {self.dims!r}")
        if not (self.scale > 0):
            raise ConfigError(f"field 'scale' must be positive, got {self.scale!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"field 'format' must be csv or json, got {self.format!r}")
        if self.time_steps < 1:
            raise ConfigError(f"field 'time_steps' must be >= 1, got {self.time_steps!r}")
        if self.delta < 0:
            raise ConfigError(f"field 'delta' must be >= 0, got {self.delta!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"field 'seed' must be an integer, got {self.seed!r}")
        for pair in self.intervals:
            if len(pair) != 2 or pair[0] > pair[1]:
                raise ConfigError(f"field 'intervals' has a bad entry {pair!r}")
        if self.sequence_preset not in ("sampled", "all-zeros", "alternating"):
            raise ConfigError(
                f"field 'sequence_preset' must be sampled, all-zeros or alternating, "
                f"got {self.sequence_preset!r}"
            )

    def resolved(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        # the output location must not affect output content
        content = {k: v for k, v in self.resolved().items() if k != "outdir"}
        canon = json.dumps(content, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def constants(self) -> Constants:
        return Constants(
            hbar=self.hbar, mass=self.mass, kinetic_prefactor=self.kinetic_prefactor
        )

    def space(self, dim: Optional[int] = None):
        dim = dim or self.dim
        if self.family == "grid":
            return build_space("grid", dim, extent=self.extent, constants=self.constants())
        return build_space("hermite", dim, self.scale, constants=self.constants())

    def state_preset(self) -> StatePreset:
        return StatePreset.from_dict(self.state)

    def time_grid(self) -> np.ndarray:
        return np.linspace(self.time_start, self.time_stop, self.time_steps)

    def observable_spec(self, space):
        return diagonalize(
            natural_extension(self.observable, space, potential=self.potential)
        )


class _Writer:
    """Writes one self-describing table per call, CSV or JSON."""

    def __init__(self, config: RunConfig, command: str):
        self.config = config
        self.command = command
        self.outdir = Path(config.outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def write(self, name: str, columns: Sequence[str], rows, comments: Sequence[str] = ()):
        meta = {
            "tool": f"hyperworlds {__version__}",
            "command": self.command,
            "config_hash": self.config.hash(),
            "seed": self.config.seed,
        }
        if self.config.format == "csv":
            path = self.outdir / f"{name}.csv"
            lines = [f"# {key}: {value}" for key, value in meta.items()]
            lines += [f"# {comment}" for comment in comments]
            lines.append(",".join(columns))
            for row in rows:
                lines.append(",".join(_fmt(cell) for cell in row))
            path.write_text("\n".join(lines) + "\n")
        else:
            path = self.outdir / f"{name}.json"
            payload = {
                "meta": {**meta, "comments": list(comments)},
                "columns": list(columns),
                "rows": [[cell for cell in row] for row in rows],
            }
            path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
        self.paths.append(path)
        return path


def cmd_spectrum(config: RunConfig) -> list[Path]:
    space = config.space()
    spec = config.observable_spec(space)
    writer = _Writer(config, "spectrum")
    rows = [(i, float(lam)) for i, lam in enumerate(spec.eigenvalues)]
    writer.write("spectrum", ("index", "eigenvalue"), rows)
    return writer.paths


def cmd_branch(config: RunConfig) -> list[Path]:
    writer = _Writer(config, "branch")
    if config.alpha is not None or config.beta is not None:
        if config.alpha is None or config.beta is None:
            raise ConfigError("spin preset needs both 'alpha' and 'beta'")
        bd = spin_measurement_preset(config.alpha, config.beta)
    else:
        space = config.space()
        spec = config.observable_spec(space)
        state = embed_state(config.state_preset(), space).state
        bd = decompose(state, spec)
    comments = [
        f"total_weight: {_fmt(bd.total_weight())}",
        f"tiny_weight_count: {bd.tiny_weight_count()}",
        f"weight_outside_window: {_fmt(bd.weight_outside_window(-config.window, config.window))}",
    ]
    rows = [(w.index, w.outcome, w.weight, w.label) for w in bd.worlds]
    writer.write("branches", ("index", "outcome", "weight", "label"), rows, comments)
    return writer.paths


def cmd_evolve(config: RunConfig) -> list[Path]:
    space = config.space()
    spec = hamiltonian_spec(space, config.potential or (0.0, 0.0, 0.5))
    state = embed_state(config.state_preset(), space).state
    h_matrix = spec.observable.matrix
    writer = _Writer(config, "evolve")
    rows = []
    for t in config.time_grid():
        evolved = evolve(state, spec, float(t))
        c = evolved.coefficients
        energy = float(np.real(np.vdot(c, h_matrix @ c)))
        overlap = abs(np.vdot(state.coefficients, c))
        rows.append((float(t), evolved.norm(), energy, float(overlap)))
    writer.write("evolution", ("t", "norm", "energy", "overlap_initial"), rows)
    return writer.paths


def cmd_faithfulness(config: RunConfig) -> list[Path]:
    dims = config.dims or [16, 32, 64, 128]
    preset = config.state_preset()
    writer = _Writer(config, "faithfulness")
    summary = []
    detail_dyn = None
    detail_meas = None
    for dim in dims:
        space = config.space(dim)
        dyn = dynamics_deviation(preset, space, config.time_grid())
        spec = config.observable_spec(space)
        bd = decompose(embed_state(preset, space).state, spec)
        meas = faithfulness_measure_report(
            bd, preset, [tuple(p) for p in config.intervals], config.delta
        )
        for warning in meas.warnings:
            print(f"warning: dim {dim}: {warning}", file=sys.stderr)
        summary.append((dim, dyn.max_deviation, meas.sup_deviation, dyn.embedding_residual))
        detail_dyn, detail_meas = dyn, meas
    writer.write(
        "faithfulness_summary",
        ("dim", "dynamics_max_deviation", "measure_sup_deviation", "embedding_residual"),
        summary,
    )
    writer.write("dynamics_deviation", ("t", "deviation"), detail_dyn.rows(),
                 comments=[f"dim: {detail_dyn.dim}"])
    writer.write(
        "measure_deviation",
        ("interval_lo", "interval_hi", "branch", "analytic", "deviation"),
        detail_meas.rows(),
        comments=[f"dim: {detail_meas.dim}", f"delta: {_fmt(detail_meas.delta)}"],
    )
    return writer.paths


def cmd_frequency_law(config: RunConfig) -> list[Path]:
    writer = _Writer(config, "frequency-law")
    sweep = config.repetition_sweep or [config.repetitions]
    rows = []
    for reps in sweep:
        report = frequency_law_measure(reps, config.p, config.eps)
        rows.append((reps, report.bias, report.epsilon, report.measure, report.method))
    writer.write("frequency_law", ("K", "p", "eps", "measure", "method"), rows)
    return writer.paths


def cmd_randomness(config: RunConfig) -> list[Path]:
    writer = _Writer(config, "randomness")
    k = config.repetitions
    if config.sequence_preset == "all-zeros":
        sequence = np.zeros(k, dtype=np.int64)
    elif config.sequence_preset == "alternating":
        sequence = np.arange(k, dtype=np.int64) % 2
    else:
        sequence = sample_branches(
            RepeatedExperiment.spin(k, config.p), 1, config.seed
        )[0]
    report = randomness_battery(sequence, config.p, config.significance)
    rows = [
        (r.name, r.statistic, r.p_value, "pass" if r.passed else "fail")
        for r in report.results
    ]
    writer.write(
        "randomness",
        ("test", "statistic", "p_value", "verdict"),
        rows,
        comments=[f"sequence_preset: {config.sequence_preset}", f"length: {k}"],
    )
    return writer.paths


def cmd_continuous_law(config: RunConfig) -> list[Path]:
    space = config.space()
    spec = config.observable_spec(space)
    preset = config.state_preset()
    bd = decompose(embed_state(preset, space).state, spec)
    writer = _Writer(config, "continuous-law")
    sweep = config.repetition_sweep or [config.repetitions]
    summary = []
    last = None
    for reps in sweep:
        report = continuous_frequency_law(
            bd,
            preset,
            reps,
            [tuple(p) for p in config.intervals],
            config.delta,
            config.sample_count,
            config.seed,
        )
        summary.append(
            (reps, report.median_sup_deviation, report.median_sup_sampling_deviation)
        )
        last = report
    writer.write(
        "continuous_law",
        (
            "interval_lo",
            "interval_hi",
            "analytic",
            "branch",
            "max_deviation",
            "median_deviation",
        ),
        last.rows(),
        comments=[f"K: {last.repetitions}", f"samples: {last.sample_count}"],
    )
    writer.write(
        "continuous_law_sweep",
        ("K", "median_sup_deviation", "median_sup_sampling_deviation"),
        summary,
    )
    return writer.paths


def cmd_nsa_demo(config: RunConfig) -> list[Path]:
    w = nsa.OMEGA
    samples = [
        ("3", nsa.AsymptoticScalar.from_rational(3)),
        ("w", w),
        ("1/w", nsa.EPSILON),
        ("3 + 5/w", nsa.AsymptoticScalar.from_rational(3) + 5 * nsa.EPSILON),
        ("w^2/7", nsa.AsymptoticScalar.omega(2, Fraction(1, 7))),
        ("(w+1)/(2w)", (w + 1) / (2 * w)),
        ("-2/w^3", nsa.AsymptoticScalar.omega(-3, -2)),
    ]
    rows = []
    for text, scalar in samples:
        cls = nsa.classify(scalar)
        st = (
            _fmt(float(nsa.standard_part(scalar)))
            if cls.kind is not nsa.ScalarKind.INFINITE
            else "undefined"
        )
        rows.append((text, str(scalar), cls.kind.value, cls.sign, st))
    measures = [
        ("w/2 of w", nsa.counting_measure(w * Fraction(1, 2), w)),
        ("1 of w", nsa.counting_measure(1, w)),
        ("w-3 of w", nsa.counting_measure(w - 3, w)),
    ]
    mrows = [
        (text, str(m.value), _fmt(float(m.loeb_value))) for text, m in measures
    ]
    header = f"{'expression':<14} {'value':<22} {'class':<20} {'sign':<5} standard part"
    print(header)
    print("-" * len(header))
    for text, value, kind, sign, st in rows:
        print(f"{text:<14} {value:<22} {kind:<20} {sign:<5} {st}")
    print()
    print(f"{'counting measure':<18} {'value':<22} loeb value")
    for text, value, loeb in mrows:
        print(f"{text:<18} {value:<22} {loeb}")
    writer = _Writer(config, "nsa-demo")
    writer.write(
        "nsa_classification",
        ("expression", "value", "class", "sign", "standard_part"),
        rows,
    )
    writer.write("nsa_counting_measure", ("event", "value", "loeb_value"), mrows)
    return writer.paths


COMMANDS = {
    "spectrum": cmd_spectrum,
    "branch": cmd_branch,
    "evolve": cmd_evolve,
    "faithfulness": cmd_faithfulness,
    "frequency-law": cmd_frequency_law,
    "randomness": cmd_randomness,
    "continuous-law": cmd_continuous_law,
    "nsa-demo": cmd_nsa_demo,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    parser.add_argument("--outdir", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--family", choices=("hermite", "grid"))
    parser.add_argument("--dim", type=int)
    parser.add_argument("--dims", type=lambda s: [int(x) for x in s.split(",")],
                        help="comma-separated dimension sweep")
    parser.add_argument("--scale", type=float)
    parser.add_argument("--extent", type=float)
    parser.add_argument("--hbar", type=float)
    parser.add_argument("--mass", type=float)
    parser.add_argument("--kinetic-prefactor", dest="kinetic_prefactor",
                        choices=("hbar-squared", "hbar-linear"))
    parser.add_argument("--observable",
                        choices=("position", "momentum", "kinetic", "hamiltonian"))
    parser.add_argument("--potential", type=lambda s: [float(x) for x in s.split(",")],
                        help="polynomial coefficients, lowest order first")
    parser.add_argument("--preset", dest="state", type=_parse_state_preset,
                        help="state preset, e.g. ho_eigenstate:0, coherent:1, gaussian:0:0.5")
    parser.add_argument("--alpha", type=float, help="spin amplitude for branch")
    parser.add_argument("--beta", type=float, help="spin amplitude for branch")
    parser.add_argument("--delta", type=float)
    parser.add_argument("--intervals", type=_parse_intervals,
                        help="semicolon-separated lo,hi pairs, e.g. '-1,1;-2,2'")
    parser.add_argument("--K", dest="repetitions", type=int)
    parser.add_argument("--K-sweep", dest="repetition_sweep",
                        type=lambda s: [int(x) for x in s.split(",")])
    parser.add_argument("--p", type=float)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--samples", dest="sample_count", type=int)
    parser.add_argument("--significance", type=float)
    parser.add_argument("--sequence-preset", dest="sequence_preset",
                        choices=("sampled", "all-zeros", "alternating"))
    parser.add_argument("--time-stop", dest="time_stop", type=float)
    parser.add_argument("--time-steps", dest="time_steps", type=int)


def _parse_state_preset(text: str) -> dict:
    parts = text.split(":")
    kind = parts[0]
    if kind == "ho_eigenstate":
        return {"kind": kind, "n": int(parts[1])}
    if kind == "coherent":
        return {"kind": kind, "z_re": float(parts[1]),
                "z_im": float(parts[2]) if len(parts) > 2 else 0.0}
    if kind == "gaussian":
        return {"kind": kind, "center": float(parts[1]), "width": float(parts[2])}
    raise argparse.ArgumentTypeError(f"unknown state preset {text!r}")


def _parse_intervals(text: str) -> list:
    out = []
    for chunk in text.split(";"):
        lo, hi = chunk.split(",")
        out.append([float(lo), float(hi)])
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperworlds",
        description="Truncated continuum quantum systems: spectra, branches, "
        "faithfulness sweeps, and limit-law experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        _add_common(cmd)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.load(args)
        paths = COMMANDS[args.command](config)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in paths:
        print(path)
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
