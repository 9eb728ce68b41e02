"""Command-line driver.

Subcommands: basis, spectrum, fit, prepare, evolve, pdf, replay.
Exit codes: 0 ok, 2 usage, 3 domain error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, DomainError, LFScatterError, NumericalError
from .fock import enumerate_basis, free_energy
from .hamiltonian import ModelParams, sector_hamiltonian
from .scatter import (
    CompositeSpec,
    fft_spectrum,
    pdf_table,
    prepare_composite,
    spectral_lines,
    transition_probability,
)
from .ucc import ClusterOperator, cached_cluster, fit_cluster_operator, sector_spectrum

EXIT_DOMAIN = 3
EXIT_NUMERICAL = 4


@dataclass
class RunConfig:
    """Everything needed to re-run one command bit for bit."""

    command: str
    model: ModelParams
    options: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"
    full_precision: bool = False

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "model": self.model.to_dict(),
            "options": self.options,
            "out": self.out,
            "format": self.format,
            "full_precision": self.full_precision,
        }

    @classmethod
    def from_json(cls, d: dict) -> RunConfig:
        return cls(
            command=d["command"],
            model=ModelParams.from_dict(d["model"]),
            options=dict(d.get("options", {})),
            out=d.get("out"),
            format=d.get("format", "csv"),
            full_precision=bool(d.get("full_precision", False)),
        )


class Writer:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.fmt = "{:.17g}" if cfg.full_precision else "{:.6g}"

    def num(self, x) -> str:
        return self.fmt.format(float(x))

    def csv_text(self, header, rows) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([self.num(x) if isinstance(x, (float, np.floating)) else x for x in row])
        return buf.getvalue()

    def emit(self, text: str, path: str | None = None) -> None:
        path = path if path is not None else self.cfg.out
        if path:
            Path(path).write_text(text)
        else:
            sys.stdout.write(text)

    def table(self, header, rows, payload, path: str | None = None) -> None:
        if self.cfg.format == "json":
            self.emit(json.dumps(payload, indent=2) + "\n", path)
        else:
            self.emit(self.csv_text(header, rows), path)


def _cplx(z) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _time_grid(opts) -> np.ndarray:
    samples = int(opts.get("samples", 8192))
    if samples < 2:
        raise DomainError("need at least two time samples")
    return np.linspace(0.0, float(opts.get("t_max", 200.0)), samples)


def _cluster_source(cfg: RunConfig):
    loaded: dict[int, ClusterOperator] = {}
    for path in cfg.options.get("cluster") or []:
        c = ClusterOperator.load(path)
        if c.params != cfg.model:
            raise DomainError(f"cluster file {path} was fitted with {c.params}, run uses {cfg.model}")
        loaded[c.K_max] = c
    return lambda K: loaded[K] if K in loaded else cached_cluster(cfg.model, K)


def cmd_basis(cfg: RunConfig, out: Writer) -> None:
    K, parity = int(cfg.options["k"]), cfg.options["parity"]
    basis = enumerate_basis(K, parity)
    rows = [(i, str(s), s.n_particles, free_energy(s, cfg.model.m)) for i, s in enumerate(basis)]
    payload = {"K": K, "parity": parity, "states": [{"index": i, "state": s, "n_particles": n, "free_energy": e} for i, s, n, e in rows]}
    out.table(["index", "state", "n_particles", "free_energy"], rows, payload)


def cmd_spectrum(cfg: RunConfig, out: Writer) -> None:
    K, parity = int(cfg.options["k"]), cfg.options["parity"]
    dec = sector_spectrum(cfg.model, K, parity)
    labels = [str(s) for s in dec.basis]
    W = dec.modal.entries
    complex_out = bool(np.any(np.abs(W.imag) > 0))
    header = ["index", "eigenvalue"] + labels + ([f"im:{s}" for s in labels] if complex_out else [])
    rows = []
    for n, e in enumerate(dec.eigenvalues):
        row = [n, float(e)] + [float(x) for x in W[:, n].real]
        if complex_out:
            row += [float(x) for x in W[:, n].imag]
        rows.append(row)
    payload = {
        "K": K,
        "parity": parity,
        "model": cfg.model.to_dict(),
        "states": labels,
        "eigenvalues": [float(e) for e in dec.eigenvalues],
        "modal": [[_cplx(x) for x in W[i]] for i in range(len(labels))],
    }
    out.table(header, rows, payload)


def cmd_fit(cfg: RunConfig, out: Writer) -> None:
    # always JSON: the output is meant to be reloaded with --cluster
    c = fit_cluster_operator(cfg.model, int(cfg.options["kmax"]))
    out.emit(json.dumps(c.to_json(), indent=2, sort_keys=True) + "\n")


def cmd_prepare(cfg: RunConfig, out: Writer) -> None:
    spec = CompositeSpec.parse(cfg.options["spec"])
    v = prepare_composite(spec, cfg.model, _cluster_source(cfg))
    rows = [(str(s), float(a.real), float(a.imag)) for s, a in zip(v.basis, v.amplitudes)]
    payload = {
        "spec": str(spec),
        "K": v.basis.K,
        "parity": v.basis.parity,
        "amplitudes": [{"state": s, "re": re, "im": im} for s, re, im in rows],
    }
    out.table(["state", "re", "im"], rows, payload)


def cmd_evolve(cfg: RunConfig, out: Writer) -> None:
    opts = cfg.options
    src = _cluster_source(cfg)
    vi = prepare_composite(CompositeSpec.parse(opts["initial"]), cfg.model, src)
    vf = prepare_composite(CompositeSpec.parse(opts["final"]), cfg.model, src)
    if (vi.basis.K, vi.basis.parity) != (vf.basis.K, vf.basis.parity):
        raise DomainError(f"initial state lives in {vi.basis.label}, final state in {vf.basis.label}")
    H = sector_hamiltonian(cfg.model, vi.basis.K, vi.basis.parity)
    times = _time_grid(opts)
    series = transition_probability(vi, vf, H, times)
    out.table(
        ["t", "probability"],
        zip(map(float, times), map(float, series)),
        {"t": times.tolist(), "probability": series.tolist()},
    )
    if opts.get("fft"):
        omega, mags = fft_spectrum(series, times[1] - times[0])
        out.table(["omega", "magnitude"], zip(map(float, omega), map(float, mags)), {"omega": omega.tolist(), "magnitude": mags.tolist()}, opts["fft"])
    if opts.get("lines"):
        lines = spectral_lines(vi, vf, H)
        rows = [(float(ln.frequency), float(ln.weight.real), float(ln.weight.imag)) for ln in lines]
        out.table(
            ["frequency", "re_weight", "im_weight"],
            rows,
            [{"frequency": f, "re_weight": re, "im_weight": im} for f, re, im in rows],
            opts["lines"],
        )


def cmd_pdf(cfg: RunConfig, out: Writer) -> None:
    v = prepare_composite(CompositeSpec.parse(cfg.options["spec"]), cfg.model, _cluster_source(cfg))
    H = sector_hamiltonian(cfg.model, v.basis.K, v.basis.parity)
    times = _time_grid(cfg.options)
    table = pdf_table(v, H, times)
    K = v.basis.K
    rows = [(float(t), n, float(table[i, n - 1])) for i, t in enumerate(times) for n in range(1, K + 1)]
    payload = {"K": K, "t": times.tolist(), "modes": list(range(1, K + 1)), "pdf": table.tolist()}
    out.table(["t", "n", "value"], rows, payload)


COMMANDS = {
    "basis": cmd_basis,
    "spectrum": cmd_spectrum,
    "fit": cmd_fit,
    "prepare": cmd_prepare,
    "evolve": cmd_evolve,
    "pdf": cmd_pdf,
}

_GLOBAL_KEYS = {"m", "lambda", "cutoff", "config", "out", "format", "full_precision", "save_config", "command", "config_path"}


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    # subcommand copies must not overwrite values given before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = p.add_argument_group("model and output")
    g.add_argument("--m", type=float, default=d(None), help="bare mass (default 1)")
    g.add_argument("--lambda", dest="lambda", type=float, default=d(None), help="coupling (default 30)")
    g.add_argument("--cutoff", type=int, default=d(None), help="largest momentum mode in operators (default 12)")
    g.add_argument("--config", default=d(None), help="flat key = value file with m, lambda, cutoff")
    g.add_argument("--out", default=d(None), help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    g.add_argument("--full-precision", action="store_true", default=d(False), help="17 significant digits in CSV")
    g.add_argument("--save-config", default=d(None), help="write the resolved run configuration as JSON")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)

    parser = argparse.ArgumentParser(prog="lfscatter", description="DLCQ phi^4 composite-particle scattering simulator")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def sector(p):
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--parity", choices=("even", "odd"), required=True)

    def grid(p):
        p.add_argument("--t-max", dest="t_max", type=float, default=200.0)
        p.add_argument("--samples", type=int, default=8192)

    def clusters(p):
        p.add_argument("--cluster", action="append", help="fitted cluster JSON to reuse (repeatable)")

    sector(sub.add_parser("basis", parents=[common], help="list a sector's Fock basis"))
    sector(sub.add_parser("spectrum", parents=[common], help="eigenvalues and modal matrix"))
    p = sub.add_parser("fit", parents=[common], help="fit the cluster operator")
    p.add_argument("--kmax", type=int, required=True)
    p = sub.add_parser("prepare", parents=[common], help="amplitudes of a composite state")
    p.add_argument("--spec", required=True, help='e.g. "A:[3,0]^2" or "P:[2,0],[4,0]"')
    clusters(p)
    p = sub.add_parser("evolve", parents=[common], help="transition probability series")
    p.add_argument("--initial", required=True)
    p.add_argument("--final", required=True)
    p.add_argument("--fft", help="also write the Fourier magnitude spectrum to this path")
    p.add_argument("--lines", help="also write the exact spectral lines to this path")
    grid(p)
    clusters(p)
    p = sub.add_parser("pdf", parents=[common], help="time-dependent parton distribution")
    p.add_argument("--spec", required=True)
    grid(p)
    clusters(p)
    p = sub.add_parser("replay", help="re-run a saved configuration")
    p.add_argument("config_path")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    ns = vars(args)
    model = ModelParams()
    if ns.get("config"):
        model = ModelParams.from_file(ns["config"])
    overrides = {k: ns[k] for k in ("m", "lambda", "cutoff") if ns.get(k) is not None}
    if overrides:
        model = ModelParams.from_dict(model.to_dict() | overrides)
    options = {k: v for k, v in ns.items() if k not in _GLOBAL_KEYS}
    return RunConfig(ns["command"], model, options, ns.get("out"), ns["format"], ns["full_precision"])


def run(cfg: RunConfig) -> None:
    if cfg.command not in COMMANDS:
        raise DomainError(f"unknown command {cfg.command!r}")
    COMMANDS[cfg.command](cfg, Writer(cfg))


def _fail(exc: Exception, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            cfg = RunConfig.from_json(json.loads(Path(args.config_path).read_text()))
        else:
            cfg = resolve_config(args)
            if args.save_config:
                Path(args.save_config).write_text(json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n")
        run(cfg)
    except (DomainError, FileNotFoundError, KeyError) as exc:
        return _fail(exc, EXIT_DOMAIN)
    except (NumericalError, ConsistencyError) as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except LFScatterError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    return 0


if __name__ == "__main__":
    sys.exit(main())
