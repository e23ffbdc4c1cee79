"""Command-line front end: config parsing, dispatch, and tabular emission.

Configs are plain ``key = value`` text with ``#`` comments.  Every
subcommand produces a ResultTable that serializes deterministically to CSV
(17 significant digits, metadata as leading ``#`` lines) or JSON; identical
configs yield byte-identical output.  Exit codes: 1 config error, 2
numerical precondition, 3 convergence failure.  The CSOP_THREADS
environment variable caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .antilinear import antilinear_spectrum, takagi
from .decay import BoundInputs, bound_constant, certify_bound, critical_q, qbar_and_ebar
from .errors import (
    ConfigError,
    ConvergenceError,
    MissingRequiredError,
    PreconditionError,
    TypeMismatchError,
    UnknownKeyError,
)
from .kronig_penney import FIG1_COLUMNS, fig1_sweep
from .scaling import (
    DilationPotential,
    build_scaled,
    fit_relative_bound,
    locate_resonance,
    perturbation_scan,
    sigma_min,
)
from .schrodinger import (
    THETA_GAP_DEFAULT,
    GapSpectrum,
    Grid1D,
    PotentialSpec,
    build_hamiltonian,
    find_gap,
    resolvent_kernel_scan,
)

SUBCOMMANDS = (
    "takagi",
    "antilinear",
    "decay-bound",
    "kernel-scan",
    "kp-fig1",
    "resonance",
    "resolvent-map",
)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CSOP_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items):
    n = _threads()
    items = list(items)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class Param:
    type: type
    default: object = None
    required: bool = False
    check: object = None        # (value) -> None or error message string
    help: str = ""


def _positive(name):
    return lambda v: None if v > 0 else f"{name} must be > 0"


def _nonnegative(name):
    return lambda v: None if v >= 0 else f"{name} must be >= 0"


_COMMON = {
    "format": Param(str, "csv", check=lambda v: None if v in ("csv", "json") else "format must be csv or json"),
    "seed": Param(int, 0),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "takagi": {
        **_COMMON,
        "matrix": Param(str, required=True, help="CSV file of interleaved re,im pairs"),
    },
    "antilinear": {
        **_COMMON,
        "matrix": Param(str, required=True),
        "z_re": Param(float, 0.0),
        "z_im": Param(float, 0.0),
    },
    "decay-bound": {
        **_COMMON,
        "e_minus": Param(float, required=True, check=_positive("e_minus")),
        "e_plus": Param(float, required=True, check=_positive("e_plus")),
        "e_bottom": Param(float, 0.0, check=_nonnegative("e_bottom")),
        "n_energies": Param(int, 101, check=_positive("n_energies")),
        "eps": Param(float, 0.5, check=_positive("eps")),
        "dim": Param(int, 1, check=_positive("dim")),
        "q": Param(float, None, check=_nonnegative("q"), help="absolute rate for C evaluation"),
        "q_frac": Param(float, None, check=_positive("q_frac")),
    },
    "kernel-scan": {
        **_COMMON,
        "v0": Param(float, 3.0, check=_positive("v0")),
        "length": Param(float, 40.0, check=_positive("length")),
        "n": Param(int, 2000, check=lambda v: None if v >= 3 else "n must be >= 3"),
        "potential": Param(str, None, help="optional CSV (x, v) replacing the comb"),
        "energy": Param(float, None, help="probe energy; defaults to Ebar of the grid gap"),
        "eps": Param(float, 0.5, check=_positive("eps")),
        "q_frac": Param(float, 0.9, check=_positive("q_frac")),
        "sep_min": Param(float, 8.0, check=_positive("sep_min")),
        "sep_max": Param(float, 24.0, check=_positive("sep_max")),
        "sep_step": Param(float, 2.0, check=_positive("sep_step")),
        "energy_ceiling": Param(float, 35.0),
    },
    "kp-fig1": {
        **_COMMON,
        "v0_min": Param(float, 0.5, check=_positive("v0_min")),
        "v0_max": Param(float, 40.0, check=_positive("v0_max")),
        "n_points": Param(int, 20, check=_positive("n_points")),
    },
    "resonance": {
        **_COMMON,
        "alpha": Param(float, 7.5),
        "length": Param(float, 40.0, check=_positive("length")),
        "n": Param(int, 800, check=lambda v: None if v >= 3 else "n must be >= 3"),
        "theta_im": Param(float, 0.3, check=_positive("theta_im")),
        "dtheta_im": Param(float, 0.02, check=_positive("dtheta_im")),
        "gamma_values": Param(list, (0.0,)),
        "probe_offset_re": Param(float, 0.05),
        "probe_offset_im": Param(float, 0.05),
        "window_re_max": Param(float, 6.0),
        "window_im_min": Param(float, -0.5),
    },
    "resolvent-map": {
        **_COMMON,
        "alpha": Param(float, 7.5),
        "length": Param(float, 40.0, check=_positive("length")),
        "n": Param(int, 800, check=lambda v: None if v >= 3 else "n must be >= 3"),
        "theta_im": Param(float, 0.3, check=_positive("theta_im")),
        "re_min": Param(float, 3.5),
        "re_max": Param(float, 4.6),
        "im_min": Param(float, -0.5),
        "im_max": Param(float, -0.01),
        "n_re": Param(int, 12, check=_positive("n_re")),
        "n_im": Param(int, 12, check=_positive("n_im")),
    },
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    format: str = "csv"


@dataclass
class ResultTable:
    columns: list[str]
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, ResultTable):
            return NotImplemented
        return (
            self.columns == other.columns
            and self.metadata == other.metadata
            and self.rows.shape == other.rows.shape
            and bool(np.array_equal(self.rows, other.rows))
        )


def _coerce(key: str, raw: str, param: Param, lineno: int):
    try:
        if param.type is int:
            return int(raw)
        if param.type is float:
            return float(raw)
        if param.type is list:
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise TypeMismatchError(
            f"line {lineno}: value {raw!r} for key {key!r} is not a valid {param.type.__name__}"
        ) from None


def parse_config(text: str, subcommand: str) -> RunConfig:
    """Parse ``key = value`` config text against the subcommand schema.

    Unknown keys, type mismatches and missing required keys raise with the
    offending line number; numeric values are checked against the target
    module's preconditions before any heavy computation.
    """
    if subcommand not in SCHEMAS:
        raise UnknownKeyError(f"unknown subcommand {subcommand!r}")
    schema = SCHEMAS[subcommand]
    params = {k: p.default for k, p in schema.items()}

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise TypeMismatchError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in schema:
            raise UnknownKeyError(f"line {lineno}: unknown key {key!r} for {subcommand}")
        value = _coerce(key, raw, schema[key], lineno)
        check = schema[key].check
        if check is not None and value is not None:
            msg = check(value)
            if msg:
                raise PreconditionError(f"line {lineno}: {msg}")
        params[key] = value

    for key, p in schema.items():
        if p.required and params.get(key) is None:
            raise MissingRequiredError(f"missing required key {key!r} for {subcommand}")

    fmt = params.pop("format")
    return RunConfig(subcommand=subcommand, params=params, format=fmt)


def load_matrix_csv(path: str) -> np.ndarray:
    """Read a complex matrix stored as interleaved real,imag column pairs."""
    raw = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    if raw.shape[1] % 2 != 0:
        raise TypeMismatchError(f"{path}: expected an even number of columns (re,im pairs)")
    return raw[:, 0::2] + 1j * raw[:, 1::2]


def save_matrix_csv(path: str, matrix: np.ndarray):
    mat = np.asarray(matrix, dtype=complex)
    out = np.empty((mat.shape[0], 2 * mat.shape[1]))
    out[:, 0::2] = mat.real
    out[:, 1::2] = mat.imag
    np.savetxt(path, out, delimiter=",", fmt="%.17g")


def _base_metadata(cfg: RunConfig) -> dict:
    meta = {
        "subcommand": cfg.subcommand,
        "csop_version": __version__,
        "seed": cfg.params.get("seed", 0),
    }
    for key, val in sorted(cfg.params.items()):
        if key == "seed" or val is None:
            continue
        meta[key] = list(val) if isinstance(val, tuple) else val
    return meta


def _vector_columns(prefix: str, n: int) -> list[str]:
    cols = []
    for i in range(n):
        cols += [f"{prefix}{i}_re", f"{prefix}{i}_im"]
    return cols


def _run_takagi(cfg: RunConfig) -> ResultTable:
    mat = load_matrix_csv(cfg.params["matrix"])
    fac = takagi(mat)
    n = fac.sigma.size
    rows = np.empty((n, 2 + 2 * n))
    for k in range(n):
        rows[k, 0] = k
        rows[k, 1] = fac.sigma[k]
        rows[k, 2::2] = fac.u[:, k].real
        rows[k, 3::2] = fac.u[:, k].imag
    recon = fac.u @ np.diag(fac.sigma) @ fac.u.T
    meta = _base_metadata(cfg)
    meta["n"] = n
    meta["reconstruction_residual"] = float(np.linalg.norm(recon - 0.5 * (mat + mat.T)))
    return ResultTable(columns=["index", "sigma"] + _vector_columns("u", n), rows=rows, metadata=meta)


def _run_antilinear(cfg: RunConfig) -> ResultTable:
    mat = load_matrix_csv(cfg.params["matrix"])
    z = complex(cfg.params["z_re"], cfg.params["z_im"])
    spec = antilinear_spectrum(mat, None, z)
    n = spec.lambdas.size
    rows = np.empty((n, 2 + 2 * n))
    for k in range(n):
        rows[k, 0] = k
        rows[k, 1] = spec.lambdas[k]
        rows[k, 2::2] = spec.vectors[:, k].real
        rows[k, 3::2] = spec.vectors[:, k].imag
    meta = _base_metadata(cfg)
    meta["n"] = n
    meta["matrix_norm"] = spec.matrix_norm
    return ResultTable(columns=["index", "lambda"] + _vector_columns("u", n), rows=rows, metadata=meta)


def _run_decay_bound(cfg: RunConfig) -> ResultTable:
    p = cfg.params
    gap = GapSpectrum(e_minus=p["e_minus"], e_plus=p["e_plus"], e_bottom=p["e_bottom"])
    qbar, ebar, in_gap = qbar_and_ebar(gap)
    margin = 1e-9 * gap.gap
    energies = np.linspace(gap.e_minus + margin, gap.e_plus - margin, p["n_energies"])
    with_c = p["q"] is not None or p["q_frac"] is not None

    def row(energy):
        qc = critical_q(gap, energy)
        if not with_c:
            return (energy, qc)
        q = p["q"] if p["q"] is not None else p["q_frac"] * qc
        c = np.nan
        if q < qc and energy + q * q < gap.e_plus:
            c = bound_constant(
                BoundInputs(gap=gap, energy=energy, q=q, eps=p["eps"], dim=p["dim"])
            ).c_value
        return (energy, qc, q, c)

    rows = np.asarray(_parallel_map(row, energies))
    meta = _base_metadata(cfg)
    meta.update(qbar=qbar, ebar=ebar, ebar_in_gap=in_gap)
    cols = ["E", "q_c"] + (["q", "C"] if with_c else [])
    return ResultTable(columns=cols, rows=rows, metadata=meta)


def _kp_hamiltonian(p):
    grid = Grid1D(length=p["length"], n=p["n"])
    if p.get("potential"):
        data = np.atleast_2d(np.loadtxt(p["potential"], delimiter=",", dtype=float))
        values = np.interp(grid.points, data[:, 0], data[:, 1])
        pot = PotentialSpec.sampled(values)
    else:
        positions = np.arange(1.0, p["length"], 1.0)
        pot = PotentialSpec.delta_comb(positions, p["v0"])
    return grid, build_hamiltonian(grid, pot)


def _run_kernel_scan(cfg: RunConfig) -> ResultTable:
    p = cfg.params
    grid, ham = _kp_hamiltonian(p)
    gap = find_gap(ham, energy_ceiling=p["energy_ceiling"])
    qbar, ebar, _ = qbar_and_ebar(gap)
    energy = p["energy"] if p["energy"] is not None else ebar
    qc = critical_q(gap, energy)
    q = p["q_frac"] * qc
    seps = np.arange(p["sep_min"], p["sep_max"] + 0.5 * p["sep_step"], p["sep_step"])
    samples = resolvent_kernel_scan(ham, energy, seps, p["eps"])
    inputs = BoundInputs(gap=gap, energy=energy, q=q, eps=p["eps"], dim=1)
    report = certify_bound(samples, inputs)
    envelope = report.c_value * np.exp(-q * samples[:, 0])
    rows = np.column_stack([samples, envelope, report.margins])
    meta = _base_metadata(cfg)
    meta.update(
        e_minus=gap.e_minus, e_plus=gap.e_plus, e_bottom=gap.e_bottom,
        energy=energy, q=q, q_c=qc, C=report.c_value,
        certificate_passed=report.passed, worst_margin=report.worst_margin,
        h=grid.h, theta_gap=THETA_GAP_DEFAULT,
    )
    return ResultTable(
        columns=["separation", "kernel_abs", "envelope", "margin"], rows=rows, metadata=meta
    )


def _run_kp_fig1(cfg: RunConfig) -> ResultTable:
    p = cfg.params
    v0s = np.geomspace(p["v0_min"], p["v0_max"], p["n_points"])
    rows_list = _parallel_map(lambda v0: fig1_sweep([v0])[0].as_tuple(), v0s)
    rows = np.asarray(rows_list)
    meta = _base_metadata(cfg)
    meta["max_rel_diff"] = float(np.max(rows[:, 6]))
    return ResultTable(columns=list(FIG1_COLUMNS), rows=rows, metadata=meta)


def _run_resonance(cfg: RunConfig) -> ResultTable:
    p = cfg.params
    grid = Grid1D(length=p["length"], n=p["n"])
    pot = DilationPotential.alpha_r2_exp(p["alpha"], perturbation_alpha=p["alpha"])
    theta = 1j * p["theta_im"]
    window = (0.0, p["window_re_max"], p["window_im_min"], 0.0)
    base = locate_resonance(pot, grid, theta, 0.0, dtheta=1j * p["dtheta_im"], window=window)
    z_probe = base.z + complex(p["probe_offset_re"], p["probe_offset_im"])
    scan = perturbation_scan(
        pot, grid, theta, p["gamma_values"], z_probe, dtheta=1j * p["dtheta_im"], window=window
    )
    rows = np.column_stack([scan.gammas, scan.z_res.real, scan.z_res.imag, scan.norms, scan.bound_estimates])
    fitted = fit_relative_bound(pot, grid, theta)
    meta = _base_metadata(cfg)
    meta.update(
        z_probe_re=z_probe.real, z_probe_im=z_probe.imag,
        rel_bound_a=scan.rel_bound.a, rel_bound_b=scan.rel_bound.b,
        rel_bound_fitted_a=fitted.a, rel_bound_fitted_b=fitted.b,
    )
    return ResultTable(
        columns=["gamma", "z_res_re", "z_res_im", "resolvent_norm", "bound_estimate"],
        rows=rows,
        metadata=meta,
    )


def _run_resolvent_map(cfg: RunConfig) -> ResultTable:
    p = cfg.params
    grid = Grid1D(length=p["length"], n=p["n"])
    pot = DilationPotential.alpha_r2_exp(p["alpha"])
    ham = build_scaled(pot, grid, 1j * p["theta_im"])
    res = np.linspace(p["re_min"], p["re_max"], p["n_re"])
    ims = np.linspace(p["im_min"], p["im_max"], p["n_im"])
    points = [(re, im) for re in res for im in ims]
    norms = _parallel_map(lambda pt: 1.0 / sigma_min(ham, complex(*pt)), points)
    rows = np.asarray([(re, im, nv) for (re, im), nv in zip(points, norms)])
    meta = _base_metadata(cfg)
    return ResultTable(columns=["re_z", "im_z", "norm"], rows=rows, metadata=meta)


_RUNNERS = {
    "takagi": _run_takagi,
    "antilinear": _run_antilinear,
    "decay-bound": _run_decay_bound,
    "kernel-scan": _run_kernel_scan,
    "kp-fig1": _run_kp_fig1,
    "resonance": _run_resonance,
    "resolvent-map": _run_resolvent_map,
}


def run(subcommand: str, cfg: RunConfig) -> ResultTable:
    """Dispatch a parsed config to the owning module."""
    if subcommand not in _RUNNERS:
        raise UnknownKeyError(f"unknown subcommand {subcommand!r}")
    return _RUNNERS[subcommand](cfg)


def _fmt(x) -> str:
    return f"{float(x) + 0.0:.17g}"


def emit(table: ResultTable, fmt: str = "csv") -> bytes:
    """Serialize a ResultTable; identical tables give identical bytes."""
    if fmt == "csv":
        lines = []
        for key in sorted(table.metadata):
            lines.append(f"# {key} = {table.metadata[key]}")
        lines.append(",".join(table.columns))
        rows = np.atleast_2d(table.rows) if table.rows.size else np.empty((0, len(table.columns)))
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json":
        rows = np.atleast_2d(table.rows) if table.rows.size else np.empty((0, len(table.columns)))
        payload = {
            "metadata": table.metadata,
            "columns": table.columns,
            "rows": [[float(x) for x in row] for row in rows],
        }
        return (json.dumps(payload, sort_keys=True, separators=(",", ": "), indent=1) + "\n").encode()
    raise TypeMismatchError(f"unknown output format {fmt!r}")


def parse_result_table(data: bytes) -> ResultTable:
    """Inverse of the JSON emission path."""
    payload = json.loads(data.decode())
    return ResultTable(
        columns=list(payload["columns"]),
        rows=np.asarray(payload["rows"], dtype=float).reshape(len(payload["rows"]), len(payload["columns"])) if payload["rows"] else np.empty((0, len(payload["columns"]))),
        metadata=payload["metadata"],
    )


USAGE = (
    "usage: csop SUBCOMMAND [--config FILE] [--output FILE] [--format csv|json]\n"
    "subcommands: " + ", ".join(SUBCOMMANDS) + "\n"
)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stderr.write(USAGE)
        return 0 if argv else 1
    subcommand = argv[0]
    if subcommand not in SUBCOMMANDS:
        sys.stderr.write(f"error: unknown subcommand {subcommand!r}\n{USAGE}")
        return 1

    parser = argparse.ArgumentParser(prog=f"csop {subcommand}", add_help=False)
    parser.add_argument("--config", default=None)
    parser.add_argument("--output", default=None)
    parser.add_argument("--format", default=None, choices=("csv", "json"))
    try:
        args = parser.parse_args(argv[1:])
    except SystemExit:
        sys.stderr.write(USAGE)
        return 1

    try:
        text = ""
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text, subcommand)
        if args.format:
            cfg.format = args.format
        table = run(subcommand, cfg)
        blob = emit(table, cfg.format)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except PreconditionError as exc:
        sys.stderr.write(f"precondition error: {exc}\n")
        return 2
    except ConvergenceError as exc:
        sys.stderr.write(f"convergence error: {exc}\n")
        return 3
    except OSError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1

    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.buffer.write(blob)
    return 0


if __name__ == "__main__":
    sys.exit(main())
