"""
Command line front end.

    holostab stability COMPLEX_FILE --out-dir results/
    holostab bench --n-list 16,22,28 --nu-list 0.35,0.5 --repeats 3
    holostab ingest --net Anaheim_net.tntp --trips Anaheim_trips.tntp --out anaheim.json
    holostab inspect COMPLEX_FILE --json summary.json

Exit codes: 0 success, 1 input error, 2 not converged, 3 solver failure.
"""

import json
import logging
import sys
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import pydantic

from holostab import __version__
from holostab._exceptions import (
    ComplexError,
    DownloadError,
    HolostabError,
    IngestError,
    NotConverged,
    WeightError,
)
from holostab._fetch import fetch_tntp
from holostab._formaters.report_formatter import ReportFormatter
from holostab._records.results import RunManifest
from holostab._settings import Settings
from holostab._utils.files import atomic_write_text
from holostab._utils.types import Precond, SolverMode
from holostab._validators.configs import BenchSpec, FlowConfig, SolverConfig
from holostab.bench import run_benchmark
from holostab.complex import betti_numbers, load_complex, save_complex, up_kernel_dim
from holostab.flow import run_stability
from holostab.laplacians import assemble, eigenvector_transport_residual, inheritance_residual
from holostab.spectral import smallest_nonzero_eig
from holostab.transport import calibrate_quantile, lift_to_zones, parse_tntp
from holostab.weights import WeightProfile, perturb

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_SOLVER = 3

INPUT_ERRORS = (
    json.JSONDecodeError,
    pydantic.ValidationError,
    ComplexError,
    WeightError,
    IngestError,
    DownloadError,
    OSError,
    ValueError,
)


@contextmanager
def _input_errors():
    """Report invalid inputs on stderr and exit with the input-error code."""
    try:
        yield
    except INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)


def _require_file(path: Path) -> None:
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")


def _write_manifest(directory: Path, command, inputs, config, seed, started, started_at):
    manifest = RunManifest(
        command=command,
        inputs=inputs,
        config=config,
        seed=seed,
        version=__version__,
        wall_clock=time.perf_counter() - started,
        started_at=started_at,
    )
    atomic_write_text(directory / "manifest.json", ReportFormatter.format_json(manifest))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _float_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


@click.group()
@click.version_option(__version__, prog_name="holostab")
@click.option("--log-level", default=None, help="Logging level (default: HOLOSTAB_LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """Topological stability of weighted simplicial complexes."""
    try:
        Settings(log_level=log_level).configure_logging()
    except RuntimeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)


# pylint: disable=too-many-arguments,too-many-locals
@cli.command()
@click.argument("complex_file", type=click.Path(path_type=Path))
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("out"))
@click.option("--eps0", type=float, default=None)
@click.option("--delta-eps", type=float, default=None)
@click.option("--alpha-lo", type=float, default=None)
@click.option("--alpha-hi", type=float, default=None)
@click.option("--h0", type=float, default=None)
@click.option("--beta-step", type=float, default=None)
@click.option("--f-tol", type=float, default=None)
@click.option("--max-outer", type=int, default=None)
@click.option("--max-inner", type=int, default=None)
@click.option("--mu-factor", type=float, default=None)
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option(
    "--solver",
    "mode",
    type=click.Choice([m.value for m in SolverMode]),
    default=SolverMode.AUTO.value,
    show_default=True,
)
@click.option(
    "--precond",
    type=click.Choice([p.value for p in Precond]),
    default=Precond.NONE.value,
    show_default=True,
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--export-matrices",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Write the unperturbed normalized operators as MatrixMarket files.",
)
def stability(complex_file, out_dir, rho, mode, precond, seed, export_matrices, **flow_options):
    """Run the gradient flow on COMPLEX_FILE and write result.json and trajectory.csv."""
    started, started_at = time.perf_counter(), _now()
    with _input_errors():
        _require_file(complex_file)
        c, w1, w2 = load_complex(complex_file)
        overrides = {key: value for key, value in flow_options.items() if value is not None}
        flow_cfg = FlowConfig(**overrides)
        solver_cfg = SolverConfig(mode=mode, precond=precond, seed=seed)
        profile = WeightProfile(c, w1, w2, rho)

    out_dir.mkdir(parents=True, exist_ok=True)
    if export_matrices is not None:
        assemble(c, perturb(profile, 0.0, np.zeros(c.m))).export_matrix_market(export_matrices)

    code = EXIT_OK
    try:
        result = run_stability(c, profile, flow_cfg, solver_cfg)
    except NotConverged as exc:
        click.echo(f"not converged: {exc.reason}", err=True)
        result, code = exc.result, EXIT_NOT_CONVERGED
    except HolostabError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(EXIT_SOLVER)

    atomic_write_text(out_dir / "result.json", ReportFormatter.format_json(result.summary()))
    atomic_write_text(
        out_dir / "trajectory.csv", ReportFormatter.format_trajectory(result.trajectory)
    )
    _write_manifest(
        out_dir,
        "stability",
        {"complex": complex_file},
        {
            "flow": flow_cfg.model_dump(mode="json"),
            "solver": solver_cfg.model_dump(mode="json"),
            "rho": rho,
        },
        seed,
        started,
        started_at,
    )

    if result.converged:
        click.echo(
            f"eps*={result.eps_star:.6g} eliminated={result.eliminated_edges} "
            f"beta1 {result.betti_before} -> {result.betti_after}"
        )
    sys.exit(code)


@cli.command()
@click.option("--n-list", default="16,22,28,34,40", show_default=True)
@click.option("--nu-list", default="0.35,0.5", show_default=True)
@click.option("--repeats", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--solver",
    "mode",
    type=click.Choice([m.value for m in SolverMode]),
    default=SolverMode.AUTO.value,
    show_default=True,
    help="iterative forces the LSMR path whatever the instance size.",
)
@click.option(
    "--precond",
    type=click.Choice([p.value for p in Precond]),
    default=Precond.NONE.value,
    show_default=True,
)
@click.option("--threads", type=int, default=None, help="Worker processes (HOLOSTAB_THREADS).")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("bench"))
def bench(n_list, nu_list, repeats, seed, mode, precond, threads, out_dir):
    """Generate and solve the triangulation benchmark."""
    started, started_at = time.perf_counter(), _now()
    with _input_errors():
        specs = [
            BenchSpec(N=int(N), nu=nu, seed=seed, repeats=repeats, precond=precond)
            for N in _float_list(n_list)
            for nu in _float_list(nu_list)
        ]
        if threads is not None and threads < 1:
            raise ValueError("--threads must be positive")

    solver_cfg = SolverConfig(mode=mode, seed=seed)
    report = run_benchmark(specs, FlowConfig(), solver_cfg, threads)

    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "bench_report.csv", ReportFormatter.format_bench(report.records))
    atomic_write_text(out_dir / "bench_summary.json", ReportFormatter.format_json(report.summary()))
    for row, document in zip(report.records, report.complexes):
        if document is not None:
            name = f"N{row.N}_nu{row.nu:g}_r{row.repeat}.json"
            atomic_write_text(out_dir / "instances" / name, ReportFormatter.format_json(document))
    _write_manifest(
        out_dir,
        "bench",
        {},
        {
            "specs": [spec.model_dump(mode="json") for spec in specs],
            "solver": solver_cfg.model_dump(mode="json"),
        },
        seed,
        started,
        started_at,
    )
    click.echo(f"{len(report.records)} instances, slope {report.runtime_slope():.3g}")
    sys.exit(EXIT_OK)


@cli.command()
@click.option("--net", type=click.Path(path_type=Path), default=None)
@click.option("--trips", type=click.Path(path_type=Path), default=None)
@click.option("--fetch", "fetch_name", default=None, help="Download a public network by name.")
@click.option("--quantile", type=float, default=0.9, show_default=True)
@click.option("--sweep", is_flag=True, help="Pick the quantile matching --target-m/-triangles.")
@click.option("--target-m", type=int, default=None)
@click.option("--target-triangles", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def ingest(net, trips, fetch_name, quantile, sweep, target_m, target_triangles, threads, out):
    """Lift a TNTP road network to a weighted zone complex."""
    started, started_at = time.perf_counter(), _now()
    with _input_errors():
        if fetch_name is not None:
            files = fetch_tntp(fetch_name, Settings().data_dir / fetch_name)
            net, trips = files["net"], files["trips"]
        if net is None or trips is None:
            raise ValueError("--net and --trips (or --fetch) are required")
        _require_file(net)
        _require_file(trips)
        if sweep and (target_m is None or target_triangles is None):
            raise ValueError("--sweep needs --target-m and --target-triangles")

        rn = parse_tntp(net, trips)
        if sweep:
            quantile, zc = calibrate_quantile(rn, target_m, target_triangles, threads=threads)
        else:
            zc = lift_to_zones(rn, quantile, threads)

    save_complex(out, zc.complex, zc.profile.w1)
    atomic_write_text(
        out.with_name(f"{out.stem}.provenance.json"), ReportFormatter.format_json(zc.provenance())
    )
    _write_manifest(
        out.parent,
        "ingest",
        {"net": net, "trips": trips},
        {"quantile": quantile, "sweep": sweep},
        None,
        started,
        started_at,
    )
    click.echo(
        f"n={zc.complex.n} m={zc.complex.m} triangles={zc.complex.n_triangles} "
        f"quantile={quantile:g}"
    )
    sys.exit(EXIT_OK)


def summarize(complex_file: Path, rho: float = 1.0) -> dict:
    """Sizes, Betti numbers and first nonzero eigenvalues (0 if none) of a complex file."""
    c, w1, w2 = load_complex(complex_file)
    beta0, beta1 = betti_numbers(c)
    summary = {
        "n": c.n,
        "m": c.m,
        "triangles": c.n_triangles,
        "beta0": beta0,
        "beta1": beta1,
        "mu2": 0.0,
        "lambda_plus": 0.0,
        "inheritance_residual": 0.0,
        "eigenvector_transport_residual": 0.0,
    }
    if c.m == 0:
        return summary
    b = assemble(c, perturb(WeightProfile(c, w1, w2, rho), 0.0, np.zeros(c.m)))
    if beta0 < c.n:
        summary["mu2"] = smallest_nonzero_eig(b.L0, beta0).value
    kernel = up_kernel_dim(c)
    if kernel < c.m:
        summary["lambda_plus"] = smallest_nonzero_eig(b.L1_up, kernel).value
    summary["inheritance_residual"] = inheritance_residual(b)
    summary["eigenvector_transport_residual"] = eigenvector_transport_residual(b)
    return summary


@cli.command()
@click.argument("complex_file", type=click.Path(path_type=Path))
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--json", "json_out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def inspect(complex_file, rho, json_out):
    """Print sizes, Betti numbers and spectral quantities of COMPLEX_FILE."""
    with _input_errors():
        _require_file(complex_file)
        summary = summarize(complex_file, rho)

    for key, value in summary.items():
        click.echo(f"{key}: {ReportFormatter.format_value(value) or '-'}")
    if json_out is not None:
        atomic_write_text(json_out, ReportFormatter.format_json(summary))
    sys.exit(EXIT_OK)


def main():
    cli(prog_name="holostab")  # pylint: disable=no-value-for-parameter


if __name__ == "__main__":
    main()
