import json
import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import typer
from pydantic import BaseModel, ValidationError, model_validator
from rich.console import Console
from rich.table import Table

from services.errors import ClusteringError, IndeterminateComparisonError, ParameterError
from services.instances import ClusteringInstance, dump_instance, read_instance
from services.oracles import (
    REDUCTION_KINDS,
    CaseFamily,
    VerificationReport,
    random_planar_instance,
    verify_descartes,
    verify_oracle_equivalence,
    verify_reduction,
)
from services.radical_sum import Ordering, RadicalSum, compare_radical_sums
from services.reductions import (
    read_graph,
    read_gridtiling,
    reduce_gridtiling_2d,
    reduce_pvc_3d_penalties,
    reduce_pvc_4d,
    reduce_pvc_metric,
)
from services.settings import settings
from services.solvers import brute_force_solve, curve_length_bound, solve_planar_resolved

# Configure logging
logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.INFO))
logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INDETERMINATE = 3

app = typer.Typer(help="Exact clustering solvers and hardness-reduction generators", no_args_is_help=True)
gen_app = typer.Typer(help="Generate reduction instances", no_args_is_help=True)
solve_app = typer.Typer(help="Solve an instance exactly", no_args_is_help=True)
verify_app = typer.Typer(help="Run verification suites", no_args_is_help=True)
app.add_typer(gen_app, name="gen")
app.add_typer(solve_app, name="solve")
app.add_typer(verify_app, name="verify")

console = Console(stderr=True)


class CommandConfig(BaseModel):
    subcommand: str
    inputs: Dict[str, Path] = {}
    out: Optional[Path] = None
    solver: Optional[str] = None
    k: Optional[int] = None
    s: Optional[int] = None
    precision_bits: Optional[int] = None
    base_k: Optional[int] = None
    jobs: Optional[int] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_flags(self):
        for flag, path in self.inputs.items():
            if not path.is_file():
                raise ValueError(f"{flag}: file not found: {path}")
        if self.out is not None and not self.out.parent.exists():
            raise ValueError(f"--out: directory does not exist: {self.out.parent}")
        for flag, value, lowest in (("--k", self.k, 0), ("--s", self.s, 0), ("--precision-bits", self.precision_bits, 64),
                                    ("--base-k", self.base_k, 1), ("--jobs", self.jobs, 1), ("--seed", self.seed, 0)):
            if value is not None and value < lowest:
                raise ValueError(f"{flag} must be at least {lowest}, got {value}")
        return self

    def apply(self):
        """Flags override the environment defaults."""
        if self.precision_bits is not None:
            settings.precision_bits = self.precision_bits
        if self.base_k is not None:
            settings.base_k = self.base_k
        if self.jobs is not None:
            settings.jobs = self.jobs
        if self.seed is not None:
            settings.seed = self.seed


def _configure(**fields) -> CommandConfig:
    try:
        config = CommandConfig(**fields)
    except ValidationError as e:
        for error in e.errors():
            logger.error(f"{fields.get('subcommand')}: {error['msg']}")
        raise typer.Exit(EXIT_USAGE)
    config.apply()
    return config


def _save_offending_instance(text: str, out: Optional[Path]):
    """Next to --out as <stem>.indeterminate.json, otherwise on stderr."""
    if out is None:
        typer.echo(text, err=True)
        return
    path = out.with_name(f"{out.stem}.indeterminate.json")
    path.write_text(text + "\n", encoding="utf-8")
    logger.error(f"Offending instance written to {path}")


def _execute(config: CommandConfig, body: Callable[[], None]):
    """Run a command body and map service errors onto exit codes."""
    try:
        body()
    except IndeterminateComparisonError as e:
        logger.error(f"{config.subcommand}: precision cap reached: {e}")
        if e.case is not None:
            logger.error(f"{config.subcommand}: offending case {e.case}")
        if e.instance is not None:
            _save_offending_instance(e.instance, config.out)
        raise typer.Exit(EXIT_INDETERMINATE)
    except ClusteringError as e:
        logger.error(f"{config.subcommand}: {e}")
        # value-type service errors are bad input, the rest are failed constructions
        raise typer.Exit(EXIT_USAGE if isinstance(e, ValueError) else EXIT_FAILED)


def _emit(text: str, out: Optional[Path]):
    if out is None:
        typer.echo(text)
    else:
        out.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        logger.info(f"Wrote {out}")


@app.callback()
def main(
    precision_bits: Optional[int] = typer.Option(None, "--precision-bits", help="Cap on interval refinement precision"),
    base_k: Optional[int] = typer.Option(None, "--base-k", help="Largest k solved by enumeration inside the recursion"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Worker threads for solver and harness fan-out"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for every random choice"),
):
    _configure(subcommand="global", precision_bits=precision_bits, base_k=base_k, jobs=jobs, seed=seed)


# gen

def _gen_graph_reduction(kind: str, graph: Path, k: int, s: int, out: Optional[Path]):
    config = _configure(subcommand=f"gen {kind}", inputs={"--graph": graph}, out=out, k=k, s=s)

    def body():
        source = read_graph(graph)
        if kind == "metric":
            inst, k_out, nu = reduce_pvc_metric(source, k, s)
        elif kind == "pvc3d":
            inst, k_out, nu, _ = reduce_pvc_3d_penalties(source, k, s)
        else:
            inst, k_out, nu, _ = reduce_pvc_4d(source, k, s)
        logger.info(f"gen {kind}: decide with k={k_out}, nu={nu}")
        _emit(dump_instance(inst), out)

    _execute(config, body)


@gen_app.command("metric")
def gen_metric(
    graph: Path = typer.Option(..., "--graph", help="Edge list: 'n m' header, then one 'i j' pair per line"),
    k: int = typer.Option(..., "--k"),
    s: int = typer.Option(..., "--s"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Partial Vertex Cover to a finite metric with distances 1 and 3."""
    _gen_graph_reduction("metric", graph, k, s, out)


@gen_app.command("pvc3d")
def gen_pvc3d(
    graph: Path = typer.Option(..., "--graph"),
    k: int = typer.Option(..., "--k"),
    s: int = typer.Option(..., "--s"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Partial Vertex Cover to 3D k-median with penalties."""
    _gen_graph_reduction("pvc3d", graph, k, s, out)


@gen_app.command("pvc4d")
def gen_pvc4d(
    graph: Path = typer.Option(..., "--graph"),
    k: int = typer.Option(..., "--k"),
    s: int = typer.Option(..., "--s"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Partial Vertex Cover to 4D k-median without penalties (k+1 centers)."""
    _gen_graph_reduction("pvc4d", graph, k, s, out)


@gen_app.command("gridtiling")
def gen_gridtiling(
    source: Path = typer.Option(..., "--input", help="Grid tiling JSON: n, k and the k x k array of pair sets"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Grid Tiling with inequalities to planar k-median with unit penalties."""
    config = _configure(subcommand="gen gridtiling", inputs={"--input": source}, out=out)

    def body():
        inst, k_out, nu = reduce_gridtiling_2d(read_gridtiling(source))
        logger.info(f"gen gridtiling: decide with k={k_out}, nu={nu}")
        _emit(dump_instance(inst), out)

    _execute(config, body)


# solve

def _solve(solver: str, inst_path: Path, k: int, out: Optional[Path]):
    config = _configure(subcommand=f"solve {solver}", inputs={"--inst": inst_path}, out=out, solver=solver, k=k)

    def body():
        inst = read_instance(inst_path)
        if solver == "brute":
            report = brute_force_solve(inst, k)
        else:
            if not isinstance(inst, ClusteringInstance):
                raise ParameterError("--inst: the planar solver needs a coordinate instance")
            report = solve_planar_resolved(inst, k)
        result = {"solver": solver, "k": k, **report.to_dict()}
        if inst.threshold is not None:
            verdict = compare_radical_sums(RadicalSum.coerce(report.cost), RadicalSum.coerce(inst.threshold))
            result["within_threshold"] = verdict is not Ordering.GREATER
        _emit(json.dumps(result, indent=2), out)

    _execute(config, body)


@solve_app.command("brute")
def solve_brute(
    inst: Path = typer.Option(..., "--inst"),
    k: int = typer.Option(..., "--k"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Exhaustive search over every subset of at most k candidates."""
    _solve("brute", inst, k, out)


@solve_app.command("planar")
def solve_planar(
    inst: Path = typer.Option(..., "--inst"),
    k: int = typer.Option(..., "--k"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Separating-curve recursion (2D only)."""
    _solve("planar", inst, k, out)


# verify

def _print_summary(report: VerificationReport):
    table = Table(title=f"{report.kind}: {'passed' if report.passed else 'FAILED'}")
    table.add_column("check")
    table.add_column("samples", justify="right")
    table.add_column("violations", justify="right")
    table.add_row("cases", str(len(report.cases)), str(len(report.mismatches)))
    for name, tally in sorted(report.property_checks.items()):
        table.add_row(name, str(tally.samples), str(tally.violations))
    table.add_row("ties", "", str(report.ties))
    console.print(table)
    console.print(f"wall time {report.wall_time:.2f}s")
    for case in report.mismatches[:10]:
        console.print(f"[red]mismatch[/red] {case.descriptor}: source={case.source_answer} reduced={case.reduced_answer}")


def _finish(report: VerificationReport, out: Optional[Path], timing: bool):
    _print_summary(report)
    exclude = None if timing else {"wall_time"}
    _emit(report.model_dump_json(indent=2, exclude=exclude), out)
    if not report.passed:
        logger.error(f"{report.kind}: {len(report.mismatches)} mismatches")
        raise typer.Exit(EXIT_FAILED)


@verify_app.command("descartes")
def verify_descartes_command(
    dim: int = typer.Option(4, "--dim"),
    trials: int = typer.Option(100, "--trials"),
    samples: int = typer.Option(10, "--samples", help="Samples per interval"),
    out: Optional[Path] = typer.Option(None, "--out"),
    timing: bool = typer.Option(False, "--timing", help="Include wall time in the JSON report"),
):
    """Side pattern of moment-curve points against random circumspheres."""
    config = _configure(subcommand="verify descartes", out=out)
    _execute(config, lambda: _finish(verify_descartes(dim, trials, samples), out, timing))


@verify_app.command("reduction")
def verify_reduction_command(
    kind: str = typer.Option(..., "--kind", help=f"One of: {', '.join(REDUCTION_KINDS)}"),
    max_vertices: int = typer.Option(5, "--max-vertices"),
    max_k: int = typer.Option(2, "--max-k"),
    connected_only: bool = typer.Option(False, "--connected-only"),
    random_graphs: int = typer.Option(0, "--random-graphs"),
    random_vertices: int = typer.Option(6, "--random-vertices"),
    grid_n: int = typer.Option(2, "--grid-n"),
    grid_k: int = typer.Option(2, "--grid-k"),
    singletons: bool = typer.Option(True, "--singletons/--no-singletons", help="Include every singleton-set grid instance"),
    random_grids: int = typer.Option(0, "--random-grids"),
    limit: Optional[int] = typer.Option(None, "--limit", help="Stop after this many source instances"),
    out: Optional[Path] = typer.Option(None, "--out"),
    timing: bool = typer.Option(False, "--timing"),
):
    """Compare the source oracle with the reduced decision on a case family."""
    config = _configure(subcommand="verify reduction", out=out)
    family = CaseFamily(
        max_vertices=max_vertices, max_k=max_k, connected_only=connected_only, random_graphs=random_graphs,
        random_vertices=random_vertices, grid_n=grid_n, grid_k=grid_k, singletons=singletons, random_grids=random_grids,
        limit=limit, seed=settings.seed,
    )
    _execute(config, lambda: _finish(verify_reduction(kind, family), out, timing))


@verify_app.command("oracle-equivalence")
def verify_oracle_equivalence_command(
    instances: int = typer.Option(200, "--instances"),
    max_candidates: int = typer.Option(8, "--max-candidates"),
    max_clients: int = typer.Option(20, "--max-clients"),
    k: int = typer.Option(3, "--k"),
    out: Optional[Path] = typer.Option(None, "--out"),
    timing: bool = typer.Option(False, "--timing"),
):
    """Planar recursion against exhaustive search on seeded random instances."""
    config = _configure(subcommand="verify oracle-equivalence", out=out, k=k)
    _execute(config, lambda: _finish(verify_oracle_equivalence(instances, max_candidates, max_clients, k), out, timing))


# bench

def bench_rows(k_values: List[int], instances: int, max_candidates: int, max_clients: int) -> pd.DataFrame:
    rng = np.random.default_rng(settings.seed)
    rows = []
    for k in k_values:
        for _ in range(instances):
            inst = random_planar_instance(rng, max(max_candidates, k), max_clients, k)
            for solver, run in (("brute", brute_force_solve), ("planar", solve_planar_resolved)):
                started = time.perf_counter()
                report = run(inst, k)
                rows.append({
                    "candidates": len(inst.candidates),
                    "clients": len(inst.clients),
                    "k": k,
                    "solver": solver,
                    "cost": float(report.cost),
                    "nodes": report.nodes_explored,
                    "curves": report.curves_enumerated,
                    "max_curve_length": report.max_curve_length,
                    "curve_bound": curve_length_bound(k),
                    "wall_time": time.perf_counter() - started,
                })
    return pd.DataFrame(rows)


@app.command("bench")
def bench(
    k_values: List[int] = typer.Option([2, 3, 4], "--k", help="Repeat for several k"),
    instances: int = typer.Option(3, "--instances", help="Instances per k"),
    max_candidates: int = typer.Option(8, "--max-candidates"),
    max_clients: int = typer.Option(12, "--max-clients"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV path; stdout when omitted"),
):
    """Node and curve counts of both solvers as a CSV table."""
    config = _configure(subcommand="bench", out=out)

    def body():
        frame = bench_rows(k_values, instances, max_candidates, max_clients)
        _emit(frame.to_csv(index=False), out)
        longest = frame["max_curve_length"].max() if len(frame) else 0
        console.print(f"{len(frame)} runs, longest curve {longest}")

    _execute(config, body)


if __name__ == "__main__":
    app()
