"""Command-line front end: matrix generation, decomposition reports,
single-cell evaluation, and figure reproduction sweeps.

Exit codes: 0 success, 2 input error, 3 solver/runtime error, 4 acceptance
check failure.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .demand import (
    GENERATOR_KINDS,
    DemandMatrix,
    MatrixParseError,
    NetworkParams,
    classify_uniform_residual,
    decompose_integer_residual,
    generate,
    load_csv,
    normalize,
    save_csv,
    validate_hose,
)

OUT_ENV_VAR = "RDCN_THROUGHPUT_OUT"

EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_ACCEPTANCE = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _outdir(out) -> Path:
    path = Path(out if out is not None else os.environ.get(OUT_ENV_VAR, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def read_config(path) -> dict:
    """Flat `key = value` config file; '#' comments and blank lines ignored."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            key, _, raw = text.partition("=")
            values[key.strip()] = raw.strip()
    return values


def _merge_config(config_path, flags: dict, casts: dict) -> dict:
    """Precedence: explicit CLI flags > config file entries > defaults already in flags."""
    if not config_path:
        return flags
    try:
        file_values = read_config(config_path)
    except (OSError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))
    merged = dict(flags)
    source = click.get_current_context().get_parameter_source
    for key, raw in file_values.items():
        if key not in casts:
            _fail(EXIT_INPUT, f"unknown config key {key!r}")
        param_source = source(key)
        if param_source is not None and param_source.name != "DEFAULT":
            continue  # explicit flag wins
        try:
            merged[key] = casts[key](raw)
        except ValueError:
            _fail(EXIT_INPUT, f"config key {key!r} has invalid value {raw!r}")
    return merged


def _load_matrix(path, capacity, normalized) -> DemandMatrix:
    m = load_csv(path)
    if normalized:
        m = DemandMatrix(m.entries * capacity)
    return m


def _solver_modules():
    try:
        from . import evaluation, flowlp, topology  # noqa: F401  (lazy: needs scipy)
        return evaluation, flowlp, topology
    except ImportError as exc:
        _fail(EXIT_SOLVER, f"LP backend unavailable ({exc}); install scipy >= 1.10")


@click.group()
def main():
    """Synthesize reconfigurable-datacenter topologies and compute LP throughput."""


@main.command()
@click.option("--kind", type=click.Choice(GENERATOR_KINDS), required=True)
@click.option("--n", type=int, default=16, show_default=True, help="ToR count.")
@click.option("--u", type=int, default=None, help="Links per ToR [default: n].")
@click.option("--c", type=float, default=25e9, show_default=True, help="Link capacity (bits/s).")
@click.option("--alpha", type=float, default=None, help="Permutation share for --kind mix.")
@click.option("--shift", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help=f"Output dir [default: ${OUT_ENV_VAR} or .].")
@click.option("--name", default=None, help="Output file name [default: <kind>.csv].")
def gen(kind, n, u, c, alpha, shift, seed, out, name):
    """Generate a demand matrix CSV and print a hose-validation summary."""
    try:
        params = NetworkParams(n, u if u is not None else n, c)
        matrix = generate(kind, params, alpha=alpha, shift=shift, seed=seed)
    except ValueError as exc:
        _fail(EXIT_INPUT, str(exc))
    path = _outdir(out) / (name or f"{kind}.csv")
    comment = f"kind={kind} n={params.n} u={params.u} c={params.c:.17g} seed={seed}" + (
        f" alpha={alpha}" if kind == "mix" else ""
    )
    save_csv(matrix, path, comment=comment)
    report = validate_hose(matrix, params)
    rows = matrix.row_sums()
    click.echo(f"wrote {path}: {params.n}x{params.n} matrix")
    click.echo(
        f"hose check vs c*u = {params.node_capacity:.6g}: "
        f"{'OK' if report.ok else f'{len(report.violations)} violations'}; "
        f"row sums in [{rows.min():.6g}, {rows.max():.6g}]"
    )
    if not report.ok:
        sys.exit(EXIT_INPUT)


@main.command()
@click.argument("matrix_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--c", type=float, default=25e9, show_default=True,
              help="Capacity used to normalize raw bits/s entries.")
@click.option("--normalized", is_flag=True, help="Entries are already capacity-normalized.")
@click.option("--out", type=click.Path(), default=None)
def decompose(matrix_path, c, normalized, out):
    """Split a matrix into integer floor + residual parts and classify its residual."""
    try:
        m = load_csv(matrix_path)
        work = m if normalized else normalize(m, c)
        dec = decompose_integer_residual(work)
    except (MatrixParseError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))
    cls = classify_uniform_residual(dec)
    stem = Path(matrix_path).stem
    outdir = _outdir(out)
    int_path = outdir / f"{stem}_int.csv"
    res_path = outdir / f"{stem}_res.csv"
    with open(int_path, "w", encoding="utf-8") as fh:
        for row in dec.int_part:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
    with open(res_path, "w", encoding="utf-8") as fh:
        for row in dec.res_part:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    click.echo(f"wrote {int_path} and {res_path}")
    click.echo(f"uniform-residual class: {cls.value}")
    click.echo("row ratios: " + " ".join(f"{r:.4f}" for r in dec.row_ratios))
    click.echo("col ratios: " + " ".join(f"{r:.4f}" for r in dec.col_ratios))


@main.command(name="eval")
@click.argument("matrix_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--class", "net_class", required=True,
              type=click.Choice(("static", "oblivious", "da-static", "da-periodic")))
@click.option("--u", type=int, default=4, show_default=True)
@click.option("--c", type=float, default=25e9, show_default=True)
@click.option("--normalized", is_flag=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step", type=float, default=0.01, show_default=True)
@click.option("--tol", type=float, default=1e-7, show_default=True)
@click.option("--trace", is_flag=True, help="Print the heuristic trace as JSON.")
@click.option("--emit-topo", is_flag=True, help="Write topology (and schedule) JSON.")
@click.option("--out", type=click.Path(), default=None)
def eval_cmd(matrix_path, net_class, u, c, normalized, seed, step, tol, trace, emit_topo, out):
    """Compute throughput of one matrix on one network class."""
    evaluation, flowlp, topology = _solver_modules()
    try:
        m = _load_matrix(matrix_path, c, normalized)
        p = NetworkParams(m.n, u, c)
    except (MatrixParseError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))

    heuristic_trace = None
    schedule = None
    try:
        if net_class == "static":
            topo = topology.build_static_expander(
                p, seed=evaluation._seed_int(seed, "static-topology"))
            theta = evaluation.throughput_static(topo, m, tol=tol)
        elif net_class == "oblivious":
            topo = topology.build_oblivious_equivalent(p)
            theta = evaluation.throughput_static(topo, m, tol=tol)
        else:
            mode = "static" if net_class == "da-static" else "periodic"
            theta, heuristic_trace = evaluation.throughput_demand_aware(
                m, p, mode, step=step, seed=seed, tol=tol)
            scaled = m.scaled(theta if theta > 0 else step)
            if mode == "static":
                topo = topology.build_demand_aware_static(scaled, p, seed=seed)
            else:
                topo, schedule = topology.build_demand_aware_periodic(scaled, p, seed=seed)
    except ValueError as exc:
        _fail(EXIT_INPUT, str(exc))
    except flowlp.SolverError as exc:
        _fail(EXIT_SOLVER, str(exc))

    click.echo(f"theta({net_class}, {Path(matrix_path).name}) = {theta:.6g}")
    if trace and heuristic_trace is not None:
        click.echo(json.dumps(heuristic_trace.to_json_dict(), indent=2))
    if emit_topo:
        outdir = _outdir(out)
        topo_path = outdir / "topology.json"
        topo_path.write_text(json.dumps(topo.to_json_dict(), indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {topo_path}")
        if schedule is not None:
            sched_path = outdir / "schedule.json"
            sched_path.write_text(json.dumps(schedule.to_json_dict(), indent=2) + "\n",
                                  encoding="utf-8")
            click.echo(f"wrote {sched_path}")


def _fig3_checks(result, suite_labels, uniform_residual_labels):
    checks = []
    other = ("static", "oblivious", "da-static")
    worst_gap = min(
        result.theta(label, "da-periodic") - result.theta(label, cls)
        for label in suite_labels for cls in other
    )
    checks.append(("dominance: da-periodic >= every class on every matrix (tol 1e-6)",
                   worst_gap >= -1e-6))
    chess = result.theta("chessboard", "da-periodic")
    checks.append((f"chessboard da-periodic = {chess:.3f}, expected 0.80 +/- 0.01",
                   abs(chess - 0.80) <= 0.01 + 1e-12))
    perm_dap = result.theta("permutation", "da-periodic")
    checks.append((f"permutation da-periodic = {perm_dap:.3f}, expected 1.00 +/- 0.01",
                   abs(perm_dap - 1.0) <= 0.01 + 1e-12))
    perm_obl = result.theta("permutation", "oblivious")
    checks.append((f"permutation oblivious = {perm_obl:.3f}, expected 0.50 +/- 0.05",
                   abs(perm_obl - 0.5) <= 0.05 + 1e-12))
    unif_obl = result.theta("uniform", "oblivious")
    checks.append((f"uniform oblivious = {unif_obl:.8f}, expected 1 +/- 1e-6",
                   abs(unif_obl - 1.0) <= 1e-6))
    bound = 2.0 / 3.0 - 0.01
    low = min(result.theta(label, "da-periodic") for label in uniform_residual_labels)
    checks.append((f"uniform-residual matrices: min da-periodic = {low:.3f} >= 2/3 - 0.01",
                   low >= bound - 1e-12))
    return checks


def _fig4_checks(result, degrees):
    checks = []
    wc_dap = [result.worst_case("da-periodic", u)[0] for u in degrees]
    spread = max(wc_dap) - min(wc_dap)
    checks.append((f"da-periodic worst-case spread over degrees = {spread:.4f} <= 0.02",
                   spread <= 0.02 + 1e-12))
    separation = min(
        result.worst_case("da-periodic", u)[0] - result.worst_case("oblivious", u)[0]
        for u in degrees
    )
    checks.append((f"worst-case separation da-periodic - oblivious = {separation:.4f} >= 0.28",
                   separation >= 0.28 - 1e-12))
    top = max(degrees)
    gap = abs(result.worst_case("da-static", top)[0] - result.worst_case("da-periodic", top)[0])
    checks.append((f"da-static converges at u={top}: |gap| = {gap:.4f} <= 0.02",
                   gap <= 0.02 + 1e-12))
    return checks


@main.command()
@click.argument("figure", type=click.Choice(("fig3", "fig4")))
@click.option("--n", type=int, default=16, show_default=True)
@click.option("--u", type=int, default=4, show_default=True, help="Degree for fig3.")
@click.option("--c", type=float, default=25e9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step", type=float, default=0.01, show_default=True)
@click.option("--tol", type=float, default=1e-7, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Concurrent solver instances.")
@click.option("--matrix-csv", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Extra demand matrices to include in the suite (repeatable).")
@click.option("--out", type=click.Path(), default=None)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Flat key=value config file (flags take precedence).")
def reproduce(figure, n, u, c, seed, step, tol, jobs, matrix_csv, out, config):
    """Run the throughput-landscape sweeps, emit CSV/SVG, and check the landscape targets."""
    from .svg import grouped_bar_chart

    evaluation, flowlp, _topology = _solver_modules()
    casts = {"n": int, "u": int, "c": float, "seed": int, "step": float,
             "tol": float, "jobs": int, "out": str}
    merged = _merge_config(config, {"n": n, "u": u, "c": c, "seed": seed, "step": step,
                                    "tol": tol, "jobs": jobs, "out": out}, casts)
    n, u, c = merged["n"], merged["u"], merged["c"]
    seed, step, tol, jobs, out = (merged["seed"], merged["step"], merged["tol"],
                                  merged["jobs"], merged["out"])
    outdir = _outdir(out)
    try:
        if figure == "fig3":
            p = NetworkParams(n, u, c)
            suite = evaluation.build_suite(p, csv_paths=matrix_csv)
            result = evaluation.sweep_matrices(p, suite, seed=seed, step=step, tol=tol, jobs=jobs)
        else:
            degrees = [d for d in (4, 8, 12, 16) if d <= n] or [u]
            p = NetworkParams(n, degrees[0], c)
            result = evaluation.sweep_degree(p, degrees, seed=seed, step=step, tol=tol,
                                             jobs=jobs, csv_paths=matrix_csv)
    except ValueError as exc:
        _fail(EXIT_INPUT, str(exc))
    except flowlp.SolverError as exc:
        _fail(EXIT_SOLVER, str(exc))
    for matrix, net_class, degree, message in result.errors:
        click.echo(f"cell ({matrix}, {net_class}, u={degree}) failed: {message}", err=True)

    csv_path = outdir / f"{figure}.csv"
    csv_path.write_text(result.to_csv_text(), encoding="utf-8")
    json_path = outdir / f"{figure}.json"
    json_path.write_text(json.dumps(result.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    classes = list(evaluation.NETWORK_CLASSES)
    if figure == "fig3":
        labels = [label for label, _ in suite]
        series = {cls: [result.theta(label, cls) for label in labels] for cls in classes}
        svg_text = grouped_bar_chart(labels, series,
                                     title=f"throughput per demand matrix (n={n}, u={u})")
        uniform_residual = []
        for label, matrix in suite:
            dec = decompose_integer_residual(normalize(matrix, c))
            if classify_uniform_residual(dec).value != "not-uniform":
                uniform_residual.append(label)
        checks = _fig3_checks(result, labels, uniform_residual)
    else:
        degrees = result.degrees()
        series = {
            cls: [result.worst_case(cls, d)[0] for d in degrees] for cls in classes
        }
        svg_text = grouped_bar_chart([str(d) for d in degrees], series,
                                     title=f"worst-case throughput per degree (n={n})")
        checks = _fig4_checks(result, degrees)
    svg_path = outdir / f"{figure}.svg"
    svg_path.write_text(svg_text, encoding="utf-8")
    click.echo(f"wrote {csv_path}, {json_path}, {svg_path}")

    failed = 0
    for description, ok in checks:
        click.echo(f"[{'PASS' if ok else 'FAIL'}] {description}")
        failed += 0 if ok else 1
    if result.errors:
        failed += len(result.errors)
        click.echo(f"[FAIL] {len(result.errors)} sweep cells errored")
    if failed:
        sys.exit(EXIT_ACCEPTANCE)


if __name__ == "__main__":
    main()
