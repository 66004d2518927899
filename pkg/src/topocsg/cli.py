"""Command-line front end.

    topocsg relate SCENE A B        one relation token on stdout
    topocsg enrich SCENE -o OUT     all-pairs relations -> triple file
    topocsg rules SCENE RULES -o OUT   fire rules, export triples + log
    topocsg query SCENE QUERY       answer a select query as TSV
    topocsg bench                   timing experiment over generated boxes

Exit codes: 0 success; 2 invalid input (scene, geometry, ids, flags);
3 rule or query language error; 4 unexpected internal error.
"""

from __future__ import annotations

import os
import sys
import tempfile
from pathlib import Path

import click

from .bench import BenchConfig, BenchError, check_scaling, run_bench
from .geometry import GeometryError
from .kb import KBError, RelationSolver, declare_profile, enrich_topology
from .rules import Query, Rule, RuleError, evaluate, parse_rules, query
from .scene import SceneError, load_scene

EXIT_INPUT = 2
EXIT_RULES = 3
EXIT_INTERNAL = 4

_INPUT_ERRORS = (SceneError, GeometryError, KBError, BenchError)


def _run(fn):
    """Execute a command body under the exit-code contract."""
    try:
        fn()
    except RuleError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RULES)
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except click.exceptions.Exit:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)


def _write_atomic(path: str, text: str) -> None:
    """Write-then-rename so readers never observe a partial file."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(
        dir=target.parent or Path("."), prefix=target.name + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _geometry_options(fn):
    fn = click.option(
        "--epsilon", type=float, default=None,
        help="Working resolution; default universe extent / 1024.",
    )(fn)
    fn = click.option(
        "--delta", type=float, default=None,
        help="Boundary shell half-width for --refine; default extent / 1000.",
    )(fn)
    fn = click.option(
        "--refine/--no-refine", default=False,
        help="Split disjoint/contains/inside into meet/covers/coveredBy "
        "when boundaries come within delta.",
    )(fn)
    return fn


@click.group()
@click.version_option(package_name="topocsg", prog_name="topocsg")
def main():
    """Qualitative 3D topology over CSG scenes."""


@main.command()
@click.argument("scene_path", metavar="SCENE")
@click.argument("id_a", metavar="A")
@click.argument("id_b", metavar="B")
@_geometry_options
def relate(scene_path, id_a, id_b, epsilon, delta, refine):
    """Print the topological relation of objects A and B in SCENE."""

    def body():
        scene = load_scene(scene_path, epsilon=epsilon)
        kb = scene.build_kb()
        solver = RelationSolver(
            kb, epsilon=scene.epsilon, delta=delta, refine=refine
        )
        click.echo(str(solver.relation(id_a, id_b)))

    _run(body)


@main.command()
@click.argument("scene_path", metavar="SCENE")
@click.option("-o", "--output", required=True, help="Triple file to write.")
@click.option(
    "--profile", type=click.Choice(["corrected", "paper"]), default="corrected",
    help="Relation characteristics profile.",
)
@click.option("--jobs", type=int, default=1, help="Worker threads for geometry.")
@_geometry_options
def enrich(scene_path, output, profile, jobs, epsilon, delta, refine):
    """Compute all pairwise relations in SCENE and export the KB."""

    def body():
        scene = load_scene(scene_path, epsilon=epsilon)
        kb = scene.build_kb()
        report = enrich_topology(
            kb,
            epsilon=scene.epsilon,
            delta=delta,
            refine=refine,
            profile=profile,
            jobs=jobs,
        )
        _write_atomic(output, kb.export_triples())
        click.echo(f"pairs={report.pairs} elapsed_ms={report.elapsed_ms:.1f}")
        counts = " ".join(
            f"{name}={count}"
            for name, count in sorted(report.relation_counts.items())
        )
        if counts:
            click.echo(f"counts: {counts}")
        violations = kb.check_consistency()
        for v in violations:
            click.echo(f"inconsistency: {v}", err=True)

    _run(body)


@main.command(name="rules")
@click.argument("scene_path", metavar="SCENE")
@click.argument("rules_path", metavar="RULES")
@click.option("-o", "--output", required=True, help="Triple file to write.")
@click.option(
    "--log", "log_path", default=None,
    help="Derivation log file; default OUTPUT.log.",
)
@click.option(
    "--profile", type=click.Choice(["corrected", "paper"]), default="corrected",
    help="Relation characteristics profile.",
)
@_geometry_options
def rules_cmd(scene_path, rules_path, output, log_path, profile, epsilon, delta, refine):
    """Fire the rules in RULES against SCENE; export triples and log.

    Queries appearing in the rule file are answered on stdout after the
    rules reach fixpoint.
    """

    def body():
        scene = load_scene(scene_path, epsilon=epsilon)
        kb = scene.build_kb()
        declare_profile(kb, profile)
        try:
            text = Path(rules_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SceneError(f"cannot read rules file {rules_path}: {exc}") from None
        parsed = parse_rules(text)
        rule_items = [r for r in parsed if isinstance(r, Rule)]
        query_items = [r for r in parsed if isinstance(r, Query)]
        solver = RelationSolver(
            kb, epsilon=scene.epsilon, delta=delta, refine=refine
        )
        log = evaluate(rule_items, kb, solver)
        _write_atomic(output, kb.export_triples())
        _write_atomic(log_path or output + ".log", log.to_text())
        click.echo(
            f"rules={len(rule_items)} derived={len(log.derived_facts())} "
            f"rounds={log.rounds}"
        )
        for q in query_items:
            result = query(q, kb, solver)
            click.echo(result.to_tsv(), nl=False)

    _run(body)


@main.command(name="query")
@click.argument("scene_path", metavar="SCENE")
@click.argument("query_path", metavar="QUERY")
@click.option("-o", "--output", default=None, help="Also write the TSV here.")
@_geometry_options
def query_cmd(scene_path, query_path, output, epsilon, delta, refine):
    """Answer the select query in QUERY against SCENE as TSV on stdout."""

    def body():
        scene = load_scene(scene_path, epsilon=epsilon)
        kb = scene.build_kb()
        try:
            text = Path(query_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SceneError(f"cannot read query file {query_path}: {exc}") from None
        parsed = parse_rules(text)
        queries = [r for r in parsed if isinstance(r, Query)]
        if len(queries) != 1 or len(parsed) != 1:
            raise RuleError(
                f"query file must contain exactly one select query, found "
                f"{len(queries)} among {len(parsed)} statements"
            )
        solver = RelationSolver(
            kb, epsilon=scene.epsilon, delta=delta, refine=refine
        )
        result = query(queries[0], kb, solver)
        click.echo(result.to_tsv(), nl=False)
        if output is not None:
            _write_atomic(output, result.to_tsv())

    _run(body)


@main.command(name="bench")
@click.option(
    "--sizes", default="100,250,500,1000",
    help="Comma-separated scene sizes; the last must double the previous.",
)
@click.option("--seed", type=int, default=7, help="Scene generation seed.")
@click.option("--reps", type=int, default=3, help="Repetitions per size (>= 3).")
@click.option("--jobs", type=int, default=1, help="Worker threads for geometry.")
@click.option("-o", "--output", default=None, help="CSV file to write.")
@click.option(
    "--scene-dir", default=None,
    help="Directory to keep the generated scene files.",
)
def bench_cmd(sizes, seed, reps, jobs, output, scene_dir):
    """Run the all-pairs overlap query benchmark and the scaling checks."""

    def body():
        try:
            parsed_sizes = tuple(int(s) for s in sizes.split(",") if s.strip())
        except ValueError:
            raise BenchError(f"bad --sizes value {sizes!r}") from None
        config = BenchConfig(
            sizes=parsed_sizes, seed=seed, repetitions=reps, jobs=jobs
        )
        result = run_bench(
            config, scene_dir=scene_dir, progress=lambda s: click.echo(s, err=True)
        )
        csv = result.to_csv()
        click.echo(csv, nl=False)
        if output is not None:
            _write_atomic(output, csv)
        report = check_scaling(result)
        click.echo(str(report))

    _run(body)


if __name__ == "__main__":
    main()
