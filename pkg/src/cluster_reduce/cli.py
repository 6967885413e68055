"""Command line interface.

Exit codes: 0 success, 2 stability error, 3 numerical convergence error,
4 input format error.
"""

from __future__ import annotations

import json
import sys

import click
import mpmath as mp

from . import io as cio
from ._precision import DEFAULT_PREC, working_precision
from .cluster_core import classify as classify_cluster
from .covariant import minimize
from .errors import (
    ClusterReduceError,
    ConvergenceError,
    InputFormatError,
    StabilityError,
)
from .pipelines import (
    reduce_binary_form,
    reduce_cluster,
    reduce_quadric_pencil,
    reduce_ternary_form,
)

EXIT_STABILITY = 2
EXIT_CONVERGENCE = 3
EXIT_FORMAT = 4


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(payload, as_json, report_path, text_lines):
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    if as_json:
        click.echo(json.dumps(payload, indent=2))
    else:
        for line in text_lines:
            click.echo(line)


def _run(fn):
    try:
        fn()
    except BrokenPipeError:
        sys.exit(0)  # downstream consumer closed the pipe; not our error
    except StabilityError as exc:
        click.echo(f"stability error: {exc}", err=True)
        sys.exit(EXIT_STABILITY)
    except ConvergenceError as exc:
        click.echo(f"convergence error: {exc}", err=True)
        sys.exit(EXIT_CONVERGENCE)
    except (InputFormatError, json.JSONDecodeError, OSError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_FORMAT)
    except ClusterReduceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _common_options(fn):
    fn = click.option("--prec", type=int, default=DEFAULT_PREC, show_default=True, help="working precision in bits")(fn)
    fn = click.option("--tol", type=float, default=None, help="gradient tolerance for the minimizer")(fn)
    fn = click.option("--delta", type=float, default=0.99, show_default=True, help="LLL parameter")(fn)
    fn = click.option("--max-iter", type=int, default=1000, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True, help="seed for shear randomness")(fn)
    fn = click.option("--json/--text", "as_json", default=False, help="output format")(fn)
    fn = click.option("--report", "report_path", type=click.Path(), default=None, help="write a JSON report here")(fn)
    return fn


@click.group()
def main():
    """Reduction of point clusters, binary forms, quadric pencils and ternary forms."""


@main.command("classify")
@click.argument("input_path")
@click.option("--prec", type=int, default=DEFAULT_PREC, show_default=True)
@click.option("--json/--text", "as_json", default=False)
def classify_cmd(input_path, prec, as_json):
    """Stability classification of a cluster (JSON file)."""

    def body():
        cluster = cio.cluster_from_json(_read(input_path))
        with working_precision(prec):
            cls = classify_cluster(cluster)
        payload = {
            "schema": cio.SCHEMA,
            "is_split": cls.is_split,
            "is_semi_stable": cls.is_semi_stable,
            "is_stable": cls.is_stable,
        }
        _emit(
            payload,
            as_json,
            None,
            [
                f"split: {cls.is_split}",
                f"semi-stable: {cls.is_semi_stable}",
                f"stable: {cls.is_stable}",
            ],
        )

    _run(body)


@main.command("covariant")
@click.argument("input_path")
@_common_options
def covariant_cmd(input_path, prec, tol, delta, max_iter, seed, as_json, report_path):
    """Covariant z(Z) and theta of a stable cluster (JSON file)."""

    def body():
        cluster = cio.cluster_from_json(_read(input_path))
        result = minimize(cluster, tol=tol, max_iter=max_iter, prec=prec)
        with working_precision(prec):
            payload = cio.covariant_result_to_json(result)
        _emit(
            payload,
            as_json,
            report_path,
            [
                f"theta: {mp.nstr(result.theta, 12)}",
                f"iterations: {result.iterations}",
                f"gradient norm: {mp.nstr(result.final_gradient_norm, 6)}",
                "z:",
            ]
            + ["  " + "  ".join(mp.nstr(v, 12) for v in row) for row in result.z.matrix],
        )

    _run(body)


@main.command("reduce-cluster")
@click.argument("input_path")
@_common_options
def reduce_cluster_cmd(input_path, prec, tol, delta, max_iter, seed, as_json, report_path):
    """LLL-reduce a conjugation-fixed stable cluster (JSON file)."""

    def body():
        cluster = cio.cluster_from_json(_read(input_path))
        report = reduce_cluster(cluster, prec=prec, tol=tol, delta=delta, max_iter=max_iter)
        with working_precision(prec):
            payload = cio.report_to_json(report)
        _emit(
            payload,
            as_json,
            report_path,
            ["transform:"]
            + ["  " + "  ".join(str(v) for v in row) for row in report.transform.matrix]
            + ["reduced cluster:"]
            + ["  " + repr(p) for p in report.reduced.points],
        )

    _run(body)


@main.command("reduce-binary")
@click.argument("input_path")
@_common_options
def reduce_binary_cmd(input_path, prec, tol, delta, max_iter, seed, as_json, report_path):
    """Reduce a binary form (text or JSON polynomial file)."""

    def body():
        F = cio.poly_from_any(_read(input_path), nvars=2)
        report = reduce_binary_form(F, prec=prec, tol=tol, delta=delta, max_iter=max_iter)
        with working_precision(prec):
            payload = cio.report_to_json(report)
        _emit(
            payload,
            as_json,
            report_path,
            [
                f"reduced form: {report.reduced.to_text()}",
                "transform:",
            ]
            + ["  " + "  ".join(str(v) for v in row) for row in report.transform.matrix],
        )

    _run(body)


@main.command("reduce-pencil")
@click.argument("input_path")
@_common_options
def reduce_pencil_cmd(input_path, prec, tol, delta, max_iter, seed, as_json, report_path):
    """Reduce a pencil of two ternary quadrics.

    Input: JSON object {"q1": <poly>, "q2": <poly>} where <poly> is either a
    polynomial JSON object or a sparse text string, or a text file with one
    quadric per line.
    """

    def body():
        text = _read(input_path).strip()
        if text.startswith("{"):
            data = json.loads(text)
            q1 = data["q1"]
            q2 = data["q2"]
            Q1 = cio.poly_from_json(q1) if isinstance(q1, dict) else cio.poly_from_any(str(q1), nvars=3)
            Q2 = cio.poly_from_json(q2) if isinstance(q2, dict) else cio.poly_from_any(str(q2), nvars=3)
        else:
            lines = [ln for ln in text.splitlines() if ln.strip()]
            if len(lines) != 2:
                raise InputFormatError("pencil text input needs exactly two lines")
            Q1 = cio.poly_from_any(lines[0], nvars=3)
            Q2 = cio.poly_from_any(lines[1], nvars=3)
        report = reduce_quadric_pencil(
            Q1, Q2, prec=prec, tol=tol, delta=delta, max_iter=max_iter, seed=seed
        )
        with working_precision(prec):
            payload = cio.report_to_json(report)
        _emit(
            payload,
            as_json,
            report_path,
            [
                f"reduced q1: {report.reduced[0].to_text()}",
                f"reduced q2: {report.reduced[1].to_text()}",
                "pencil transform: " + str([list(r) for r in report.pencil_transform]),
                "coordinate transform:",
            ]
            + ["  " + "  ".join(str(v) for v in row) for row in report.transform.matrix],
        )

    _run(body)


@main.command("reduce-ternary")
@click.argument("input_path")
@click.option("--prec", type=int, default=None, help="working precision in bits (default depends on degree)")
@click.option("--tol", type=float, default=None)
@click.option("--delta", type=float, default=0.99, show_default=True)
@click.option("--max-iter", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json/--text", "as_json", default=False)
@click.option("--report", "report_path", type=click.Path(), default=None)
def reduce_ternary_cmd(input_path, prec, tol, delta, max_iter, seed, as_json, report_path):
    """Reduce an irreducible ternary form via its inflection cluster."""

    def body():
        F = cio.poly_from_any(_read(input_path), nvars=3)
        report = reduce_ternary_form(
            F, prec=prec, tol=tol, delta=delta, max_iter=max_iter, seed=seed
        )
        with working_precision(report.diagnostics["precision"]):
            payload = cio.report_to_json(report)
        _emit(
            payload,
            as_json,
            report_path,
            [
                f"reduced form: {report.reduced.to_text()}",
                "transform:",
            ]
            + ["  " + "  ".join(str(v) for v in row) for row in report.transform.matrix],
        )

    _run(body)


if __name__ == "__main__":
    main()
