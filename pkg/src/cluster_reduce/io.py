"""JSON and text serialization for clusters, forms, Gram matrices and reports.

Numbers travel as decimal strings so that round-trips keep the working
precision; exact integers and rationals are accepted wherever a coordinate or
coefficient is expected.
"""

from __future__ import annotations

import json
from fractions import Fraction

import mpmath as mp

from .cluster_core import PointCluster, ProjectivePoint
from .covariant import CovariantResult, HermitianForm
from .errors import InputFormatError
from .lattice import GramMatrix, UnimodularTransform
from .polyalg import MultiPoly
from .pipelines import ReductionReport

SCHEMA = "cluster-reduce/1"


def _num_to_str(x) -> str:
    return mp.nstr(mp.mpf(x), mp.mp.dps, strip_zeros=True)


def _parse_real(s):
    try:
        if isinstance(s, str) and "/" in s:
            f = Fraction(s)
            return mp.mpf(f.numerator) / f.denominator
        return mp.mpmathify(s)
    except Exception as exc:
        raise InputFormatError(f"cannot parse number {s!r}") from exc


def _parse_complex(entry):
    """[re, im] pair of decimal strings, or a bare exact real string/number."""
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise InputFormatError(f"complex entry {entry!r} must be a [re, im] pair")
        return mp.mpc(_parse_real(entry[0]), _parse_real(entry[1]))
    return mp.mpc(_parse_real(entry))


def _complex_to_pair(c):
    c = mp.mpc(c)
    return [_num_to_str(mp.re(c)), _num_to_str(mp.im(c))]


# -- clusters ---------------------------------------------------------------


def cluster_to_json(cluster: PointCluster) -> dict:
    return {
        "n": cluster.n,
        "points": [[_complex_to_pair(c) for c in p.coords] for p in cluster.points],
    }


def cluster_from_json(data) -> PointCluster:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        n = int(data["n"])
        raw = data["points"]
    except (KeyError, TypeError) as exc:
        raise InputFormatError("cluster JSON needs fields 'n' and 'points'") from exc
    points = []
    for row in raw:
        coords = tuple(_parse_complex(e) for e in row)
        if len(coords) != n + 1:
            raise InputFormatError(f"point {row!r} does not have n+1 = {n + 1} coordinates")
        points.append(ProjectivePoint(coords))
    return PointCluster(tuple(points))


# -- Hermitian forms and Gram matrices ---------------------------------------


def hermitian_to_json(form: HermitianForm) -> dict:
    return {
        "n": form.n,
        "matrix": [[_complex_to_pair(v) for v in row] for row in form.matrix],
    }


def hermitian_from_json(data) -> HermitianForm:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        n = int(data["n"])
        raw = data["matrix"]
    except (KeyError, TypeError) as exc:
        raise InputFormatError("Hermitian form JSON needs fields 'n' and 'matrix'") from exc
    rows = tuple(tuple(_parse_complex(v) for v in row) for row in raw)
    if len(rows) != n + 1 or any(len(r) != n + 1 for r in rows):
        raise InputFormatError("matrix size does not match n")
    return HermitianForm(rows)


def gram_to_json(G: GramMatrix) -> dict:
    return {
        "n": G.size - 1,
        "matrix": [[_num_to_str(v) for v in row] for row in G.matrix],
    }


def gram_from_json(data) -> GramMatrix:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        n = int(data["n"])
        raw = data["matrix"]
    except (KeyError, TypeError) as exc:
        raise InputFormatError("Gram JSON needs fields 'n' and 'matrix'") from exc
    rows = tuple(tuple(_parse_real(v) for v in row) for row in raw)
    if len(rows) != n + 1 or any(len(r) != n + 1 for r in rows):
        raise InputFormatError("matrix size does not match n")
    return GramMatrix(rows)


def transform_to_json(U: UnimodularTransform) -> list:
    return [list(row) for row in U.matrix]


def transform_from_json(data) -> UnimodularTransform:
    if isinstance(data, str):
        data = json.loads(data)
    return UnimodularTransform(tuple(tuple(int(v) for v in row) for row in data))


# -- polynomials --------------------------------------------------------------


def poly_to_json(p: MultiPoly) -> dict:
    return {
        "nvars": p.nvars,
        "terms": [
            {"exp": list(e), "coeff": str(c)} for e, c in p.terms
        ],
    }


def poly_from_json(data) -> MultiPoly:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        nvars = int(data["nvars"])
        raw = data["terms"]
    except (KeyError, TypeError) as exc:
        raise InputFormatError("polynomial JSON needs fields 'nvars' and 'terms'") from exc
    terms = {}
    for t in raw:
        exp = tuple(int(e) for e in t["exp"])
        c = t["coeff"]
        terms[exp] = terms.get(exp, 0) + (Fraction(c) if "/" in str(c) else int(c))
    return MultiPoly(nvars, tuple(terms.items()))


def poly_from_any(text: str, nvars=None) -> MultiPoly:
    """Parse either the JSON or the sparse text representation."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return poly_from_json(stripped)
    return MultiPoly.from_text(stripped, nvars=nvars)


# -- results ------------------------------------------------------------------


def covariant_result_to_json(result: CovariantResult) -> dict:
    return {
        "schema": SCHEMA,
        "z": hermitian_to_json(result.z),
        "theta": _num_to_str(result.theta),
        "iterations": result.iterations,
        "final_gradient_norm": _num_to_str(result.final_gradient_norm),
    }


def _reduced_to_json(report: ReductionReport):
    obj = report.reduced
    if isinstance(obj, PointCluster):
        return cluster_to_json(obj)
    if isinstance(obj, MultiPoly):
        return poly_to_json(obj)
    if isinstance(obj, tuple):
        return [poly_to_json(p) for p in obj]
    raise TypeError(f"cannot serialize reduced object {type(obj)!r}")


def report_to_json(report: ReductionReport) -> dict:
    diag = report.diagnostics
    stability = diag.get("stability")
    out = {
        "schema": SCHEMA,
        "kind": report.kind,
        "covariant": gram_to_json(report.covariant),
        "reduced_gram": gram_to_json(report.reduced_gram),
        "transform": transform_to_json(report.transform),
        "reduced": _reduced_to_json(report),
        "diagnostics": {
            "precision": diag.get("precision"),
            "iterations": diag.get("iterations"),
            "gradient_norm": _num_to_str(diag.get("gradient_norm", 0)),
            "residuals": [_num_to_str(r) for r in diag.get("residuals", ())],
            "stability": {
                "is_split": stability.is_split,
                "is_semi_stable": stability.is_semi_stable,
                "is_stable": stability.is_stable,
                "margin": stability.margin,
            }
            if stability is not None
            else None,
            "height_before": str(diag.get("height_before")),
            "height_after": str(diag.get("height_after")),
            "height_warning": diag.get("height_warning"),
        },
    }
    if report.pencil_transform is not None:
        out["pencil_transform"] = [list(r) for r in report.pencil_transform]
    if "pencil_cubic" in report.extras:
        out["pencil_cubic"] = poly_to_json(report.extras["pencil_cubic"])
    if "inflection_cluster" in report.extras:
        out["inflection_cluster"] = cluster_to_json(report.extras["inflection_cluster"])
    if "root_cluster" in report.extras:
        out["root_cluster"] = cluster_to_json(report.extras["root_cluster"])
    if "base_points" in report.extras:
        out["base_points"] = cluster_to_json(report.extras["base_points"].cluster())
    return out
