"""Point clusters in P^n(C): group action, subspace degrees, stability.

A point cluster is a formal sum of points of projective space, stored as a
multiset of :class:`ProjectivePoint`. Stability is decided by comparing, for
every linear subspace L, the number of cluster points on L against the bound
(dim L + 1) * deg(Z) / (n + 1); the subspace search is restricted to spans of
subsets of the cluster's own points, which is enough because a maximizing
subspace can always be shrunk to the span of the points it contains.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath as mp

from ._precision import default_rank_tol, to_mpc
from .errors import DimensionError, InvalidPointError, SingularMatrixError


@dataclass(frozen=True)
class ProjectivePoint:
    """A point of P^n(C) given by n+1 homogeneous coordinates.

    Coordinates are mpmath complex numbers; at least one must be nonzero.
    Two points are equal when their coordinate vectors are proportional,
    tested up to a tolerance (see :meth:`is_same`).
    """

    coords: tuple

    def __post_init__(self):
        coords = tuple(to_mpc(c) for c in self.coords)
        if not coords:
            raise InvalidPointError("point needs at least one coordinate")
        if all(c == 0 for c in coords):
            raise InvalidPointError("all homogeneous coordinates are zero")
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def norm(self):
        return mp.sqrt(sum(abs(c) ** 2 for c in self.coords))

    def unit(self) -> tuple:
        """Coordinates rescaled to Hermitian norm 1."""
        nrm = self.norm()
        return tuple(c / nrm for c in self.coords)

    def conjugate(self) -> "ProjectivePoint":
        return ProjectivePoint(tuple(mp.conj(c) for c in self.coords))

    def is_same(self, other: "ProjectivePoint", tol=None) -> bool:
        """Projective equality: the angle between coordinate vectors is < tol."""
        if self.n != other.n:
            return False
        if tol is None:
            tol = default_rank_tol()
        a = self.unit()
        b = other.unit()
        inner = sum(mp.conj(x) * y for x, y in zip(a, b))
        # sine of the angle as a projection residual (no cancellation)
        resid2 = sum(abs(y - inner * x) ** 2 for x, y in zip(a, b))
        return mp.sqrt(resid2) < tol

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        return self.is_same(other)

    __hash__ = None  # tolerant equality is incompatible with hashing

    def __repr__(self):
        inside = " : ".join(mp.nstr(c, 8) for c in self.coords)
        return f"({inside})"


@dataclass(frozen=True)
class PointCluster:
    """Multiset of points of a common P^n; repeated entries encode multiplicity."""

    points: tuple

    def __post_init__(self):
        pts = tuple(
            p if isinstance(p, ProjectivePoint) else ProjectivePoint(tuple(p))
            for p in self.points
        )
        if not pts:
            raise InvalidPointError("a point cluster must contain at least one point")
        n = pts[0].n
        if any(p.n != n for p in pts):
            raise DimensionError("all points of a cluster must share the ambient dimension")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points[0].n

    @property
    def degree(self) -> int:
        return len(self.points)

    def conjugate(self) -> "PointCluster":
        return PointCluster(tuple(p.conjugate() for p in self.points))

    def is_conjugation_fixed(self, tol=None) -> bool:
        return self.same_cluster(self.conjugate(), tol=tol)

    def same_cluster(self, other: "PointCluster", tol=None) -> bool:
        """Multiset equality via greedy matching of projectively equal points."""
        if not isinstance(other, PointCluster):
            return NotImplemented
        if self.n != other.n or self.degree != other.degree:
            return False
        remaining = list(other.points)
        for p in self.points:
            for i, q in enumerate(remaining):
                if p.is_same(q, tol=tol):
                    remaining.pop(i)
                    break
            else:
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, PointCluster):
            return NotImplemented
        return self.same_cluster(other)

    __hash__ = None

    def distinct_points(self, tol=None):
        """Representatives of the distinct points with their multiplicities."""
        reps = []
        for p in self.points:
            for i, (q, m) in enumerate(reps):
                if p.is_same(q, tol=tol):
                    reps[i] = (q, m + 1)
                    break
            else:
                reps.append((p, 1))
        return reps

    def __repr__(self):
        return "PointCluster(" + " + ".join(repr(p) for p in self.points) + ")"


@dataclass(frozen=True)
class ScaledCluster:
    """A point cluster with a chosen coordinate row vector for each point.

    Equality is modulo rescaling the rows by factors whose product is 1, so a
    scaled cluster carries exactly one more datum than the underlying cluster:
    the product of the chosen scalings.
    """

    reps: tuple

    def __post_init__(self):
        rows = tuple(tuple(to_mpc(c) for c in row) for row in self.reps)
        if not rows:
            raise InvalidPointError("a scaled cluster must contain at least one row")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise DimensionError("all rows must have the same length")
        for r in rows:
            if all(c == 0 for c in r):
                raise InvalidPointError("zero row in scaled cluster")
        object.__setattr__(self, "reps", rows)

    @property
    def n(self) -> int:
        return len(self.reps[0]) - 1

    @property
    def degree(self) -> int:
        return len(self.reps)

    def cluster(self) -> PointCluster:
        """Forget the scalings."""
        return PointCluster(tuple(ProjectivePoint(r) for r in self.reps))

    def scale_point(self, index: int, factor) -> "ScaledCluster":
        """Rescale one row; multiplies the total scaling by ``factor``."""
        factor = to_mpc(factor)
        rows = list(self.reps)
        rows[index] = tuple(factor * c for c in rows[index])
        return ScaledCluster(tuple(rows))

    def conjugate(self) -> "ScaledCluster":
        return ScaledCluster(tuple(tuple(mp.conj(c) for c in row) for row in self.reps))

    def same_scaled(self, other: "ScaledCluster", tol=None) -> bool:
        """Equality modulo rescalings with product 1 (rows kept in order)."""
        if self.n != other.n or self.degree != other.degree:
            return False
        if tol is None:
            tol = default_rank_tol()
        prod = mp.mpc(1)
        for a, b in zip(self.reps, other.reps):
            j = max(range(len(a)), key=lambda i: abs(a[i]))
            if abs(b[j]) == 0:
                return False
            lam = b[j] / a[j]
            if any(abs(b[i] - lam * a[i]) > tol * (1 + abs(lam)) for i in range(len(a))):
                return False
            prod *= lam
        return abs(prod - 1) < tol * self.degree

    def __repr__(self):
        return f"ScaledCluster(m={self.degree}, n={self.n})"


@dataclass(frozen=True)
class SubspaceWitness:
    """A linear subspace showing a stability bound violated or met with equality.

    ``dim`` is the projective dimension k, ``spanning_points`` a subset of the
    cluster spanning the subspace, ``contained`` how many cluster points lie on
    it (with multiplicity).
    """

    dim: int
    spanning_points: tuple
    contained: int


@dataclass(frozen=True)
class StabilityClass:
    """Classification outcome.

    ``margin`` is the smallest slack (k+1) * m - (n+1) * phi(k) over the
    tested dimensions: positive for stable bounds, zero when some bound is
    met with equality, negative when violated. Clusters from numerical root
    finding are classified with tolerances, so the margin quantifies how
    decisively the bounds held.
    """

    is_split: bool
    is_semi_stable: bool
    is_stable: bool
    witness: Optional[SubspaceWitness] = None
    margin: Optional[int] = None

    def __post_init__(self):
        if self.is_stable and not self.is_semi_stable:
            raise ValueError("stable implies semi-stable")
        if self.is_stable and self.is_split:
            raise ValueError("a split cluster cannot be stable")


def normalize_cluster(cluster: PointCluster) -> ScaledCluster:
    """Scaled cluster whose rows all have Hermitian norm 1."""
    return ScaledCluster(tuple(p.unit() for p in cluster.points))


def _as_matrix(g, size):
    if isinstance(g, mp.matrix):
        M = g
    else:
        rows = list(g)
        M = mp.matrix(len(rows), len(rows[0]))
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                M[i, j] = to_mpc(v)
    if M.rows != M.cols:
        raise DimensionError("transformation matrix must be square")
    if M.rows != size:
        raise DimensionError(f"matrix size {M.rows} does not match ambient dimension {size - 1}")
    return M


def act(cluster: PointCluster, g, det_tol=None) -> PointCluster:
    """Apply the coordinate change sending each row vector P to P * g.

    ``g`` must be an (n+1) x (n+1) matrix of determinant 1 (up to ``det_tol``).
    Composition satisfies act(act(Z, g), h) = act(Z, g*h).
    """
    M = _as_matrix(g, cluster.n + 1)
    det = mp.det(M)
    if det_tol is None:
        det_tol = default_rank_tol()
    if abs(det) < det_tol:
        raise SingularMatrixError("transformation matrix is singular")
    if abs(det - 1) > det_tol * (1 + abs(det)):
        raise SingularMatrixError(f"determinant {mp.nstr(mp.mpc(det), 8)} is not 1")
    new_points = []
    for p in cluster.points:
        row = [sum(p.coords[a] * M[a, j] for a in range(cluster.n + 1)) for j in range(cluster.n + 1)]
        new_points.append(ProjectivePoint(tuple(row)))
    return PointCluster(tuple(new_points))


def conjugate(cluster: PointCluster) -> PointCluster:
    """Replace every coordinate by its complex conjugate."""
    return cluster.conjugate()


def _column_matrix(points: Sequence[ProjectivePoint]):
    n1 = points[0].n + 1
    A = mp.matrix(n1, len(points))
    for j, p in enumerate(points):
        u = p.unit()
        for i in range(n1):
            A[i, j] = u[i]
    return A


def _orthonormal_column_basis(points, rank_tol):
    """Orthonormal basis (as matrix columns) of the span of the given points."""
    A = _column_matrix(points)
    U, S, V = mp.svd_c(A)
    smax = S[0] if len(S) else mp.mpf(0)
    rank = sum(1 for s in S if s > rank_tol * smax) if smax > 0 else 0
    B = mp.matrix(A.rows, rank)
    for j in range(rank):
        for i in range(A.rows):
            B[i, j] = U[i, j]
    return B, rank


def _points_in_span(cluster, basis, rank_tol):
    """Indices of cluster points within residual ``rank_tol`` of the span."""
    n1 = cluster.n + 1
    hits = []
    for idx, p in enumerate(cluster.points):
        u = list(p.unit())
        # subtract the projection onto the span componentwise; this stays
        # accurate when the residual is far below the working precision
        for j in range(basis.cols):
            c = sum(mp.conj(basis[i, j]) * u[i] for i in range(n1))
            for i in range(n1):
                u[i] -= c * basis[i, j]
        resid2 = sum(abs(v) ** 2 for v in u)
        if mp.sqrt(resid2) < rank_tol:
            hits.append(idx)
    return hits


def rank_of(points, rank_tol=None) -> int:
    """Numerical rank of the coordinate vectors of the given points."""
    if rank_tol is None:
        rank_tol = default_rank_tol()
    _, r = _orthonormal_column_basis(list(points), rank_tol)
    return r


def phi(cluster: PointCluster, k: int, rank_tol=None) -> int:
    """Maximum number of cluster points on a common k-dimensional subspace.

    phi(-1) = 0 and phi(n) = deg Z; the function is nondecreasing in k.
    Candidate subspaces are spans of subsets of the cluster's distinct points.
    """
    n = cluster.n
    if not -1 <= k <= n:
        raise ValueError(f"k must lie in [-1, {n}], got {k}")
    if k == -1:
        return 0
    if k == n:
        return cluster.degree
    if rank_tol is None:
        rank_tol = default_rank_tol()
    count, _ = _phi_with_witness(cluster, k, rank_tol)
    return count


def _phi_with_witness(cluster, k, rank_tol):
    distinct = [p for p, _ in cluster.distinct_points(tol=rank_tol)]
    best = 0
    best_subset = None
    max_size = min(k + 1, len(distinct))
    for size in range(1, max_size + 1):
        for subset in itertools.combinations(distinct, size):
            basis, rank = _orthonormal_column_basis(list(subset), rank_tol)
            if rank > k + 1:
                continue
            hits = _points_in_span(cluster, basis, rank_tol)
            if len(hits) > best:
                best = len(hits)
                best_subset = subset
    return best, best_subset


def _is_split(cluster, rank_tol):
    """Split detection.

    A cluster is split when two disjoint nonempty linear subspaces jointly
    contain it. That happens exactly when the points fail to span the ambient
    space, or when some bipartition of the point multiset has rank-additive
    spans. For large clusters the bipartition search is replaced by connected
    components of the fundamental-circuit graph of the points' linear matroid,
    which yields the same decomposition.
    """
    pts = list(cluster.points)
    n1 = cluster.n + 1
    total_rank = rank_of(pts, rank_tol)
    if total_rank < n1:
        return True
    m = len(pts)
    if m == 1:
        return False  # spans only if n = 0; handled above otherwise
    if m <= 14:
        for r in range(1, m // 2 + 1):
            for part in itertools.combinations(range(m), r):
                part_set = set(part)
                A = [pts[i] for i in part]
                B = [pts[i] for i in range(m) if i not in part_set]
                if rank_of(A, rank_tol) + rank_of(B, rank_tol) == total_rank:
                    return True
        return False
    return len(_matroid_components(pts, rank_tol)) > 1


def _matroid_components(points, rank_tol):
    """Connected components of the linear matroid of the points.

    Builds a basis greedily, then links every non-basis point to the basis
    points appearing in its fundamental circuit.
    """
    n1 = points[0].n + 1
    m = len(points)
    basis_idx = []
    for i in range(m):
        trial = [points[j] for j in basis_idx] + [points[i]]
        if rank_of(trial, rank_tol) == len(trial):
            basis_idx.append(i)
        if len(basis_idx) == n1:
            break
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    basis_cols = mp.matrix(n1, len(basis_idx))
    for j, bi in enumerate(basis_idx):
        u = points[bi].unit()
        for i in range(n1):
            basis_cols[i, j] = u[i]
    for i in range(m):
        if i in basis_idx:
            continue
        rhs = mp.matrix([[c] for c in points[i].unit()])
        coeffs = mp.lu_solve(basis_cols, rhs) if len(basis_idx) == n1 else mp.qr_solve(basis_cols, rhs)[0]
        for j, bi in enumerate(basis_idx):
            if abs(coeffs[j]) > rank_tol:
                union(i, bi)
    return {find(i) for i in range(m)}


def classify(cluster: PointCluster, rank_tol=None) -> StabilityClass:
    """Split / semi-stable / stable classification with a witness subspace.

    Semi-stable means (n+1) * phi(k) <= (k+1) * m for every 0 <= k <= n-1,
    stable means the inequality is strict. Both comparisons are exact integer
    arithmetic once the phi values are known. The witness records a subspace
    violating the bound (not semi-stable), or achieving it with equality
    (semi-stable but not stable).
    """
    if rank_tol is None:
        rank_tol = default_rank_tol()
    n = cluster.n
    m = cluster.degree
    semi = True
    stable = True
    witness = None
    margin = None
    for k in range(0, n):
        count, subset = _phi_with_witness(cluster, k, rank_tol)
        lhs = (n + 1) * count
        rhs = (k + 1) * m
        slack = rhs - lhs
        if margin is None or slack < margin:
            margin = slack
        if lhs > rhs:
            semi = False
            stable = False
            witness = SubspaceWitness(k, tuple(subset or ()), count)
            break
        if lhs == rhs and stable:
            stable = False
            witness = SubspaceWitness(k, tuple(subset or ()), count)
    split = _is_split(cluster, rank_tol)
    if split:
        stable = False
    return StabilityClass(
        is_split=split,
        is_semi_stable=semi,
        is_stable=stable,
        witness=witness,
        margin=margin,
    )
