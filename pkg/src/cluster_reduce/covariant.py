"""The cluster distance function and its minimizing Hermitian covariant.

For a scaled cluster with rows P_j and a positive definite Hermitian Q the
distance is

    D = sum_j log( conj(P_j) Q P_j^T ) - m/(n+1) * log det Q .

For a stable cluster D has a unique critical point on the determinant-1 slice;
that minimizer is the covariant z(Z) and exp(min D) is theta. The minimizer is
found by geodesic gradient descent: with Q = S^H S the curve
lambda -> S^H exp(lambda B) S stays on the positive definite cone, and the
gradient in this transported chart is

    G = sum_j u_j u_j^H / |u_j|^2 - m/(n+1) * I,      u_j = S P_j^T,

a trace-free Hermitian matrix whose Frobenius pairing with B gives the
directional derivative of D.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import mpmath as mp

from ._precision import (
    default_rank_tol,
    frobenius_norm,
    hermitian_cholesky,
    hermitize,
    to_mpc,
    working_precision,
)
from .cluster_core import (
    PointCluster,
    ScaledCluster,
    classify,
    normalize_cluster,
    rank_of,
)
from .errors import (
    ConvergenceError,
    DegeneratePositionError,
    DimensionError,
    NotPositiveDefiniteError,
    StabilityError,
)


def _as_mp_matrix(rows):
    M = mp.matrix(len(rows), len(rows[0]))
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            M[i, j] = to_mpc(v)
    return M


@dataclass(frozen=True)
class HermitianForm:
    """Positive definite Hermitian matrix, considered modulo positive scaling.

    The stored representative need not have determinant 1; use
    :meth:`normalized` for the determinant-1 representative. Equality tests
    compare modulo positive real scaling.
    """

    matrix: tuple

    def __post_init__(self):
        rows = tuple(tuple(to_mpc(v) for v in r) for r in self.matrix)
        size = len(rows)
        if any(len(r) != size for r in rows):
            raise DimensionError("Hermitian form matrix must be square")
        object.__setattr__(self, "matrix", rows)

    @classmethod
    def from_matrix(cls, M) -> "HermitianForm":
        return cls(tuple(tuple(M[i, j] for j in range(M.cols)) for i in range(M.rows)))

    @property
    def n(self) -> int:
        return len(self.matrix) - 1

    def mat(self):
        return _as_mp_matrix(self.matrix)

    def check(self, tol=None):
        """Validate Hermitian symmetry and positive definiteness."""
        if tol is None:
            tol = default_rank_tol()
        M = self.mat()
        scale = max(abs(M[i, j]) for i in range(M.rows) for j in range(M.cols))
        for i in range(M.rows):
            for j in range(M.cols):
                if abs(M[i, j] - mp.conj(M[j, i])) > tol * (1 + scale):
                    raise NotPositiveDefiniteError("matrix is not Hermitian")
        _cholesky(M)
        return self

    def det(self):
        return mp.re(mp.det(self.mat()))

    def normalized(self) -> "HermitianForm":
        """Determinant-1 representative (divide by det^(1/(n+1)))."""
        d = self.det()
        if d <= 0:
            raise NotPositiveDefiniteError("determinant is not positive")
        M = self.mat() / mp.root(d, self.n + 1)
        return HermitianForm.from_matrix(M)

    def same_form(self, other: "HermitianForm", tol=None) -> bool:
        """Equality modulo positive real scaling."""
        if tol is None:
            tol = default_rank_tol()
        A = self.normalized().mat()
        B = other.normalized().mat()
        if A.rows != B.rows:
            return False
        scale = max(abs(A[i, j]) for i in range(A.rows) for j in range(A.cols))
        return all(
            abs(A[i, j] - B[i, j]) <= tol * (1 + scale)
            for i in range(A.rows)
            for j in range(A.cols)
        )

    def __repr__(self):
        return f"HermitianForm(n={self.n})"


@dataclass(frozen=True)
class TangentDirection:
    """Trace-free Hermitian matrix: a tangent vector at the identity."""

    matrix: tuple

    def __post_init__(self):
        rows = tuple(tuple(to_mpc(v) for v in r) for r in self.matrix)
        object.__setattr__(self, "matrix", rows)

    def mat(self):
        return _as_mp_matrix(self.matrix)

    def check(self, tol=None):
        if tol is None:
            tol = default_rank_tol()
        M = self.mat()
        scale = 1 + max(abs(M[i, j]) for i in range(M.rows) for j in range(M.cols))
        for i in range(M.rows):
            for j in range(M.cols):
                if abs(M[i, j] - mp.conj(M[j, i])) > tol * scale:
                    raise ValueError("tangent direction is not Hermitian")
        if abs(sum(M[i, i] for i in range(M.rows))) > tol * scale * M.rows:
            raise ValueError("tangent direction has nonzero trace")
        return self

    def norm(self):
        return frobenius_norm(self.mat())


@dataclass(frozen=True)
class CovariantResult:
    z: HermitianForm
    theta: object
    iterations: int
    final_gradient_norm: object
    transcript: Optional[tuple] = None


@dataclass(frozen=True)
class DivergenceWitness:
    """One-parameter family Q_lambda pushing D to -infinity (or to its infimum).

    ``basis`` holds an orthonormal basis of C^(n+1) whose first ``subspace_dim``
    columns span the offending subspace; Q_lambda has eigenvalue
    lambda^-(n-k) there and lambda^(k+1) on the complement, so det Q_lambda = 1.
    """

    basis: tuple
    subspace_dim: int  # linear dimension k+1

    def _eigenvalues(self, lam):
        n1 = len(self.basis)
        k1 = self.subspace_dim
        return [lam ** (-(n1 - k1))] * k1 + [lam**k1] * (n1 - k1)

    def form_at(self, lam) -> HermitianForm:
        """Q_lambda as a dense matrix; usable for moderate lambda only, since
        mixing eigenvalue scales beyond the working precision loses the small
        eigenvalues to rounding."""
        lam = mp.mpf(lam)
        B = _as_mp_matrix(self.basis)
        M = B * mp.diag(self._eigenvalues(lam)) * B.transpose_conj()
        return HermitianForm.from_matrix(hermitize(M))

    def distance_at(self, zc: ScaledCluster, lam):
        """D(zc, Q_lambda), evaluated in the eigenbasis so arbitrarily large
        lambda works; det Q_lambda = 1 by construction.

        Components below the rank tolerance are treated as exact zeros:
        points counted as lying on the subspace must not leak rounding noise
        into the complementary eigendirections, where lambda^(k+1) would
        amplify it without bound.
        """
        lam = mp.mpf(lam)
        B = _as_mp_matrix(self.basis)
        n1 = B.rows
        evals = self._eigenvalues(lam)
        chop = default_rank_tol() ** 2
        total = mp.mpf(0)
        for row in zc.reps:
            nrm2 = sum(abs(c) ** 2 for c in row)
            w2 = [
                abs(sum(mp.conj(B[a, i]) * row[a] for a in range(n1))) ** 2
                for i in range(n1)
            ]
            total += mp.log(
                mp.fsum(e * w for e, w in zip(evals, w2) if w > chop * nrm2)
            )
        return total


@dataclass(frozen=True)
class ThetaResult:
    value: object
    attained: bool
    stability: object
    witness: Optional[DivergenceWitness] = None


def _cholesky(Q):
    """Cholesky factor L (Q = L L^H) or NotPositiveDefiniteError."""
    try:
        L = hermitian_cholesky(Q)
    except ValueError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    return L


def _log_det_from_cholesky(L):
    return 2 * mp.fsum(mp.log(mp.re(L[i, i])) for i in range(L.rows))


def eval_D(zc: ScaledCluster, Q: HermitianForm):
    """Distance of a scaled cluster from a positive definite Hermitian form.

    Invariant under positive scaling of Q; rescaling one row by lambda adds
    log |lambda|^2.
    """
    M = Q.mat() if isinstance(Q, HermitianForm) else _as_mp_matrix(Q)
    n1 = zc.n + 1
    if M.rows != n1:
        raise DimensionError("form size does not match cluster dimension")
    L = _cholesky(M)
    m = zc.degree
    total = mp.mpf(0)
    for row in zc.reps:
        u = [sum(mp.conj(L[a, i]) * row[a] for a in range(n1)) for i in range(n1)]
        total += mp.log(sum(abs(c) ** 2 for c in u))
    return total - mp.mpf(m) / n1 * _log_det_from_cholesky(L)


def _gradient_at(L, reps):
    """Transported gradient at Q = L L^H for the given rows; returns (G, norm)."""
    n1 = L.rows
    m = len(reps)
    G = mp.matrix(n1, n1)
    for row in reps:
        u = [sum(mp.conj(L[a, i]) * row[a] for a in range(n1)) for i in range(n1)]
        nrm2 = sum(abs(c) ** 2 for c in u)
        for a in range(n1):
            ua = u[a]
            for b in range(a, n1):
                G[a, b] += ua * mp.conj(u[b]) / nrm2
    for a in range(n1):
        for b in range(a + 1, n1):
            G[b, a] = mp.conj(G[a, b])
    for a in range(n1):
        G[a, a] -= mp.mpf(m) / n1
    return G, frobenius_norm(G)


def grad_D(zc: ScaledCluster, Q: HermitianForm) -> TangentDirection:
    """Riesz representative of the derivative of D in the transported chart.

    With Q = S^H S (S from the Cholesky factorization) the directional
    derivative of D along lambda -> S^H exp(lambda B) S equals the Frobenius
    pairing of the returned matrix with B, for every trace-free Hermitian B.
    """
    M = Q.mat() if isinstance(Q, HermitianForm) else _as_mp_matrix(Q)
    if M.rows != zc.n + 1:
        raise DimensionError("form size does not match cluster dimension")
    L = _cholesky(M)
    G, _ = _gradient_at(L, zc.reps)
    return TangentDirection(tuple(tuple(G[i, j] for j in range(G.cols)) for i in range(G.rows)))


def _descent(reps, n1, tol, max_iter, initial=None, record=False):
    """Geodesic gradient descent loop; returns (Q, L, gnorm, iters, transcript).

    Steps Q <- S^H exp(-lambda G) S with Armijo backtracking on lambda,
    renormalizing det Q to 1 after every step.
    """
    m = len(reps)
    if initial is None:
        Q = mp.eye(n1)
    else:
        d = mp.re(mp.det(initial))
        Q = initial / mp.root(d, n1)
    L = _cholesky(Q)
    transcript = []
    gnorm = mp.mpf(0)
    iters = 0
    for it in range(max_iter):
        iters = it
        G, gnorm = _gradient_at(L, reps)
        if record:
            transcript.append((it, _current_D(L, reps, m, n1)))
        if gnorm <= tol:
            return Q, L, gnorm, it, transcript
        ev, V = mp.eigh(G)
        # W[j] = V^H u_j with u_j normalized; D along the ray needs only |W|^2
        W2 = []
        for row in reps:
            u = [sum(mp.conj(L[a, i]) * row[a] for a in range(n1)) for i in range(n1)]
            nrm2 = sum(abs(c) ** 2 for c in u)
            w = [sum(mp.conj(V[a, i]) * u[a] for a in range(n1)) for i in range(n1)]
            W2.append([abs(c) ** 2 / nrm2 for c in w])
        lam = mp.mpf(1)
        target = mp.mpf("0.25") * gnorm**2
        for _ in range(80):
            val = mp.fsum(
                mp.log(mp.fsum(mp.e ** (-lam * ev[i]) * w2[i] for i in range(n1)))
                for w2 in W2
            )
            if val <= -lam * target:
                break
            lam /= 2
        # Q' = L V e^{-lam E} V^H L^H  =  (L V e^{-lam E / 2}) * (...)^H
        half = mp.diag([mp.e ** (-lam * e / 2) for e in ev])
        LVE = L * V * half
        Q = LVE * LVE.transpose_conj()
        d = mp.re(mp.det(Q))
        Q = hermitize(Q / mp.root(d, n1))
        L = _cholesky(Q)
    G, gnorm = _gradient_at(L, reps)
    return Q, L, gnorm, iters + 1, transcript


def _current_D(L, reps, m, n1):
    total = mp.fsum(
        mp.log(sum(abs(sum(mp.conj(L[a, i]) * row[a] for a in range(n1))) ** 2 for i in range(n1)))
        for row in reps
    )
    return total - mp.mpf(m) / n1 * _log_det_from_cholesky(L)


def minimize(
    cluster: PointCluster,
    tol=None,
    max_iter=1000,
    prec=None,
    initial=None,
    check_stability=True,
    record_transcript=False,
) -> CovariantResult:
    """Minimize D over determinant-1 Hermitian forms; returns the covariant.

    The input must be stable unless ``check_stability`` is disabled (useful to
    observe divergence). ``initial`` optionally seeds the descent with a
    positive definite matrix; the minimizer does not depend on it. theta is
    reported for the unit-norm scaling of the cluster.
    """
    with working_precision(prec):
        if check_stability:
            cls = classify(cluster)
            if not cls.is_stable:
                raise StabilityError(
                    "cluster is not stable; the distance function has no minimizer",
                    classification=cls,
                    witness=cls.witness,
                )
        if tol is None:
            tol = mp.mpf(10) ** -12
        else:
            tol = mp.mpf(tol)
        zc = normalize_cluster(cluster)
        n1 = cluster.n + 1
        init = None
        if initial is not None:
            init = initial.mat() if isinstance(initial, HermitianForm) else _as_mp_matrix(initial)
        Q, L, gnorm, iters, transcript = _descent(
            zc.reps, n1, tol, max_iter, initial=init, record=record_transcript
        )
        result = CovariantResult(
            z=HermitianForm.from_matrix(Q).normalized(),
            theta=mp.e ** _current_D(L, zc.reps, cluster.degree, n1),
            iterations=iters,
            final_gradient_norm=gnorm,
            transcript=tuple(transcript) if record_transcript else None,
        )
        if gnorm > tol:
            raise ConvergenceError(
                f"gradient norm {mp.nstr(gnorm, 8)} above tolerance after {max_iter} iterations",
                best=result,
            )
        return result


def _witness_from_subspace(cluster, witness_points):
    """Orthonormal basis adapted to the witness span, extended to C^(n+1)."""
    n1 = cluster.n + 1
    cols = []
    for p in witness_points:
        cols.append(list(p.unit()))
    A = mp.matrix(n1, len(cols))
    for j, c in enumerate(cols):
        for i in range(n1):
            A[i, j] = c[i]
    U, S, V = mp.svd_c(A)
    smax = S[0]
    k1 = sum(1 for s in S if s > default_rank_tol() * smax)
    # complete to a unitary basis: svd of the projector complement
    P = mp.eye(n1)
    for j in range(k1):
        for a in range(n1):
            for b in range(n1):
                P[a, b] -= U[a, j] * mp.conj(U[b, j])
    U2, S2, _ = mp.svd_c(P)
    basis_cols = [[U[i, j] for i in range(n1)] for j in range(k1)]
    for j in range(n1 - k1):
        basis_cols.append([U2[i, j] for i in range(n1)])
    basis_rows = tuple(
        tuple(basis_cols[j][i] for j in range(n1)) for i in range(n1)
    )
    return DivergenceWitness(basis=basis_rows, subspace_dim=k1)


def theta(zc: ScaledCluster, tol=None, max_iter=1000, prec=None) -> ThetaResult:
    """Infimum of exp(D) for the given scaling, with degenerate cases flagged.

    Stable input: the attained minimum. Semi-stable but not stable: a descent
    estimate of the non-attained infimum. Unstable: value 0 together with a
    witness family along which D diverges to -infinity.
    """
    with working_precision(prec):
        cluster = zc.cluster()
        cls = classify(cluster)
        n1 = cluster.n + 1
        m = cluster.degree
        if not cls.is_semi_stable:
            witness = _witness_from_subspace(cluster, cls.witness.spanning_points)
            return ThetaResult(value=mp.mpf(0), attained=False, stability=cls, witness=witness)
        if tol is None:
            tol = mp.mpf(10) ** -12
        if cls.is_stable:
            _, L, gnorm, _, _ = _descent(normalize_cluster(cluster).reps, n1, tol, max_iter)
            value = mp.e ** _current_D(L, zc.reps, m, n1)
            return ThetaResult(value=value, attained=True, stability=cls)
        # semi-stable, not stable: the infimum is not attained; estimate it
        # from the descent and from the witness family, which decreases to
        # its plateau (D is convex and bounded along that geodesic)
        _, L, gnorm, _, _ = _descent(normalize_cluster(cluster).reps, n1, tol, max_iter)
        value = mp.e ** _current_D(L, zc.reps, m, n1)
        witness = None
        if cls.witness is not None:
            witness = _witness_from_subspace(cluster, cls.witness.spanning_points)
            plateau = witness.distance_at(zc, mp.e ** mp.mpf(4 * mp.mp.prec))
            value = min(value, mp.e**plateau)
        return ThetaResult(value=value, attained=False, stability=cls, witness=witness)


def simplex_covariant(cluster: PointCluster, prec=None) -> HermitianForm:
    """Closed-form covariant of n+2 points in general position.

    Scale the first n+1 points so that their coordinate vectors sum to the
    last point, collect them as the rows of a matrix g, and conjugate the
    covariant of the standard simplex configuration, (n+2) I - J, back through
    g. Agrees with :func:`minimize` up to the solver tolerance.
    """
    with working_precision(prec):
        n = cluster.n
        m = cluster.degree
        if m != n + 2:
            raise DimensionError(f"need exactly n+2 = {n + 2} points, got {m}")
        pts = cluster.points
        n1 = n + 1
        A = mp.matrix(n1, n1)
        for j, p in enumerate(pts[:n1]):
            u = p.unit()
            for i in range(n1):
                A[i, j] = u[i]
        if rank_of(list(pts[:n1])) < n1:
            raise DegeneratePositionError("the first n+1 points are linearly dependent")
        rhs = mp.matrix([[c] for c in pts[n1].unit()])
        coeff = mp.lu_solve(A, rhs)
        if any(abs(coeff[i]) < default_rank_tol() for i in range(n1)):
            raise DegeneratePositionError("the last point lies in a coordinate subspace of the others")
        g = mp.matrix(n1, n1)
        for i in range(n1):
            u = pts[i].unit()
            for j in range(n1):
                g[i, j] = coeff[i] * u[j]
        Q0 = mp.matrix(n1, n1)
        for i in range(n1):
            for j in range(n1):
                Q0[i, j] = (n + 2 if i == j else 0) - 1
        ginv_t = (g**-1).transpose()
        z = ginv_t.transpose_conj() * Q0 * ginv_t
        return HermitianForm.from_matrix(hermitize(z)).normalized()
