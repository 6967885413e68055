"""Working-precision helpers built on mpmath.

All numerical code in this package runs at the ambient mpmath precision.
Entry points that accept a ``prec`` argument (in bits) wrap their body in
``working_precision(prec)``. Default tolerances are derived from the ambient
precision so that tightening ``prec`` tightens every derived threshold.
"""

from __future__ import annotations

import mpmath as mp

DEFAULT_PREC = 212


def working_precision(prec=None):
    """Context manager setting the mpmath binary precision (no-op if None)."""
    return mp.workprec(prec if prec is not None else mp.mp.prec)


def decimal_digits(prec=None):
    """Decimal digits corresponding to ``prec`` bits (ambient if None)."""
    bits = prec if prec is not None else mp.mp.prec
    return int(bits * 0.30103)


def default_rank_tol(prec=None):
    """Rank / point-identification tolerance: 10^(-digits/2)."""
    return mp.mpf(10) ** (-decimal_digits(prec) // 2)


def half_eps(prec=None):
    """2^(-prec/2) at the ambient (or given) precision."""
    bits = prec if prec is not None else mp.mp.prec
    return mp.mpf(2) ** (-bits // 2)


def to_mpc(value):
    """Convert ints, Fractions, strings, floats or mpmath numbers to mpc."""
    if isinstance(value, mp.mpc):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return mp.mpc(mp.mpmathify(value[0]), mp.mpmathify(value[1]))
    return mp.mpc(mp.mpmathify(value))


def frobenius_norm(M):
    return mp.sqrt(sum(abs(M[i, j]) ** 2 for i in range(M.rows) for j in range(M.cols)))


def max_abs_entry(M):
    return max(abs(M[i, j]) for i in range(M.rows) for j in range(M.cols))


def hermitize(M):
    """Average a nearly Hermitian matrix with its conjugate transpose."""
    return (M + M.transpose_conj()) / 2


def real_part(M):
    R = mp.matrix(M.rows, M.cols)
    for i in range(M.rows):
        for j in range(M.cols):
            R[i, j] = mp.re(M[i, j])
    return R


def max_imag_entry(M):
    return max(abs(mp.im(M[i, j])) for i in range(M.rows) for j in range(M.cols))


def hermitian_cholesky(A):
    """Lower triangular L with A = L L^H for Hermitian positive definite A.

    Unlike the library routine this uses no absolute pivot threshold, so
    matrices with entries spanning thousands of orders of magnitude factor
    fine; a nonpositive pivot raises ValueError.
    """
    n = A.rows
    L = mp.matrix(n, n)
    for j in range(n):
        d = mp.re(A[j, j]) - mp.fsum(
            (L[j, k] for k in range(j)), absolute=True, squared=True
        )
        if d <= 0:
            raise ValueError("matrix is not positive-definite")
        L[j, j] = mp.sqrt(d)
        for i in range(j + 1, n):
            t = mp.fsum(L[i, k] * mp.conj(L[j, k]) for k in range(j))
            L[i, j] = (A[i, j] - t) / L[j, j]
    return L
