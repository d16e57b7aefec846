"""Exact Smith normal form of integer matrices, with the transforms tracked.

The reduction keeps U * M * V = D at every step, with U and V unimodular and D
diagonal whose entries satisfy the divisibility chain d1 | d2 | ...  Pivoting
always selects a smallest-magnitude nonzero entry, which keeps coefficient
growth tame on incidence-style matrices.

Arithmetic runs on int64 with an overflow guard; if any intermediate value
approaches the guard bound the whole reduction restarts on Python integers
(numpy object dtype), so results are exact for arbitrary inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SNFResult", "smith_normal_form", "solve_integer"]

_GUARD = 1 << 20


@dataclass
class SNFResult:
    """U @ M @ V = D with U, V unimodular; divisors is the nonzero diagonal."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    Uinv: np.ndarray
    Vinv: np.ndarray
    rank: int
    divisors: tuple[int, ...]


class _Overflow(Exception):
    pass


def _reduce(M: np.ndarray, guard: bool) -> SNFResult:
    A = M.copy()
    m, n = A.shape
    dt = A.dtype
    U = np.eye(m, dtype=dt)
    Ui = np.eye(m, dtype=dt)
    V = np.eye(n, dtype=dt)
    Vi = np.eye(n, dtype=dt)

    def check() -> None:
        if guard and max(
            (np.abs(A).max(initial=0), np.abs(U).max(initial=0), np.abs(V).max(initial=0))
        ) > _GUARD:
            raise _Overflow

    def row_add(dst: int, src: int, q) -> None:
        # A <- R A with R adding -q*src to dst; U <- R U; Ui <- Ui R^-1
        A[dst] -= q * A[src]
        U[dst] -= q * U[src]
        Ui[:, src] += q * Ui[:, dst]

    def col_add(dst: int, src: int, q) -> None:
        A[:, dst] -= q * A[:, src]
        V[:, dst] -= q * V[:, src]
        Vi[src] += q * Vi[dst]

    def row_swap(a: int, b: int) -> None:
        A[[a, b]] = A[[b, a]]
        U[[a, b]] = U[[b, a]]
        Ui[:, [a, b]] = Ui[:, [b, a]]

    def col_swap(a: int, b: int) -> None:
        A[:, [a, b]] = A[:, [b, a]]
        V[:, [a, b]] = V[:, [b, a]]
        Vi[[a, b]] = Vi[[b, a]]

    def row_neg(a: int) -> None:
        A[a] = -A[a]
        U[a] = -U[a]
        Ui[:, a] = -Ui[:, a]

    t = 0
    while t < min(m, n):
        sub = A[t:, t:]
        nz = np.nonzero(sub)
        if nz[0].size == 0:
            break
        mags = np.abs(sub[nz])
        k = int(np.argmin(mags))
        pi, pj = int(nz[0][k]) + t, int(nz[1][k]) + t
        if pi != t:
            row_swap(t, pi)
        if pj != t:
            col_swap(t, pj)
        if A[t, t] < 0:
            row_neg(t)
        # clear row and column t, re-pivoting while remainders appear
        while True:
            done = True
            for i in range(t + 1, m):
                if A[i, t] != 0:
                    q = A[i, t] // A[t, t]
                    row_add(i, t, q)
                    if A[i, t] != 0:
                        row_swap(t, i)
                        if A[t, t] < 0:
                            row_neg(t)
                        done = False
            for j in range(t + 1, n):
                if A[t, j] != 0:
                    q = A[t, j] // A[t, t]
                    col_add(j, t, q)
                    if A[t, j] != 0:
                        col_swap(t, j)
                        if A[t, t] < 0:
                            row_neg(t)
                        done = False
            check()
            if done:
                break
        # enforce divisibility of the remaining block by the pivot
        rem = A[t + 1 :, t + 1 :]
        if rem.size and A[t, t] != 0:
            bad = np.nonzero(rem % A[t, t])
            if bad[0].size:
                row_add(t, t + 1 + int(bad[0][0]), dt.type(-1) if dt != object else -1)
                continue
        t += 1
    rank = t
    divisors = tuple(int(A[i, i]) for i in range(rank))
    D = np.zeros_like(A)
    for i in range(rank):
        D[i, i] = A[i, i]
    return SNFResult(U, D, V, Ui, Vi, rank, divisors)


def smith_normal_form(M) -> SNFResult:
    """Exact Smith normal form of an integer matrix (any shape, including empty)."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    try:
        Mi = M.astype(np.int64)
        if not np.array_equal(Mi, M):
            raise _Overflow
        return _reduce(Mi, guard=True)
    except (_Overflow, OverflowError):
        Mo = np.empty(M.shape, dtype=object)
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                Mo[i, j] = int(M[i, j])
        return _reduce(Mo, guard=False)


def solve_integer(snf: SNFResult, c: np.ndarray, modulus: int | None = None):
    """Solve M x = c (over Z, or mod `modulus`) given the SNF of M.

    Returns (x, None) on success or (None, obstruction) where the obstruction
    is the (index, residue) coordinate of c's class in the cokernel.
    """
    c = np.asarray(c)
    y = snf.U.astype(object) @ c.astype(object)
    m = snf.D.shape[0]
    w = np.zeros(snf.D.shape[1], dtype=object)
    for i in range(m):
        d = int(snf.D[i, i]) if i < min(snf.D.shape) else 0
        yi = int(y[i])
        if modulus is not None:
            d, yi = d % modulus, yi % modulus
        if i < snf.rank:
            if modulus is None:
                if yi % int(snf.D[i, i]) != 0:
                    return None, (i, yi % int(snf.D[i, i]))
                w[i] = yi // int(snf.D[i, i])
            else:
                di = int(snf.D[i, i])
                sol = _mod_solve(di, yi, modulus)
                if sol is None:
                    return None, (i, yi)
                w[i] = sol
        else:
            if yi != 0:
                return None, (i, yi)
    x = snf.V.astype(object) @ w
    if modulus is not None:
        x = x % modulus
    return x, None


def _mod_solve(a: int, b: int, mod: int):
    """Smallest x with a*x = b (mod mod), or None."""
    a, b = a % mod, b % mod
    for x in range(mod):
        if (a * x) % mod == b:
            return x
    return None
