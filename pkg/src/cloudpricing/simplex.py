"""Small dense phase-one simplex for feasibility questions.

Solves: does ``x >= 0`` exist with ``A_ge @ x >= b_ge`` and ``A_le @ x <= b_le``
(all ``b`` nonnegative)?  The system is put into standard equality form with
surplus/slack variables, artificials are attached to the >= rows, and the
artificial mass is minimized with Bland's rule (no cycling).  Problem sizes
here are desk scale, so a dense tableau is the simplest reliable choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PhaseOneResult", "phase_one"]

_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PhaseOneResult:
    """Outcome of the feasibility solve.

    ``x`` is a feasible point when ``feasible`` is true; otherwise it is the
    point minimizing total constraint violation, and ``ge_violations`` holds
    the residual shortfall of each >= row at that point.
    """

    feasible: bool
    x: np.ndarray
    total_violation: float
    ge_violations: np.ndarray


def phase_one(A_ge, b_ge, A_le, b_le, max_iter: int = 20000) -> PhaseOneResult:
    A_ge = np.atleast_2d(np.asarray(A_ge, dtype=float))
    A_le = np.atleast_2d(np.asarray(A_le, dtype=float))
    b_ge = np.atleast_1d(np.asarray(b_ge, dtype=float))
    b_le = np.atleast_1d(np.asarray(b_le, dtype=float))
    n_ge, n_le = b_ge.size, b_le.size
    n = A_ge.shape[1] if n_ge else A_le.shape[1]
    if (n_ge and A_ge.shape != (n_ge, n)) or (n_le and A_le.shape != (n_le, n)):
        raise ValueError("constraint matrices and right-hand sides disagree in shape")
    if np.any(b_ge < 0.0) or np.any(b_le < 0.0):
        raise ValueError("phase one expects nonnegative right-hand sides")

    rows = n_ge + n_le
    # columns: x | surplus (ge) | slack (le) | artificial (ge)
    cols = n + n_ge + n_le + n_ge
    T = np.zeros((rows + 1, cols + 1))
    art_start = n + n_ge + n_le

    for i in range(n_ge):
        T[i, :n] = A_ge[i]
        T[i, n + i] = -1.0
        T[i, art_start + i] = 1.0
        T[i, -1] = b_ge[i]
    for i in range(n_le):
        r = n_ge + i
        T[r, :n] = A_le[i]
        T[r, n + n_ge + i] = 1.0
        T[r, -1] = b_le[i]

    # objective: minimize sum of artificials; express in terms of non-basics
    T[-1, art_start : art_start + n_ge] = 1.0
    basis = [art_start + i for i in range(n_ge)] + [n + n_ge + i for i in range(n_le)]
    for i in range(n_ge):
        T[-1] -= T[i]

    scale = max(1.0, float(np.max(np.abs(b_ge))) if n_ge else 1.0)
    for _ in range(max_iter):
        reduced = T[-1, :cols]
        entering_candidates = np.nonzero(reduced < -_TOL * scale)[0]
        if entering_candidates.size == 0:
            break
        entering = int(entering_candidates[0])  # Bland's rule
        column = T[:rows, entering]
        positive = column > _TOL
        if not np.any(positive):
            break  # unbounded direction cannot arise in phase one, but stay safe
        ratios = np.full(rows, np.inf)
        ratios[positive] = T[:rows, -1][positive] / column[positive]
        best = np.min(ratios)
        # Bland ties break on the basic variable's index, not the row's
        leaving = min(
            (i for i in range(rows) if ratios[i] <= best + _TOL * (1.0 + best)),
            key=lambda i: basis[i],
        )
        pivot = T[leaving, entering]
        T[leaving] /= pivot
        for r in range(rows + 1):
            if r != leaving and abs(T[r, entering]) > 0.0:
                T[r] -= T[r, entering] * T[leaving]
        basis[leaving] = entering
    else:
        raise RuntimeError("phase-one simplex exceeded the iteration budget")

    x = np.zeros(n)
    artificials = np.zeros(n_ge)
    for row, col in enumerate(basis):
        value = T[row, -1]
        if col < n:
            x[col] = value
        elif col >= art_start:
            artificials[col - art_start] = value
    total = float(np.sum(artificials))
    return PhaseOneResult(
        feasible=total <= _TOL * scale * max(1, n_ge),
        x=x,
        total_violation=total,
        ge_violations=artificials,
    )
