"""Two-qubit entanglement measures: Wootters concurrence and negativity."""

from __future__ import annotations

import mpmath
import numpy as np

from .dynamics import XState, check_density_matrix

# sigma_y (x) sigma_y in the (EE, EG, GE, GG) basis
SIGMA_YY = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)

# working precision for the density-matrix factorization
_FACTOR_DPS = 40
# entries off the X pattern below this are treated as rounding noise
X_PATTERN_TOL = 1e-12

_OFF_X = np.ones((4, 4), dtype=bool)
_OFF_X[np.diag_indices(4)] = False
_OFF_X[1, 2] = _OFF_X[2, 1] = False


def _factor_columns(rho: np.ndarray) -> list[list]:
    """Diagonally pivoted Cholesky ``rho = W W^dagger`` in extended precision.

    Exactly-zero (or slightly negative) Schur complements terminate the
    factorization, so rank-deficient states get an exact low-rank factor
    instead of ``sqrt(rounding noise)`` columns.
    """
    real = not np.any(np.imag(rho))
    with mpmath.workdps(_FACTOR_DPS):
        num = mpmath.mpf if real else mpmath.mpc
        conj = (lambda z: z) if real else mpmath.conj
        # lower triangle only; the matrix is Hermitian
        m = [[num(rho[i, j].real if real else complex(rho[i, j])) for j in range(i + 1)] for i in range(4)]
        scale = sum(abs(mpmath.re(m[i][i])) for i in range(4))
        floor = scale * mpmath.mpf(10) ** (-(_FACTOR_DPS - 10))
        cols = []
        live = list(range(4))
        while live:
            p = max(live, key=lambda i: mpmath.re(m[i][i]))
            d = mpmath.re(m[p][p])
            if d <= floor:
                break
            root = mpmath.sqrt(d)
            col = [mpmath.mpf(0)] * 4
            for i in live:
                col[i] = (m[i][p] if i >= p else conj(m[p][i])) / root
            cols.append(col)
            live.remove(p)
            for i in live:
                for j in live:
                    if j <= i:
                        m[i][j] -= col[i] * conj(col[j])
        return cols


def wootters_lambdas(rho: np.ndarray) -> np.ndarray:
    """Square roots of the eigenvalues of ``rho (sy x sy) rho* (sy x sy)``, descending.

    Computed as the singular values of ``W^T (sy x sy) W`` for a factor
    ``rho = W W^dagger``; that matrix is formed in extended precision so the
    smallest roots keep full absolute accuracy.
    """
    cols = _factor_columns(rho)
    lam = np.zeros(4)
    if not cols:
        return lam
    with mpmath.workdps(_FACTOR_DPS):
        r = len(cols)
        t = np.empty((r, r), dtype=complex)
        for k in range(r):
            wk = cols[k]
            for l in range(r):
                wl = cols[l]
                val = -wk[0] * wl[3] - wk[3] * wl[0] + wk[1] * wl[2] + wk[2] * wl[1]
                t[k, l] = complex(val)
    lam[:r] = np.linalg.svd(t, compute_uv=False)
    return np.sort(lam)[::-1]


def concurrence_general(rho: np.ndarray) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)`` of any two-qubit state."""
    return max(0.0, wootters_margin(rho))


def wootters_margin(rho: np.ndarray) -> float:
    """Unclamped ``l1 - l2 - l3 - l4``; negative for separable states."""
    rho = check_density_matrix(rho)
    lam = wootters_lambdas(rho)
    return float(lam[0] - lam[1] - lam[2] - lam[3])


def concurrence_x(x: XState):
    """Concurrence of an X-state, ``max(0, 2 (min(E, sqrt(B C)) - sqrt(A D)))``.

    Works elementwise when the X-state fields are arrays.
    """
    value = np.maximum(0.0, x_margin(x))
    return float(value) if value.ndim == 0 else value


def x_margin(x: XState) -> np.ndarray:
    """Unclamped ``2 (min(E, sqrt(B C)) - sqrt(A D))``."""
    a, b, c, d, e = (np.asarray(v, dtype=float) for v in x.astuple())
    root_bc = np.sqrt(np.clip(b * c, 0.0, None))
    root_ad = np.sqrt(np.clip(a * d, 0.0, None))
    return 2.0 * (np.minimum(e, root_bc) - root_ad)


def is_entangled_x(x: XState, tol: float = 1e-12) -> bool:
    """Emergence condition ``min(E, sqrt(B C)) > sqrt(A D)`` for an X-state."""
    a, b, c, d, e = (float(v) for v in x.astuple())
    return min(e, np.sqrt(max(b * c, 0.0))) > np.sqrt(max(a * d, 0.0)) + tol


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose the second atom; accepts a single matrix or a stack."""
    rho = np.asarray(rho)
    r = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    return np.swapaxes(r, -3, -1).reshape(rho.shape)


def negativity(rho: np.ndarray):
    """``-2 * (sum of negative eigenvalues of the partial transpose)``.

    A stack of matrices returns an array.
    """
    mu = np.linalg.eigvalsh(partial_transpose(rho))
    value = -2.0 * np.where(mu < 0.0, mu, 0.0).sum(axis=-1)
    return float(value) if value.ndim == 0 else value


def is_x_shaped(rho: np.ndarray, tol: float = X_PATTERN_TOL):
    rho = np.asarray(rho)
    return np.max(np.abs(rho[..., _OFF_X]), axis=-1) <= tol


def margin(rho: np.ndarray):
    """Unclamped Wootters margin of a state or stack of states.

    Matrices whose only entries outside the X pattern are rounding noise
    take the X-state formula; everything else goes through the general
    Wootters computation.
    """
    rho = np.asarray(rho)
    flat = rho.reshape(-1, 4, 4)
    out = np.empty(flat.shape[0])
    mask = is_x_shaped(flat)
    if mask.any():
        out[mask] = x_margin(XState.from_matrix(flat[mask]))
    for k in np.flatnonzero(~mask):
        out[k] = wootters_margin(flat[k])
    out = out.reshape(rho.shape[:-2])
    return float(out) if out.ndim == 0 else out


def concurrence(rho: np.ndarray):
    """Concurrence of a state or stack of states (see ``margin`` for the dispatch)."""
    value = np.maximum(0.0, margin(rho))
    return float(value) if np.ndim(value) == 0 else value
