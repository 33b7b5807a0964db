"""Small dense SDP solvers used by the coherence measures.

Three routines live here:

* :func:`solve_diagonal` -- log-barrier Newton method for

      minimize  k
      s.t.      diag(d) >= S,   sum_alpha d[j, alpha] = k  for every block j

  (``objective="max_block"``), or for the variant that minimizes the mean
  block sum ``sum(d) / |A|`` with no equality constraints
  (``objective="mean_block"``).  Both return a dual certificate.
* :func:`bisection_feasibility` -- an independent path to the same
  ``max_block`` optimum: bisection on ``k`` where each feasibility question
  is answered by maximizing ``lambda_min(diag(d) - S)`` over the affine set
  of block sums ``k`` (smoothed spectral Newton ascent).
* :func:`solve_discrimination` -- barrier Newton method for
  ``min tr Y  s.t.  Y >= E_k``; the dual certificate is an optimal POVM.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from . import linalg
from .config import DEFAULT
from .errors import SolverError, ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "DiagonalSdpProblem",
    "SdpSolution",
    "DiscriminationResult",
    "solve_diagonal",
    "bisection_feasibility",
    "max_min_eigenvalue",
    "solve_discrimination",
]

OBJECTIVES = ("max_block", "mean_block")


@dataclass(frozen=True, eq=False)
class DiagonalSdpProblem:
    s_matrix: np.ndarray
    dim_a: int
    dim_b: int
    objective: str = "max_block"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        n = self.dim_a * self.dim_b
        s = linalg.as_matrix(self.s_matrix, "s_matrix")
        if s.shape != (n, n):
            raise ValidationError(f"s_matrix must be {n}x{n}, got {s.shape}")
        linalg.hermitian_eig(s)  # raises if not Hermitian
        s = linalg.hermitian_part(s)
        if not linalg.is_psd(s, DEFAULT.psd):
            raise ValidationError("s_matrix must be positive semidefinite")
        s = np.array(s)
        s.flags.writeable = False
        object.__setattr__(self, "s_matrix", s)

    @property
    def size(self) -> int:
        return self.dim_a * self.dim_b


@dataclass(frozen=True, eq=False)
class SdpSolution:
    """Primal optimum and dual certificate of a :class:`DiagonalSdpProblem`.

    For ``max_block`` the dual matrix ``Z`` is PSD with diagonal constant on
    each block; the block values ``block_weights`` sum to one and the dual
    objective is ``tr(S Z)``.  For ``mean_block`` the dual matrix ``X`` is
    PSD with unit diagonal and the dual objective is ``tr(S X) / |A|``.
    """

    primal_value: float
    d: np.ndarray
    dual_matrix: np.ndarray
    dual_value: float
    block_weights: np.ndarray
    gap: float
    iterations: int
    objective: str
    trace: list = field(default_factory=list, repr=False)


class _Affine(NamedTuple):
    """``d = mat @ x + offset`` together with the linear cost ``cost @ x``."""

    mat: np.ndarray
    offset: np.ndarray
    cost: np.ndarray


def _parametrization(dim_a: int, dim_b: int, objective: str) -> _Affine:
    n = dim_a * dim_b
    if objective == "mean_block":
        return _Affine(np.eye(n), np.zeros(n), np.full(n, 1.0 / dim_a))
    # x = (k, free entries of each block); last entry of block j is k - sum(free)
    m = 1 + dim_a * (dim_b - 1)
    mat = np.zeros((n, m))
    col = 1
    for j in range(dim_a):
        last = j * dim_b + dim_b - 1
        mat[last, 0] = 1.0
        for a in range(dim_b - 1):
            mat[j * dim_b + a, col] = 1.0
            mat[last, col] = -1.0
            col += 1
    cost = np.zeros(m)
    cost[0] = 1.0
    return _Affine(mat, np.zeros(n), cost)


def _initial_x(p: DiagonalSdpProblem, param: _Affine) -> np.ndarray:
    lam = max(linalg.hermitian_eig(p.s_matrix).eigenvalues[-1], 0.0)
    level = 2.0 * lam if lam > 0 else 1.0
    if p.objective == "mean_block":
        return np.full(p.size, level)
    x = np.full(param.mat.shape[1], level)
    x[0] = p.dim_b * level
    return x


def _chol(m: np.ndarray):
    try:
        return scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None


def _logdet(m: np.ndarray) -> float:
    c = _chol(m)
    if c is None:
        return -np.inf
    return 2.0 * float(np.sum(np.log(np.abs(np.diag(c[0])))))


def _newton_step(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve ``hess @ step = -grad`` after symmetric diagonal scaling."""
    scale = 1.0 / np.sqrt(np.clip(np.diag(hess), np.finfo(float).tiny, None))
    h = hess * np.outer(scale, scale)
    g = grad * scale
    c = _chol(h)
    if c is None:
        step = -np.linalg.lstsq(h, g, rcond=None)[0]
    else:
        step = -scipy.linalg.cho_solve(c, g, check_finite=False)
    return step * scale


def _line_search(phi, dec2: float) -> float:
    """Backtracking on the barrier *change* ``phi(step)``; 0.0 if no decrease is found."""
    step = 1.0
    while step > 1e-14:
        change = phi(step)
        if change <= -0.25 * step * dec2 or (change <= 0 and dec2 < 1e-9):
            return step
        step *= 0.5
    return 0.0


_INNER_STEPS = 50


def _normalize_dual(p: DiagonalSdpProblem, z: np.ndarray):
    """Turn a PSD matrix into a feasible dual point by padding or congruence."""
    z = linalg.hermitian_part(z)
    diag = np.diag(z).real
    if p.objective == "max_block":
        blocks = diag.reshape(p.dim_a, p.dim_b)
        y = blocks.max(axis=1)
        z = z + np.diag((y[:, None] - blocks).reshape(-1))
        total = y.sum()
        z, y = z / total, y / total
        return z, float(np.trace(p.s_matrix @ z).real), y
    # congruence by diag(z)^-1/2 gives unit diagonal while keeping X PSD
    scale = 1.0 / np.sqrt(np.clip(diag, np.finfo(float).tiny, None))
    x = linalg.hermitian_part(z * np.outer(scale, scale))
    x[np.diag_indices_from(x)] = 1.0
    return x, float(np.trace(p.s_matrix @ x).real) / p.dim_a, np.full(p.dim_a, 1.0 / p.dim_a)


def _polished_dual(p: DiagonalSdpProblem, f: np.ndarray, z0: np.ndarray, t: float):
    """Dual point supported on the near-kernel of ``F = diag d - S``.

    Near the optimum the barrier matrix ``W / t`` is dominated by the
    eigenvectors of ``F`` with eigenvalues of order ``1/t``, whose values
    are resolved only to relative accuracy ``eps * t``.  Compressing onto
    that subspace and restoring the diagonal constraints with a least-norm
    correction removes most of this noise.  Returns None when the
    correction breaks positivity.
    """
    lam, v = np.linalg.eigh(f)
    vr = v[:, lam * t <= 1e4]
    r = vr.shape[1]
    if r == 0:
        return None
    g0 = linalg.hermitian_part(vr.conj().T @ z0 @ vr)
    # real coordinates of a Hermitian r x r matrix
    iu = np.triu_indices(r, 1)
    basis = []
    for i in range(r):
        e = np.zeros((r, r), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i, j in zip(*iu):
        e = np.zeros((r, r), dtype=complex)
        e[i, j] = e[j, i] = 1.0
        basis.append(e)
        e = np.zeros((r, r), dtype=complex)
        e[i, j], e[j, i] = 1j, -1j
        basis.append(e)
    cols = np.array([np.einsum("ij,jk,ik->i", vr, b, vr.conj()).real for b in basis]).T
    n = p.size
    if p.objective == "max_block":
        # unknowns (g, y): diag(V G V^H) - expand(y) = 0 and sum(y) = 1
        expand = np.kron(np.eye(p.dim_a), np.ones((p.dim_b, 1)))
        a = np.block([[cols, -expand], [np.zeros((1, cols.shape[1])), np.ones((1, p.dim_a))]])
        diag0 = np.diag(z0).real.reshape(p.dim_a, p.dim_b)
        y0 = diag0.mean(axis=1)
        rhs = np.concatenate([np.zeros(n), [1.0]])
    else:
        a = cols
        y0 = np.zeros(0)
        rhs = np.ones(n)
    coords0 = np.concatenate([[g0[i, i].real for i in range(r)],
                              np.ravel([[g0[i, j].real, g0[i, j].imag] for i, j in zip(*iu)])
                              if r > 1 else np.zeros(0)])
    if p.objective == "mean_block":
        # the barrier iterate is scaled by |A| for this objective
        coords0 = coords0 * p.dim_a
    u0 = np.concatenate([coords0, y0])
    resid = rhs - a @ u0
    du = np.linalg.lstsq(a, resid, rcond=None)[0]
    if np.linalg.norm(a @ du - resid) > 1e-10 * max(1.0, np.linalg.norm(rhs)):
        return None
    u = u0 + du
    g = sum(c * b for c, b in zip(u[: len(basis)], basis))
    w = np.linalg.eigvalsh(g)
    if w[0] < -1e-12 * max(1.0, w[-1]):
        return None
    if w[0] < 0:
        g = g - w[0] * np.eye(r)
    return _normalize_dual(p, vr @ g @ vr.conj().T)


def _diag_dual(p: DiagonalSdpProblem, w: np.ndarray, t: float, f: np.ndarray | None = None):
    """Feasible dual certificate from the barrier matrix ``W = (diag d - S)^-1``."""
    z0 = linalg.hermitian_part(w) / t
    best = _normalize_dual(p, z0)
    if f is not None:
        cand = _polished_dual(p, f, z0, t)
        if cand is not None and cand[1] > best[1]:
            best = cand
    return best


def solve_diagonal(
    p: DiagonalSdpProblem,
    tol: float | None = None,
    max_iter: int = 500,
    verbose: bool = False,
) -> SdpSolution:
    """Log-barrier Newton solve of the diagonal coherence SDP.

    Starts from ``d = 2 lambda_max(S)`` everywhere, multiplies the barrier
    weight ``t = 1/mu`` by 10 per outer iteration and stops when the
    certified duality gap is below ``tol * max(1, primal)``.  ``max_iter``
    caps the total number of Newton steps.
    """
    tol = DEFAULT.solver_gap if tol is None else tol
    s = p.s_matrix
    n = p.size
    param = _parametrization(p.dim_a, p.dim_b, p.objective)
    x = _initial_x(p, param)
    t = 1.0
    newton_steps = 0
    trace = []
    outer = 0
    while True:
        outer += 1
        # centering; a fixed inner budget guards against stalls near the
        # precision floor, the dual certificate stays valid either way
        for _ in range(_INNER_STEPS):
            d = param.mat @ x + param.offset
            f = np.diag(d).astype(complex) - s
            c = _chol(f)
            if c is None:
                raise SolverError("barrier iterate left the feasible region")
            w = scipy.linalg.cho_solve(c, np.eye(n, dtype=complex), check_finite=False)
            grad = t * param.cost - param.mat.T @ np.diag(w).real
            hess = param.mat.T @ (np.abs(w) ** 2) @ param.mat
            dx = _newton_step(hess, grad)
            dec2 = float(-grad @ dx)
            if dec2 <= 1e-10:
                break
            newton_steps += 1
            if newton_steps > max_iter:
                raise SolverError(f"solve_diagonal: iteration cap {max_iter} exceeded")
            base = _logdet(f)

            def change(step):
                dn = param.mat @ (x + step * dx) + param.offset
                return t * float(param.cost @ (step * dx)) - (_logdet(np.diag(dn).astype(complex) - s) - base)

            step = _line_search(change, dec2)
            if step == 0.0:
                break
            x = x + step * dx
        primal = float(param.cost @ x)
        z, dual, y = _diag_dual(p, w, t, f)
        gap = primal - dual
        trace.append((outer, 1.0 / t, primal, dual, gap))
        if verbose:
            logger.info("iter %3d  mu %.3e  primal %.12f  dual %.12f  gap %.3e", *trace[-1])
        if gap <= tol * max(1.0, abs(primal)):
            break
        t *= 10.0
        if t > 1e16:
            raise SolverError(f"solve_diagonal: gap {gap:.3e} did not reach tolerance {tol:.1e}")
    d = param.mat @ x + param.offset
    return SdpSolution(
        primal_value=primal,
        d=d,
        dual_matrix=z,
        dual_value=dual,
        block_weights=y,
        gap=abs(gap),
        iterations=newton_steps,
        objective=p.objective,
        trace=trace,
    )


# --------------------------------------------------------------------------
# bisection path
# --------------------------------------------------------------------------


def _block_zero_sum_basis(dim_a: int, dim_b: int) -> np.ndarray:
    """Orthonormal basis (columns) of vectors whose block sums vanish."""
    n = dim_a * dim_b
    if dim_b == 1:
        return np.zeros((n, 0))
    # orthonormal complement of the all-ones vector in R^{dim_b}
    q, _ = np.linalg.qr(np.column_stack([np.ones(dim_b), np.eye(dim_b)[:, : dim_b - 1]]))
    local = q[:, 1:]
    return np.kron(np.eye(dim_a), local)


def _softmin_parts(m: np.ndarray, mu: float):
    w, v = np.linalg.eigh(m)
    shifted = w - w[0]
    f = np.exp(-shifted / mu)
    z = f.sum()
    value = w[0] - mu * np.log(z)
    rho_diag = (np.abs(v) ** 2) @ f / z
    return w, v, f, z, value, rho_diag


def _softmin_hessian(w, v, f, z, rho_diag, mu):
    # divided differences of exp(-x/mu), written from the smaller eigenvalue to avoid overflow
    gap = np.abs(w[:, None] - w[None, :])
    f_low = np.maximum(f[:, None], f[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(gap > 0, f_low * np.expm1(-gap / mu) / gap, -f_low / mu)
    q = (v[:, :, None] * v.conj()[:, None, :]).reshape(v.shape[0], -1)
    g = (q * gamma.reshape(-1)) @ q.conj().T
    return g.real / z + np.outer(rho_diag, rho_diag) / mu


def max_min_eigenvalue(s_matrix, dim_a: int, dim_b: int, k: float, z0=None, mu_min: float = 1e-13):
    """Decide whether some ``d`` with block sums ``k`` has ``diag(d) >= S``.

    Maximizes the smoothed smallest eigenvalue
    ``-mu log tr exp(-(diag(d) - S)/mu)`` by Newton ascent, shrinking ``mu``
    tenfold per stage.  Returns ``(feasible, lambda_min, z)`` where ``z`` are
    the block-zero-sum coordinates of the last iterate (for warm starts).
    The sign of ``lambda_min`` decides feasibility; ``d >= 0`` holds
    automatically once ``diag(d) >= S``.
    """
    s = linalg.as_matrix(s_matrix)
    n = dim_a * dim_b
    basis = _block_zero_sum_basis(dim_a, dim_b)
    center = np.full(n, k / dim_b)
    z = np.zeros(basis.shape[1]) if z0 is None else np.array(z0, dtype=float)
    scale = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(s)))), abs(k))
    log_n = np.log(n)

    def evaluate(zz, mu):
        return _softmin_parts(np.diag(center + basis @ zz) - s, mu)

    lam_min = np.linalg.eigvalsh(np.diag(center + basis @ z) - s)[0]
    if lam_min >= 0:
        return True, float(lam_min), z
    if basis.shape[1] == 0:
        return False, float(lam_min), z
    mu = 0.1 * scale
    while mu >= mu_min * scale:
        for _ in range(100):
            w, v, f, zz, value, rho = evaluate(z, mu)
            grad = basis.T @ rho
            hess = basis.T @ _softmin_hessian(w, v, f, zz, rho, mu) @ basis
            neg = -hess
            reg = 1e-14 * max(1.0, np.max(np.abs(np.diag(neg))))
            try:
                dz = np.linalg.solve(neg + reg * np.eye(len(z)), grad)
            except np.linalg.LinAlgError:
                dz = np.linalg.lstsq(neg, grad, rcond=None)[0]
            dec2 = float(grad @ dz)
            step = 1.0
            limit = 10.0 * scale
            norm = np.linalg.norm(dz)
            if norm > limit:
                step = limit / norm
            while step > 1e-12:
                cand = z + step * dz
                if evaluate(cand, mu)[4] >= value + 0.25 * step * dec2 - 1e-15 * scale:
                    break
                step *= 0.5
            z = z + step * dz if step > 1e-12 else z
            if dec2 <= 1e-14 * scale or step <= 1e-12:
                break
        w_now = evaluate(z, mu)
        lam_min = w_now[0][0]
        if lam_min >= 0:
            return True, float(lam_min), z
        # upper bound on the true maximum of lambda_min at this smoothing level
        if w_now[4] + mu * log_n + max(dec2, 0.0) < 0:
            return False, float(lam_min), z
        mu *= 0.1
    return bool(lam_min >= 0), float(lam_min), z


def bisection_feasibility(s_matrix, dim_a: int, dim_b: int, tol: float = 1e-9, max_iter: int = 200) -> float:
    """Optimal common block sum ``k*`` by bisection on ``k``.

    The bracket starts at ``[max_j tr(S_jj), |B| lambda_max(S)]``: every
    feasible ``d`` dominates ``diag(S)``, and the constant vector
    ``lambda_max(S)`` is feasible.  Returns the feasible end of the final
    bracket, whose width is at most ``tol * max(1, k)``.
    """
    s = linalg.hermitian_part(s_matrix)
    n = dim_a * dim_b
    if s.shape != (n, n):
        raise ValidationError(f"s_matrix must be {n}x{n}")
    diag = np.diag(s).real.reshape(dim_a, dim_b)
    lo = float(diag.sum(axis=1).max())
    lam_max = float(np.linalg.eigvalsh(s)[-1])
    hi = max(dim_b * lam_max, lo)
    if max_min_eigenvalue(s, dim_a, dim_b, lo)[0]:
        return lo
    z = None
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, hi):
            return hi
        mid = 0.5 * (lo + hi)
        ok, _, z = max_min_eigenvalue(s, dim_a, dim_b, mid, z0=z)
        if ok:
            hi = mid
        else:
            lo = mid
    raise SolverError("bisection_feasibility: iteration cap exceeded")


# --------------------------------------------------------------------------
# discrimination SDP
# --------------------------------------------------------------------------


class DiscriminationResult(NamedTuple):
    value: float  # success probability achieved by ``effects``
    effects: list
    upper_bound: float  # primal value tr(Y)
    gap: float
    iterations: int


def _hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n x n Hermitian matrices under Re tr(A B)."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    r = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = r
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = -1j * r, 1j * r
            basis.append(e)
    return np.array(basis)


def solve_discrimination(effects: Sequence, tol: float | None = None, max_iter: int = 400) -> DiscriminationResult:
    """Optimal discrimination of unnormalized ensemble members ``E_k``.

    Solves ``min tr Y s.t. Y >= E_k`` with the barrier
    ``t tr Y - sum_k log det(Y - E_k)`` from ``Y = sum E_k + delta I``.  At
    the final centered iterate ``Pi_k = (Y - E_k)^-1 / t`` sum to the
    identity; they are renormalized exactly and returned as the POVM.
    """
    tol = DEFAULT.solver_gap if tol is None else tol
    es = [linalg.hermitian_part(e) for e in effects]
    if not es:
        raise ValidationError("need at least one effect")
    n = es[0].shape[0]
    for e in es:
        if e.shape != (n, n):
            raise ValidationError("effects must share one dimension")
        if not linalg.is_psd(e, DEFAULT.psd):
            raise ValidationError("effects must be PSD")
    kk = len(es)
    if kk == 1:
        val = float(np.trace(es[0]).real)
        return DiscriminationResult(val, [np.eye(n, dtype=complex)], val, 0.0, 0)
    norms = [np.linalg.norm(e, 2) for e in es]
    if max(norms) == 0:
        povm = [np.eye(n, dtype=complex) / kk] * kk
        return DiscriminationResult(0.0, povm, 0.0, 0.0, 0)
    delta = 1e-3 * max(norms)
    basis = _hermitian_basis(n)
    nb = len(basis)
    tr_basis = np.trace(basis, axis1=1, axis2=2).real
    y = sum(es) + delta * np.eye(n)
    # coordinates of y
    coords = np.einsum("pij,ji->p", basis, y).real

    def to_mat(cs):
        return np.einsum("p,pij->ij", cs, basis)

    t = 1.0 / max(norms)
    steps = 0
    while True:
        for _ in range(_INNER_STEPS):
            ym = to_mat(coords)
            ws = []
            for e in es:
                c = _chol(ym - e)
                if c is None:
                    raise SolverError("discrimination barrier left the feasible region")
                ws.append(scipy.linalg.cho_solve(c, np.eye(n, dtype=complex), check_finite=False))
            wsum = sum(ws)
            grad = t * tr_basis - np.einsum("pij,ji->p", basis, wsum).real
            hess = np.zeros((nb, nb))
            for w in ws:
                wb = np.einsum("ij,pjk->pik", w, basis)
                hess += np.einsum("pij,qji->pq", wb, wb).real
            dc = _newton_step(hess, grad)
            dec2 = float(-grad @ dc)
            if dec2 <= 1e-10:
                break
            steps += 1
            if steps > max_iter:
                raise SolverError(f"solve_discrimination: iteration cap {max_iter} exceeded")
            base = sum(_logdet(ym - e) for e in es)

            def change(step):
                yn = to_mat(coords + step * dc)
                return t * float(tr_basis @ (step * dc)) - (sum(_logdet(yn - e) for e in es) - base)

            step = _line_search(change, dec2)
            if step == 0.0:
                break
            coords = coords + step * dc
        primal = float(np.trace(ym).real)
        povm = [linalg.hermitian_part(w) / t for w in ws]
        total = sum(povm)
        ev, vec = np.linalg.eigh(total)
        inv_sqrt = (vec / np.sqrt(ev)) @ vec.conj().T
        povm = [linalg.hermitian_part(inv_sqrt @ p_ @ inv_sqrt) for p_ in povm]
        dual = float(sum(np.trace(p_ @ e).real for p_, e in zip(povm, es)))
        gap = primal - dual
        if gap <= tol * max(1.0, primal):
            break
        t *= 10.0
        if t > 1e16 / max(norms):
            raise SolverError(f"solve_discrimination: gap {gap:.3e} did not reach tolerance {tol:.1e}")
    return DiscriminationResult(dual, povm, primal, abs(gap), steps)
