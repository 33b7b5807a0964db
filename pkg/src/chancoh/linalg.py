"""Dense complex matrix helpers: Kronecker products, partial traces and
spectral functions of Hermitian matrices.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  All
functions are pure; none of them mutate their arguments.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .config import DEFAULT
from .errors import ValidationError

__all__ = [
    "HermitianEig",
    "as_matrix",
    "kron",
    "partial_trace",
    "hermitian_eig",
    "jacobi_eigh",
    "psd_sqrt",
    "pinv_sqrt",
    "is_psd",
    "hermitian_part",
    "matrix_to_json",
    "matrix_from_json",
]


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # columns orthonormal


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def partial_trace(m, dim_a: int, dim_b: int, which: str = "B") -> np.ndarray:
    """Trace out subsystem ``which`` ('A' or 'B') of an operator on A⊗B."""
    m = as_matrix(m)
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise ValidationError(
            f"partial_trace: expected {n}x{n} matrix for dims ({dim_a},{dim_b}), got {m.shape}"
        )
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    which = which.upper()
    if which == "B":
        return np.einsum("ijkj->ik", t)
    if which == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"which must be 'A' or 'B', got {which!r}")


def hermitian_part(h) -> np.ndarray:
    h = as_matrix(h)
    return 0.5 * (h + h.conj().T)


def _check_hermitian(h: np.ndarray, tol: float) -> np.ndarray:
    if h.shape[0] != h.shape[1]:
        raise ValidationError(f"matrix must be square, got {h.shape}")
    scale = max(1.0, np.linalg.norm(h))
    if np.linalg.norm(h - h.conj().T) > tol * scale:
        raise ValidationError("matrix is not Hermitian within tolerance")
    return 0.5 * (h + h.conj().T)


def jacobi_eigh(h, tol: float = 1e-14, max_sweeps: int = 100) -> HermitianEig:
    """Cyclic complex Jacobi eigensolver for a Hermitian matrix.

    Each rotation first removes the phase of the pivot ``h[p, q]`` and then
    applies the real symmetric 2x2 rotation that zeroes it.  Sweeps stop
    once the off-diagonal Frobenius mass drops below ``tol * ||h||_F``.
    """
    a = np.array(hermitian_part(h), dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                theta = 0.5 * np.arctan2(2.0 * r, (a[q, q] - a[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                # U acts on the (p, q) plane: columns (c, -s*conj(phase)) and (s*phase, c) scaled
                up = np.array([c, -s * np.conj(phase)])
                uq = np.array([s * phase, c])
                u2 = np.column_stack([up, uq])  # 2x2 block of U with rows (p, q)
                cols = a[:, [p, q]] @ u2
                a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
                rows = u2.conj().T @ a[[p, q], :]
                a[p, :], a[q, :] = rows[0], rows[1]
                a[p, q] = a[q, p] = 0.0
                vc = v[:, [p, q]] @ u2
                v[:, p], v[:, q] = vc[:, 0], vc[:, 1]
    else:
        raise ValidationError("jacobi_eigh did not converge")
    w = np.diag(a).real
    order = np.argsort(w)
    return HermitianEig(w[order], v[:, order])


def hermitian_eig(h, tol: float | None = None, method: str = "lapack") -> HermitianEig:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized before solving; it must be Hermitian to within
    ``tol`` relative Frobenius norm.  ``method`` selects LAPACK (default) or
    the pure-Python cyclic Jacobi solver.
    """
    tol = DEFAULT.hermitian if tol is None else tol
    hs = _check_hermitian(as_matrix(h), tol)
    if method == "jacobi":
        return jacobi_eigh(hs)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    w, v = np.linalg.eigh(hs)
    return HermitianEig(w, v)


def _clamped_spectrum(h, tol: float | None, what: str) -> HermitianEig:
    tol = DEFAULT.psd if tol is None else tol
    w, v = hermitian_eig(h)
    top = max(np.max(np.abs(w), initial=0.0), 0.0)
    if w.size and w[0] < -tol * max(top, 1e-300):
        raise ValidationError(f"{what}: eigenvalue {w[0]:.3e} is significantly negative")
    return HermitianEig(np.clip(w, 0.0, None), v)


def psd_sqrt(h, tol: float | None = None) -> np.ndarray:
    """Principal square root of a PSD matrix; tiny negative eigenvalues are clamped."""
    w, v = _clamped_spectrum(h, tol, "psd_sqrt")
    return (v * np.sqrt(w)) @ v.conj().T


def pinv_sqrt(h, support_tol: float = 1e-12, tol: float | None = None):
    """Pseudo-inverse square root of a PSD matrix and the projector onto its support.

    Eigenvalues above ``support_tol * lambda_max`` define the support.
    Returns ``(h^{-1/2} on the support, support projector)``.
    """
    w, v = _clamped_spectrum(h, tol, "pinv_sqrt")
    n = w.size
    top = w[-1] if n else 0.0
    if top <= 0.0:
        z = np.zeros((n, n), dtype=complex)
        return z, z.copy()
    keep = w > support_tol * top
    vk = v[:, keep]
    return (vk / np.sqrt(w[keep])) @ vk.conj().T, vk @ vk.conj().T


def is_psd(h, tol: float | None = None) -> bool:
    """True iff ``lambda_min(h) >= -tol * max(1, lambda_max(|h|))``."""
    tol = DEFAULT.psd if tol is None else tol
    w = hermitian_eig(h).eigenvalues
    if w.size == 0:
        return True
    return bool(w[0] >= -tol * max(1.0, np.max(np.abs(w))))


def matrix_to_json(m) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    m = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data: Sequence, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: entries must be [re, im] number pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValidationError(f"{name}: expected nested rows of [re, im] pairs, got shape {arr.shape}")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1], name)
