"""Quantum channels stored by their Choi matrices.

The Choi matrix of a channel ``A -> B`` is

    J = sum_{jk} |j><k| ⊗ phi(|j><k|),

an ``(|A||B|) x (|A||B|)`` matrix with the input system first.  The
reference (incoherent) basis is the computational product basis
``|j alpha>``, so incoherent channels are exactly those with diagonal Choi
matrices.
"""
from __future__ import annotations

import json
from dataclasses import InitVar, dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .config import DEFAULT
from .errors import ValidationError

__all__ = [
    "Channel",
    "PureChannel",
    "ChannelState",
    "channel_from_kraus",
    "dephase",
    "is_incoherent",
    "maximally_coherent",
    "maximally_coherent_vector",
    "pure_channel",
    "fidelity",
    "uhlmann_fidelity",
    "mix",
    "random_channel",
    "random_incoherent_channel",
    "random_pure_state",
    "identity_channel",
    "dephasing_channel",
    "c_l1",
    "channel_to_json",
    "channel_from_json",
    "load_channel",
    "save_channel",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Channel:
    """A channel ``A -> B`` given by its Choi matrix.

    Construction checks that the Choi matrix is Hermitian, PSD and has trace
    ``|A|``.  With ``strict=True`` (the default) it must also be trace
    preserving, ``tr_B J = I_A``.  Operators that only satisfy the trace
    condition (maximally coherent phase states with arbitrary phases,
    normalized branches of a selective superchannel) are built with
    ``strict=False``; :attr:`trace_preserving` reports which case holds.
    """

    dim_a: int
    dim_b: int
    choi: np.ndarray
    strict: InitVar[bool] = True
    tol: InitVar[float | None] = None
    trace_preserving: bool = field(init=False)

    def __post_init__(self, strict, tol):
        tol = DEFAULT.channel if tol is None else tol
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValidationError("dimensions must be positive")
        n = self.dim_a * self.dim_b
        j = linalg.as_matrix(self.choi, "choi")
        if j.shape != (n, n):
            raise ValidationError(f"choi must be {n}x{n} for dims ({self.dim_a},{self.dim_b}), got {j.shape}")
        scale = max(1.0, np.linalg.norm(j))
        if np.linalg.norm(j - j.conj().T) > DEFAULT.hermitian * scale:
            raise ValidationError("choi is not Hermitian")
        j = 0.5 * (j + j.conj().T)
        if not linalg.is_psd(j, tol):
            raise ValidationError("choi is not positive semidefinite")
        if abs(np.trace(j).real - self.dim_a) > tol * max(1.0, self.dim_a):
            raise ValidationError(f"trace of choi is {np.trace(j).real:.12g}, expected |A| = {self.dim_a}")
        tp_err = np.linalg.norm(linalg.partial_trace(j, self.dim_a, self.dim_b, "B") - np.eye(self.dim_a))
        tp = bool(tp_err <= tol)
        if strict and not tp:
            raise ValidationError(f"not trace preserving: ||tr_B J - I_A||_F = {tp_err:.3e}")
        object.__setattr__(self, "choi", _frozen(j))
        object.__setattr__(self, "trace_preserving", tp)

    @property
    def dims(self) -> tuple[int, int]:
        return self.dim_a, self.dim_b

    @property
    def size(self) -> int:
        return self.dim_a * self.dim_b

    def state(self) -> "ChannelState":
        """The normalized Choi state ``J / |A|``."""
        return ChannelState(self.size, self.choi / self.dim_a)

    def close_to(self, other: "Channel", tol: float | None = None) -> bool:
        tol = DEFAULT.channel if tol is None else tol
        return self.dims == other.dims and np.linalg.norm(self.choi - other.choi) <= tol

    def __repr__(self):
        return f"Channel(dim_a={self.dim_a}, dim_b={self.dim_b}, trace_preserving={self.trace_preserving})"


@dataclass(frozen=True, eq=False)
class PureChannel:
    """Amplitudes ``lam[j, k]`` of ``|psi> = sum lam_jk |j>|k>`` with unit-normalized rows scaled by 1/|A|."""

    amplitudes: np.ndarray

    def __post_init__(self):
        lam = np.array(self.amplitudes, dtype=complex)
        if lam.ndim != 2:
            raise ValidationError("amplitudes must be a |A| x |B| table")
        rows = np.sum(np.abs(lam) ** 2, axis=1)
        if np.max(np.abs(rows - 1.0 / lam.shape[0])) > 1e-10:
            raise ValidationError("each row of amplitudes must have squared norm 1/|A|")
        object.__setattr__(self, "amplitudes", _frozen(lam))

    @property
    def dim_a(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dim_b(self) -> int:
        return self.amplitudes.shape[1]


@dataclass(frozen=True, eq=False)
class ChannelState:
    dim: int
    density: np.ndarray

    def __post_init__(self):
        rho = linalg.as_matrix(self.density, "density")
        if rho.shape != (self.dim, self.dim):
            raise ValidationError(f"density must be {self.dim}x{self.dim}")
        if abs(np.trace(rho) - 1.0) > 1e-10:
            raise ValidationError("density must have unit trace")
        if not linalg.is_psd(rho):
            raise ValidationError("density must be PSD")
        object.__setattr__(self, "density", _frozen(linalg.hermitian_part(rho)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.trace(self.density @ self.density).real - 1.0) <= tol


def channel_from_kraus(dim_a: int, dim_b: int, kraus: Sequence, tol: float | None = None) -> Channel:
    """Choi matrix from Kraus operators ``K_m`` of shape ``|B| x |A|``."""
    tol = DEFAULT.channel if tol is None else tol
    ks = [linalg.as_matrix(k, "kraus") for k in kraus]
    if not ks:
        raise ValidationError("at least one Kraus operator is required")
    for k in ks:
        if k.shape != (dim_b, dim_a):
            raise ValidationError(f"Kraus operator must be {dim_b}x{dim_a}, got {k.shape}")
    completeness = sum(k.conj().T @ k for k in ks)
    err = np.linalg.norm(completeness - np.eye(dim_a))
    if err > tol:
        raise ValidationError(f"Kraus completeness violated: ||sum K^dag K - I||_F = {err:.3e}")
    vecs = np.array([k.T.reshape(-1) for k in ks])
    return Channel(dim_a, dim_b, vecs.T @ vecs.conj(), tol=tol)


def identity_channel(dim: int) -> Channel:
    return channel_from_kraus(dim, dim, [np.eye(dim)])


def dephasing_channel(dim: int) -> Channel:
    """Completely dephasing channel, Kraus ``{|i><i|}``."""
    return channel_from_kraus(dim, dim, [np.diag(np.eye(dim)[i]) for i in range(dim)])


def dephase(c: Channel) -> Channel:
    """Diagonal truncation of the Choi matrix (output and input dephasing)."""
    return Channel(c.dim_a, c.dim_b, np.diag(np.diag(c.choi)), strict=c.trace_preserving)


def is_incoherent(c: Channel, tol: float | None = None) -> bool:
    tol = DEFAULT.classification if tol is None else tol
    off = c.choi - np.diag(np.diag(c.choi))
    return bool(np.max(np.abs(off), initial=0.0) <= tol)


def maximally_coherent_vector(dim_a: int, dim_b: int, phases=None) -> np.ndarray:
    """``|Phi> = sum_{j,alpha} exp(i theta_{j alpha}) |j alpha> / sqrt(|A||B|)``."""
    n = dim_a * dim_b
    theta = np.zeros(n) if phases is None else np.asarray(phases, dtype=float).reshape(-1)
    if theta.size != n:
        raise ValidationError(f"phases must have {n} entries, got {theta.size}")
    return np.exp(1j * theta) / np.sqrt(n)


def maximally_coherent(dim_a: int, dim_b: int, phases=None) -> Channel:
    """Choi matrix ``|A| |Phi><Phi|`` of a maximally coherent channel.

    For most phase tables this operator is not trace preserving, so it is
    returned as a non-strict :class:`Channel`.
    """
    phi = maximally_coherent_vector(dim_a, dim_b, phases)
    return Channel(dim_a, dim_b, dim_a * np.outer(phi, phi.conj()), strict=False)


def pure_channel(p: PureChannel) -> Channel:
    psi = p.amplitudes.reshape(-1)
    return Channel(p.dim_a, p.dim_b, p.dim_a * np.outer(psi, psi.conj()), strict=False)


def fidelity(c1: Channel, c2: Channel) -> float:
    """``tr[sqrt(J1) sqrt(J2)]``."""
    _same_dims(c1, c2)
    return float(np.trace(linalg.psd_sqrt(c1.choi) @ linalg.psd_sqrt(c2.choi)).real)


def uhlmann_fidelity(c1: Channel, c2: Channel) -> float:
    """Root fidelity ``|| sqrt(J1) sqrt(J2) ||_1`` (trace norm).

    Equals ``sqrt(tr[J1 J2])`` whenever ``J2`` has rank one, which is the
    form the overlap with a maximally coherent channel takes.
    """
    _same_dims(c1, c2)
    prod = linalg.psd_sqrt(c1.choi) @ linalg.psd_sqrt(c2.choi)
    return float(np.sum(np.linalg.svd(prod, compute_uv=False)))


def _same_dims(c1: Channel, c2: Channel) -> None:
    if c1.dims != c2.dims:
        raise ValidationError(f"dimension mismatch: {c1.dims} vs {c2.dims}")


def mix(channels: Sequence[Channel], weights) -> Channel:
    w = np.asarray(weights, dtype=float)
    if len(channels) == 0 or w.shape != (len(channels),):
        raise ValidationError("need one weight per channel")
    if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-10:
        raise ValidationError("weights must be a probability vector")
    for c in channels[1:]:
        _same_dims(channels[0], c)
    choi = sum(wi * c.choi for wi, c in zip(w, channels))
    strict = all(c.trace_preserving for c in channels)
    return Channel(channels[0].dim_a, channels[0].dim_b, choi, strict=strict)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_isometry(rows: int, cols: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    g = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(g)
    # fix column phases so the distribution is Haar
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel(dim_a: int, dim_b: int, env_dim: int = 0, seed=None) -> Channel:
    """Channel from a Haar-random isometry ``V: A -> B ⊗ E``.

    ``env_dim`` defaults to ``|A||B|`` (full Kraus rank).  Needs
    ``|B| * env_dim >= |A|``.
    """
    env_dim = env_dim or dim_a * dim_b
    if env_dim < 1:
        raise ValidationError("env_dim must be >= 1")
    if dim_b * env_dim < dim_a:
        raise ValidationError("|B| * env_dim must be at least |A| for an isometry to exist")
    v = random_isometry(dim_b * env_dim, dim_a, seed).reshape(dim_b, env_dim, dim_a)
    return channel_from_kraus(dim_a, dim_b, [v[:, e, :] for e in range(env_dim)])


def random_incoherent_channel(dim_a: int, dim_b: int, seed=None) -> Channel:
    """Diagonal Choi matrix with Dirichlet-distributed unit block sums."""
    rng = _rng(seed)
    p = rng.dirichlet(np.ones(dim_b), size=dim_a)
    return Channel(dim_a, dim_b, np.diag(p.reshape(-1)).astype(complex))


def random_pure_state(dim: int, seed=None) -> ChannelState:
    rng = _rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return ChannelState(dim, np.outer(v, v.conj()))


def c_l1(s: ChannelState) -> float:
    """l1-norm coherence: sum of moduli of the off-diagonal entries."""
    rho = s.density
    return float(np.sum(np.abs(rho)) - np.sum(np.abs(np.diag(rho))))


def channel_to_json(c: Channel) -> dict:
    return {"dimA": c.dim_a, "dimB": c.dim_b, "choi": linalg.matrix_to_json(c.choi)}


def channel_from_json(doc: dict, strict: bool = True) -> Channel:
    """Parse a channel document; exactly one of ``kraus`` or ``choi`` must be present."""
    if not isinstance(doc, dict):
        raise ValidationError("channel document must be a JSON object")
    try:
        dim_a, dim_b = int(doc["dimA"]), int(doc["dimB"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("channel document needs integer dimA and dimB") from exc
    has_kraus, has_choi = "kraus" in doc, "choi" in doc
    if has_kraus == has_choi:
        raise ValidationError("channel document needs exactly one of 'kraus' or 'choi'")
    if has_kraus:
        kraus = [linalg.matrix_from_json(k, "kraus") for k in doc["kraus"]]
        return channel_from_kraus(dim_a, dim_b, kraus)
    return Channel(dim_a, dim_b, linalg.matrix_from_json(doc["choi"], "choi"), strict=strict)


def load_channel(path, strict: bool = True) -> Channel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return channel_from_json(doc, strict=strict)


def save_channel(c: Channel, path) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_json(c), fh, indent=1)
        fh.write("\n")
