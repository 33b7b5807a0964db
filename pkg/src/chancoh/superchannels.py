"""Superchannels acting on Choi matrices.

A superchannel ``Theta`` taking channels ``A -> B`` to channels
``A' -> B'`` is stored by Kraus operators ``M_m`` of shape
``(|A'||B'|) x (|A||B|)`` acting on Choi matrices,

    J_{Theta(phi)} = sum_m M_m J_phi M_m^H,

normalized by ``sum_m M_m^H M_m = (|A'|/|A|) I``.  Sub-superchannels relax
the normalization to ``<=``; an instrument is a list of sub-superchannels
whose Kraus union is a superchannel.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg, sdp
from .channels import Channel, _rng
from .config import DEFAULT
from .errors import ValidationError

__all__ = [
    "Superchannel",
    "SubSuperchannel",
    "Instrument",
    "Povm",
    "transform_choi",
    "apply",
    "apply_selective",
    "classify_isc",
    "classify_sisc",
    "classify_disc",
    "joint_probability",
    "succ_prob_with_povm",
    "succ_prob_optimal",
    "succ_prob_isco",
    "vertex_incoherent_channels",
    "identity_superchannel",
    "dephasing_superchannel",
    "random_isc",
    "random_sisc",
    "superchannel_to_json",
    "instrument_to_json",
    "instrument_from_json",
    "load_instrument",
]

ISCO_VERTEX_LIMIT = 4096


def _frozen_list(kraus, rows: int, cols: int) -> tuple:
    out = []
    for k in kraus:
        m = np.array(linalg.as_matrix(k, "kraus"), dtype=complex)
        if m.shape != (rows, cols):
            raise ValidationError(f"Kraus operator must be {rows}x{cols}, got {m.shape}")
        m.flags.writeable = False
        out.append(m)
    if not out:
        raise ValidationError("at least one Kraus operator is required")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class SubSuperchannel:
    """Kraus operators with ``sum M^H M <= (|A'|/|A|) I``."""

    dim_a: int
    dim_b: int
    dim_a2: int
    dim_b2: int
    kraus: tuple

    def __post_init__(self):
        for d in self.dims:
            if int(d) != d or d < 1:
                raise ValidationError("dimensions must be positive integers")
        object.__setattr__(self, "kraus", _frozen_list(self.kraus, self.out_size, self.in_size))
        self._check_completeness()

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.dim_a, self.dim_b, self.dim_a2, self.dim_b2

    @property
    def in_size(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def out_size(self) -> int:
        return self.dim_a2 * self.dim_b2

    def completeness(self) -> np.ndarray:
        """``sum_m M_m^H M_m`` divided by ``|A'|/|A|``."""
        total = sum(m.conj().T @ m for m in self.kraus)
        return total * (self.dim_a / self.dim_a2)

    def completeness_error(self) -> float:
        return float(np.linalg.norm(self.completeness() - np.eye(self.in_size)))

    def _check_completeness(self) -> None:
        w = np.linalg.eigvalsh(linalg.hermitian_part(self.completeness()))
        if w[-1] > 1.0 + DEFAULT.channel:
            raise ValidationError(f"Kraus operators exceed the completeness bound (max eigenvalue {w[-1]:.3e})")


@dataclass(frozen=True, eq=False)
class Superchannel(SubSuperchannel):
    """Kraus operators with ``sum M^H M = (|A'|/|A|) I``."""

    def _check_completeness(self) -> None:
        err = self.completeness_error()
        if err > DEFAULT.channel:
            raise ValidationError(f"completeness relation violated: residual {err:.3e}")


@dataclass(frozen=True, eq=False)
class Instrument:
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValidationError("instrument needs at least one part")
        dims = parts[0].dims
        if any(p.dims != dims for p in parts):
            raise ValidationError("instrument parts must share dimensions")
        object.__setattr__(self, "parts", parts)
        # the Kraus union must be a full superchannel
        Superchannel(*dims, kraus=[m for p in parts for m in p.kraus])

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.parts[0].dims

    def __len__(self) -> int:
        return len(self.parts)


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple

    def __post_init__(self):
        effects = tuple(linalg.hermitian_part(e) for e in self.effects)
        if not effects:
            raise ValidationError("POVM needs at least one effect")
        n = effects[0].shape[0]
        for e in effects:
            if e.shape != (n, n):
                raise ValidationError("POVM effects must share a square shape")
            if not linalg.is_psd(e, 1e-10):
                raise ValidationError("POVM effect is not PSD")
        if np.linalg.norm(sum(effects) - np.eye(n)) > 1e-10 * max(1, n):
            raise ValidationError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)


# --------------------------------------------------------------------------
# application
# --------------------------------------------------------------------------


def _check_input(t: SubSuperchannel, c: Channel) -> None:
    if c.dims != (t.dim_a, t.dim_b):
        raise ValidationError(f"channel dims {c.dims} do not match superchannel input ({t.dim_a},{t.dim_b})")


def transform_choi(t: SubSuperchannel, choi) -> np.ndarray:
    """``sum_m M_m J M_m^H`` without any validation of the result."""
    j = linalg.as_matrix(choi, "choi")
    return linalg.hermitian_part(sum(m @ j @ m.conj().T for m in t.kraus))


def apply(t: Superchannel, c: Channel) -> Channel:
    """Image of ``c``; the output is trace preserving whenever ``c`` is and ``t`` maps channels to channels.

    The result is built non-strictly so that superchannels which only
    preserve the Choi trace (and non-TP inputs) are still accepted.
    """
    _check_input(t, c)
    try:
        return Channel(t.dim_a2, t.dim_b2, transform_choi(t, c.choi), strict=False)
    except ValidationError as exc:
        raise ValidationError(f"superchannel output is not a valid channel: {exc}") from exc


def apply_selective(t: SubSuperchannel, c: Channel, drop: float | None = None) -> list[tuple[float, Channel]]:
    """Branch probabilities ``p_m = tr(M_m J M_m^H)/|A'|`` and normalized branch outputs."""
    _check_input(t, c)
    drop = DEFAULT.branch_drop if drop is None else drop
    out = []
    for m in t.kraus:
        jm = linalg.hermitian_part(m @ c.choi @ m.conj().T)
        p = float(np.trace(jm).real) / t.dim_a2
        if p <= drop:
            continue
        out.append((p, Channel(t.dim_a2, t.dim_b2, jm / p, strict=False)))
    return out


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------


def _unit(m: np.ndarray) -> np.ndarray:
    top = np.max(np.abs(m), initial=0.0)
    return m / top if top > 0 else m


def classify_isc(t: SubSuperchannel, tol: float | None = None) -> bool:
    """Every Kraus operator has at most one entry above ``tol`` per column."""
    tol = DEFAULT.classification if tol is None else tol
    return all(np.all(np.sum(np.abs(_unit(m)) > tol, axis=0) <= 1) for m in t.kraus)


def classify_sisc(t: SubSuperchannel, tol: float | None = None) -> bool:
    """Equal dimensions and at most one entry above ``tol`` per row and per column."""
    tol = DEFAULT.classification if tol is None else tol
    if t.in_size != t.out_size:
        return False
    for m in t.kraus:
        big = np.abs(_unit(m)) > tol
        if np.any(big.sum(axis=0) > 1) or np.any(big.sum(axis=1) > 1):
            return False
    return True


def classify_disc(t: SubSuperchannel, tol: float | None = None) -> bool:
    """Dephasing covariance checked on every elementary matrix ``E_{x,y}``.

    Off-diagonal ``E`` must map to an operator with zero diagonal; diagonal
    ``E`` must map to a diagonal operator.
    """
    tol = DEFAULT.classification if tol is None else tol
    n = t.in_size
    # image of E_{x,y} is sum_m M[:, x] M[:, y]^H
    stack = np.stack(t.kraus)  # (K, out, in)
    for x in range(n):
        for y in range(n):
            img = np.einsum("ka,kb->ab", stack[:, :, x], stack[:, :, y].conj())
            if x == y:
                err = np.max(np.abs(img - np.diag(np.diag(img))), initial=0.0)
            else:
                err = np.max(np.abs(np.diag(img)), initial=0.0)
            if err > tol:
                return False
    return True


# --------------------------------------------------------------------------
# discrimination
# --------------------------------------------------------------------------


def _branch_operators(inst: Instrument, c: Channel) -> list[np.ndarray]:
    a, b, a2, _ = inst.dims
    if c.dims != (a, b):
        raise ValidationError(f"channel dims {c.dims} do not match instrument input ({a},{b})")
    return [transform_choi(part, c.choi) / a2 for part in inst.parts]


def joint_probability(inst: Instrument, povm: Povm, c: Channel) -> np.ndarray:
    """``p[k, k'] = tr[N_k' E_k]`` with ``E_k`` the normalized branch operator of part ``k``."""
    if povm.dim != inst.parts[0].out_size:
        raise ValidationError("POVM acts on the wrong space")
    ops = _branch_operators(inst, c)
    return np.array([[float(np.trace(n @ e).real) for n in povm.effects] for e in ops])


def succ_prob_with_povm(inst: Instrument, povm: Povm, c: Channel) -> float:
    if len(povm) != len(inst):
        raise ValidationError(f"POVM has {len(povm)} effects for {len(inst)} instrument parts")
    return float(np.trace(joint_probability(inst, povm, c)))


def succ_prob_optimal(inst: Instrument, c: Channel, tol: float | None = None) -> tuple[float, Povm]:
    """Optimal discrimination of the instrument's branches and the optimal POVM."""
    res = sdp.solve_discrimination(_branch_operators(inst, c), tol=tol)
    return res.value, Povm(res.effects)


def vertex_incoherent_channels(dim_a: int, dim_b: int):
    """Yield every incoherent channel with a 0/1 diagonal Choi matrix."""
    for choice in itertools.product(range(dim_b), repeat=dim_a):
        d = np.zeros(dim_a * dim_b)
        for j, alpha in enumerate(choice):
            d[j * dim_b + alpha] = 1.0
        yield Channel(dim_a, dim_b, np.diag(d).astype(complex))


def succ_prob_isco(inst: Instrument, tol: float | None = None) -> float:
    """Largest optimal success probability over incoherent channels.

    The optimal success probability is convex in the channel, so the
    maximum over the incoherent polytope sits at a vertex; all
    ``|B|^|A|`` vertices are enumerated.
    """
    a, b = inst.dims[:2]
    if b**a > ISCO_VERTEX_LIMIT:
        raise ValidationError(f"|B|^|A| = {b**a} vertices exceeds the enumeration bound {ISCO_VERTEX_LIMIT}")
    return max(succ_prob_optimal(inst, v, tol)[0] for v in vertex_incoherent_channels(a, b))


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------


def identity_superchannel(dim_a: int, dim_b: int) -> Superchannel:
    return Superchannel(dim_a, dim_b, dim_a, dim_b, kraus=[np.eye(dim_a * dim_b)])


def dephasing_superchannel(dim_a: int, dim_b: int) -> Superchannel:
    """Kraus operators ``|x><x|``: the output Choi matrix is the dephased input."""
    n = dim_a * dim_b
    kraus = []
    for x in range(n):
        p = np.zeros((n, n))
        p[x, x] = 1.0
        kraus.append(p)
    return Superchannel(dim_a, dim_b, dim_a, dim_b, kraus=kraus)


def _phased_injection(src: int, dst: int, rng, shift: int = 0) -> np.ndarray:
    """``dst x src`` matrix sending ``|x>`` to a phase times ``|perm(x + shift)>``."""
    perm = rng.permutation(dst)
    m = np.zeros((dst, src), dtype=complex)
    for x in range(src):
        m[perm[(x + shift) % dst], x] = np.exp(2j * np.pi * rng.random())
    return m


def random_isc(dim_a: int, dim_b: int, dim_a2: int, dim_b2: int, n_kraus: int = 3, seed=None) -> Superchannel:
    """Random incoherent superchannel whose selective branches are channels.

    Each Kraus operator is ``sqrt(q) (P^T ⊗ Q)``: ``P: A' -> A`` is a
    phased injection drawn from a cyclic family that averages to
    ``(|A'|/|A|) I``, and ``Q: B -> B'`` a phased isometric injection.
    Needs ``|A'| <= |A|`` and ``|B'| >= |B|``.
    """
    if dim_a2 > dim_a or dim_b2 < dim_b:
        raise ValidationError("random_isc needs |A'| <= |A| and |B'| >= |B|")
    rng = _rng(seed)
    q = rng.dirichlet(np.ones(n_kraus))
    kraus = []
    for weight in q:
        perm = rng.permutation(dim_a)
        for shift in range(dim_a):
            pre = np.zeros((dim_a, dim_a2), dtype=complex)
            for x in range(dim_a2):
                pre[perm[(x + shift) % dim_a], x] = np.exp(2j * np.pi * rng.random())
            post = _phased_injection(dim_b, dim_b2, rng)
            kraus.append(np.sqrt(weight / dim_a) * np.kron(pre.T, post))
    return Superchannel(dim_a, dim_b, dim_a2, dim_b2, kraus=kraus)


def random_sisc(dim_a: int, dim_b: int, n_kraus: int = 3, seed=None) -> Superchannel:
    """Mixture of random phased permutations of the joint basis (square case)."""
    rng = _rng(seed)
    n = dim_a * dim_b
    q = rng.dirichlet(np.ones(n_kraus))
    kraus = [np.sqrt(w) * _phased_injection(n, n, rng) for w in q]
    return Superchannel(dim_a, dim_b, dim_a, dim_b, kraus=kraus)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def superchannel_to_json(t: SubSuperchannel) -> dict:
    return {"dims": list(t.dims), "parts": [{"kraus": [linalg.matrix_to_json(m) for m in t.kraus]}]}


def instrument_to_json(inst: Instrument) -> dict:
    return {
        "dims": list(inst.dims),
        "parts": [{"kraus": [linalg.matrix_to_json(m) for m in p.kraus]} for p in inst.parts],
    }


def instrument_from_json(doc: dict):
    """A :class:`Superchannel` for single-part documents, else an :class:`Instrument`."""
    if not isinstance(doc, dict) or "dims" not in doc or "parts" not in doc:
        raise ValidationError("superchannel document needs 'dims' and 'parts'")
    dims = doc["dims"]
    if not isinstance(dims, list) or len(dims) != 4:
        raise ValidationError("'dims' must be [A, B, A2, B2]")
    try:
        dims = [int(d) for d in dims]
        krauss = [[linalg.matrix_from_json(m, "kraus") for m in part["kraus"]] for part in doc["parts"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError("each part needs a 'kraus' list") from exc
    if len(krauss) == 1:
        return Superchannel(*dims, kraus=krauss[0])
    return Instrument(tuple(SubSuperchannel(*dims, kraus=k) for k in krauss))


def load_instrument(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return instrument_from_json(doc)
