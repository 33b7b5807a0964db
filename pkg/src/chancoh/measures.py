"""Coherence measures of channels and their operational certificates.

``c_max`` is ``log2 k*`` where ``k*`` is the optimal common block sum of a
diagonal matrix dominating the Choi matrix; ``c_r = k* - 1`` is the
robustness.  Both are computed by independent solver paths so that the
identity ``2**c_max = 1 + c_r`` doubles as a numerical check.

The constructive routines build, from a channel, an incoherent
superchannel that steers it towards a maximally coherent target, and an
instrument whose branches can be told apart better with the channel than
with any incoherent one.  Their figures of merit are governed by the
optimum of the *mean* block-sum problem (``objective="mean_block"``),
which equals the coherence of the normalized Choi state and never exceeds
``k*``; certificates report both numbers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import channels as ch
from . import linalg, sdp
from . import superchannels as sc
from .channels import Channel, ChannelState, PureChannel
from .config import DEFAULT
from .errors import ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "CoherenceReport",
    "Theorem1Certificate",
    "Theorem2Certificate",
    "d_max",
    "c_max",
    "c_r",
    "c_max_pure",
    "state_coherence_bound",
    "construct_theorem1_isc",
    "construct_theorem1_disc",
    "construct_theorem2_instrument",
    "verify_monotonicity",
    "verify_mixing_bound",
    "verify_roc_properties",
    "state_reduction_check",
]


@dataclass(frozen=True, eq=False)
class CoherenceReport:
    c_max: float
    c_r: float
    relation_residual: float
    solver_gap: float
    certificate: sdp.SdpSolution = field(repr=False)

    def to_json(self) -> dict:
        sol = self.certificate
        return {
            "c_max_bits": self.c_max,
            "c_r": self.c_r,
            "relation_residual": self.relation_residual,
            "solver_gap": self.solver_gap,
            "certificate": {
                "primal_value": sol.primal_value,
                "dual_value": sol.dual_value,
                "d": [float(v) for v in sol.d],
                "block_weights": [float(v) for v in sol.block_weights],
                "dual_matrix": linalg.matrix_to_json(sol.dual_matrix),
            },
        }


@dataclass(frozen=True, eq=False)
class Theorem1Certificate:
    """Incoherent superchannel steering a channel towards a maximally coherent target.

    ``achieved`` is ``(|B'|/|A'|) F(Theta(phi), Phi)^2``, ``claimed`` is
    ``2**c_max`` and ``state_value`` the mean block-sum optimum the
    construction is built from.  ``residual = |achieved - claimed|``.
    """

    superchannel: sc.Superchannel
    target: Channel
    achieved: float
    claimed: float
    state_value: float
    residual: float


@dataclass(frozen=True, eq=False)
class Theorem2Certificate:
    instrument: sc.Instrument
    povm: sc.Povm
    p_succ: float
    p_isco: float
    ratio: float
    claimed: float
    state_value: float
    residual: float


# --------------------------------------------------------------------------
# measures
# --------------------------------------------------------------------------


def d_max(c1: Channel, c2: Channel, support_tol: float | None = None) -> float:
    """Max-relative entropy ``min{lam : J1 <= 2**lam J2}`` in bits (``inf`` if unbounded)."""
    if c1.dims != c2.dims:
        raise ValidationError(f"dimension mismatch: {c1.dims} vs {c2.dims}")
    support_tol = DEFAULT.support if support_tol is None else support_tol
    inv, proj = linalg.pinv_sqrt(c2.choi, support_tol)
    j1 = c1.choi
    comp = np.eye(j1.shape[0]) - proj
    # J1 >= 0, so its support lies inside supp(J2) iff the compression vanishes
    if np.linalg.norm(comp @ j1 @ comp) > DEFAULT.channel * max(1.0, np.linalg.norm(j1)):
        return float("inf")
    top = np.linalg.eigvalsh(linalg.hermitian_part(inv @ j1 @ inv))[-1]
    return float(np.log2(top))


def c_max(c: Channel, tol: float | None = None, verbose: bool = False) -> CoherenceReport:
    """Max-relative entropy of coherence via the barrier solver.

    The ``c_r`` field is recomputed along the bisection path, so
    ``relation_residual`` compares two independent solves.
    """
    sol = sdp.solve_diagonal(sdp.DiagonalSdpProblem(c.choi, c.dim_a, c.dim_b), tol=tol, verbose=verbose)
    k = sol.primal_value
    cm = float(np.log2(k))
    cr = c_r(c)
    return CoherenceReport(
        c_max=cm,
        c_r=cr,
        relation_residual=float(abs(2.0**cm - 1.0 - cr)),
        solver_gap=sol.gap,
        certificate=sol,
    )


def c_r(c: Channel) -> float:
    """Robustness of coherence, ``k* - 1`` with ``k*`` found by bisection."""
    return float(sdp.bisection_feasibility(c.choi, c.dim_a, c.dim_b) - 1.0)


def c_max_pure(p: PureChannel) -> float:
    """Closed form ``log2((sum |lam_jk|)^2)`` for a pure channel.

    Provisional: callers should compare it with ``c_max(pure_channel(p))``.
    """
    return float(np.log2(np.sum(np.abs(p.amplitudes)) ** 2))


def state_coherence_bound(c: Channel, tol: float | None = None) -> sdp.SdpSolution:
    """Mean block-sum optimum; its value is ``2**C_max`` of the state ``J/|A|``."""
    return sdp.solve_diagonal(sdp.DiagonalSdpProblem(c.choi, c.dim_a, c.dim_b, "mean_block"), tol=tol)


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------


def _check_embedding(c: Channel, dim_a2: int, dim_b2: int) -> None:
    if c.size > dim_a2 * dim_b2:
        raise ValidationError(f"|A||B| = {c.size} exceeds |A'||B'| = {dim_a2 * dim_b2}")


def _construction_kraus(c: Channel, dim_a2: int, dim_b2: int, phases, tol) -> tuple[list, float]:
    """Kraus operators sending ``|k beta>`` to ``|f(k beta)>`` weighted by dual eigenvectors.

    ``f`` is the lexicographic embedding of input labels into output labels.
    """
    sol = state_coherence_bound(c, tol)
    x = sol.dual_matrix
    # pad to unit diagonal; the solver already returns it saturated up to rounding
    x = x / max(1.0, float(np.max(np.diag(x).real)))
    x = x + np.diag(1.0 - np.diag(x).real)
    j_dual = x / c.dim_b
    # decompose the conjugate so that M^H |Phi> carries psi, not its conjugate
    lam, vecs = linalg.hermitian_eig(np.conj(j_dual) / c.dim_a)
    n_in, n_out = c.size, dim_a2 * dim_b2
    theta = np.zeros(n_out) if phases is None else np.asarray(phases, dtype=float).reshape(-1)
    if theta.size != n_out:
        raise ValidationError(f"phases must have {n_out} entries, got {theta.size}")
    embed = np.zeros((n_out, n_in), dtype=complex)
    embed[np.arange(n_in), np.arange(n_in)] = np.exp(1j * theta[:n_in])
    scale = np.sqrt(dim_a2 * c.dim_b)
    kraus = []
    for value, psi in zip(lam, vecs.T):
        if value <= DEFAULT.branch_drop:
            continue
        kraus.append(np.sqrt(value) * scale * embed * psi[None, :])
    return kraus, sol.primal_value


def _theorem1(c: Channel, dim_a2: int, dim_b2: int, phases, tol, disc: bool) -> Theorem1Certificate:
    _check_embedding(c, dim_a2, dim_b2)
    kraus, state_value = _construction_kraus(c, dim_a2, dim_b2, None if disc else phases, tol)
    theta = sc.Superchannel(c.dim_a, c.dim_b, dim_a2, dim_b2, kraus=kraus)
    target = ch.maximally_coherent(dim_a2, dim_b2, None if disc else phases)
    out = Channel(dim_a2, dim_b2, sc.transform_choi(theta, c.choi), strict=False)
    achieved = dim_b2 / dim_a2 * ch.uhlmann_fidelity(out, target) ** 2
    claimed = 2.0 ** c_max(c, tol).c_max
    return Theorem1Certificate(theta, target, float(achieved), float(claimed), float(state_value),
                               float(abs(achieved - claimed)))


def construct_theorem1_isc(c: Channel, dim_a2: int, dim_b2: int, phases=None, tol: float | None = None) -> Theorem1Certificate:
    """Incoherent superchannel maximizing the overlap with a phased maximally coherent channel."""
    return _theorem1(c, dim_a2, dim_b2, phases, tol, disc=False)


def construct_theorem1_disc(c: Channel, dim_a2: int, dim_b2: int, tol: float | None = None) -> Theorem1Certificate:
    """Phase-free variant of :func:`construct_theorem1_isc`; passes the DISC test."""
    return _theorem1(c, dim_a2, dim_b2, None, tol, disc=True)


def phase_unitaries(dim_a2: int, dim_b2: int) -> list[np.ndarray]:
    """``U_k = diag(exp(2 pi i x k / N))`` over the joint output label ``x``."""
    n = dim_a2 * dim_b2
    x = np.arange(n)
    return [np.diag(np.exp(2j * np.pi * x * k / n)) for k in range(n)]


def construct_theorem2_instrument(c: Channel, dim_a2: int, dim_b2: int, tol: float | None = None) -> Theorem2Certificate:
    """Phase-labelled instrument built on the overlap-maximizing superchannel.

    Part ``k`` has Kraus operators ``U_k M_m / sqrt(N)``; the matching POVM
    is ``N_k = U_k |Phi><Phi| U_k^H``.  The incoherent baseline is found by
    enumerating incoherent vertices.
    """
    _check_embedding(c, dim_a2, dim_b2)
    kraus, state_value = _construction_kraus(c, dim_a2, dim_b2, None, tol)
    n = dim_a2 * dim_b2
    dims = (c.dim_a, c.dim_b, dim_a2, dim_b2)
    us = phase_unitaries(dim_a2, dim_b2)
    inst = sc.Instrument(tuple(sc.SubSuperchannel(*dims, kraus=[u @ m / np.sqrt(n) for m in kraus]) for u in us))
    phi = ch.maximally_coherent_vector(dim_a2, dim_b2)
    povm = sc.Povm(tuple(np.outer(u @ phi, (u @ phi).conj()) for u in us))
    p_succ = sc.succ_prob_with_povm(inst, povm, c)
    p_isco = sc.succ_prob_isco(inst, tol)
    ratio = p_succ / p_isco
    claimed = 2.0 ** c_max(c, tol).c_max
    return Theorem2Certificate(inst, povm, float(p_succ), float(p_isco), float(ratio), float(claimed),
                               float(state_value), float(abs(ratio - claimed)))


# --------------------------------------------------------------------------
# property checks
# --------------------------------------------------------------------------


def _cmax_value(c: Channel) -> float:
    sol = sdp.solve_diagonal(sdp.DiagonalSdpProblem(c.choi, c.dim_a, c.dim_b))
    return float(np.log2(sol.primal_value))


def verify_monotonicity(c: Channel, t: sc.Superchannel) -> tuple[float, float]:
    """``(c_max(Theta(phi)) - c_max(phi), sum_m p_m c_max(phi_m) - c_max(phi))``."""
    if not sc.classify_isc(t):
        raise ValidationError("superchannel is not incoherent")
    base = _cmax_value(c)
    full = _cmax_value(sc.apply(t, c)) - base
    average = sum(p * _cmax_value(branch) for p, branch in sc.apply_selective(t, c)) - base
    return float(full), float(average)


def verify_mixing_bound(channels: Sequence[Channel], weights) -> float:
    """``c_max(sum p phi) - max c_max(phi)``; nonpositive when the bound holds."""
    mixed = ch.mix(channels, weights)
    return _cmax_value(mixed) - max(_cmax_value(c) for c in channels)


def verify_roc_properties(channels: Sequence[Channel], weights, t: sc.Superchannel) -> tuple[float, float]:
    """Convexity and average-monotonicity residuals of the robustness.

    Returns ``(C_R(mix) - sum p C_R, sum_m p_m C_R(branch_m) - C_R(phi_0))``
    where the superchannel acts on the first channel.
    """
    w = np.asarray(weights, dtype=float)
    convexity = c_r(ch.mix(channels, w)) - float(sum(wi * c_r(c) for wi, c in zip(w, channels)))
    base = channels[0]
    average = sum(p * c_r(branch) for p, branch in sc.apply_selective(t, base)) - c_r(base)
    return float(convexity), float(average)


def state_reduction_check(s: ChannelState) -> float:
    """``|c_max - log2(1 + C_l1)|`` for a pure state viewed as a channel with trivial input."""
    if not s.is_pure():
        raise ValidationError("state_reduction_check needs a pure state")
    c = Channel(1, s.dim, s.density)
    return float(abs(_cmax_value(c) - np.log2(1.0 + ch.c_l1(s))))
