import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chancoh import channels as ch
from chancoh import measures as me
from chancoh import superchannels as sc
from chancoh.errors import ValidationError

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def trivial_instrument(dim_a, dim_b):
    return sc.Instrument((sc.SubSuperchannel(dim_a, dim_b, dim_a, dim_b, kraus=[np.eye(dim_a * dim_b)]),))


class TestTypes:
    def test_completeness_enforced(self):
        with pytest.raises(ValidationError, match="completeness"):
            sc.Superchannel(2, 2, 2, 2, kraus=[0.5 * np.eye(4)])

    def test_sub_superchannel_allows_deficit(self):
        sc.SubSuperchannel(2, 2, 2, 2, kraus=[0.5 * np.eye(4)])

    def test_sub_superchannel_rejects_excess(self):
        with pytest.raises(ValidationError):
            sc.SubSuperchannel(2, 2, 2, 2, kraus=[1.5 * np.eye(4)])

    def test_kraus_shape(self):
        with pytest.raises(ValidationError):
            sc.Superchannel(2, 2, 2, 2, kraus=[np.eye(3)])

    def test_instrument_union_must_be_complete(self):
        half = sc.SubSuperchannel(2, 2, 2, 2, kraus=[np.sqrt(0.5) * np.eye(4)])
        sc.Instrument((half, half))
        with pytest.raises(ValidationError):
            sc.Instrument((half,))

    def test_povm_checks(self):
        sc.Povm((np.eye(2) / 2, np.eye(2) / 2))
        with pytest.raises(ValidationError):
            sc.Povm((np.eye(2) / 2,))
        with pytest.raises(ValidationError):
            sc.Povm((np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])))


class TestApply:
    def test_identity_superchannel(self):
        c = ch.random_channel(2, 2, seed=1)
        assert sc.apply(sc.identity_superchannel(2, 2), c).close_to(c)

    @pytest.mark.parametrize("dims", [(2, 2, 2, 2), (2, 2, 1, 2), (2, 1, 2, 2), (2, 2, 2, 3), (3, 2, 2, 2)])
    def test_output_is_channel(self, dims):
        t = sc.random_isc(*dims, seed=0)
        out = sc.apply(t, ch.random_channel(*dims[:2], seed=1))
        assert out.trace_preserving
        assert np.trace(out.choi).real == pytest.approx(dims[2], abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            sc.apply(sc.identity_superchannel(2, 2), ch.identity_channel(3))

    def test_selective_single_kraus(self):
        c = ch.random_channel(2, 2, seed=2)
        branches = sc.apply_selective(sc.identity_superchannel(2, 2), c)
        assert len(branches) == 1
        assert branches[0][0] == pytest.approx(1.0)
        assert branches[0][1].close_to(c)

    @given(st.integers(0, 10_000))
    def test_selective_reproduces_apply(self, seed):
        t = sc.random_isc(2, 2, 2, 2, seed=seed)
        c = ch.random_channel(2, 2, seed=seed + 1)
        branches = sc.apply_selective(t, c)
        assert sum(p for p, _ in branches) == pytest.approx(1.0, abs=1e-8)
        mixed = sum(p * b.choi for p, b in branches)
        assert np.allclose(mixed, sc.apply(t, c).choi, atol=1e-10)
        assert all(b.trace_preserving for _, b in branches)

    def test_selective_drops_empty_branches(self):
        t = sc.dephasing_superchannel(2, 2)
        branches = sc.apply_selective(t, ch.identity_channel(2))
        assert len(branches) == 2


class TestClassification:
    def test_injection_with_amplitudes_is_isc(self):
        r = 1 / np.sqrt(2)
        m1 = np.zeros((4, 4), dtype=complex)
        m2 = np.zeros((4, 4), dtype=complex)
        m1[0, 0], m1[0, 1], m1[2, 2], m1[3, 3] = r, r, r, r
        m2[1, 0], m2[1, 1], m2[2, 2], m2[3, 3] = r, -r, r, 1j * r
        t = sc.Superchannel(2, 2, 2, 2, kraus=[m1, m2])
        assert sc.classify_isc(t)
        assert not sc.classify_sisc(t)

    def test_dense_block_is_not_isc(self):
        t = sc.Superchannel(2, 2, 2, 2, kraus=[np.kron(HADAMARD, np.eye(2))])
        assert not sc.classify_isc(t)

    def test_hadamard_is_not_disc(self):
        t = sc.Superchannel(2, 2, 2, 2, kraus=[np.kron(HADAMARD, np.eye(2))])
        assert not sc.classify_disc(t)

    @pytest.mark.parametrize("factory", [sc.identity_superchannel, sc.dephasing_superchannel])
    def test_standard_examples_are_disc(self, factory):
        assert sc.classify_disc(factory(2, 2))

    def test_sisc_needs_equal_dims(self):
        assert not sc.classify_sisc(sc.random_isc(2, 2, 2, 3, seed=0))

    @given(st.integers(0, 10_000))
    def test_sisc_implies_isc_and_disc(self, seed):
        t = sc.random_sisc(2, 2, seed=seed)
        assert sc.classify_sisc(t)
        assert sc.classify_isc(t)
        assert sc.classify_disc(t)


class TestDiscrimination:
    def test_trivial(self):
        inst = trivial_instrument(2, 2)
        povm = sc.Povm((np.eye(4),))
        c = ch.random_channel(2, 2, seed=0)
        assert np.allclose(sc.joint_probability(inst, povm, c), [[1.0]])
        assert sc.succ_prob_with_povm(inst, povm, c) == pytest.approx(1.0)

    def test_uniform_guessing(self):
        k = 3
        part = sc.SubSuperchannel(2, 2, 2, 2, kraus=[np.eye(4) / np.sqrt(k)])
        inst = sc.Instrument((part,) * k)
        povm = sc.Povm((np.eye(4) / k,) * k)
        c = ch.random_channel(2, 2, seed=0)
        assert sc.succ_prob_with_povm(inst, povm, c) == pytest.approx(1 / k)
        assert sc.succ_prob_optimal(inst, c)[0] == pytest.approx(1 / k, abs=1e-8)

    def test_size_mismatch(self):
        inst = trivial_instrument(2, 2)
        with pytest.raises(ValidationError):
            sc.succ_prob_with_povm(inst, sc.Povm((np.eye(4) / 2,) * 2), ch.identity_channel(2))

    def test_orthogonal_branches(self):
        inst = sc.Instrument(tuple(
            sc.SubSuperchannel(2, 2, 2, 2, kraus=[np.diag(np.eye(4)[x])]) for x in range(4)
        ))
        assert sc.succ_prob_optimal(inst, ch.random_channel(2, 2, seed=3))[0] == pytest.approx(1.0, abs=1e-8)

    def test_vertex_count(self):
        assert len(list(sc.vertex_incoherent_channels(2, 2))) == 4
        assert len(list(sc.vertex_incoherent_channels(2, 3))) == 9

    def test_enumeration_bound(self):
        inst = trivial_instrument(7, 4)
        with pytest.raises(ValidationError, match="enumeration"):
            sc.succ_prob_isco(inst)

    def test_theorem2_instrument_on_identity(self, identity2):
        cert = me.construct_theorem2_instrument(identity2, 2, 2)
        p = sc.joint_probability(cert.instrument, cert.povm, identity2)
        assert np.trace(p) == pytest.approx(0.5, abs=1e-8)
        assert p.sum() == pytest.approx(1.0, abs=1e-8)
        assert p.min() >= -1e-12
        branch = [np.trace(sc.transform_choi(part, identity2.choi)).real / 2 for part in cert.instrument.parts]
        assert np.allclose(p.sum(axis=1), branch, atol=1e-10)
        best, _ = sc.succ_prob_optimal(cert.instrument, identity2)
        assert best == pytest.approx(0.5, abs=1e-6)

    def test_random_povm_below_optimum(self, rng):
        cert = me.construct_theorem2_instrument(ch.random_channel(2, 2, seed=1), 2, 2)
        c = ch.random_channel(2, 2, seed=2)
        best, _ = sc.succ_prob_optimal(cert.instrument, c)
        for _ in range(5):
            g = [x @ x.conj().T for x in rng.normal(size=(4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4))]
            s = sum(g)
            w, v = np.linalg.eigh(s)
            inv = (v / np.sqrt(w)) @ v.conj().T
            povm = sc.Povm(tuple(inv @ e @ inv for e in g))
            assert sc.succ_prob_with_povm(cert.instrument, povm, c) <= best + 1e-7

    def test_isco_below_coherent(self):
        c = ch.random_channel(2, 2, seed=4)
        cert = me.construct_theorem2_instrument(c, 2, 2)
        assert cert.p_isco <= sc.succ_prob_optimal(cert.instrument, c)[0] + 1e-9


class TestJson:
    def test_superchannel_round_trip(self, tmp_path):
        t = sc.random_isc(2, 2, 2, 2, seed=1)
        path = tmp_path / "t.json"
        path.write_text(json.dumps(sc.superchannel_to_json(t)))
        back = sc.load_instrument(path)
        assert isinstance(back, sc.Superchannel)
        assert all(np.allclose(a, b) for a, b in zip(back.kraus, t.kraus))

    def test_instrument_round_trip(self):
        cert = me.construct_theorem2_instrument(ch.identity_channel(2), 2, 2)
        back = sc.instrument_from_json(sc.instrument_to_json(cert.instrument))
        assert isinstance(back, sc.Instrument) and len(back) == 4

    @pytest.mark.parametrize("doc", [{}, {"dims": [2, 2], "parts": []}, {"dims": [2, 2, 2, 2], "parts": [{}]}])
    def test_bad_documents(self, doc):
        with pytest.raises(ValidationError):
            sc.instrument_from_json(doc)
