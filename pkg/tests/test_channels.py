import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chancoh import channels as ch
from chancoh import linalg
from chancoh.errors import ValidationError


class TestChannelValidation:
    def test_identity_choi(self, identity2):
        v = np.array([1, 0, 0, 1])
        assert np.allclose(identity2.choi, np.outer(v, v))
        assert identity2.trace_preserving

    def test_dephasing_choi(self, dephasing2):
        assert np.allclose(dephasing2.choi, np.diag([1, 0, 0, 1]))

    def test_rejects_non_psd(self):
        with pytest.raises(ValidationError, match="positive semidefinite"):
            ch.Channel(1, 2, np.diag([1.5, -0.5]))

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValidationError, match="trace"):
            ch.Channel(2, 2, np.eye(4))

    def test_rejects_non_tp_when_strict(self):
        choi = np.diag([2.0, 0.0, 0.0, 0.0])
        with pytest.raises(ValidationError, match="trace preserving"):
            ch.Channel(2, 2, choi)
        assert not ch.Channel(2, 2, choi, strict=False).trace_preserving

    def test_rejects_shape(self):
        with pytest.raises(ValidationError):
            ch.Channel(2, 2, np.eye(3))

    def test_choi_is_read_only(self, identity2):
        with pytest.raises(ValueError):
            identity2.choi[0, 0] = 5

    def test_kraus_completeness(self):
        with pytest.raises(ValidationError):
            ch.channel_from_kraus(2, 2, [np.eye(2) * 0.5])


class TestConstructors:
    @pytest.mark.parametrize("dims", [(1, 2), (2, 1), (2, 2), (2, 3), (3, 2)])
    def test_random_channel_is_cptp(self, dims):
        c = ch.random_channel(*dims, seed=3)
        assert c.trace_preserving
        assert np.allclose(linalg.partial_trace(c.choi, *dims, "B"), np.eye(dims[0]))

    def test_random_channel_env_one_rank_one(self):
        c = ch.random_channel(2, 2, env_dim=1, seed=0)
        assert np.linalg.matrix_rank(c.choi, tol=1e-9) == 1

    def test_random_channel_deterministic(self):
        assert np.array_equal(ch.random_channel(2, 2, seed=9).choi, ch.random_channel(2, 2, seed=9).choi)

    def test_random_incoherent(self):
        c = ch.random_incoherent_channel(3, 2, seed=1)
        assert ch.is_incoherent(c)

    def test_maximally_coherent_phase_state(self):
        c = ch.maximally_coherent(2, 2, [0.1, 0.2, 0.3, 0.4])
        assert np.isclose(np.trace(c.choi).real, 2)
        assert np.allclose(np.abs(c.choi), 0.5)

    def test_pure_channel_requires_row_norms(self):
        with pytest.raises(ValidationError):
            ch.PureChannel(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_dephase(self, identity2):
        assert ch.dephase(identity2).close_to(ch.dephasing_channel(2))


class TestFidelityAndMixing:
    def test_fidelity_self(self, identity2):
        assert np.isclose(ch.fidelity(identity2, identity2), 2.0)
        assert np.isclose(ch.uhlmann_fidelity(identity2, identity2), 2.0)

    def test_uhlmann_rank_one_formula(self):
        c = ch.random_channel(2, 2, seed=4)
        phi = ch.maximally_coherent(2, 2, [0.3, 1.0, 2.0, 0.0])
        expected = np.sqrt(np.trace(c.choi @ phi.choi).real)
        assert np.isclose(ch.uhlmann_fidelity(c, phi), expected, atol=1e-7)

    def test_fidelity_dims(self, identity2):
        with pytest.raises(ValidationError):
            ch.fidelity(identity2, ch.identity_channel(3))

    def test_mix(self, identity2, dephasing2):
        m = ch.mix([identity2, dephasing2], [0.5, 0.5])
        assert np.isclose(m.choi[0, 3], 0.5)
        assert m.trace_preserving

    @pytest.mark.parametrize("weights", [[0.3, 0.3], [1.2, -0.2], [1.0]])
    def test_mix_bad_weights(self, identity2, dephasing2, weights):
        with pytest.raises(ValidationError):
            ch.mix([identity2, dephasing2], weights)


class TestStates:
    @pytest.mark.parametrize(
        "vec, expected", [([1, 0], 0.0), ([1, 1], 1.0), ([1, 1, 1], 2.0)]
    )
    def test_c_l1(self, vec, expected):
        v = np.array(vec, dtype=complex) / np.linalg.norm(vec)
        assert np.isclose(ch.c_l1(ch.ChannelState(len(vec), np.outer(v, v.conj()))), expected)

    @given(st.integers(1, 4), st.integers(0, 10_000))
    def test_random_pure_state(self, dim, seed):
        assert ch.random_pure_state(dim, seed=seed).is_pure()


class TestJson:
    def test_round_trip(self, tmp_path):
        c = ch.random_channel(2, 3, seed=2)
        path = tmp_path / "c.json"
        ch.save_channel(c, path)
        assert np.linalg.norm(ch.load_channel(path).choi - c.choi) <= 1e-12

    def test_kraus_document(self):
        doc = {"dimA": 2, "dimB": 2, "kraus": [linalg.matrix_to_json(np.eye(2))]}
        assert ch.channel_from_json(doc).close_to(ch.identity_channel(2))

    @pytest.mark.parametrize(
        "doc",
        [
            {"dimA": 2, "dimB": 2},
            {"dimB": 2, "choi": []},
            {"dimA": 2, "dimB": 2, "choi": [], "kraus": []},
            [1, 2],
        ],
    )
    def test_bad_documents(self, doc):
        with pytest.raises(ValidationError):
            ch.channel_from_json(doc)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        with pytest.raises(ValidationError, match="malformed"):
            ch.load_channel(path)
