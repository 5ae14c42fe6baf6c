import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structbath.errors import ValidationError
from structbath.network import (NetworkSpec, PumpSpec, build_bath_resolvent,
                                build_full_matrix, validate)
from structbath.sweep import preset

from conftest import networks


def two_bath(j12=0.05):
    return NetworkSpec(("S", "B1", "B2"), (6.0, 6.5, 7.0), (0.0, 1e-3, 2e-3),
                       (("S", "B1", 0.1), ("B1", "B2", j12)))


class TestValidate:
    def test_c1_is_valid(self):
        assert validate(preset("C1").spec) == []

    def test_negative_gamma_named(self):
        spec = preset("C1").spec.with_gamma("B2", -0.01)
        problems = validate(spec)
        assert len(problems) == 1
        assert problems[0].where == "gamma[B2]"

    def test_self_edge_named(self):
        spec = two_bath().with_coupling("B1", "B1", 0.1)
        problems = validate(spec)
        assert len(problems) == 1
        assert "self-edge" in problems[0].message
        assert "B1-B1" in problems[0].where

    def test_duplicate_edge_either_orientation(self):
        spec = NetworkSpec(("S", "B1"), (6.0, 6.5), (0.0, 1e-3),
                           (("S", "B1", 0.1), ("B1", "S", 0.2)))
        problems = validate(spec)
        assert len(problems) == 1 and "duplicate" in problems[0].message

    def test_unknown_endpoint(self):
        spec = NetworkSpec(("S", "B1"), (6.0, 6.5), (0.0, 1e-3), (("S", "B9", 0.1),))
        assert any("B9" in p.message for p in validate(spec))

    def test_length_mismatch(self):
        spec = NetworkSpec(("S", "B1"), (6.0,), (0.0, 1e-3))
        assert [p.where for p in validate(spec)] == ["omega"]

    def test_lossy_system_rejected(self):
        spec = NetworkSpec(("S", "B1"), (6.0, 6.5), (0.1, 1e-3))
        assert [p.where for p in validate(spec)] == ["gamma[S]"]

    def test_reports_every_violation(self):
        spec = NetworkSpec(("S", "B1", "B1"), (6.0, np.nan, 6.0), (0.0, -1.0, 0.0),
                           (("S", "S", 1.0), ("X", "B1", np.inf)))
        wheres = {p.where for p in validate(spec)}
        assert {"node B1", "omega[B1]", "gamma[B1]", "edge S-S", "edge X-B1"} <= wheres

    def test_undeclared_system(self):
        spec = NetworkSpec(("A", "B"), (1.0, 2.0), (0.0, 0.0), (), system="Q")
        assert any(p.where == "system" for p in validate(spec))

    def test_builders_refuse_invalid(self):
        with pytest.raises(ValidationError):
            build_bath_resolvent(two_bath().with_gamma("B1", -1.0), 6.0)


class TestPumpSpec:
    def test_missing_edge(self):
        problems = PumpSpec(("B1", "B5"), g=0.2).problems(two_bath())
        assert problems and "B1-B5" in problems[0].where

    def test_negative_amplitude(self):
        assert PumpSpec(p=-1.0).problems()[0].where == "pump.p"

    def test_driven_node(self):
        assert PumpSpec(("B3", "B5")).driven_node == "B3"


class TestBathResolvent:
    def test_single_node_on_resonance(self):
        spec = NetworkSpec(("S", "B1"), (6.0, 6.5), (0.0, 0.001), (("S", "B1", 0.1),))
        m = build_bath_resolvent(spec, 6.5).matrix
        assert m.shape == (1, 1)
        assert m[0, 0] == 0.001j

    def test_off_diagonal_sign(self):
        m = build_bath_resolvent(two_bath(0.05), 7.0).matrix
        assert m[0, 1] == -0.05 and m[1, 0] == -0.05

    def test_c3_against_hand_assembly(self):
        spec = preset("C3").spec
        w = 6.6
        om = [6.5, 6.7, 7.0, 7.2, 7.4]
        J = {(0, 1): 0.30, (0, 2): 0.35, (0, 3): 0.30, (1, 3): 0.20, (1, 4): 0.20,
             (2, 3): 0.08, (3, 4): 0.06, (2, 4): 0.05}
        ref = np.zeros((5, 5), complex)
        for i in range(5):
            ref[i, i] = w - om[i] + 1e-3j
        for (i, j), v in J.items():
            ref[i, j] = ref[j, i] = -v
        np.testing.assert_array_equal(build_bath_resolvent(spec, w).matrix, ref)

    def test_labels_follow_declaration(self):
        br = build_bath_resolvent(preset("C1").spec, 6.0)
        assert br.labels == ("B1", "B2", "B3", "B4", "B5")
        assert br.omega == 6.0


class TestFullMatrix:
    def test_decoupled_is_block_diagonal(self):
        spec = preset("C3").spec.scale_couplings([0, 1], 0.0)
        a = build_full_matrix(spec, 6.3)
        assert np.all(a[0, 1:] == 0) and np.all(a[1:, 0] == 0)

    def test_chain_inverse(self):
        spec = two_bath()
        a = build_full_matrix(spec, 6.6)
        g = np.linalg.inv(a)
        assert np.linalg.norm(a @ g - np.eye(3)) < 1e-12
        # first row of (wI - H) G = I for the system row
        assert abs((6.6 - 6.0) * g[0, 0] - 0.1 * g[1, 0] - 1) < 1e-12

    def test_c1_top_left(self):
        assert build_full_matrix(preset("C1").spec, 6.0)[0, 0] == 0.0

    def test_system_row_and_column(self):
        spec = preset("C6").spec
        a = build_full_matrix(spec, 6.4)
        np.testing.assert_array_equal(a[0, 1:], [-0.32, -0.16, 0, 0, 0])
        np.testing.assert_array_equal(a[1:, 0], a[0, 1:])

    def test_system_not_first_label(self):
        spec = NetworkSpec(("B1", "S"), (6.5, 6.0), (1e-3, 0.0), (("S", "B1", 0.1),), system="S")
        a = build_full_matrix(spec, 6.2)
        assert a[0, 0] == pytest.approx(0.2)
        assert a[1, 1] == complex(6.2 - 6.5, 1e-3)


@settings(max_examples=60, deadline=None)
@given(networks(), st.floats(5.0, 8.0))
def test_bath_block_identical(spec, w):
    full = build_full_matrix(spec, w)
    np.testing.assert_array_equal(full[1:, 1:], build_bath_resolvent(spec, w).matrix)


@settings(max_examples=60, deadline=None)
@given(networks(), st.floats(-20.0, 20.0))
def test_complex_symmetric_not_hermitian(spec, w):
    m = build_bath_resolvent(spec, w).matrix
    np.testing.assert_array_equal(m, m.T)
    np.testing.assert_array_equal(np.diag(m).imag, spec.gamma[1:])


@settings(max_examples=60, deadline=None)
@given(networks(), st.integers(-4096, 4096), st.integers(-4096, 4096))
def test_linear_in_omega(spec, k1, k2):
    # snap frequencies to a dyadic grid so every subtraction is exact
    snap = NetworkSpec(spec.labels, tuple(np.round(np.asarray(spec.omega) * 1024) / 1024),
                       spec.gamma, spec.couplings, spec.system)
    w1, w2 = 7.0 + k1 / 1024, 7.0 + k2 / 1024
    d = build_bath_resolvent(snap, w2).matrix - build_bath_resolvent(snap, w1).matrix
    np.testing.assert_array_equal(d, (w2 - w1) * np.eye(d.shape[0]))


def test_with_coupling_is_pure():
    spec = two_bath()
    new = spec.with_coupling("B2", "B1", 0.4)
    assert spec.coupling("B1", "B2") == 0.05
    assert new.coupling("B1", "B2") == 0.4
    added = spec.with_coupling("S", "B2", 0.2)
    assert added.coupling("B2", "S") == 0.2 and len(added.couplings) == 3
