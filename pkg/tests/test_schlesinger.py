import numpy as np
import pytest

from isoschlesinger.curve_core import BranchConfiguration, elliptic_frame, sample_regular_points
from isoschlesinger.divisor_inversion import LatticeCoordinates, invert
from isoschlesinger.errors import DegenerateZeros
from isoschlesinger.omega_diff import build_omega, find_zeros
from isoschlesinger.schlesinger import (a12_function, a_of_u, build_matrices, elliptic_identities, elliptic_matrices,
                                        garnier_outputs, omega_variation_residual, remark_beta_identity,
                                        run_pipeline, verify_schlesinger)


@pytest.fixture(scope="module")
def om_g1():
    fr = elliptic_frame(0.37)
    co = LatticeCoordinates.of(0.3, 0.2)
    return build_omega(fr, invert(fr, co), co)


@pytest.fixture(scope="module")
def pipe_g2():
    return run_pipeline(BranchConfiguration((0, 1, 2, 3, 4)), LatticeCoordinates.of([0.21, 0.13], [0.17, 0.29]))


def test_general_and_elliptic_matrices_agree(om_g1):
    _, a = build_matrices(om_g1)
    _, b = elliptic_matrices(om_g1)
    assert np.abs(a.matrices - b.matrices).max() < 1e-10


@pytest.mark.parametrize("which", ["g1", "g2"])
def test_sum_rules_and_eigenvalues(which, om_g1, pipe_g2):
    rs = build_matrices(om_g1)[1] if which == "g1" else pipe_g2.residues
    r = rs.sum_rules()
    assert r["sum_A12"] < 1e-10 and r["sum_A11_plus_quarter"] < 1e-9
    assert r["sum_A21"] < 1e-8 and r["A_infinity"] < 1e-9
    assert r["max_det_defect"] < 1e-10 and r["max_trace"] < 1e-12
    for A in rs.matrices:
        assert np.allclose(np.sort(np.linalg.eigvals(A).real), [-0.25, 0.25], atol=1e-9)


def test_beta_sum_genus_two(pipe_g2):
    assert abs(pipe_g2.betas.total() + 2) < 1e-9


def test_a12_zero_is_the_pvi_solution(om_g1):
    y = find_zeros(om_g1)[0]
    assert abs(a12_function(om_g1, y)) < 1e-8 * abs(a12_function(om_g1, y + 0.1))


def test_elliptic_identity_report(om_g1):
    r = elliptic_identities(om_g1)
    assert max(r["0x"], r["1x"], r["01"]) < 1e-9
    assert r["closure"] < 1e-12
    assert max(r["dOmega_P0"], r["dOmega_P1"]) < 1e-4


def test_remark_beta_identity(om_g1):
    assert remark_beta_identity(om_g1) < 1e-10


def test_omega_variation_at_regular_points(om_g1, rng):
    for P in sample_regular_points(om_g1.frame, 3, rng, avoid=om_g1.q, margin=0.2):
        assert omega_variation_residual(om_g1, P) < 1e-4


def test_schlesinger_genus_one():
    rep = verify_schlesinger(BranchConfiguration((0, 1, 0.37)), LatticeCoordinates.of(0.3, 0.2))
    assert len(rep["pairs"]) == 9 and rep["max"] < 1e-4


def test_negative_control_detects_beta_perturbation():
    rep = verify_schlesinger(BranchConfiguration((0, 1, 0.37)), LatticeCoordinates.of(0.3, 0.2), beta_shift=1e-3)
    assert rep["max"] > 1e-3


def test_garnier_outputs(pipe_g2):
    out = garnier_outputs(pipe_g2.omega, pipe_g2.residues, pipe_g2.betas)
    assert out.z.size == 3 and out.momenta_printed.size == 3 and out.momenta_full.size == 3
    u, h = 1.7 + 0.4j, 1e-5
    dlog = (np.log(a12_function(pipe_g2.omega, u + h)) - np.log(a12_function(pipe_g2.omega, u - h))) / (2 * h)
    assert abs(-dlog - out.p1(u)) < 1e-6 * abs(dlog)
    A = lambda w: a_of_u(pipe_g2.residues, w)
    dA11 = (A(u + h)[0, 0] - A(u - h)[0, 0]) / (2 * h)
    p2 = np.linalg.det(A(u)) - dA11 + A(u)[0, 0] * dlog
    assert abs(p2 - out.p2(u)) < 1e-6 * abs(p2)
    # a zero of A12 is a simple pole of p1 with residue -1
    for z in out.z:
        r = 1e-6 * np.exp(2j * np.pi * np.arange(8) / 8)
        res = np.mean([ri * out.p1(z + ri) for ri in r])
        assert abs(res + 1) < 1e-8


def test_garnier_flags_coincident_zeros(monkeypatch, pipe_g2):
    import isoschlesinger.schlesinger as mod
    from isoschlesinger.errors import MultipleZeroDetected

    def boom(*a, **k):
        raise MultipleZeroDetected("forced")
    monkeypatch.setattr(mod, "find_zeros", boom)
    with pytest.raises(DegenerateZeros):
        garnier_outputs(pipe_g2.omega)
