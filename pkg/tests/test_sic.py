import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esic import sic, states
from esic.linalg import partial_trace, trace_norm
from esic.sic import (
    CertificationError,
    Fiducial,
    SicPovm,
    completeness_residual,
    exact_fiducial,
    fiducial_search,
    frame_potential,
    reconstruct_state,
    sic_expectations,
    sic_from_fiducial,
    sic_probabilities,
    verify_sic,
    wh_displacements,
)
from conftest import PAULI, random_mixed, random_unitary


def test_qubit_displacements_are_paulis():
    ds = wh_displacements(2)
    np.testing.assert_allclose(ds[0], PAULI["I"], atol=1e-16)
    np.testing.assert_allclose(ds[1], PAULI["Z"], atol=1e-16)
    np.testing.assert_allclose(ds[2], PAULI["X"], atol=1e-16)
    np.testing.assert_allclose(ds[3], PAULI["X"] @ PAULI["Z"], atol=1e-16)


@pytest.mark.parametrize("d", range(2, 8))
def test_displacements_unitary(d):
    ds = wh_displacements(d)
    assert ds.shape == (d * d, d, d)
    np.testing.assert_array_equal(ds[0], np.eye(d))
    for u in ds:
        assert np.abs(u @ u.conj().T - np.eye(d)).max() <= 1e-14


def test_displacements_reject_small_d():
    with pytest.raises(ValueError):
        wh_displacements(1)


def _orbit_gram_quartic_sum(psi):
    # brute-force oracle: sum over all orbit pairs of |<psi_i|psi_j>|^4
    vecs = np.array([u @ psi for u in wh_displacements(psi.shape[0])])
    return float(np.sum(np.abs(vecs.conj() @ vecs.T) ** 4))


def test_frame_potential_values():
    fid = exact_fiducial(2)
    assert frame_potential(fid) == pytest.approx(4 / 3, abs=1e-14)
    # the whole-orbit Gram sum is d^2 times the displacement sum: 16/3 at d=2
    assert _orbit_gram_quartic_sum(fid.amplitudes) == pytest.approx(16 / 3, abs=1e-13)
    assert frame_potential(np.array([1.0, 0.0])) == pytest.approx(2.0, abs=1e-15)


def test_frame_potential_minimum_is_at_fiducials_dense_scan():
    # dense Bloch-sphere scan: nothing dips below the fiducial value 2d/(d+1)
    th, ph = np.meshgrid(np.linspace(0, np.pi, 121), np.linspace(0, 2 * np.pi, 241))
    values = [
        frame_potential(np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)]))
        for t, p in zip(th.ravel(), ph.ravel())
    ]
    assert min(values) >= 4 / 3 - 1e-12
    assert max(values) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("d", range(2, 8))
def test_frame_potential_at_certified_fiducial(d):
    fid = sic.get_fiducial(d)
    assert frame_potential(fid) == pytest.approx(2 * d / (d + 1), abs=1e-12)
    assert _orbit_gram_quartic_sum(fid.amplitudes) == pytest.approx(2 * d**3 / (d + 1), abs=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_exact_fiducials(d):
    fid = exact_fiducial(d)
    assert fid.residual <= 1e-12
    assert abs(np.linalg.norm(fid.amplitudes) - 1) <= 1e-12
    povm = sic_from_fiducial(fid)
    assert verify_sic(povm) <= 1e-12


def test_qubit_fiducial_has_bloch_vector_111():
    rho = np.outer(exact_fiducial(2).amplitudes, exact_fiducial(2).amplitudes.conj())
    bloch = [np.trace(rho @ PAULI[k]).real for k in "XYZ"]
    np.testing.assert_allclose(bloch, np.ones(3) / np.sqrt(3), atol=1e-15)


@pytest.mark.parametrize("d", [2, 3])
def test_search_low_dimensions(d):
    fid = fiducial_search(d, seed=1)
    assert fid.residual <= 1e-12
    vecs = sic_from_fiducial(fid).vectors
    gram = np.abs(vecs.conj() @ vecs.T) ** 2
    off = gram[~np.eye(d * d, dtype=bool)]
    np.testing.assert_allclose(off, 1 / (d + 1), atol=1e-12)


@pytest.mark.parametrize("d", range(4, 8))
def test_search_certifies(d):
    fid = fiducial_search(d, seed=0)
    assert fid.certified and fid.residual <= 1e-9
    assert abs(np.linalg.norm(fid.amplitudes) - 1) <= 1e-12


def test_search_is_deterministic():
    a = fiducial_search(5, seed=7)
    b = fiducial_search(5, seed=7)
    assert a.amplitudes.tobytes() == b.amplitudes.tobytes()


def test_search_failure_reports_best_residual():
    with pytest.raises(CertificationError) as info:
        fiducial_search(4, seed=0, tol=0.0, restarts=1)
    assert 0 < info.value.best_residual < 1e-9


def test_sic_qubit_structure():
    povm = sic_from_fiducial(exact_fiducial(2))
    assert completeness_residual(povm) <= 1e-12
    tr = np.einsum("iab,jba->ij", povm.projectors, povm.projectors).real
    np.testing.assert_allclose(tr, (2 * np.eye(4) + 1) / 12, atol=1e-15)


def test_sic_qutrit_traces():
    povm = sic_from_fiducial(exact_fiducial(3))
    assert povm.projectors.shape == (9, 3, 3)
    traces = np.trace(povm.projectors, axis1=1, axis2=2)
    np.testing.assert_allclose(traces, 1 / 3, atol=1e-15)


@pytest.mark.parametrize("d", range(2, 8))
def test_default_sic_invariants(d):
    povm = sic.default_sic(d)
    assert verify_sic(povm) <= 1e-9
    assert completeness_residual(povm) <= 1e-10
    for p in povm.projectors:
        assert abs(np.trace(p).real - 1 / d) <= 1e-12
        assert np.linalg.eigvalsh(p).min() >= -1e-14
    np.testing.assert_allclose(povm.normalized_elements, np.sqrt(d * (d + 1) / 2) * povm.projectors)


def test_uncertified_fiducial_rejected():
    bad = Fiducial(2, np.array([1.0, 0.0], dtype=complex), residual=2 / 3)
    with pytest.raises(CertificationError):
        sic_from_fiducial(bad)


def test_verify_sic_of_degenerate_povm():
    povm = SicPovm.from_vectors(np.tile([1.0, 0.0], (4, 1)))
    assert verify_sic(povm) == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("d", [2, 5])
def test_verify_sic_is_covariant(d, rng):
    povm = sic.default_sic(d)
    moved = povm.conjugated(random_unitary(d, rng))
    assert abs(verify_sic(moved) - verify_sic(povm)) <= 1e-12


@pytest.mark.parametrize("d", range(2, 8))
def test_probabilities_of_maximally_mixed(d):
    p = sic_probabilities(np.eye(d) / d, sic.default_sic(d))
    np.testing.assert_allclose(p, 1 / d**2, atol=1e-15)


@pytest.mark.parametrize("d", range(2, 6))
def test_purity_identities(d, rng):
    povm = sic.default_sic(d)
    for rank in (1, 2, d):
        rho = random_mixed(d, rng, rank)
        p = sic_probabilities(rho, povm)
        purity = np.vdot(rho, rho).real
        assert p.min() >= -1e-12 and abs(p.sum() - 1) <= 1e-10
        assert abs(np.sum(p**2) - (1 + purity) / (d * (d + 1))) <= 1e-12
        e = sic_expectations(rho, povm)
        assert abs(np.sum(e**2) - (1 + purity) / 2) <= 1e-12
        if rank == 1:
            assert abs(np.sum(p**2) - 2 / (d * (d + 1))) <= 1e-12


def test_probabilities_dimension_mismatch():
    with pytest.raises(ValueError):
        sic_probabilities(np.eye(3) / 3, sic.default_sic(2))


def test_reconstruct_examples(rng):
    povm = sic.default_sic(3)
    rho = reconstruct_state(np.full(9, 1 / 9), povm)
    np.testing.assert_allclose(rho.matrix, np.eye(3) / 3, atol=1e-15)
    pure = states.pure_density(states.haar_random_pure(3, rng)).matrix
    back = reconstruct_state(sic_probabilities(pure, povm), povm)
    assert trace_norm(back.matrix - pure) <= 1e-10


def test_reconstruct_horodecki_round_trip():
    # a 9-dim SIC is out of range: measure with local qutrit SICs and invert
    # each side with the same dual frame reconstruct_state uses
    rho = states.horodecki_state(0.5).matrix
    a = sic.default_sic(3)
    p = np.einsum("iba,jdc,acbd->ij", a.projectors, a.projectors, rho.reshape(3, 3, 3, 3)).real
    assert abs(p.sum() - 1) <= 1e-12
    marginal = reconstruct_state(p.sum(axis=1), a).matrix
    np.testing.assert_allclose(marginal, partial_trace(rho, "B", (3, 3)).matrix, atol=1e-12)
    dual = 12 * a.projectors - np.eye(3)
    recon = np.einsum("ij,iab,jcd->acbd", p, dual, dual).reshape(9, 9)
    assert trace_norm(recon - rho) <= 1e-10


def test_reconstruct_rejects_malformed():
    povm = sic.default_sic(2)
    with pytest.raises(ValueError):
        reconstruct_state(np.ones(3) / 3, povm)
    with pytest.raises(ValueError):
        reconstruct_state(np.ones(4) / 2, povm)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_tomographic_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    povm = sic.default_sic(d)
    rho = random_mixed(d, rng, 1 + int(rng.integers(d)))
    back = reconstruct_state(sic_probabilities(rho, povm), povm)
    assert trace_norm(back.matrix - rho) <= 1e-10


def test_fiducial_cache_round_trip(tmp_path):
    fid = fiducial_search(4, seed=3)
    path = sic.save_fiducial(fid, tmp_path)
    doc = json.loads(path.read_text())
    assert doc["generator"] == "XjZk" and doc["dimension"] == 4 and doc["seed"] == 3
    assert len(doc["amplitudes"]) == 4 and all(len(pair) == 2 for pair in doc["amplitudes"])
    back = sic.load_fiducial(4, seed=3, directory=tmp_path)
    assert back.amplitudes.tobytes() == fid.amplitudes.tobytes()
    assert sic.load_fiducial(4, seed=99, directory=tmp_path) is None
    assert sic.load_fiducial(5, directory=tmp_path) is None


def test_fiducial_cache_rejects_tampered(tmp_path):
    fid = fiducial_search(4, seed=3)
    path = sic.save_fiducial(fid, tmp_path)
    doc = json.loads(path.read_text())
    doc["amplitudes"][0] = [1.0, 0.0]
    path.write_text(json.dumps(doc))
    assert sic.load_fiducial(4, directory=tmp_path) is None
    path.write_text("{not json")
    assert sic.load_fiducial(4, directory=tmp_path) is None
