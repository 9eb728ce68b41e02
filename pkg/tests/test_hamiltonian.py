import math

import numpy as np
import pytest

from lfscatter import (
    DomainError,
    ModelParams,
    enumerate_basis,
    h_full_operator,
    harmonic_resolution_operator,
    operator_matrix,
    sector_hamiltonian,
)
from lfscatter.fock import free_energy
from oracles import DenseFock

G = 15 / (4 * math.pi)  # lambda / (8 pi) at lambda = 30


@pytest.fixture(scope="module")
def dense6():
    fock = DenseFock(6)
    return fock, fock.hamiltonian(1.0, 30.0)


@pytest.mark.parametrize("K", range(1, 7))
@pytest.mark.parametrize("parity", ["even", "odd"])
def test_sector_matrix_matches_dense_oracle(dense6, params, K, parity):
    basis = enumerate_basis(K, parity)
    if basis.dim == 0:
        return
    fock, H = dense6
    want = fock.restrict(H, [s.occupancies for s in basis])
    np.testing.assert_allclose(sector_hamiltonian(params, K, parity).entries, want, atol=1e-12)


def test_closed_forms(params):
    assert sector_hamiltonian(params, 1, "odd").entries[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert sector_hamiltonian(params, 2, "odd").entries[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert sector_hamiltonian(params, 2, "even").entries[0, 0] == pytest.approx(2 + G, abs=1e-12)
    H3 = sector_hamiltonian(params, 3, "odd").entries
    np.testing.assert_allclose(H3, [[1 / 3, 5 * math.sqrt(2) / (4 * math.pi)], [5 * math.sqrt(2) / (4 * math.pi), 3 + 3 * G]], atol=1e-12)
    # |1,2>: free 3/2 plus the forward 2->2 amplitude (k,l) = (1,2) and (2,1)
    assert sector_hamiltonian(params, 3, "even").entries[0, 0] == pytest.approx(1.5 + 2 * G / 2, abs=1e-12)


@pytest.mark.parametrize("K", range(1, 9))
def test_hermitian(params, K):
    for parity in ("even", "odd"):
        H = sector_hamiltonian(params, K, parity)
        assert H.hermiticity_error() < 1e-12


def test_operator_symmetries(params):
    H = h_full_operator(params.with_cutoff(8))
    assert H.is_hermitian()
    assert H.conserves_momentum()
    assert H.preserves_parity()


def test_free_limit(params):
    p0 = ModelParams(m=1.3, lam=0.0)
    for K in range(1, 7):
        for parity in ("even", "odd"):
            basis = enumerate_basis(K, parity)
            H = sector_hamiltonian(p0, K, parity).entries
            np.testing.assert_allclose(H, np.diag([free_energy(s, 1.3) for s in basis]), atol=1e-14)


def test_cutoff_independence_above_K():
    for cutoff in (6, 7, 10):
        p = ModelParams(cutoff=cutoff)
        np.testing.assert_array_equal(sector_hamiltonian(p, 6, "even").entries, sector_hamiltonian(ModelParams(cutoff=12), 6, "even").entries)


def test_direct_operator_matrix_agrees_with_cached(params):
    basis = enumerate_basis(5, "odd")
    np.testing.assert_allclose(operator_matrix(h_full_operator(params), basis).entries, sector_hamiltonian(params, 5, "odd").entries, atol=1e-12)


def test_cutoff_below_K_refused():
    with pytest.raises(DomainError):
        sector_hamiltonian(ModelParams(cutoff=4), 6, "even")


def test_harmonic_resolution_is_K():
    P = harmonic_resolution_operator(6)
    for parity in ("even", "odd"):
        M = operator_matrix(P, enumerate_basis(6, parity)).entries
        np.testing.assert_allclose(M, 6 * np.eye(len(M)))


def test_matrix_is_read_only(params):
    with pytest.raises(ValueError):
        sector_hamiltonian(params, 4, "even").entries[0, 0] = 0


def test_params_validation_and_io(tmp_path):
    with pytest.raises(DomainError):
        ModelParams(m=0)
    with pytest.raises(DomainError):
        ModelParams(cutoff=0)
    with pytest.raises(DomainError):
        ModelParams.from_dict({"mass": 1})
    p = ModelParams(m=0.5, lam=12.0, cutoff=9)
    assert ModelParams.from_dict(p.to_dict()) == p
    cfg = tmp_path / "model.cfg"
    cfg.write_text("m = 0.5\nlambda = 12\ncutoff = 9\n")
    assert ModelParams.from_file(cfg) == p
    cfg.write_text("m = heavy\n")
    with pytest.raises(DomainError):
        ModelParams.from_file(cfg)
