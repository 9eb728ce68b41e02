import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lfscatter import (
    ClusterOperator,
    DomainError,
    FockState,
    ModelParams,
    OperatorPolynomial,
    apply_monomial,
    build_connector,
    diagonalize,
    enumerate_basis,
    fit_cluster_operator,
    log_unitary,
    operator_matrix,
    sector_hamiltonian,
    verify_fit,
)
from lfscatter.ucc import (
    cached_cluster,
    generate_diagonal_ansatz,
    generate_offdiag_ansatz,
    sector_bases,
    solve_min_norm,
)


@pytest.fixture(scope="module")
def c3(params):
    return fit_cluster_operator(params, 3)


def test_connector_maps_source_to_target():
    for K in range(2, 7):
        for parity in ("even", "odd"):
            states = list(enumerate_basis(K, parity))
            for i, src in enumerate(states):
                for tgt in states[i + 1 :]:
                    c = build_connector(src, tgt)
                    img, amp = apply_monomial(c.mono, src)
                    assert img == tgt and amp == pytest.approx(1.0)
                    assert not set(c.mono.create) & set(c.mono.annihilate)


def test_connector_example():
    c = build_connector(FockState.parse("3^1"), FockState.parse("1^3"))
    assert c.mono.key == ((1, 1, 1), (3,))
    assert c.mono.coeff == pytest.approx(1 / np.sqrt(6))


def test_connector_domain():
    with pytest.raises(DomainError):
        build_connector(FockState.parse("3^1"), FockState.parse("3^1"))
    with pytest.raises(DomainError):
        build_connector(FockState.parse("3^1"), FockState.parse("1^1,2^1"))


def test_diagonal_ansatz():
    assert [m.key for m in generate_diagonal_ansatz(3, 1)] == [((1,), (1,)), ((2,), (2,)), ((3,), (3,))]
    assert len(generate_diagonal_ansatz(3, 2)) == 3 + 6


def test_offdiag_ansatz_level_two_at_k3():
    monos = generate_offdiag_ansatz(sector_bases(3), 2)
    assert [m.key for m in monos] == [((1, 1, 1), (3,))]
    assert generate_offdiag_ansatz(sector_bases(3), 1) == []


def test_offdiag_ansatz_has_unique_pairs():
    monos = generate_offdiag_ansatz(sector_bases(5), 4)
    keys = [frozenset([m.key, (m.key[1], m.key[0])]) for m in monos]
    assert len(keys) == len(set(keys))
    for m in monos:
        assert m.momentum_transfer == 0 and m.number_change % 2 == 0 and m.key[0] != m.key[1]


def test_solve_min_norm():
    A = np.array([[1.0, 1.0], [2.0, 2.0]])
    x, ra, rab = solve_min_norm(A, np.array([2.0, 4.0]))
    np.testing.assert_allclose(x, [1, 1])
    assert (ra, rab) == (1, 1)
    x, ra, rab = solve_min_norm(A, np.array([1.0, 0.0]))
    assert x is None and (ra, rab) == (1, 2)


def test_k1_fit_is_empty(params):
    c = fit_cluster_operator(params, 1)
    assert len(c.poly) == 0
    assert verify_fit(c).ok


def test_k3_fit(c3):
    pairs = c3.hermitian_pairs()
    assert len(pairs) == 1
    key, theta = pairs[0]
    assert {key, (key[1], key[0])} == {((1, 1, 1), (3,)), ((3,), (1, 1, 1))}
    assert abs(theta) == pytest.approx(0.0364, abs=1e-4)
    assert abs(theta.real) < 1e-12
    assert c3.diagonal_terms() == []
    rep = verify_fit(c3)
    assert rep.ok and rep.max_residual < 1e-12
    assert c3.poly.is_hermitian()


@pytest.mark.parametrize("K_max", [4, 5])
def test_larger_fits_are_exact_and_imaginary(params, K_max):
    c = cached_cluster(params, K_max)
    assert verify_fit(c).ok
    assert c.poly.conserves_momentum() and c.poly.preserves_parity() and c.poly.is_hermitian()
    assert all(abs(v.real) < 1e-10 for _, v in c.hermitian_pairs())


def test_fit_nesting(params, c3):
    # a K_max=5 cluster also reproduces every block below 3 and 4
    c5 = cached_cluster(params, 5)
    assert verify_fit(c5, K_max=3).ok
    assert verify_fit(c5, K_max=4).ok
    # the lower fit alone cannot cover K=4
    assert not verify_fit(c3, K_max=4).ok


def test_free_theory_fit_is_zero():
    c = fit_cluster_operator(ModelParams(lam=0.0), 4)
    assert len(c.poly) == 0


def test_zero_operator_residual(params):
    zero = ClusterOperator(3, OperatorPolynomial(), params)
    rep = verify_fit(zero)
    assert rep.residuals["3,odd"] == pytest.approx(0.0892, abs=1e-4)
    assert rep.failures() == ["3,odd"]


@given(st.data())
def test_perturbed_coefficient_is_detected(data):
    p = ModelParams()
    c = cached_cluster(p, 4)
    key = data.draw(st.sampled_from(sorted(c.poly.terms)))
    phase = data.draw(st.floats(0, 2 * np.pi))
    terms = dict(c.poly.terms)
    terms[key] += 1e-3 * np.exp(1j * phase)
    bad = ClusterOperator(4, OperatorPolynomial(terms), p)
    assert verify_fit(bad).max_residual > 1e-4


def test_wave_matrix_reproduces_modal(params):
    c5 = cached_cluster(params, 5)
    for b in sector_bases(5):
        W = diagonalize(sector_hamiltonian(params, b.K, b.parity)).modal.entries
        np.testing.assert_allclose(c5.wave_matrix(b).entries, W, atol=1e-9)


def test_generator_matches_log(params, c3):
    b = enumerate_basis(3, "odd")
    W = diagonalize(sector_hamiltonian(params, 3, "odd")).modal
    np.testing.assert_allclose(operator_matrix(c3.poly, b).entries, log_unitary(W).entries, atol=1e-12)


def test_json_round_trip(tmp_path, params):
    c = cached_cluster(params, 4)
    path = tmp_path / "c.json"
    c.save(path)
    back = ClusterOperator.load(path)
    assert back.poly == c.poly and back.params == c.params and back.K_max == 4


def test_kmax_domain(params):
    with pytest.raises(DomainError):
        fit_cluster_operator(params, 0)
