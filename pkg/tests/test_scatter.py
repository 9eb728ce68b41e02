import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lfscatter import (
    CompositeSpec,
    DomainError,
    ModelParams,
    SectorVector,
    diagonalize,
    enumerate_basis,
    fft_spectrum,
    pdf,
    prepare_composite,
    propagate,
    sector_hamiltonian,
    spectral_lines,
    transition_probability,
)
from lfscatter.scatter import (
    Factor,
    eigenstate_label,
    lines_series,
    pdf_table,
    spectrum_peaks,
)

TIMES = np.linspace(0, 200, 8192)


@pytest.fixture(scope="module")
def H6(params):
    return sector_hamiltonian(params, 6, "even")


@pytest.fixture(scope="module")
def s33(params):
    return prepare_composite(CompositeSpec.parse("A:[3,0]^2"), params)


def amps(v):
    return np.real_if_close(v.amplitudes, tol=1e6)


def test_spec_parsing():
    s = CompositeSpec.parse("A:[3,0]^2")
    assert s.factors == (Factor(3, 0, 2),) and s.creator_kind == "dressed" and s.K_tot == 6
    s = CompositeSpec.parse("P:[2,0], [4,0]")
    assert s.creator_kind == "polynomial" and [f.K for f in s.factors] == [2, 4]
    assert CompositeSpec.parse("[6,3,even]").factors[0].parity == "even"
    assert str(CompositeSpec.parse("a:[5,0],[1,0]")) == "A:[5,0],[1,0]"
    for bad in ["", "Q:[1,0]", "[1]", "A:[0,0]", "[3,0]^0", "[3,0]x"]:
        with pytest.raises(DomainError):
            CompositeSpec.parse(bad)


def test_single_mode_one(params):
    v = prepare_composite(CompositeSpec.parse("A:[1,0]^1"), params)
    assert str(v.basis[0]) == "1^1" and abs(v.amplitudes[0]) == pytest.approx(1.0)


def test_merged_indexing(params):
    labels = [eigenstate_label(params, 6, n) for n in range(enumerate_basis(6, "even").dim + enumerate_basis(6, "odd").dim)]
    energies = []
    for par, i in labels:
        energies.append(diagonalize(sector_hamiltonian(params, 6, par)).eigenvalues[i])
    assert energies == sorted(energies)
    assert eigenstate_label(params, 6, 2, "even") == ("even", 2)
    with pytest.raises(DomainError):
        eigenstate_label(params, 6, 6, "even")


@pytest.mark.parametrize("kind", ["A", "P"])
@pytest.mark.parametrize("K,n", [(3, 0), (4, 0), (5, 0), (6, 1)])
def test_single_factor_gives_eigenvector(params, kind, K, n):
    par, i = eigenstate_label(params, K, n)
    v = prepare_composite(CompositeSpec.parse(f"{kind}:[{K},{n}]"), params)
    w = diagonalize(sector_hamiltonian(params, K, par)).eigenvector(i)
    assert abs(np.vdot(w.amplitudes, v.amplitudes)) == pytest.approx(1.0, abs=1e-9)


def test_double_three_composites(params, s33):
    np.testing.assert_allclose(amps(s33), [0.99217, 0, 0, 0, -0.12238, 0.02475], atol=2e-5)
    p = prepare_composite(CompositeSpec.parse("P:[3,0]^2"), params)
    np.testing.assert_allclose(amps(p), [0.9918, 0, 0, 0, -0.12532, 0.02504], atol=2e-5)


def test_support_sizes(params):
    a = prepare_composite(CompositeSpec.parse("A:[4,0]^2"), params)
    p = prepare_composite(CompositeSpec.parse("P:[4,0]^2"), params)
    assert int(np.sum(np.abs(a.amplitudes) > 1e-10)) == 8
    assert int(np.sum(np.abs(p.amplitudes) > 1e-10)) == 3


def test_order_sensitivity(params):
    ab = prepare_composite(CompositeSpec.parse("A:[2,0],[4,0]"), params)
    ba = prepare_composite(CompositeSpec.parse("A:[4,0],[2,0]"), params)
    assert ab.norm() == pytest.approx(1) and ba.norm() == pytest.approx(1)
    overlap = abs(ab.vdot(ba))
    assert 0.9 < overlap < 1 - 1e-6


def test_transition_probability_basics(H6, s33):
    p = transition_probability(s33, s33, H6, TIMES[:50])
    assert p[0] == pytest.approx(1.0)
    assert np.all((p >= -1e-12) & (p <= 1 + 1e-12))


def test_completeness(H6, s33):
    total = sum(transition_probability(s33, SectorVector.unit(H6.basis, s), H6, TIMES[::97]) for s in H6.basis)
    np.testing.assert_allclose(total, 1.0, atol=1e-9)


@pytest.mark.parametrize("final", ["A:[5,0],[1,0]", "A:[4,0],[2,0]", "A:[2,0],[4,0]", "P:[1,0],[5,0]"])
def test_lines_match_series(params, H6, s33, final):
    f = prepare_composite(CompositeSpec.parse(final), params)
    series = transition_probability(s33, f, H6, TIMES)
    lines = spectral_lines(s33, f, H6)
    np.testing.assert_allclose(lines_series(lines, TIMES), series, atol=1e-9)
    assert sum(ln.weight for ln in lines) == pytest.approx(series[0], abs=1e-12)


def test_eigenvector_single_line(H6):
    w = diagonalize(H6).eigenvector(2)
    lines = spectral_lines(w, w, H6)
    assert len(lines) == 1 and lines[0].frequency == 0 and lines[0].weight == pytest.approx(1)


def test_equal_weight_superposition_has_all_differences(H6):
    dec = diagonalize(H6)
    psi = SectorVector(H6.basis, dec.modal.entries.sum(axis=1) / np.sqrt(6))
    positive = sorted(ln.frequency for ln in spectral_lines(psi, psi, H6) if ln.frequency > 0)
    want = sorted(b - a for i, a in enumerate(dec.eigenvalues) for b in dec.eigenvalues[i + 1 :])
    assert len(positive) == 15
    np.testing.assert_allclose(positive, want, atol=1e-9)


def test_line_0274(params, H6, s33):
    f = prepare_composite(CompositeSpec.parse("A:[2,0],[4,0]"), params)
    lines = spectral_lines(s33, f, H6)
    hit = [ln for ln in lines if abs(ln.frequency - 0.274) < 1e-3]
    assert hit and abs(hit[0].weight) > 1e-12


def test_fft_constant_and_cosine():
    dt = TIMES[1] - TIMES[0]
    omega, mags = fft_spectrum(np.ones_like(TIMES), dt)
    assert np.argmax(mags) == 0
    omega, mags = fft_spectrum(np.cos(1.164 * TIMES), dt)
    assert abs(omega[np.argmax(mags)] - 1.164) <= omega[1]
    with pytest.raises(DomainError):
        fft_spectrum([1.0], dt)


def test_fft_peaks_on_lines(params, H6, s33):
    f = prepare_composite(CompositeSpec.parse("A:[2,0],[4,0]"), params)
    series = transition_probability(s33, f, H6, TIMES)
    omega, mags = fft_spectrum(series, TIMES[1] - TIMES[0])
    freqs = np.array([ln.frequency for ln in spectral_lines(s33, f, H6)])
    for w in spectrum_peaks(omega, mags):
        assert np.min(np.abs(freqs - w)) <= omega[1]


def test_pdf_at_zero(H6, s33):
    assert pdf(s33, H6, 3, 0.0) == pytest.approx(1.984, abs=1e-3)
    assert pdf(s33, H6, 1, 0.0) == pytest.approx(0.0486, abs=1e-4)
    with pytest.raises(DomainError):
        pdf(s33, H6, 7, 0.0)


def test_pdf_sum_rule_and_mode_four(H6, s33):
    table = pdf_table(s33, H6, TIMES)
    np.testing.assert_allclose(table @ np.arange(1, 7), 6.0, atol=1e-9)
    assert table[0, 3] < 1e-20
    assert table[:, 3].max() > 1e-4
    assert np.all(table >= -1e-15)


def test_vacuum_pdf_is_zero(params):
    b = enumerate_basis(0, "even")
    v = SectorVector.unit(b, b[0])
    H = sector_hamiltonian(params, 0, "even")
    assert pdf(v, H, 1, 3.0) == 0


@given(st.floats(0, 100))
def test_norm_conserved(t):
    p = ModelParams()
    v = prepare_composite(CompositeSpec.parse("A:[3,0]^2"), p)
    assert abs(propagate(sector_hamiltonian(p, 6, "even"), v, t).norm() - 1) < 1e-10
