import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvdnp.errors import (
    AmbiguousBranchError, CapacityError, DomainError, InvalidTensorError, PreconditionError,
)
from nvdnp.spin_model import (
    FirstShellConfig, HyperfineTensor, NvParameters, assign_manifolds, basis_labels,
    build_hamiltonian, eigendecompose, lines_for_shell, transition_lines,
)


def bare_frequencies(nv):
    return nv.D + nv.gamma_e * nv.B, nv.D - nv.gamma_e * nv.B


def perturbative_lines(nv, a_par_mhz):
    """First-order line positions (GHz) and degeneracies for secular couplings."""
    f_plus, _ = bare_frequencies(nv)
    counts = {}
    for m in itertools.product((0.5, -0.5), repeat=len(a_par_mhz)):
        f = f_plus + 1e-3 * sum(a * mi for a, mi in zip(a_par_mhz, m))
        key = round(f, 9)
        counts[key] = counts.get(key, 0) + 1
    return sorted(counts.items())


# --- parameters and tensors --------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"D": 0.0}, {"gamma_e": -1.0}, {"gamma_n": 0.0}, {"B": -0.1}, {"theta": 4.0},
])
def test_nv_parameters_reject_invalid(kwargs):
    with pytest.raises(DomainError):
        NvParameters(**kwargs)


def test_nuclear_larmor_at_default_field(nv):
    assert nv.nuclear_larmor_mhz == pytest.approx(5.054, abs=1e-3)


def test_tensor_must_be_symmetric():
    with pytest.raises(InvalidTensorError):
        HyperfineTensor([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def test_tensor_must_be_finite():
    with pytest.raises(InvalidTensorError):
        HyperfineTensor(np.diag([1.0, np.nan, 1.0]))


def test_capacity_limit():
    with pytest.raises(CapacityError):
        FirstShellConfig((HyperfineTensor.secular(1.0),) * 4)


def test_non_symmetric_tensor_rejected_by_build(nv):
    with pytest.raises(InvalidTensorError):
        build_hamiltonian(nv, [np.eye(3)])


# --- Hamiltonian -------------------------------------------------------------

def test_zero_field_eigenvalues():
    nv = NvParameters(B=0.0)
    eig = eigendecompose(build_hamiltonian(nv, FirstShellConfig()))
    np.testing.assert_allclose(eig.values, [0.0, 2.870, 2.870], atol=1e-12)


def test_bare_branch_frequencies(nv):
    lines = lines_for_shell(nv, FirstShellConfig(), branches=("+1", "-1"))
    freqs = {ln.branch: ln.frequency for ln in lines}
    assert freqs["+1"] == pytest.approx(16.0978, abs=1e-9)
    assert freqs["-1"] == pytest.approx(10.3578, abs=1e-9)
    assert all(ln.amplitude == pytest.approx(1.0) for ln in lines)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_dimension_and_labels(nv, config, k):
    H = build_hamiltonian(nv, FirstShellConfig(config.site_tensors[:k]))
    assert H.dimension == 3 * 2**k
    assert H.labels == basis_labels(k)
    assert H.labels[0] == (1, (0.5,) * k)


tensor_entries = st.floats(-300.0, 300.0, allow_nan=False)


@st.composite
def random_shell(draw):
    k = draw(st.integers(0, 3))
    sites = []
    for _ in range(k):
        a = np.array([draw(tensor_entries) for _ in range(6)])
        A = np.array([[a[0], a[1], a[2]], [a[1], a[3], a[4]], [a[2], a[4], a[5]]])
        sites.append(HyperfineTensor(A))
    return FirstShellConfig(tuple(sites))


nv_params = st.builds(
    NvParameters,
    D=st.floats(0.5, 5.0), gamma_e=st.floats(1.0, 40.0), gamma_n=st.floats(0.1, 50.0),
    B=st.floats(0.0, 2.0), theta=st.floats(0.0, np.pi),
)


@settings(max_examples=60, deadline=None)
@given(nv=nv_params, shell=random_shell())
def test_hamiltonian_hermitian_and_trace(nv, shell):
    H = build_hamiltonian(nv, shell).matrix
    assert np.max(np.abs(H - H.conj().T)) < 1e-12 * np.max(np.abs(H))
    eig = eigendecompose(H)
    assert np.sum(eig.values) == pytest.approx(np.trace(H).real, rel=1e-10, abs=1e-12)


def test_field_linearity_of_upper_branch(nv):
    def f_plus(B):
        lines = lines_for_shell(NvParameters(B=B), FirstShellConfig(), branches=("+1",))
        return lines[0].frequency

    h = 1e-4
    slope = (f_plus(nv.B + h) - f_plus(nv.B - h)) / (2 * h)
    assert slope == pytest.approx(nv.gamma_e, rel=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zero_coupling_reduces_to_bare_line(nv, k):
    zero = HyperfineTensor(np.zeros((3, 3)))
    lines = lines_for_shell(nv, FirstShellConfig((zero,) * k), branches=("+1", "-1"))
    bare = lines_for_shell(nv, FirstShellConfig(), branches=("+1", "-1"))
    assert len(lines) == 2
    for got, ref in zip(lines, bare):
        assert got.frequency == pytest.approx(ref.frequency, abs=1e-12)
        assert got.amplitude / 2**k == pytest.approx(ref.amplitude)


# --- eigendecomposition --------------------------------------------------------

def test_eigendecompose_diagonal():
    eig = eigendecompose(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(eig.values, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(eig.vectors), np.eye(3)[:, [1, 2, 0]])


def test_eigendecompose_pauli_x():
    eig = eigendecompose(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(eig.values, [-1.0, 1.0])


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(PreconditionError):
        eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("seed", range(100))
def test_random_hermitian_reconstruction(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 25))
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = 0.5 * (M + M.conj().T)
    eig = eigendecompose(H)
    V = eig.vectors
    assert np.all(np.diff(eig.values) >= 0)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(n), atol=1e-12)
    recon = V @ np.diag(eig.values) @ V.conj().T
    assert np.max(np.abs(recon - H)) < 1e-10 * np.max(np.abs(H))


# --- transition lines --------------------------------------------------------

def test_k0_single_line(nv):
    lines = lines_for_shell(nv, FirstShellConfig())
    assert len(lines) == 1 and lines[0].amplitude == pytest.approx(1.0)


def test_k1_secular_doublet(nv):
    lines = lines_for_shell(nv, FirstShellConfig((HyperfineTensor.secular(130.0),)))
    assert len(lines) == 2
    assert lines[0].amplitude == pytest.approx(lines[1].amplitude)
    assert lines[1].frequency - lines[0].frequency == pytest.approx(0.130, abs=1e-9)


def test_k3_binomial_quartet(nv, secular_sites):
    lines = lines_for_shell(nv, FirstShellConfig(secular_sites))
    f0 = bare_frequencies(nv)[0]
    offsets = np.array([ln.frequency - f0 for ln in lines]) / 0.130
    np.testing.assert_allclose(offsets, [-1.5, -0.5, 0.5, 1.5], atol=1e-9)
    np.testing.assert_allclose([ln.amplitude for ln in lines], [1, 3, 3, 1], rtol=1e-9)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("branch", ["+1", "-1"])
def test_branch_amplitudes_sum_to_manifold_dimension(nv, config, k, branch):
    lines = lines_for_shell(nv, FirstShellConfig(config.site_tensors[:k]), branches=(branch,))
    assert sum(ln.amplitude for ln in lines) == pytest.approx(2**k, abs=1e-6)
    assert all(ln.amplitude >= 0 and ln.frequency > 0 for ln in lines)


@pytest.mark.parametrize("a_par", [[130.0], [130.0, 130.0], [180.0, 90.0]])
def test_matches_perturbative_oracle(nv, a_par):
    """Axial couplings keep their flip-flop terms; positions stay within 1% of
    the splitting of the first-order oracle."""
    sites = tuple(HyperfineTensor.axial(a, 0.75 * a) for a in a_par)
    lines = lines_for_shell(nv, FirstShellConfig(sites))
    main = [ln for ln in lines if ln.amplitude > 0.05]
    oracle = perturbative_lines(nv, a_par)
    tol = 0.01 * 1e-3 * min(a_par)
    for ln in main:
        assert min(abs(ln.frequency - f) for f, _ in oracle) < tol
    for f_ref, deg in oracle:
        near = sum(ln.amplitude for ln in lines if abs(ln.frequency - f_ref) < tol)
        assert near == pytest.approx(deg, rel=0.02)


def test_ambiguous_branch_reported_with_indices():
    # B such that gamma_e B = D puts m_s=0 and m_s=-1 at a crossing
    nv = NvParameters(B=2.870 / 28.025, theta=0.6)
    eig = eigendecompose(build_hamiltonian(nv, FirstShellConfig()))
    with pytest.raises(AmbiguousBranchError) as info:
        assign_manifolds(eig)
    assert info.value.indices


def test_wrong_occupancy_rejected(nv):
    eig = eigendecompose(build_hamiltonian(nv, FirstShellConfig()))
    with pytest.raises(PreconditionError):
        transition_lines(eig, nv, 1)
