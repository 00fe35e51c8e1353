"""Ground-state NV- spin Hamiltonian with up to three first-shell 13C nuclei.

Energies are in GHz throughout. Hyperfine tensors and the nuclear
gyromagnetic ratio are configured in MHz and converted on entry.

Basis ordering is electron m_s in (+1, 0, -1) followed by one spin-1/2
factor per occupied site, each ordered (+1/2, -1/2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousBranchError,
    CapacityError,
    DomainError,
    InvalidTensorError,
    PreconditionError,
)

MAX_SITES = 3
MS_VALUES = (1, 0, -1)

# spin-1 operators, basis (+1, 0, -1)
_S = 1 / np.sqrt(2)
SX = np.array([[0, _S, 0], [_S, 0, _S], [0, _S, 0]], dtype=complex)
SY = np.array([[0, -1j * _S, 0], [1j * _S, 0, -1j * _S], [0, 1j * _S, 0]], dtype=complex)
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)

# spin-1/2 operators, basis (+1/2, -1/2)
IX = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
IY = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
IZ = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class NvParameters:
    """Electron and nuclear constants plus the static field.

    ``D`` in GHz, ``gamma_e`` in GHz/T, ``gamma_n`` in MHz/T, ``B`` in T and
    ``theta`` (field angle from the NV axis, in the xz plane) in rad.
    """

    D: float = 2.870
    gamma_e: float = 28.025
    gamma_n: float = 10.708
    B: float = 0.472
    theta: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise DomainError(f"D must be positive, got {self.D}")
        if not self.gamma_e > 0:
            raise DomainError(f"gamma_e must be positive, got {self.gamma_e}")
        if not self.gamma_n > 0:
            raise DomainError(f"gamma_n must be positive, got {self.gamma_n}")
        if not self.B >= 0:
            raise DomainError(f"B must be non-negative, got {self.B}")
        if not 0 <= self.theta <= np.pi:
            raise DomainError(f"theta must lie in [0, pi], got {self.theta}")

    @property
    def field_direction(self):
        return np.array([np.sin(self.theta), 0.0, np.cos(self.theta)])

    @property
    def nuclear_larmor_mhz(self):
        return self.gamma_n * self.B


class HyperfineTensor:
    """Symmetric 3x3 hyperfine tensor in the NV frame, MHz."""

    __slots__ = ("A",)

    def __init__(self, A):
        A = np.array(A, dtype=float)
        if A.shape != (3, 3):
            raise InvalidTensorError(f"hyperfine tensor must be 3x3, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidTensorError("hyperfine tensor has non-finite entries")
        if not np.array_equal(A, A.T):
            raise InvalidTensorError("hyperfine tensor is not symmetric")
        A.setflags(write=False)
        self.A = A

    @classmethod
    def secular(cls, a_zz):
        """Tensor with only the A_zz (S_z I_z) component."""
        A = np.zeros((3, 3))
        A[2, 2] = a_zz
        return cls(A)

    @classmethod
    def axial(cls, a_par, a_perp):
        return cls(np.diag([a_perp, a_perp, a_par]))

    def rotated_about_z(self, angle):
        c, s = np.cos(angle), np.sin(angle)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        A = R @ self.A @ R.T
        # restore exact symmetry lost to rounding
        return HyperfineTensor(0.5 * (A + A.T))

    def __eq__(self, other):
        return isinstance(other, HyperfineTensor) and np.array_equal(self.A, other.A)

    def __hash__(self):
        return hash(self.A.tobytes())

    def __repr__(self):
        return f"HyperfineTensor({self.A.tolist()!r})"


@dataclass(frozen=True)
class FirstShellConfig:
    occupied_sites: tuple = ()

    def __post_init__(self):
        sites = tuple(self.occupied_sites)
        if len(sites) > MAX_SITES:
            raise CapacityError(
                f"first shell has {MAX_SITES} sites, {len(sites)} requested"
            )
        for site in sites:
            if not isinstance(site, HyperfineTensor):
                raise InvalidTensorError(f"site entry {site!r} is not a HyperfineTensor")
        object.__setattr__(self, "occupied_sites", sites)

    @property
    def k(self):
        return len(self.occupied_sites)


@dataclass(frozen=True)
class HamiltonianMatrix:
    matrix: np.ndarray
    labels: tuple = field(default=())

    @property
    def dimension(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray
    labels: tuple = ()


@dataclass(frozen=True)
class TransitionLine:
    frequency: float  # GHz
    amplitude: float
    branch: str  # "+1" or "-1"
    occupancy: int


def basis_labels(k):
    """(m_s, (m_I1, ..., m_Ik)) for every basis state, in matrix order."""
    nuclear = list(itertools.product((0.5, -0.5), repeat=k))
    return tuple((ms, mi) for ms in MS_VALUES for mi in nuclear)


def _embed(op, position, n_factors, dims):
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[position] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def build_hamiltonian(nv: NvParameters, shell: FirstShellConfig) -> HamiltonianMatrix:
    """Full (non-secular) electron-nuclear Hamiltonian in GHz."""
    if not isinstance(shell, FirstShellConfig):
        shell = FirstShellConfig(tuple(shell))
    k = shell.k
    dims = [3] + [2] * k
    n = len(dims)
    S = [_embed(op, 0, n, dims) for op in (SX, SY, SZ)]
    b = nv.B * nv.field_direction

    H = nv.D * (S[2] @ S[2])
    H = H + nv.gamma_e * (b[0] * S[0] + b[1] * S[1] + b[2] * S[2])

    gamma_n = nv.gamma_n * 1e-3
    for j, site in enumerate(shell.occupied_sites):
        I = [_embed(op, j + 1, n, dims) for op in (IX, IY, IZ)]
        A = site.A * 1e-3
        for a in range(3):
            for c in range(3):
                if A[a, c] != 0.0:
                    H = H + A[a, c] * (S[a] @ I[c])
        H = H - gamma_n * (b[0] * I[0] + b[1] * I[1] + b[2] * I[2])

    H = 0.5 * (H + H.conj().T)
    return HamiltonianMatrix(H, basis_labels(k))


def eigendecompose(H, rtol=1e-12) -> Eigensystem:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    labels = ()
    if isinstance(H, HamiltonianMatrix):
        labels = H.labels
        H = H.matrix
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {H.shape}")
    scale = np.max(np.abs(H)) if H.size else 0.0
    if np.max(np.abs(H - H.conj().T), initial=0.0) > rtol * max(scale, np.finfo(float).tiny):
        raise PreconditionError("matrix is not Hermitian within tolerance")
    values, vectors = np.linalg.eigh(H)
    return Eigensystem(values, vectors, labels)


def manifold_weights(eigensystem: Eigensystem) -> np.ndarray:
    """Weight of each eigenvector in the m_s = +1, 0, -1 blocks (columns)."""
    dim = eigensystem.vectors.shape[0]
    block = dim // 3
    p = np.abs(eigensystem.vectors) ** 2
    return np.stack([p[i * block:(i + 1) * block].sum(axis=0) for i in range(3)], axis=1)


def assign_manifolds(eigensystem: Eigensystem, mixing_threshold=0.75) -> np.ndarray:
    """Dominant m_s of each eigenstate.

    Ties go to the lower m_s. Raises AmbiguousBranchError if any state's
    dominant weight falls below ``mixing_threshold``.
    """
    weights = manifold_weights(eigensystem)
    # column order (-1, 0, +1) so argmax picks the lower m_s on ties
    ordered = weights[:, ::-1]
    idx = np.argmax(ordered, axis=1)
    ms = np.array([-1, 0, 1])[idx]
    dominant = ordered[np.arange(len(idx)), idx]
    bad = np.flatnonzero(dominant < mixing_threshold)
    if bad.size:
        raise AmbiguousBranchError(
            f"states {bad.tolist()} have dominant m_s weight below {mixing_threshold}",
            bad.tolist(),
        )
    return ms


def transition_lines(
    eigensystem: Eigensystem,
    nv: NvParameters,
    occupancy: int,
    branches=("+1", "-1"),
    mixing_threshold=0.75,
    merge_tol=1e-6,
    amplitude_cutoff=1e-10,
):
    """ESR lines from the m_s=0 manifold into the m_s=+1 and/or -1 manifolds.

    Each m_s=0 eigenstate carries unit population. Raw line strengths are
    |<f|S_x|i>|^2, lines closer than ``merge_tol`` GHz are merged, and the
    amplitudes of each branch are rescaled to sum to 2**occupancy.
    """
    vals = eigensystem.values
    vecs = eigensystem.vectors
    dim = vecs.shape[0]
    if dim != 3 * 2 ** occupancy:
        raise PreconditionError(
            f"eigensystem dimension {dim} does not match occupancy {occupancy}"
        )
    ms = assign_manifolds(eigensystem, mixing_threshold)
    ground = np.flatnonzero(ms == 0)
    n_ground = 2 ** occupancy
    if ground.size != n_ground:
        raise AmbiguousBranchError(
            f"found {ground.size} m_s=0 states, expected {n_ground}", ground.tolist()
        )
    sx_full = np.kron(SX, np.eye(n_ground))
    coupling = np.abs(vecs.conj().T @ sx_full @ vecs) ** 2

    lines = []
    for branch in branches:
        target_ms = {"+1": 1, "-1": -1}[branch]
        upper = np.flatnonzero(ms == target_ms)
        if upper.size != n_ground:
            raise AmbiguousBranchError(
                f"found {upper.size} m_s={branch} states, expected {n_ground}",
                upper.tolist(),
            )
        freqs = np.abs(vals[upper][:, None] - vals[ground][None, :]).ravel()
        amps = coupling[np.ix_(upper, ground)].ravel()
        order = np.argsort(freqs, kind="stable")
        freqs, amps = freqs[order], amps[order]

        merged = []
        for f, a in zip(freqs, amps):
            if merged and f - merged[-1][2] <= merge_tol:
                merged[-1][0] += f * a
                merged[-1][1] += a
                merged[-1][2] = f
            else:
                merged.append([f * a, a, f])
        total = sum(m[1] for m in merged)
        kept = [m for m in merged if m[1] > amplitude_cutoff * total]
        kept_total = sum(m[1] for m in kept)
        for weighted_f, a, last_f in kept:
            f = weighted_f / a if a > 0 else last_f
            lines.append(TransitionLine(float(f), float(a * n_ground / kept_total), branch, occupancy))
    return lines


def lines_for_shell(nv: NvParameters, shell: FirstShellConfig, branches=("+1",), **kwargs):
    """Convenience: build, diagonalize and enumerate lines in one call."""
    if not isinstance(shell, FirstShellConfig):
        shell = FirstShellConfig(tuple(shell))
    eig = eigendecompose(build_hamiltonian(nv, shell))
    return transition_lines(eig, nv, shell.k, branches=branches, **kwargs)


def default_site_tensors(reference: HyperfineTensor, rotations_deg=(0.0, 120.0, 240.0)):
    """The three first-shell tensors, related by rotations about the NV axis."""
    return tuple(reference.rotated_about_z(np.deg2rad(a)) for a in rotations_deg)
