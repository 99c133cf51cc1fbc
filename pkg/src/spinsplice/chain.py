"""Spin-chain operators, Hamiltonian assembly, and ground-state selection.

Basis convention used everywhere in this package: the computational sigma-z
product basis with site 1 as the most significant bit and spin-up mapped to
bit 0.  Basis index ``s`` therefore encodes site ``i`` (1-based) in bit
``n_spins - i``, and ``|up...up>`` is index 0.

All Heisenberg + Zeeman Hamiltonians are real symmetric in this basis and are
assembled as float64 arrays; the generic Pauli operators are complex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

DEFAULT_SPIN_CAP = 12
DEGENERACY_RTOL = 1e-9
DEFAULT_SELECTION_OFFSET = 1e-6


class DegeneracyError(RuntimeError):
    """Raised when a degenerate ground state cannot be resolved uniquely."""


Bond = tuple[int, int]


def _normalize_bond(bond: Iterable[int]) -> Bond:
    i, j = bond
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"bond ({i},{j}) joins a site to itself")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class ChainSpec:
    """Geometry and couplings of a Heisenberg chain with a set of cut bonds.

    ``cut_bonds`` holds the bonds whose exchange terms form the controlled
    interaction; everything else (remaining bonds plus the full Zeeman term)
    is the static part.  When omitted, the single-spin cut is assumed:
    bond (1,2) for an open chain, bonds (1,2) and (1,N) for a ring.
    """

    n_spins: int
    topology: str = "open"
    exchange: float = 1.0
    field: float = 0.0
    cut_bonds: frozenset[Bond] | None = None
    spin_cap: int = DEFAULT_SPIN_CAP

    def __post_init__(self) -> None:
        if self.topology not in ("open", "ring"):
            raise ValueError(f"topology must be 'open' or 'ring', got {self.topology!r}")
        if self.n_spins < 2:
            raise ValueError(f"n_spins must be >= 2, got {self.n_spins}")
        if self.n_spins > self.spin_cap:
            raise ValueError(
                f"n_spins={self.n_spins} exceeds the cap of {self.spin_cap} "
                f"(dense storage grows as 4**N)"
            )
        if self.topology == "ring" and self.n_spins < 3:
            raise ValueError("a ring needs at least 3 spins")
        if self.cut_bonds is None:
            cut = {(1, 2)}
            if self.topology == "ring":
                cut.add((1, self.n_spins))
            object.__setattr__(self, "cut_bonds", frozenset(cut))
        else:
            cut = frozenset(_normalize_bond(b) for b in self.cut_bonds)
            if not cut:
                raise ValueError("cut_bonds must not be empty")
            allowed = set(self.bonds())
            for b in cut:
                if b not in allowed:
                    raise ValueError(
                        f"cut bond {b} is not a nearest-neighbour bond of this {self.topology} chain"
                    )
            object.__setattr__(self, "cut_bonds", cut)

    @property
    def dim(self) -> int:
        return 1 << self.n_spins

    def bonds(self) -> list[Bond]:
        """All nearest-neighbour bonds of the declared topology."""
        out = [(i, i + 1) for i in range(1, self.n_spins)]
        if self.topology == "ring":
            out.append((1, self.n_spins))
        return out


def pauli_site_operator(site: int, axis: str, n_spins: int) -> np.ndarray:
    """Pauli operator on one site, embedded in the full 2**n_spins space.

    Site 1 is the most significant tensor factor.
    """
    if not 1 <= site <= n_spins:
        raise ValueError(f"site {site} out of range 1..{n_spins}")
    if axis not in PAULI:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    op = np.array([[1.0 + 0.0j]])
    eye = np.eye(2, dtype=complex)
    for s in range(1, n_spins + 1):
        op = np.kron(op, PAULI[axis] if s == site else eye)
    return op


def _site_bit(state: int, site: int, n_spins: int) -> int:
    return (state >> (n_spins - site)) & 1


def _add_exchange_bond(h: np.ndarray, i: int, j: int, coupling: float, n_spins: int) -> None:
    # sigma_i . sigma_j in the z product basis: z_i z_j on the diagonal plus a
    # weight-2 pair flip between antiparallel configurations.
    dim = 1 << n_spins
    mask = (1 << (n_spins - i)) | (1 << (n_spins - j))
    for s in range(dim):
        bi = _site_bit(s, i, n_spins)
        bj = _site_bit(s, j, n_spins)
        h[s, s] += coupling * (1.0 - 2.0 * bi) * (1.0 - 2.0 * bj)
        if bi != bj:
            h[s ^ mask, s] += 2.0 * coupling


def assemble_hamiltonian(spec: ChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split Hamiltonian (static part, controlled part) as real float64 arrays.

    The static part carries every exchange bond not in ``cut_bonds`` plus the
    full Zeeman term; the controlled part is the sum of the cut-bond exchange
    terms.  Their sum is the complete chain (or ring) Hamiltonian.
    """
    dim = spec.dim
    h0 = np.zeros((dim, dim), dtype=np.float64)
    v = np.zeros((dim, dim), dtype=np.float64)
    for bond in spec.bonds():
        target = v if bond in spec.cut_bonds else h0
        _add_exchange_bond(target, bond[0], bond[1], spec.exchange, spec.n_spins)
    if spec.field != 0.0:
        diag = np.zeros(dim, dtype=np.float64)
        for s in range(dim):
            n_down = bin(s).count("1")
            diag[s] = spec.field * (spec.n_spins - 2 * n_down)
        h0[np.diag_indices(dim)] += diag
    return h0, v


def detached_block_hamiltonian(spec: ChainSpec, sites: tuple[int, ...]) -> np.ndarray:
    """Hamiltonian of a detached block, on the block's own 2**len(sites) space.

    Keeps the exchange bonds internal to the block (excluding cut bonds) and
    the Zeeman term of the block sites.  Site ordering inside the block
    follows ascending site number, most significant first.
    """
    n = len(sites)
    order = {site: k + 1 for k, site in enumerate(sorted(sites))}
    h = np.zeros((1 << n, 1 << n), dtype=np.float64)
    for bond in spec.bonds():
        if bond in spec.cut_bonds:
            continue
        if bond[0] in order and bond[1] in order:
            _add_exchange_bond(h, order[bond[0]], order[bond[1]], spec.exchange, n)
    if spec.field != 0.0:
        for s in range(1 << n):
            n_down = bin(s).count("1")
            h[s, s] += spec.field * (n - 2 * n_down)
    return h


def cut_components(spec: ChainSpec) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Site sets (A, B) left after removing the cut bonds, A containing site 1.

    Raises if the cut bonds do not actually disconnect the chain.
    """
    adjacency: dict[int, set[int]] = {s: set() for s in range(1, spec.n_spins + 1)}
    for bond in spec.bonds():
        if bond in spec.cut_bonds:
            continue
        adjacency[bond[0]].add(bond[1])
        adjacency[bond[1]].add(bond[0])
    seen = {1}
    stack = [1]
    while stack:
        for nb in adjacency[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    rest = tuple(s for s in range(1, spec.n_spins + 1) if s not in seen)
    if not rest:
        raise ValueError("cut_bonds do not disconnect the chain; no detached block exists")
    return tuple(sorted(seen)), rest


def commutator_frobenius_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of the commutator ab - ba; zero iff a and b commute."""
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"operands must be square matrices of equal shape, got {a.shape} and {b.shape}")
    return float(np.linalg.norm(a @ b - b @ a, ord="fro"))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def spectral_range(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])


def decompose(h: np.ndarray) -> SpectralDecomposition:
    """Full dense eigendecomposition of a Hermitian (or real symmetric) matrix."""
    w, q = np.linalg.eigh(h)
    return SpectralDecomposition(w, q)


@dataclass(frozen=True)
class GroundStateSelection:
    energy: float
    state: np.ndarray
    degenerate: bool
    selection_offset: float = DEFAULT_SELECTION_OFFSET


def select_in_subspace(basis: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Unit vector of span(basis columns) with maximal overlap with reference.

    That maximizer is the normalized projection of the reference onto the
    subspace; a vanishing projection means the reference cannot discriminate.
    """
    coeff = basis.conj().T @ reference
    norm = np.linalg.norm(coeff)
    if norm < 1e-12:
        raise DegeneracyError(
            "continuity reference is orthogonal to the degenerate ground subspace"
        )
    return basis @ (coeff / norm)


def ground_state(
    h: np.ndarray,
    continuity_reference: np.ndarray | None = None,
    selection_offset: float = DEFAULT_SELECTION_OFFSET,
    degeneracy_rtol: float = DEGENERACY_RTOL,
) -> GroundStateSelection:
    """Lowest eigenpair of ``h`` with explicit handling of degeneracy.

    When the two lowest eigenvalues coincide within ``degeneracy_rtol`` times
    the spectral range, the state is picked inside the ground subspace as the
    one with maximal overlap with the unique ground state of
    ``continuity_reference`` (a slightly perturbed Hamiltonian supplied by the
    caller).  Without a usable reference the ambiguity is an error, never a
    silent arbitrary choice.
    """
    w, q = np.linalg.eigh(h)
    threshold = degeneracy_rtol * float(w[-1] - w[0])
    if len(w) < 2 or w[1] - w[0] > threshold:
        return GroundStateSelection(float(w[0]), q[:, 0], False, selection_offset)
    if continuity_reference is None:
        raise DegeneracyError(
            "ground state is degenerate and no continuity reference was supplied"
        )
    wr, qr = np.linalg.eigh(continuity_reference)
    ref_threshold = degeneracy_rtol * float(wr[-1] - wr[0])
    if wr[1] - wr[0] <= ref_threshold:
        raise DegeneracyError(
            "unresolvable degeneracy: the perturbed reference Hamiltonian is degenerate too"
        )
    k = int(np.searchsorted(w, w[0] + threshold, side="right"))
    state = select_in_subspace(q[:, :k], qr[:, 0])
    return GroundStateSelection(float(w[0]), state, True, selection_offset)
