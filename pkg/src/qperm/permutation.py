"""Quantum-permutation analysis: Birkhoff slices, characters and the classical
version, character supports, the random / truly-quantum decomposition,
stabiliser quasi-subgroups, and the fixed-point observable."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import permgroups
from .algebra import (
    AlgebraError,
    AlgebraElement,
    LinearFunctional,
    Projection,
    State,
    gram_norm,
    meet,
    spectral_partition,
    support_projection,
)
from .cqg import CompactQuantumGroup, abelianization, birkhoff_matrix, characters
from .idempotent import (
    cesaro_idempotent,
    condition,
    generated_idempotent,
    is_group_like,
    quasi_subgroup_member,
)


def birkhoff_slice(G: CompactQuantumGroup, phi: LinearFunctional) -> np.ndarray:
    """Doubly stochastic matrix (phi(u_ij)); the slice of a state."""
    P = birkhoff_matrix(G, phi)
    if np.abs(P.imag).max() > 1e-8:
        raise AlgebraError("slice of a state should be real")
    P = P.real
    rows = np.abs(P.sum(axis=1) - 1).max()
    cols = np.abs(P.sum(axis=0) - 1).max()
    if max(rows, cols) > 1e-7 or P.min() < -1e-8:
        raise AlgebraError("slice is not doubly stochastic; not a state?")
    return P


def is_character(G: CompactQuantumGroup, phi: State, tol: float = 1e-8):
    """The permutation sigma with slice P_sigma, if the slice is one.

    Returns None when the slice is not a permutation matrix.  A permutation
    slice forces multiplicativity, which is asserted rather than trusted.
    """
    P = birkhoff_slice(G, phi)
    R = np.round(P)
    if np.abs(P - R).max() > tol or not _is_permutation_matrix(R):
        return None
    mres = np.abs(np.einsum("ijk,k->ij", G.algebra.mult, phi.duals, optimize=True)
                  - np.outer(phi.duals, phi.duals)).max()
    if mres > 100 * max(tol, G.algebra.tol):
        raise AlgebraError("permutation slice but not multiplicative: "
                           "invalid input model")
    return tuple(int(np.argmax(R[:, j])) for j in range(G.N))


def _is_permutation_matrix(R: np.ndarray) -> bool:
    return (R.min() >= 0 and np.all(R.sum(axis=0) == 1)
            and np.all(R.sum(axis=1) == 1))


@dataclass
class ClassicalVersion:
    """The finite group of characters, as permutations, with their supports."""

    permutations: list[tuple]
    characters: list[State]
    supports: list[Projection]
    p_C: Projection
    p_Q: Projection

    def __len__(self):
        return len(self.permutations)


def classical_version(G: CompactQuantumGroup) -> ClassicalVersion:
    """Enumerate the characters and assemble the classical-part projections.

    Each character's support is computed two ways, as the meet of the magic
    entries it selects and as the support projection of the state; a rank or
    norm mismatch is a hard error.  The sum p_C must be group-like.
    """
    chars = characters(G)
    perms, supports = [], []
    for chi in chars:
        sigma = is_character(G, chi)
        if sigma is None:
            raise AlgebraError("character with a non-permutation slice")
        p_meet = meet([G.magic_projection(sigma[j], j) for j in range(G.N)])
        p_supp = support_projection(chi)
        if gram_norm(p_meet - p_supp) > 1e-7:
            raise AlgebraError(
                f"support mismatch for character {sigma}: meet != support")
        r1 = _rank_of(G, p_meet)
        r2 = _rank_of(G, p_supp)
        if r1 != r2:
            raise AlgebraError(f"support rank mismatch for {sigma}: {r1} vs {r2}")
        perms.append(sigma)
        supports.append(p_meet)
    if not permgroups.is_closed(perms):
        raise AlgebraError("character permutations do not form a group")
    order = sorted(range(len(perms)), key=lambda k: (perms[k] != permgroups.identity_perm(G.N), perms[k]))
    perms = [perms[k] for k in order]
    chars = [chars[k] for k in order]
    supports = [supports[k] for k in order]
    p_C = Projection(G.algebra, sum(p.coeffs for p in supports))
    p_Q = Projection(G.algebra, G.algebra.unit - p_C.coeffs)
    if not is_group_like(G, p_C):
        raise AlgebraError("sum of character supports is not group-like")
    return ClassicalVersion(perms, chars, supports, p_C, p_Q)


def _rank_of(G: CompactQuantumGroup, p: Projection) -> int:
    return int(round(float(np.trace(G.algebra.left_mult_matrix(p.coeffs)).real)))


def quantum_fraction(phi: State, cv: ClassicalVersion) -> float:
    """Mass of the state off the classical part: phi(p_Q) in [0, 1]."""
    val = phi(cv.p_Q)
    if abs(val.imag) > 1e-8 or val.real < -1e-8 or val.real > 1 + 1e-8:
        raise AlgebraError(f"quantum fraction out of range: {val}")
    return float(min(max(val.real, 0.0), 1.0))


def decompose(G: CompactQuantumGroup, phi: State, cv: ClassicalVersion):
    """(alpha, phi_C, phi_Q): convex split into random and truly quantum parts.

    Degenerate alpha in {0, 1} leaves the undefined component as None.
    """
    alpha = quantum_fraction(phi, cv)
    # component masses below the conditioning threshold are dropped whole
    cut = 2 * G.algebra.tol
    phi_c = condition(G, phi, cv.p_C) if 1 - alpha > cut else None
    phi_q = condition(G, phi, cv.p_Q) if alpha > cut else None
    recon = np.zeros(G.dim, dtype=complex)
    if phi_c is not None:
        recon += (1 - alpha) * phi_c.duals
    if phi_q is not None:
        recon += alpha * phi_q.duals
    if np.abs(recon - phi.duals).max() > 1e-8:
        raise AlgebraError("random/quantum decomposition failed to reconstruct")
    return alpha, phi_c, phi_q


# -- stabilisers --------------------------------------------------------------


def canonical_partition(P, N: int) -> list[list[int]]:
    """Blocks sorted by minimum element; must partition {0..N-1}."""
    blocks = [sorted(set(b)) for b in P]
    flat = sorted(x for b in blocks for x in b)
    if flat != list(range(N)):
        raise AlgebraError("not a partition of the label set")
    return sorted(blocks, key=lambda b: b[0])


def stabiliser_membership(G: CompactQuantumGroup, phi: State, partition,
                          tol: float = 1e-8) -> bool:
    """phi(u_ij) = 0 whenever i and j lie in different blocks."""
    blocks = canonical_partition(partition, G.N)
    block_of = {}
    for bi, b in enumerate(blocks):
        for x in b:
            block_of[x] = bi
    P = birkhoff_matrix(G, phi)
    for i in range(G.N):
        for j in range(G.N):
            if block_of[i] != block_of[j] and abs(P[i, j]) > tol:
                return False
    return True


def stabiliser_projection(G: CompactQuantumGroup, partition) -> Projection:
    """Meet of the complements of all off-pattern magic entries.

    A state lies in the stabiliser quasi-subgroup iff it gives this
    projection full mass.
    """
    blocks = canonical_partition(partition, G.N)
    block_of = {}
    for bi, b in enumerate(blocks):
        for x in b:
            block_of[x] = bi
    ps = []
    one = G.algebra.unit
    for i in range(G.N):
        for j in range(G.N):
            if block_of[i] != block_of[j]:
                ps.append(Projection(G.algebra, one - G.magic[i, j]))
    if not ps:
        return Projection(G.algebra, one)
    return meet(ps)


def stabiliser_idempotent(G: CompactQuantumGroup, partition,
                          n_samples: int = 24, seed: int = 0,
                          tol: float | None = None) -> State:
    """Invariant idempotent of the stabiliser quasi-subgroup.

    Seeded from the Haar state conditioned on the stabiliser projection when
    that has positive mass, otherwise generated from the counit together
    with sampled members.  The result must absorb sampled members and give
    every diagonal magic entry positive mass.
    """
    tol = G.algebra.iter_tol if tol is None else tol
    blocks = canonical_partition(partition, G.N)
    r = stabiliser_projection(G, blocks)
    members = _member_bank(G, r, n_samples, seed)
    if G.haar(r).real > G.algebra.tol:
        seed_state = condition(G, G.haar, r)
        result = cesaro_idempotent(G, seed_state, tol=tol)
        psi = result.limit
        if not all(quasi_subgroup_member(G, psi, m, 10 * tol) for m in members):
            result = generated_idempotent(G, [psi] + members, tol=tol)
            psi = result.limit
    else:
        result = generated_idempotent(G, [G.counit] + members, tol=tol)
        psi = result.limit
    if not result.converged:
        raise AlgebraError("stabiliser idempotent did not converge")
    if not stabiliser_membership(G, psi, blocks, tol=1e-6):
        raise AlgebraError("stabiliser idempotent escaped the quasi-subgroup")
    diag = [psi(G.magic_projection(j, j)).real for j in range(G.N)]
    if min(diag) <= 1e-10:
        raise AlgebraError("stabiliser idempotent must weight every diagonal entry")
    for m in members:
        if not quasi_subgroup_member(G, psi, m, 10 * tol):
            raise AlgebraError("stabiliser idempotent fails to absorb a member")
    return psi


def _member_bank(G: CompactQuantumGroup, r: Projection, n: int, seed: int) -> list[State]:
    """Sampled states supported on r (hence stabiliser members)."""
    out = [G.counit] if abs(G.counit(r) - 1) < 1e-9 else []
    Lr = G.algebra.left_mult_matrix(r.coeffs)
    for k in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        x = Lr @ (rng.standard_normal(G.dim) + 1j * rng.standard_normal(G.dim))
        if np.abs(x).max() < 1e-12:
            continue
        try:
            out.append(G.vector_state(x))
        except AlgebraError:
            continue
    return out


def is_central(a: AlgebraElement, tol: float | None = None) -> bool:
    alg = a.algebra
    tol = alg.tol if tol is None else tol
    L = alg.left_mult_matrix(a.coeffs)
    R = np.einsum("jik,i->kj", alg.mult, a.coeffs, optimize=True)
    return bool(np.abs(L - R).max() <= tol)


# -- fixed points --------------------------------------------------------------


@dataclass
class FixSpectrum:
    """Spectral data of the main character fix = sum_j u_jj."""

    element: AlgebraElement
    eigenvalues: list[float]
    projections: list[Projection]

    def distribution(self, phi: State) -> list[tuple[float, float]]:
        weights = [max(phi(p).real, 0.0) for p in self.projections]
        total = sum(weights)
        if abs(total - 1.0) > 1e-7:
            raise AlgebraError(f"spectral weights sum to {total}, not 1")
        return list(zip(self.eigenvalues, weights))


def fix_spectrum(G: CompactQuantumGroup) -> FixSpectrum:
    fix = G.fix_element()
    parts = spectral_partition(fix)
    parts.sort(key=lambda t: t[0])
    lams = [lam for lam, _ in parts]
    if lams and (lams[0] < -1e-8 or lams[-1] > G.N + 1e-8):
        raise AlgebraError("fix spectrum escapes [0, N]")
    return FixSpectrum(fix, lams, [p for _, p in parts])


def fixed_point_distribution(G: CompactQuantumGroup, phi: State,
                             spectrum: FixSpectrum | None = None):
    spectrum = fix_spectrum(G) if spectrum is None else spectrum
    return spectrum.distribution(phi)


def has_integer_fixed_points(G: CompactQuantumGroup, phi: State,
                             spectrum: FixSpectrum | None = None,
                             int_tol: float = 1e-6, tol: float = 1e-9) -> bool:
    """All spectral mass of fix sits on eigenvalues within 1e-6 of integers."""
    dist = fixed_point_distribution(G, phi, spectrum)
    off = sum(w for lam, w in dist if abs(lam - round(lam)) > int_tol)
    return off <= tol
