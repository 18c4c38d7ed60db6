"""Idempotent states: Cesaro limits, quasi-subgroups, group-like projections,
wave-function collapse, and the Haar / non-Haar classification.

Convolution by a fixed state is a linear operator on the dual, and the limit
of the Cesaro means (phi + phi*2 + ... + phi*n)/n is that operator's
eigenvalue-1 spectral projector applied to the seed.  Computing the limit
spectrally reaches machine precision where stepwise means stall at O(1/n);
a doubling recursion on the means, M_2n = (M_n + T^n M_n)/2, still supplies
an honest iteration count.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur, solve_sylvester

from .algebra import (
    AlgebraError,
    LinearFunctional,
    Projection,
    State,
    gram_norm,
    support_projection,
)
from .cqg import CompactQuantumGroup


@dataclass
class CesaroResult:
    """Limit of the Cesaro means of convolution powers of a seed state.

    ``iterations`` is the Cesaro index n at which the doubling recursion
    became stationary; ``residual`` is the larger of the seed-invariance
    residuals ``|seed * limit - limit|`` and ``|limit * seed - limit|`` in
    sup norm over the basis.
    """

    limit: State
    iterations: int
    residual: float
    converged: bool


@dataclass
class IdempotentClass:
    kind: str                      # "Haar" | "NonHaar"
    null_space_dim: int
    witnesses: list = field(default_factory=list)


def left_convolution_operator(G: CompactQuantumGroup, phi: LinearFunctional) -> np.ndarray:
    """Matrix of rho -> phi * rho on dual coefficient vectors."""
    return np.einsum("iab,a->ib", G.delta, phi.duals, optimize=True)


def _cesaro_projector(T: np.ndarray, cluster: float = 1e-8) -> np.ndarray:
    """Limit of the operator Cesaro means (1/n) sum T^k.

    For a power-bounded operator this is the spectral projector onto the
    eigenvalue-1 cluster, computed from a sorted Schur form (unimodular
    eigenvalues away from 1 average out, contractive ones die).
    """
    U, Q, sdim = schur(T, output="complex", sort=lambda lam: abs(lam - 1.0) < cluster)
    d = T.shape[0]
    if sdim == 0:
        return np.zeros((d, d), dtype=complex)
    if sdim == d:
        return np.eye(d, dtype=complex)
    A, B, C = U[:sdim, :sdim], U[sdim:, sdim:], U[:sdim, sdim:]
    R = solve_sylvester(A, -B, C)
    block = np.zeros((d, d), dtype=complex)
    block[:sdim, :sdim] = np.eye(sdim)
    block[:sdim, sdim:] = R
    return Q @ block @ Q.conj().T


def cesaro_idempotent(G: CompactQuantumGroup, seed: State,
                      max_doublings: int = 30, tol: float | None = None) -> CesaroResult:
    """Invariant idempotent reached by Cesaro-averaging convolution powers.

    The limit is the eigenvalue-1 spectral projector of left convolution by
    the seed, applied to the seed; a doubling recursion on the means,
    M_2n = (M_n + T^n M_n)/2, supplies the reported iteration count: the
    smallest mean length n = 2^k whose mean is within 10*tol of the limit.
    (Doublings stop at 2^30, where repeated squaring is still well below
    the eigenvalue-drift instability of floating point.)
    """
    tol = G.algebra.iter_tol if tol is None else tol
    T = left_convolution_operator(G, seed)
    lim_duals = _cesaro_projector(T) @ seed.duals
    limit = State(G.algebra, lim_duals, check=False)
    M = np.eye(G.dim, dtype=complex)
    P = T.copy()
    n, iterations = 1, None
    for _ in range(max_doublings):
        M = 0.5 * (M + P @ M)
        n *= 2
        if iterations is None and np.abs(M @ seed.duals - lim_duals).max() <= 10 * tol:
            iterations = n
            break
        P = P @ P
    if iterations is None:
        iterations = n
    left = G.convolve(seed, limit, check=False)
    right = G.convolve(limit, seed, check=False)
    residual = max(limit.distance(left), limit.distance(right))
    idem = limit.distance(G.convolve(limit, limit, check=False))
    converged = idem <= tol and residual <= 10 * tol
    return CesaroResult(State(G.algebra, limit.duals), iterations, residual, converged)


def is_idempotent(G: CompactQuantumGroup, phi: State, tol: float | None = None) -> bool:
    tol = G.algebra.iter_tol if tol is None else tol
    return phi.distance(G.convolve(phi, phi, check=False)) <= tol


def quasi_subgroup_member(G: CompactQuantumGroup, psi: State, phi: State,
                          tol: float = 1e-7) -> bool:
    """Whether phi is absorbed by the idempotent psi on both sides."""
    if not is_idempotent(G, psi, max(tol, G.algebra.iter_tol)):
        raise AlgebraError("absorbing state is not idempotent")
    left = G.convolve(psi, phi, check=False)
    right = G.convolve(phi, psi, check=False)
    return psi.distance(left) <= tol and psi.distance(right) <= tol


def generated_idempotent(G: CompactQuantumGroup, states: list[State],
                         max_rounds: int = 8, tol: float | None = None) -> CesaroResult:
    """Idempotent absorbing every input state.

    Each input is first averaged to its own invariant idempotent; the
    interleaved convolution of those is averaged again, and the construction
    is repeated against any input that is not yet absorbed.  A permuted
    interleaving is run as a consistency check on the final limit.
    """
    if not states:
        raise AlgebraError("need at least one state")
    tol = G.algebra.iter_tol if tol is None else tol

    def build(order):
        parts = [cesaro_idempotent(G, states[i], tol=tol) for i in order]
        psi = parts[0].limit
        for r in parts[1:]:
            psi = G.convolve(psi, r.limit, check=False)
        total_iter = sum(r.iterations for r in parts)
        out = cesaro_idempotent(G, State(G.algebra, psi.duals, check=False), tol=tol)
        for _ in range(max_rounds):
            missing = [phi for phi in states
                       if not quasi_subgroup_member(G, out.limit, phi, 10 * tol)]
            if not missing:
                break
            mixed = out.limit
            for phi in missing:
                mixed = G.convolve(G.convolve(mixed, phi, check=False), out.limit,
                                   check=False)
            out = cesaro_idempotent(G, State(G.algebra, mixed.duals, check=False), tol=tol)
        return out, total_iter + out.iterations

    order = list(range(len(states)))
    main, iters = build(order)
    rng = np.random.default_rng(1)
    permuted, _ = build(list(rng.permutation(len(states))))
    drift = main.limit.distance(permuted.limit)
    residual = max(main.residual,
                   max((main.limit.distance(G.convolve(main.limit, phi, check=False))
                        for phi in states), default=0.0))
    converged = main.converged and drift <= 100 * tol and all(
        quasi_subgroup_member(G, main.limit, phi, 10 * tol) for phi in states)
    return CesaroResult(main.limit, iters, residual, converged)


def is_group_like(G: CompactQuantumGroup, p: Projection, tol: float | None = None) -> bool:
    """Delta(p)(1 (x) p) = p (x) p, evaluated in the tensor square."""
    tol = G.algebra.tol if tol is None else tol
    if gram_norm(p) <= tol:
        return False
    T = G.tensor_square
    dp = G.delta_applied(p.coeffs).reshape(-1)
    one_p = np.kron(G.algebra.unit, p.coeffs)
    lhs = T.product_coeffs(dp, one_p)
    diff = T.element(lhs - np.kron(p.coeffs, p.coeffs))
    return gram_norm(diff) <= max(tol, 100 * G.algebra.tol)


def condition(G: CompactQuantumGroup, phi: State, q: Projection) -> State:
    """Wave-function collapse g -> phi(q g q) / phi(q)."""
    mass = phi(q).real
    if mass <= G.algebra.tol:
        raise AlgebraError("conditioning on a projection of zero mass is undefined")
    sandwich = _sandwich_matrix(G, q.coeffs)
    return State(G.algebra, (sandwich @ phi.duals) / mass)


def _sandwich_matrix(G: CompactQuantumGroup, q: np.ndarray) -> np.ndarray:
    """Matrix S with (S phi)(e_i) = phi(q e_i q)."""
    c = G.algebra.mult
    t1 = np.einsum("ijk,j->ik", c, q, optimize=True)        # e_i q
    t2 = np.einsum("a,ik,akl->il", q, t1, c, optimize=True)  # q e_i q
    return t2


def null_space(G: CompactQuantumGroup, phi: State, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal rows spanning N_phi = {f : phi(f* f) = 0}."""
    P = phi.sesquilinear_matrix()
    P = (P + P.conj().T) / 2
    evals, vecs = np.linalg.eigh(P)
    null = vecs[:, evals < tol * max(1.0, evals.max())]
    return null.T  # rows are coefficient vectors of null elements


def classify_idempotent(G: CompactQuantumGroup, phi: State,
                        tol: float = 1e-7) -> IdempotentClass:
    """Haar iff the null space is a two-sided ideal.

    The null space of an idempotent is automatically a left ideal; failures
    of right multiplication are recorded as witnesses.
    """
    if not is_idempotent(G, phi, tol):
        raise AlgebraError("state is not idempotent")
    N = null_space(G, phi)
    if N.shape[0] == 0:
        return IdempotentClass("Haar", 0, [])
    c = G.algebra.mult
    proj = N.conj().T @ N  # projector onto span(N), acting on row vectors
    witnesses = []
    for i in range(G.dim):
        left = N @ c[i]        # rows: e_i n for n in the null basis
        right = N @ c[:, i, :]  # rows: n e_i
        left_res = np.abs(left - left @ proj).max()
        right_res = np.abs(right - right @ proj).max()
        if right_res > tol:
            witnesses.append((G.algebra.labels[i], "right", float(right_res)))
        if left_res > tol:
            witnesses.append((G.algebra.labels[i], "left", float(left_res)))
    kind = "Haar" if not witnesses else "NonHaar"
    return IdempotentClass(kind, N.shape[0], witnesses)


def dual_subgroup_idempotent(G: CompactQuantumGroup, subgroup) -> State:
    """Indicator state of a subgroup on the dual of a finite group."""
    if G.kind != "dual":
        raise AlgebraError("subgroup indicators live on dual groups")
    subgroup = sorted(set(int(i) for i in subgroup))
    if not G.group.is_subgroup(subgroup):
        raise AlgebraError("index set is not a subgroup")
    duals = np.zeros(G.dim, dtype=complex)
    duals[subgroup] = 1.0
    phi = State(G.algebra, duals)
    if not is_idempotent(G, phi):
        raise AlgebraError("subgroup indicator failed the idempotency check")
    return phi


@dataclass
class CollapseProbeReport:
    members_tested: int
    collapses_tested: int
    violations: list  # (member index, (i, j), membership distance)

    @property
    def stable(self) -> bool:
        return not self.violations


def collapse_stability_probe(G: CompactQuantumGroup, psi: State,
                             n_samples: int = 100, seed: int = 0,
                             tol: float = 1e-7) -> CollapseProbeReport:
    """Probe the quasi-subgroup of psi for stability under collapse by magic
    entries.

    Members are psi itself plus sampled states supported on the support
    projection of psi that pass the absorption test.  Each member is
    conditioned by every magic entry it gives positive mass, and the result
    is tested for membership.
    """
    if not is_idempotent(G, psi, max(tol, G.algebra.iter_tol)):
        raise AlgebraError("probe requires an idempotent state")
    members = [psi]
    p = support_projection(psi)
    Lp = G.algebra.left_mult_matrix(p.coeffs)
    for k in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        x = rng.standard_normal(G.dim) + 1j * rng.standard_normal(G.dim)
        x = Lp @ x
        if np.abs(x).max() < 1e-12:
            continue
        try:
            cand = G.vector_state(x)
        except AlgebraError:
            continue
        if quasi_subgroup_member(G, psi, cand, tol):
            members.append(cand)
    violations = []
    collapses = 0
    for mi, phi in enumerate(members):
        for i in range(G.N):
            for j in range(G.N):
                q = G.magic_projection(i, j)
                if phi(q).real <= 1e-9:
                    continue
                collapsed = condition(G, phi, q)
                collapses += 1
                if not quasi_subgroup_member(G, psi, collapsed, tol):
                    dist = max(psi.distance(G.convolve(psi, collapsed, check=False)),
                               psi.distance(G.convolve(collapsed, psi, check=False)))
                    violations.append((mi, (i, j), float(dist)))
    return CollapseProbeReport(len(members), collapses, violations)


def idempotent_census(G: CompactQuantumGroup, n_seeds: int, seed: int = 0,
                      extra_seeds: list[State] | None = None) -> list[CesaroResult]:
    """Cesaro limits from a deterministic bank of random seed states."""
    seeds = G.sample_states(n_seeds, seed=seed)
    if extra_seeds:
        seeds = list(extra_seeds) + seeds
    return [cesaro_idempotent(G, s) for s in seeds]
