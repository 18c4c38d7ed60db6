"""Compact quantum group structure over a finite-dimensional *-algebra.

A group is an algebra together with comultiplication, counit, antipode, Haar
state and a magic unitary grid whose entries generate the algebra.  The Hopf
axioms, which at finite dimension replace the cancellation conditions, are
all checkable numerically and :meth:`CompactQuantumGroup.validate` reports a
residual per axiom.

Constructors cover the families used throughout: algebras of functions on a
finite permutation group, duals of finite groups with Fourier-type magic
unitaries, and the eight-dimensional Kac-Paljutkin quantum group.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import permgroups
from .algebra import (
    AlgebraElement,
    AlgebraError,
    LinearFunctional,
    Projection,
    StarAlgebra,
    State,
    gram_norm,
    tensor_algebra,
)


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


class ValidationReport:
    """Per-axiom residual table."""

    def __init__(self, checks: list[CheckResult]):
        self.checks = checks

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max(c.residual for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {c.name: {"residual": c.residual, "tolerance": c.tolerance,
                         "passed": c.passed} for c in self.checks}

    def __str__(self) -> str:
        w = max(len(c.name) for c in self.checks)
        lines = [f"{c.name.ljust(w)}  {c.residual:12.3e}  (tol {c.tolerance:.1e})  "
                 f"{'ok' if c.passed else 'FAIL'}" for c in self.checks]
        return "\n".join(lines)


class CompactQuantumGroup:
    """Finite-dimensional quantum permutation group.

    Attributes
    ----------
    algebra : StarAlgebra
    delta : (dim, dim, dim) array; ``Delta(e_i) = sum_{a,b} delta[i,a,b] e_a (x) e_b``.
    counit : State, a character.
    antipode : (dim, dim) array; ``S(e_a) = sum_u antipode[a, u] e_u``.
    magic : (N, N, dim) array of projection coefficients.
    haar : State, the unique bi-invariant one.
    """

    def __init__(self, name: str, algebra: StarAlgebra, delta, counit, antipode,
                 magic, haar=None, kind: str = "generic", check: bool = True):
        self.name = name
        self.kind = kind
        self.algebra = algebra
        self.delta = np.asarray(delta, dtype=complex)
        self.counit = counit if isinstance(counit, State) else State(algebra, counit)
        self.antipode = np.asarray(antipode, dtype=complex)
        self.magic = np.asarray(magic, dtype=complex)
        if self.delta.shape != (algebra.dim,) * 3:
            raise AlgebraError("delta tensor has wrong shape")
        if self.magic.ndim != 3 or self.magic.shape[0] != self.magic.shape[1] \
                or self.magic.shape[2] != algebra.dim:
            raise AlgebraError("magic grid has wrong shape")
        if haar is None:
            haar = solve_haar(algebra, self.delta)
        self.haar = haar if isinstance(haar, State) else State(algebra, haar)
        if check:
            report = self.validate()
            if not report.ok:
                names = [c.name for c in report.failures()]
                raise AlgebraError(f"quantum group axioms failed: {names}\n{report}")

    # -- basics ---------------------------------------------------------------

    @property
    def N(self) -> int:
        return self.magic.shape[0]

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def magic_projection(self, i: int, j: int) -> Projection:
        return Projection(self.algebra, self.magic[i, j])

    def fix_element(self) -> AlgebraElement:
        """Trace of the magic unitary, the main character sum_j u_jj."""
        return self.algebra.element(self.magic[range(self.N), range(self.N)].sum(axis=0))

    def delta_applied(self, coeffs: np.ndarray) -> np.ndarray:
        """Delta of an element, as a (dim, dim) tensor-coefficient matrix."""
        return np.einsum("iab,i->ab", self.delta, coeffs, optimize=True)

    @cached_property
    def tensor_square(self) -> StarAlgebra:
        return tensor_algebra(self.algebra, self.algebra)

    # -- states ---------------------------------------------------------------

    def convolve(self, phi: LinearFunctional, rho: LinearFunctional,
                 check: bool = True) -> State:
        """Convolution (phi (x) rho) o Delta."""
        if phi.algebra is not self.algebra or rho.algebra is not self.algebra:
            raise AlgebraError("functionals live on a different algebra")
        duals = np.einsum("iab,a,b->i", self.delta, phi.duals, rho.duals,
                          optimize=True)
        return State(self.algebra, duals, check=check)

    def convolve_power(self, phi: State, k: int) -> State:
        if k < 1:
            raise AlgebraError("convolution power needs k >= 1")
        out = phi
        for _ in range(k - 1):
            out = self.convolve(out, phi, check=False)
        return State(self.algebra, out.duals, check=False)

    def reverse(self, phi: LinearFunctional) -> State:
        """phi o S; for a state, again a state (Kac type)."""
        return State(self.algebra, self.antipode @ phi.duals, check=False)

    def vector_state(self, x: np.ndarray) -> State:
        """GNS vector state f -> tau(x* f x) / tau(x* x)."""
        alg = self.algebra
        x = np.asarray(x, dtype=complex)
        sx = alg.star_coeffs(x)
        ex = np.einsum("ijk,j->ik", alg.mult, x, optimize=True)     # e_i x
        full = np.einsum("a,ik,akl->il", sx, ex, alg.mult, optimize=True)
        duals = full @ alg.trace
        nrm = duals @ alg.unit
        if abs(nrm) < 1e3 * np.finfo(float).eps:
            raise AlgebraError("vector is null for the trace form")
        return State(alg, duals / nrm)

    def sample_states(self, n: int, seed: int, max_mix: int = 3) -> list[State]:
        """Deterministic state bank: convex mixes of GNS vector states.

        Sample k is seeded by (seed, k) alone, so batches are reproducible
        regardless of how the loop is parallelized or chunked.
        """
        out = []
        for k in range(n):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
            m = int(rng.integers(1, max_mix + 1))
            weights = rng.dirichlet(np.ones(m))
            duals = np.zeros(self.dim, dtype=complex)
            for t in range(m):
                x = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
                duals += weights[t] * self.vector_state(x).duals
            out.append(State(self.algebra, duals))
        return out

    # -- validation -------------------------------------------------------------

    def validate(self) -> ValidationReport:
        alg, D, c = self.algebra, self.delta, self.algebra.mult
        tol = alg.tol
        checks = []

        def add(name, residual, tolerance=tol):
            checks.append(CheckResult(name, float(residual), tolerance))

        for axiom, res in alg.check_invariants().items():
            add(f"algebra.{axiom}", res)

        t1 = np.einsum("iuk,uab->iabk", D, D, optimize=True)
        t2 = np.einsum("iau,ubk->iabk", D, D, optimize=True)
        add("coassociativity", np.abs(t1 - t2).max())

        add("delta_unital", np.abs(self.delta_applied(alg.unit)
                                   - np.outer(alg.unit, alg.unit)).max())

        res_mult = 0.0
        for i in range(alg.dim):
            lhs_i = np.einsum("jm,mab->jab", c[i], D, optimize=True)
            t1 = np.einsum("ab,aAk->bAk", D[i], c, optimize=True)
            t2 = np.einsum("bAk,jAB->bkjB", t1, D, optimize=True)
            rhs_i = np.einsum("bkjB,bBl->jkl", t2, c, optimize=True)
            res_mult = max(res_mult, np.abs(lhs_i - rhs_i).max())
        add("delta_multiplicative", res_mult)

        lhs = np.einsum("ik,kab->iab", alg.involution, D, optimize=True)
        rhs = np.einsum("iab,au,bv->iuv", np.conj(D), alg.involution,
                        alg.involution, optimize=True)
        add("delta_star_map", np.abs(lhs - rhs).max())

        eps = self.counit.duals
        add("counit_left", np.abs(np.einsum("iab,a->ib", D, eps) - np.eye(alg.dim)).max())
        add("counit_right", np.abs(np.einsum("iab,b->ia", D, eps) - np.eye(alg.dim)).max())
        mult_eps = np.einsum("ijk,k->ij", c, eps) - np.outer(eps, eps)
        add("counit_character", max(np.abs(mult_eps).max(),
                                    abs(eps @ alg.unit - 1.0)))

        S = self.antipode
        left = np.einsum("iab,au,ubk->ik", D, S, c, optimize=True)
        right = np.einsum("iab,bu,auk->ik", D, S, c, optimize=True)
        target = np.outer(eps, alg.unit)
        add("antipode_left", np.abs(left - target).max())
        add("antipode_right", np.abs(right - target).max())
        add("antipode_kac", np.abs(S @ S - np.eye(alg.dim)).max())
        anti = np.einsum("ijm,mu->iju", c, S, optimize=True) \
            - np.einsum("ju,iv,uvk->ijk", S, S, c, optimize=True)
        add("antipode_antihom", np.abs(anti).max())

        h = self.haar.duals
        add("haar_left_invariance",
            np.abs(np.einsum("iab,a->ib", D, h) - np.outer(h, alg.unit)).max())
        add("haar_right_invariance",
            np.abs(np.einsum("iab,b->ia", D, h) - np.outer(h, alg.unit)).max())

        N = self.N
        proj_res = 0.0
        for i in range(N):
            for j in range(N):
                v = alg.element(self.magic[i, j])
                proj_res = max(proj_res, gram_norm(v * v - v),
                               gram_norm(v.star() - v))
        add("magic_projections", proj_res)
        add("magic_row_sums",
            max(np.abs(self.magic[i].sum(axis=0) - alg.unit).max() for i in range(N)))
        add("magic_col_sums",
            max(np.abs(self.magic[:, j].sum(axis=0) - alg.unit).max() for j in range(N)))
        drs = 0.0
        for i in range(N):
            for j in range(N):
                lhs_m = self.delta_applied(self.magic[i, j])
                rhs_m = sum(np.outer(self.magic[i, k], self.magic[k, j])
                            for k in range(N))
                drs = max(drs, np.abs(lhs_m - rhs_m).max())
        add("magic_comultiplication", drs)
        add("magic_antipode",
            max(np.abs(self.magic[i, j] @ S - self.magic[j, i]).max()
                for i in range(N) for j in range(N)))
        add("magic_counit",
            max(abs(self.magic[i, j] @ eps - (1.0 if i == j else 0.0))
                for i in range(N) for j in range(N)))
        add("magic_generates", 0.0 if self._entries_generate() else 1.0, 0.5)
        return ValidationReport(checks)

    def _entries_generate(self) -> bool:
        alg = self.algebra
        gens = self.magic.reshape(self.N * self.N, alg.dim)
        basis = _row_space(np.vstack([alg.unit[np.newaxis, :], gens]))
        while basis.shape[0] < alg.dim:
            prods = [alg.product_coeffs(b, g) for b in basis for g in gens]
            grown = _row_space(np.vstack([basis] + [np.vstack(prods)]))
            if grown.shape[0] == basis.shape[0]:
                return False
            basis = grown
        return True

    def __repr__(self):
        return f"CompactQuantumGroup({self.name}, dim={self.dim}, N={self.N})"


# -- Haar ----------------------------------------------------------------------


def solve_haar(algebra: StarAlgebra, delta: np.ndarray) -> State:
    """Unique bi-invariant state, by linear solve of the invariance system."""
    d = algebra.dim
    eye = np.eye(d)
    # (h x id)Delta(e_i) = h(e_i) 1: rows (i, b), unknowns h_a
    left = np.ascontiguousarray(delta.transpose(0, 2, 1)).reshape(d * d, d) \
        - np.einsum("b,ia->iba", algebra.unit, eye).reshape(d * d, d)
    # (id x h)Delta(e_i) = h(e_i) 1: rows (i, a), unknowns h_b
    right = delta.reshape(d * d, d) \
        - np.einsum("a,ib->iab", algebra.unit, eye).reshape(d * d, d)
    invariance = np.vstack([left, right])
    sing = np.linalg.svd(invariance, compute_uv=False)
    if sing.size >= 2 and sing[-2] < 1e-8:
        raise AlgebraError("invariance system has a >1-dimensional solution space; "
                           "Hopf data is not a valid quantum group")
    M = np.vstack([invariance, algebra.unit[np.newaxis, :]])
    b = np.zeros(M.shape[0], dtype=complex)
    b[-1] = 1.0
    h, *_ = np.linalg.lstsq(M, b, rcond=None)
    resid = np.abs(M @ h - b).max()
    if resid > 1e-8:
        raise AlgebraError(f"no invariant state: residual {resid:.3e}")
    return State(algebra, h)


def haar_state(G: CompactQuantumGroup, cross_check: bool = True) -> State:
    """Recompute the Haar state; optionally cross-check the Cesaro route.

    The trace is a faithful state, so the Cesaro limit of its convolution
    powers is the unique faithful idempotent, which must agree with the
    linear-solve route within the iterative tolerance.
    """
    h = solve_haar(G.algebra, G.delta)
    if cross_check:
        from .idempotent import cesaro_idempotent  # local import, no cycle at module load
        seed = State(G.algebra, G.algebra.trace)
        res = cesaro_idempotent(G, seed, tol=G.algebra.iter_tol)
        if not res.converged or res.limit.distance(h) > 1e-7:
            raise AlgebraError("Cesaro cross-check of the Haar state failed")
    return h


# -- spec-named functional wrappers ---------------------------------------------


def validate(G: CompactQuantumGroup) -> ValidationReport:
    return G.validate()


def convolve(G: CompactQuantumGroup, phi: LinearFunctional, rho: LinearFunctional) -> State:
    return G.convolve(phi, rho)


def reverse(G: CompactQuantumGroup, phi: LinearFunctional) -> State:
    return G.reverse(phi)


# -- constructors ----------------------------------------------------------------


def classical_group(perms: list[tuple], name: str | None = None,
                    tol: float = 1e-9, check: bool = True) -> CompactQuantumGroup:
    """Algebra of functions on a finite permutation group.

    The magic unitary is u_ij = 1_{j -> i}; comultiplication dualizes the
    group law, so convolution of point masses is composition.
    """
    if not permgroups.is_closed(perms):
        raise AlgebraError("permutations are not closed under composition")
    group = permgroups.FiniteGroup.from_permutations(perms)
    order = group.perms
    n = len(order)
    deg = len(order[0])
    idx = {p: i for i, p in enumerate(order)}

    mult = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        mult[i, i, i] = 1.0
    delta = np.zeros((n, n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            delta[group.table[a][b], a, b] = 1.0
    antipode = np.zeros((n, n), dtype=complex)
    for a in range(n):
        antipode[a, group.inv(a)] = 1.0
    counit = np.zeros(n, dtype=complex)
    counit[0] = 1.0
    magic = np.zeros((deg, deg, n), dtype=complex)
    for j in range(deg):
        for s, p in enumerate(order):
            magic[p[j], j, s] = 1.0

    algebra = StarAlgebra([f"d[{l}]" for l in group.labels], mult,
                          involution=np.eye(n), unit=np.ones(n),
                          trace=np.full(n, 1.0 / n), tol=tol)
    G = CompactQuantumGroup(name or f"classical-{n}", algebra, delta,
                            counit, antipode, magic, kind="classical", check=check)
    G.group = group
    G.group_elements = order
    return G


def point_state(G: CompactQuantumGroup, sigma: tuple) -> State:
    """Evaluation at a group element of a classical group algebra."""
    if G.kind != "classical":
        raise AlgebraError("point states are for classical function algebras")
    i = G.group_elements.index(tuple(sigma))
    duals = np.zeros(G.dim, dtype=complex)
    duals[i] = 1.0
    return State(G.algebra, duals)


def dual_group(group: permgroups.FiniteGroup, gens: list[tuple[int, int]],
               name: str | None = None, tol: float = 1e-9,
               check: bool = True) -> CompactQuantumGroup:
    """Dual of a finite group: C*(Gamma) with a Fourier-type magic unitary.

    ``gens`` lists (element index, order) pairs; each generator of order d
    contributes a d x d block  F_d diag(1, lam, ..., lam^{d-1}) F_d*  with
    F_d the unitary DFT, and N is the sum of the orders.
    """
    n = group.order
    if not gens:
        raise AlgebraError("need at least one generator")
    for g, d in gens:
        if group.element_order(g) != d:
            raise AlgebraError(f"element {g} does not have order {d}")
    if not group.generates([g for g, _ in gens]):
        raise AlgebraError("listed elements do not generate the group")

    mult = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            mult[i, j, group.table[i][j]] = 1.0
    involution = np.zeros((n, n), dtype=complex)
    for i in range(n):
        involution[i, group.inv(i)] = 1.0
    delta = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        delta[i, i, i] = 1.0
    counit = np.ones(n, dtype=complex)
    antipode = involution.copy()
    trace = np.zeros(n, dtype=complex)
    trace[0] = 1.0

    N = sum(d for _, d in gens)
    magic = np.zeros((N, N, n), dtype=complex)
    off = 0
    for g, d in gens:
        powers = [0] * d
        p = 0
        for m in range(d):
            powers[m] = p
            p = group.table[p][g]
        for j in range(d):
            for k in range(d):
                for m in range(d):
                    phase = np.exp(2j * np.pi * (((j - k) * m) % d) / d)
                    magic[off + j, off + k, powers[m]] += phase / d
        off += d

    algebra = StarAlgebra([f"lam[{l}]" for l in group.labels], mult, involution,
                          unit=np.eye(n)[0], trace=trace, tol=tol)
    G = CompactQuantumGroup(name or f"dual[{n}]", algebra, delta, counit,
                            antipode, magic, kind="dual", check=check)
    G.group = group
    G.group_elements = group.perms if group.perms is not None else list(range(n))
    G.generator_indices = [g for g, _ in gens]
    return G


def dual_symmetric_group(n: int, check: bool = True) -> CompactQuantumGroup:
    """Dual of S_n embedded via an order-2 and an order-3 generator."""
    if n < 3:
        raise AlgebraError("need n >= 3")
    perms = permgroups.symmetric_group(n)
    group = permgroups.FiniteGroup.from_permutations(perms)
    sigma = permgroups.from_cycles(n, (0, 1))
    tau = permgroups.from_cycles(n, (1, 2, 3)) if n >= 4 else permgroups.from_cycles(n, (0, 1, 2))
    gi = group.perms.index(sigma)
    ti = group.perms.index(tau)
    return dual_group(group, [(gi, 2), (ti, 3)], name=f"dual-S{n}", check=check)


def dual_dihedral(m: int, check: bool = True) -> CompactQuantumGroup:
    """Dual of the dihedral group of order 2m, on two reflection generators."""
    group = permgroups.FiniteGroup.dihedral(m)
    a, b = group.dihedral_reflections()
    return dual_group(group, [(a, 2), (b, 2)], name=f"dual-D{m}", check=check)


# -- Kac-Paljutkin ---------------------------------------------------------------


def _kp_block_vec(c1, c2, c3, c4, m):
    return np.array([c1, c2, c3, c4, m[0][0], m[0][1], m[1][0], m[1][1]],
                    dtype=complex)


def kac_paljutkin(tol: float = 1e-9, check: bool = True) -> CompactQuantumGroup:
    """The eight-dimensional Kac-Paljutkin quantum group inside S_4^+.

    The algebra is C^4 (+) M_2 with basis f1..f4, E11, E12, E21, E22.  It is
    generated by commuting self-adjoint unitaries x, y and a unitary z with
    zx = yz, zy = xz and z^2 = (1 + x + y - xy)/2; the comultiplication is
    group-like on x, y and twisted on z:

        Delta(z) = (1(x)1 + 1(x)x + y(x)1 - y(x)x)(z(x)z) / 2.

    The counit is evaluation on the f1 block.  The magic unitary (N = 4)
    decomposes as trivial (+) (xy) (+) the two-dimensional irreducible
    corepresentation; its entries are frozen exactly below and validated.
    """
    dim = 8
    one = _kp_block_vec(1, 1, 1, 1, [[1, 0], [0, 1]])
    x = _kp_block_vec(1, -1, -1, 1, [[1, 0], [0, -1]])
    y = _kp_block_vec(1, -1, -1, 1, [[-1, 0], [0, 1]])
    z = _kp_block_vec(1, 1j, -1j, -1, [[0, 1], [1, 0]])

    def bmul(a, b):
        out = a * 0
        out[:4] = a[:4] * b[:4]
        am = a[4:].reshape(2, 2)
        bm = b[4:].reshape(2, 2)
        out[4:] = (am @ bm).reshape(4)
        return out

    mult = np.zeros((dim, dim, dim), dtype=complex)
    eye = np.eye(dim, dtype=complex)
    for i in range(dim):
        for j in range(dim):
            mult[i, j] = bmul(eye[i], eye[j])
    involution = np.zeros((dim, dim), dtype=complex)
    for i, target in enumerate([0, 1, 2, 3, 4, 6, 5, 7]):
        involution[i, target] = 1.0
    trace = np.array([1, 1, 1, 1, 2, 0, 0, 2], dtype=complex) / 8.0

    algebra = StarAlgebra(["f1", "f2", "f3", "f4", "E11", "E12", "E21", "E22"],
                          mult, involution, unit=one, trace=trace, tol=tol)

    # comultiplication from the generator images, through the word basis
    def outer(a, b):
        return np.outer(a, b)

    def tmul(X, Y):
        return np.einsum("iIk,jJl,ij,IJ->kl", mult, mult, X, Y, optimize=True)

    twist = 0.5 * (outer(one, one) + outer(one, x) + outer(y, one) - outer(y, x))
    dx, dy = outer(x, x), outer(y, y)
    dz = tmul(twist, outer(z, z))
    words = [one, x, y, bmul(x, y), z, bmul(x, z), bmul(y, z), bmul(bmul(x, y), z)]
    dwords = [outer(one, one), dx, dy, tmul(dx, dy), dz, tmul(dx, dz),
              tmul(dy, dz), tmul(tmul(dx, dy), dz)]
    Winv = np.linalg.inv(np.array(words).T)
    delta = np.einsum("wi,wab->iab", Winv, np.array(dwords))

    counit = eye[0]
    # antipode: the anti-automorphism fixing x, y, z.  On the word basis it
    # fixes everything except xz <-> yz (since S(xz) = zx = yz and vice versa).
    word_swap = np.eye(dim)[:, [0, 1, 2, 3, 4, 6, 5, 7]]
    antipode = (np.array(words).T @ word_swap @ Winv).T

    # frozen magic unitary: corners classical, off-diagonal blocks in M_2
    s = 1.0 / (2.0 * np.sqrt(2.0))
    om = s * (1 - 1j)

    def m2(a12):
        return _kp_block_vec(0, 0, 0, 0, [[0.5, a12], [np.conj(a12), 0.5]])

    A, B = m2(om), m2(-om)
    Ac, Bc = m2(np.conj(om)), m2(-np.conj(om))
    f = [eye[k] for k in range(4)]
    magic = np.array([
        [f[0] + f[2], f[1] + f[3], A, B],
        [f[1] + f[3], f[0] + f[2], B, A],
        [Ac, Bc, f[0] + f[1], f[2] + f[3]],
        [Bc, Ac, f[2] + f[3], f[0] + f[1]],
    ])
    G = CompactQuantumGroup("kac-paljutkin", algebra, delta, counit, antipode,
                            magic, kind="kac_paljutkin", check=check)
    G.generators = {"x": x, "y": y, "z": z}
    return G


# -- morphisms --------------------------------------------------------------------


class QuantumGroupMorphism:
    """Surjective unital *-homomorphism intertwining the comultiplications.

    ``magic_image``, when declared, is an (N, N, dim_target) grid that the
    source magic unitary must map onto entrywise.
    """

    def __init__(self, source: CompactQuantumGroup, target: CompactQuantumGroup,
                 matrix, magic_image=None, check: bool = True):
        self.source = source
        self.target = target
        self.matrix = np.asarray(matrix, dtype=complex)
        self.magic_image = None if magic_image is None \
            else np.asarray(magic_image, dtype=complex)
        if self.matrix.shape != (target.dim, source.dim):
            raise AlgebraError("morphism matrix has wrong shape")
        if check:
            res = self.check_residuals()
            bad = {k: v for k, v in res.items() if v > 100 * source.algebra.tol}
            if bad:
                raise AlgebraError(f"not a quantum group morphism: {bad}")

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.matrix @ coeffs

    def pullback(self, phi: LinearFunctional) -> State:
        """phi o pi for a functional on the target."""
        return State(self.source.algebra, self.matrix.T @ phi.duals)

    def check_residuals(self) -> dict:
        M = self.matrix
        src, tgt = self.source.algebra, self.target.algebra
        out = {}
        # pi(e_i e_j) vs pi(e_i) pi(e_j)
        lhs = np.einsum("ijm,km->ijk", src.mult, M, optimize=True)
        rhs = np.einsum("ai,bj,abk->ijk", M, M, tgt.mult, optimize=True)
        out["homomorphism"] = np.abs(lhs - rhs).max()
        lhs_star = np.einsum("ia,ka->ik", src.involution, M, optimize=True)
        rhs_star = np.einsum("ai,ak->ik", np.conj(M), tgt.involution, optimize=True)
        out["star"] = np.abs(lhs_star - rhs_star).max()
        out["unital"] = np.abs(M @ src.unit - tgt.unit).max()
        lhs_d = np.einsum("ki,kab->iab", M, self.target.delta, optimize=True)
        rhs_d = np.einsum("iab,ua,vb->iuv", self.source.delta, M, M, optimize=True)
        out["intertwines_delta"] = np.abs(lhs_d - rhs_d).max()
        rank = np.linalg.matrix_rank(M, tol=1e-10)
        out["surjective"] = 0.0 if rank == self.target.dim else 1.0
        if self.magic_image is not None:
            imaged = np.einsum("ijc,tc->ijt", self.source.magic, M, optimize=True)
            out["magic_image"] = np.abs(imaged - self.magic_image).max()
        return out


def quotient_morphism(source: CompactQuantumGroup, target: CompactQuantumGroup,
                      matrix) -> QuantumGroupMorphism:
    return QuantumGroupMorphism(source, target, matrix)


def haar_idempotent(pi: QuantumGroupMorphism) -> State:
    """h_target o pi; idempotent on the source by construction, asserted."""
    phi = pi.pullback(pi.target.haar)
    conv = pi.source.convolve(phi, phi, check=False)
    if phi.distance(conv) > pi.source.algebra.iter_tol:
        raise AlgebraError("pulled-back Haar state is not idempotent")
    return phi


# -- characters and abelianization --------------------------------------------------


def commutator_ideal(G: CompactQuantumGroup) -> np.ndarray:
    """Orthonormal basis (rows) of the two-sided ideal generated by commutators."""
    alg = G.algebra
    c = alg.mult
    comms = (c - np.transpose(c, (1, 0, 2))).reshape(-1, alg.dim)
    span = _row_space(comms)
    while True:
        if span.shape[0] == 0:
            return span
        left = np.einsum("ijk,sj->sik", c, span, optimize=True).reshape(-1, alg.dim)
        right = np.einsum("jik,sj->sik", c, span, optimize=True).reshape(-1, alg.dim)
        grown = _row_space(np.vstack([span, left, right]))
        if grown.shape[0] == span.shape[0]:
            return grown
        span = grown


def _row_space(rows: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if rows.size == 0:
        return rows.reshape(0, rows.shape[-1])
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    keep = s > tol * max(1.0, s[0] if s.size else 1.0)
    return vh[keep]


def characters(G: CompactQuantumGroup, seed: int = 0) -> list[State]:
    """All characters (multiplicative states) of the algebra.

    The commutator ideal J is split off by its central unit z, and characters
    are the points of the complementary commutative block (1-z)A, enumerated
    by eigendecomposition of a generic self-adjoint multiplication operator.
    """
    alg = G.algebra
    J = commutator_ideal(G)
    if J.shape[0] == 0:
        comp = np.eye(alg.dim, dtype=complex)
    else:
        # central unit of J: z = sum_s alpha_s J[s] with z J[t] = J[t] for all t
        lhs = np.einsum("si,ijk,tj->tks", J, alg.mult, J, optimize=True)
        lhs = lhs.reshape(-1, J.shape[0])
        rhs = J.reshape(-1)
        alpha, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
        zc = alpha @ J
        if np.abs(lhs @ alpha - rhs).max() > 1e-8 or \
                gram_norm(alg.element(alg.product_coeffs(zc, zc) - zc)) > 1e-8:
            raise AlgebraError("commutator ideal has no central unit")
        unit_c = alg.unit - zc
        # complementary commutative block (1 - z) A
        comp = _row_space(np.einsum("ijk,i->jk", alg.mult, unit_c, optimize=True))
    # comp rows span the commutative block; multiplication operator of a generic
    # self-adjoint element, restricted to the block
    q = comp.shape[0]
    rng = np.random.default_rng(seed)
    for _ in range(8):
        g = rng.standard_normal(alg.dim)
        gc = comp.conj().T @ (comp @ g)  # project into the block
        gel = alg.element(gc)
        gel = 0.5 * (gel + gel.star())
        Mg = alg.left_mult_matrix(gel.coeffs)
        Mq = comp.conj() @ Mg @ comp.T  # operator on block coordinates
        evals, vecs = np.linalg.eig(Mq)
        if np.min(np.abs(np.subtract.outer(evals, evals))
                  + np.eye(q) * 1e9) > 1e-6:
            break
    else:
        raise AlgebraError("could not separate characters")
    out = []
    for k in range(q):
        v = vecs[:, k]
        coeffs = comp.T @ v  # candidate common eigenvector in the algebra
        # character values: chi(e_i) from e_i * v = chi(e_i) v (v spans a 1-dim
        # ideal of the commutative block after rescaling)
        duals = np.zeros(alg.dim, dtype=complex)
        Lv = np.einsum("ijk,j->ik", alg.mult, coeffs, optimize=True)
        vv = np.vdot(coeffs, coeffs)
        for i in range(alg.dim):
            duals[i] = np.vdot(coeffs, Lv[i]) / vv
        phi = LinearFunctional(alg, duals)
        mres = np.abs(np.einsum("ijk,k->ij", alg.mult, duals)
                      - np.outer(duals, duals)).max()
        if mres < 1e-7 and abs(phi(alg.one()) - 1) < 1e-7:
            out.append(State(alg, duals))
    # dedupe
    uniq: list[State] = []
    for phi in out:
        if all(phi.distance(o) > 1e-7 for o in uniq):
            uniq.append(phi)
    return uniq


def birkhoff_matrix(G: CompactQuantumGroup, phi: LinearFunctional) -> np.ndarray:
    return np.einsum("ijc,c->ij", G.magic, phi.duals, optimize=True)


def abelianization(G: CompactQuantumGroup) -> QuantumGroupMorphism:
    """Quotient onto the classical version, as functions on the character group."""
    pairs = []
    for chi in characters(G):
        P = birkhoff_matrix(G, chi).real
        sigma = tuple(int(np.argmax(P[:, j])) for j in range(G.N))
        pairs.append((sigma, chi))
    target = classical_group([s for s, _ in pairs], name=f"{G.name}-classical")
    M = np.zeros((target.dim, G.dim), dtype=complex)
    for sigma, chi in pairs:
        M[target.group_elements.index(sigma)] = chi.duals
    # the source magic unitary maps entrywise onto the classical one
    return QuantumGroupMorphism(G, target, M, magic_image=target.magic)
