"""Finite-dimensional *-algebras with a faithful trace.

An algebra is presented by structure constants over a fixed basis together
with an involution matrix, a unit vector and a faithful tracial functional.
All spectral work (spectral projections, supports, meets of projections)
routes through the left regular representation, which the faithful trace
makes injective; self-adjoint elements become Hermitian matrices in the
trace inner product ``<a, b> = tau(a* b)``.

Elements and functionals are coefficient vectors over the basis.  Everything
is immutable after construction and all operations are pure functions.
"""
from __future__ import annotations

import warnings
from functools import cached_property

import numpy as np


class AlgebraError(ValueError):
    """Inconsistent algebra data or an operation outside its precondition."""


DEFAULT_TOL = 1e-9
DEFAULT_ITER_TOL = 1e-7


class StarAlgebra:
    """A *-algebra given by basis, structure constants, involution and trace.

    Parameters
    ----------
    basis_labels : list of str
    mult : (dim, dim, dim) complex array, ``e_i e_j = sum_k mult[i, j, k] e_k``.
        May be None for a tensor product built by :func:`tensor_algebra`,
        in which case products are computed from the factors.
    involution : (dim, dim) complex array, ``e_i^* = sum_k involution[i, k] e_k``.
    unit : (dim,) coefficients of the multiplicative unit.
    trace : (dim,) values ``tau(e_i)`` of a faithful positive tracial functional.
    tol : algebraic tolerance; iter_tol : tolerance for iterative limits.
    """

    def __init__(self, basis_labels, mult, involution, unit, trace,
                 tol: float = DEFAULT_TOL, iter_tol: float = DEFAULT_ITER_TOL,
                 check: bool = True, _factors=None):
        self.labels = list(basis_labels)
        self.dim = len(self.labels)
        self.mult = None if mult is None else np.asarray(mult, dtype=complex)
        self.involution = np.asarray(involution, dtype=complex)
        self.unit = np.asarray(unit, dtype=complex)
        self.trace = np.asarray(trace, dtype=complex)
        self.tol = float(tol)
        self.iter_tol = float(iter_tol)
        self._factors = _factors
        if self.mult is None and _factors is None:
            raise AlgebraError("need structure constants or tensor factors")
        shapes_ok = (self.involution.shape == (self.dim, self.dim)
                     and self.unit.shape == (self.dim,)
                     and self.trace.shape == (self.dim,))
        if not shapes_ok or (self.mult is not None and self.mult.shape != (self.dim,) * 3):
            raise AlgebraError("algebra data shapes are inconsistent")
        if check:
            report = self.check_invariants()
            bad = {k: v for k, v in report.items() if not (v <= self.tol)}
            if bad:
                raise AlgebraError(f"algebra axioms violated: {bad}")

    # -- arithmetic on raw coefficient vectors ------------------------------

    def product_coeffs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.mult is not None:
            return np.einsum("ijk,i,j->k", self.mult, a, b, optimize=True)
        A, B = self._factors
        X = a.reshape(A.dim, B.dim)
        Y = b.reshape(A.dim, B.dim)
        out = np.einsum("iIk,jJl,ij,IJ->kl", A.mult, B.mult, X, Y, optimize=True)
        return out.reshape(self.dim)

    def star_coeffs(self, a: np.ndarray) -> np.ndarray:
        return self.involution.T @ np.conj(a)

    def element(self, coeffs) -> "AlgebraElement":
        return AlgebraElement(self, coeffs)

    def basis_element(self, i: int) -> "AlgebraElement":
        c = np.zeros(self.dim, dtype=complex)
        c[i] = 1.0
        return AlgebraElement(self, c)

    def one(self) -> "AlgebraElement":
        return AlgebraElement(self, self.unit)

    def functional(self, duals) -> "LinearFunctional":
        return LinearFunctional(self, duals)

    def state(self, duals, check: bool = True) -> "State":
        return State(self, duals, check=check)

    # -- cached geometry -----------------------------------------------------

    @cached_property
    def gram(self) -> np.ndarray:
        """G[i, j] = tau(e_i^* e_j); Hermitian positive definite."""
        if self.mult is not None:
            G = np.einsum("ia,ajk,k->ij", self.involution, self.mult, self.trace,
                          optimize=True)
        else:
            A, B = self._factors
            G = np.kron(A.gram, B.gram)
        return (G + G.conj().T) / 2.0

    @cached_property
    def _chol(self) -> np.ndarray:
        """Lower Cholesky factor of the Gram matrix."""
        evals = np.linalg.eigvalsh(self.gram)
        if evals.min() <= self.tol:
            raise AlgebraError(f"trace is not faithful (min Gram eigenvalue {evals.min():.3e})")
        return np.linalg.cholesky(self.gram)

    @cached_property
    def regular(self) -> np.ndarray:
        """Left regular representation: regular[i] @ x == coefficients of e_i x."""
        if self.mult is None:
            raise AlgebraError("regular representation requires dense structure constants")
        _ = self._chol  # faithfulness check
        return np.ascontiguousarray(np.transpose(self.mult, (0, 2, 1)))

    @cached_property
    def _reg_basis_matrix(self) -> np.ndarray:
        """Columns are vec(L_i); used to pull matrices back to coefficients."""
        return self.regular.reshape(self.dim, self.dim * self.dim).T

    def left_mult_matrix(self, a: np.ndarray) -> np.ndarray:
        return np.einsum("i,ikj->kj", a, self.regular, optimize=True)

    def matrix_to_coeffs(self, M: np.ndarray, tol: float | None = None) -> np.ndarray:
        """Invert the regular representation by least squares.

        Raises if the residual exceeds ``tol``: the matrix is not the left
        multiplication operator of any algebra element.
        """
        tol = self.tol if tol is None else tol
        sol, *_ = np.linalg.lstsq(self._reg_basis_matrix, M.reshape(-1), rcond=None)
        resid = np.abs(self._reg_basis_matrix @ sol - M.reshape(-1)).max()
        if resid > max(tol, 1e3 * np.finfo(float).eps * max(1.0, np.abs(M).max())):
            raise AlgebraError(f"matrix is outside the regular image (residual {resid:.3e})")
        return sol

    def to_hermitian_frame(self, M: np.ndarray) -> np.ndarray:
        """Conjugate an operator on the algebra into the trace-orthonormal frame."""
        L = self._chol
        return L.conj().T @ M @ np.linalg.inv(L.conj().T)

    def from_hermitian_frame(self, M: np.ndarray) -> np.ndarray:
        L = self._chol
        return np.linalg.solve(L.conj().T, M @ L.conj().T)

    # -- axioms ---------------------------------------------------------------

    def check_invariants(self) -> dict:
        """Max residual per axiom; tensor algebras defer to their factors."""
        out = {}
        if self.mult is None:
            A, B = self._factors
            out["factor_a"] = max(A.check_invariants().values())
            out["factor_b"] = max(B.check_invariants().values())
            return out
        c = self.mult
        assoc = np.einsum("ijm,mkl->ijkl", c, c, optimize=True) \
            - np.einsum("jkm,iml->ijkl", c, c, optimize=True)
        out["associativity"] = np.abs(assoc).max()
        out["unit"] = max(
            np.abs(np.einsum("ijk,i->jk", c, self.unit) - np.eye(self.dim)).max(),
            np.abs(np.einsum("ijk,j->ik", c, self.unit) - np.eye(self.dim)).max(),
        )
        iv = self.involution
        out["involution_squared"] = np.abs(np.conj(iv) @ iv - np.eye(self.dim)).max()
        # (e_i e_j)* = e_j* e_i*; the product coefficients conjugate through star
        lhs = np.einsum("ijm,mk->ijk", np.conj(c), iv, optimize=True)
        rhs = np.einsum("ja,ib,abk->ijk", iv, iv, c, optimize=True)
        out["involution_antihom"] = np.abs(lhs - rhs).max()
        min_eig = float(np.linalg.eigvalsh(self.gram).min())
        out["gram_positive_definite"] = 0.0 if min_eig > self.tol else 2 * self.tol - min_eig
        tau_ab = np.einsum("ijk,k->ij", c, self.trace)
        out["trace_symmetry"] = np.abs(tau_ab - tau_ab.T).max()
        return out

    def __repr__(self):
        kind = "tensor " if self.mult is None else ""
        return f"StarAlgebra({kind}dim={self.dim})"


class AlgebraElement:
    """Coefficient vector over a StarAlgebra basis."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: StarAlgebra, coeffs):
        self.algebra = algebra
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.shape != (algebra.dim,):
            raise AlgebraError("coefficient length does not match the algebra")

    def star(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, self.algebra.star_coeffs(self.coeffs))

    def norm(self) -> float:
        return gram_norm(self)

    def is_self_adjoint(self, tol: float | None = None) -> bool:
        tol = self.algebra.tol if tol is None else tol
        return gram_norm(self.star() - self) <= tol

    def is_projection(self, tol: float | None = None) -> bool:
        tol = self.algebra.tol if tol is None else tol
        return (gram_norm(self * self - self) <= tol
                and gram_norm(self.star() - self) <= tol)

    def _binary(self, other, op):
        if isinstance(other, AlgebraElement):
            if other.algebra is not self.algebra:
                raise AlgebraError("elements live on different algebras")
            return AlgebraElement(self.algebra, op(self.coeffs, other.coeffs))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            if other.algebra is not self.algebra:
                raise AlgebraError("elements live on different algebras")
            return AlgebraElement(self.algebra,
                                  self.algebra.product_coeffs(self.coeffs, other.coeffs))
        if np.isscalar(other):
            return AlgebraElement(self.algebra, self.coeffs * other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.algebra, self.coeffs * other)
        return NotImplemented

    def __repr__(self):
        return f"AlgebraElement({np.round(self.coeffs, 6)})"


class Projection(AlgebraElement):
    """Self-adjoint idempotent; checked in Gram norm at construction."""

    def __init__(self, algebra, coeffs, tol: float | None = None, check: bool = True):
        super().__init__(algebra, coeffs)
        if check and not self.is_projection(tol):
            raise AlgebraError("not a projection within tolerance")


class LinearFunctional:
    """Dual vector: value on each basis element."""

    __slots__ = ("algebra", "duals")

    def __init__(self, algebra: StarAlgebra, duals):
        self.algebra = algebra
        self.duals = np.asarray(duals, dtype=complex)
        if self.duals.shape != (algebra.dim,):
            raise AlgebraError("dual length does not match the algebra")

    def __call__(self, a) -> complex:
        coeffs = a.coeffs if isinstance(a, AlgebraElement) else np.asarray(a)
        return complex(self.duals @ coeffs)

    def sesquilinear_matrix(self) -> np.ndarray:
        """P[i, j] = phi(e_i^* e_j); PSD iff the functional is positive."""
        alg = self.algebra
        if alg.mult is not None:
            return np.einsum("ia,ajk,k->ij", alg.involution, alg.mult, self.duals,
                             optimize=True)
        A, B = alg._factors
        d = self.duals.reshape(A.dim, B.dim)
        P = np.einsum("ia,ajk,IA,AJL,kL->iIjJ", A.involution, A.mult,
                      B.involution, B.mult, d, optimize=True)
        return P.reshape(alg.dim, alg.dim)

    def _binary(self, other, op):
        if isinstance(other, LinearFunctional):
            if other.algebra is not self.algebra:
                raise AlgebraError("functionals live on different algebras")
            return LinearFunctional(self.algebra, op(self.duals, other.duals))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        if np.isscalar(other):
            return LinearFunctional(self.algebra, self.duals * other)
        return NotImplemented

    __rmul__ = __mul__

    def distance(self, other: "LinearFunctional") -> float:
        """Sup distance over basis values."""
        return float(np.abs(self.duals - other.duals).max())

    def __repr__(self):
        return f"{type(self).__name__}({np.round(self.duals, 6)})"


class State(LinearFunctional):
    """Positive unital functional; positivity via the GNS Gram matrix."""

    __slots__ = ()

    def __init__(self, algebra, duals, check: bool = True):
        super().__init__(algebra, duals)
        if check:
            unital = abs(self(algebra.one()) - 1.0)
            if unital > 10 * max(algebra.tol, 1e-12):
                raise AlgebraError(f"functional is not unital (residual {unital:.3e})")
            if __debug__ and not is_positive_functional(self, tol=100 * algebra.tol):
                raise AlgebraError("functional is not positive within tolerance")


# -- spec operations ---------------------------------------------------------


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return a * b


def adjoint(a: AlgebraElement) -> AlgebraElement:
    return a.star()


def gram_norm(a: AlgebraElement) -> float:
    v = a.coeffs
    val = np.real(np.conj(v) @ a.algebra.gram @ v)
    return float(np.sqrt(max(val, 0.0)))


def is_positive_functional(phi: LinearFunctional, tol: float | None = None) -> bool:
    tol = phi.algebra.tol if tol is None else tol
    P = phi.sesquilinear_matrix()
    if np.abs(P - P.conj().T).max() > tol:
        return False
    evals = np.linalg.eigvalsh((P + P.conj().T) / 2)
    return bool(evals.min() >= -tol)


def regular_representation(A: StarAlgebra) -> np.ndarray:
    """Stack of left multiplication matrices L_i, faithfulness verified."""
    return A.regular


def eigen_clusters(evals: np.ndarray, rtol: float = 1e-6):
    """Group sorted eigenvalues whose gaps are below rtol * max(1, |lambda|)."""
    order = np.argsort(evals)
    clusters = [[order[0]]]
    for idx in order[1:]:
        prev = evals[clusters[-1][-1]]
        if abs(evals[idx] - prev) <= rtol * max(1.0, abs(prev)):
            clusters[-1].append(idx)
        else:
            clusters.append([idx])
    return clusters


def _self_adjoint_eig(f: AlgebraElement, tol: float | None = None):
    """Eigendecomposition of left multiplication by a self-adjoint element.

    Returns (evals, U) with U orthonormal in the trace inner product frame.
    """
    alg = f.algebra
    tol = alg.tol if tol is None else tol
    if gram_norm(f.star() - f) > 100 * tol:
        raise AlgebraError("element is not self-adjoint")
    M = alg.to_hermitian_frame(alg.left_mult_matrix(f.coeffs))
    M = (M + M.conj().T) / 2
    evals, U = np.linalg.eigh(M)
    return evals, U


def _projection_from_eigvecs(alg: StarAlgebra, U_sel: np.ndarray,
                             tol: float | None = None) -> Projection:
    P_t = U_sel @ U_sel.conj().T
    P = alg.from_hermitian_frame(P_t)
    coeffs = alg.matrix_to_coeffs(P, tol=tol)
    return Projection(alg, coeffs)


def spectral_projection(f: AlgebraElement, intervals, cluster_rtol: float = 1e-6,
                        tol: float | None = None) -> Projection:
    """Spectral projection 1_E(f) for self-adjoint f, E a union of intervals.

    Eigenvalues are clustered (within ``cluster_rtol`` relative distance) and a
    whole cluster is selected iff its mean lies in E.  The projection of the
    regular image is pulled back to the algebra; at finite dimension it always
    lies there, and the back-map residual is enforced.
    """
    alg = f.algebra
    tol = alg.tol if tol is None else tol
    if isinstance(intervals, tuple) and np.isscalar(intervals[0]):
        intervals = [intervals]
    evals, U = _self_adjoint_eig(f, tol)
    sel = []
    for cluster in eigen_clusters(evals, cluster_rtol):
        mean = float(np.mean(evals[cluster]))
        if any(lo <= mean <= hi for lo, hi in intervals):
            sel.extend(cluster)
    if not sel:
        return Projection(alg, np.zeros(alg.dim), check=False)
    return _projection_from_eigvecs(alg, U[:, sel], tol)


def spectral_partition(f: AlgebraElement, cluster_rtol: float = 1e-6):
    """All (eigenvalue, Projection) pairs of a self-adjoint element."""
    alg = f.algebra
    evals, U = _self_adjoint_eig(f)
    out = []
    for cluster in eigen_clusters(evals, cluster_rtol):
        lam = float(np.mean(evals[cluster]))
        out.append((lam, _projection_from_eigvecs(alg, U[:, cluster])))
    return out


def support_projection(phi: State) -> Projection:
    """Smallest projection p with phi(p) = 1.

    The density d with phi = tau(d .) is solved from the trace pairing,
    Hermitized, and its strictly positive spectral part is the support.
    """
    alg = phi.algebra
    if alg.mult is None:
        raise AlgebraError("supports require dense structure constants")
    if not isinstance(phi, State):
        phi = State(alg, phi.duals)
    pair = np.einsum("jik,k->ij", alg.mult, alg.trace, optimize=True)
    d = np.linalg.solve(pair, phi.duals)
    d_el = alg.element(d)
    d_herm = 0.5 * (d_el + d_el.star())
    evals, _ = _self_adjoint_eig(d_herm)
    thresh = max(alg.tol, 1e3 * np.finfo(float).eps * max(1.0, float(evals.max())))
    p = spectral_projection(d_herm, [(thresh, np.inf)])
    val = phi(p)
    if abs(val - 1.0) > 100 * alg.tol:
        raise AlgebraError(f"support postcondition failed: phi(p) = {val}")
    return p


def meet(ps, max_iter: int = 60, tol: float | None = None) -> Projection:
    """Largest projection below every p in ps, via alternating products.

    Powers of the product contraction are squared until stationary, then the
    symmetrized limit is snapped to a projection spectrally.  A second route
    computes the eigenvalue-1 spectral projection of the average of the ps;
    the two must agree in rank.
    """
    ps = list(ps)
    if not ps:
        raise AlgebraError("meet of an empty family")
    alg = ps[0].algebra
    tol = alg.iter_tol if tol is None else tol
    for p in ps:
        if p.algebra is not alg:
            raise AlgebraError("projections live on different algebras")
        if not p.is_projection(100 * alg.tol):
            raise AlgebraError("meet input is not a projection")
    frames = [alg.to_hermitian_frame(alg.left_mult_matrix(p.coeffs)) for p in ps]
    T = frames[0]
    for F in frames[1:]:
        T = T @ F
    converged = False
    diff = np.inf
    for _ in range(max_iter):
        T2 = T @ T
        diff = np.abs(T2 - T).max()
        T = T2
        if diff < 1e-13:
            converged = True
            break
    if not converged and diff < tol:
        converged = True
    if not converged:
        warnings.warn("alternating projection product did not stabilize; "
                      "using the spectral fallback", RuntimeWarning)
    Tsym = (T + T.conj().T) / 2
    evals, U = np.linalg.eigh(Tsym)
    sel = np.where(evals > 0.5)[0]
    # fallback: eigenvalue-1 spectral projection of the average
    avg = sum(frames) / len(frames)
    avg = (avg + avg.conj().T) / 2
    aevals, aU = np.linalg.eigh(avg)
    asel = np.where(aevals > 1.0 - 1e3 * tol)[0]
    if converged:
        if len(sel) != len(asel):
            raise AlgebraError(
                f"meet rank mismatch: alternating {len(sel)} vs spectral {len(asel)}")
        use = sel, U
    else:
        use = asel, aU
    idx, V = use
    if len(idx) == 0:
        return Projection(alg, np.zeros(alg.dim), check=False)
    r = _projection_from_eigvecs(alg, V[:, idx])
    for p in ps:
        if gram_norm(p * r - r) > 100 * tol or gram_norm(r * p - r) > 100 * tol:
            raise AlgebraError("meet postcondition failed: result not below inputs")
    return r


def tensor_algebra(A: StarAlgebra, B: StarAlgebra) -> StarAlgebra:
    """Tensor product algebra; index (i, j) flattens to i * dim_B + j.

    Structure constants are kept factored, so products are computed from the
    factors without materializing a dim^2-sized tensor.
    """
    if A.mult is None or B.mult is None:
        raise AlgebraError("tensor factors must have dense structure constants")
    labels = [f"{la}(x){lb}" for la in A.labels for lb in B.labels]
    return StarAlgebra(
        labels, None,
        involution=np.kron(A.involution, B.involution),
        unit=np.kron(A.unit, B.unit),
        trace=np.kron(A.trace, B.trace),
        tol=max(A.tol, B.tol), iter_tol=max(A.iter_tol, B.iter_tol),
        check=False, _factors=(A, B),
    )


def tensor_functional(phi: LinearFunctional, rho: LinearFunctional,
                      T: StarAlgebra | None = None) -> LinearFunctional:
    T = tensor_algebra(phi.algebra, rho.algebra) if T is None else T
    return LinearFunctional(T, np.kron(phi.duals, rho.duals))


def tensor_element(a: AlgebraElement, b: AlgebraElement,
                   T: StarAlgebra | None = None) -> AlgebraElement:
    T = tensor_algebra(a.algebra, b.algebra) if T is None else T
    return AlgebraElement(T, np.kron(a.coeffs, b.coeffs))
