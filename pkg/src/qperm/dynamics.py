"""Convolution dynamics relative to the truly-quantum projection p_Q:
quantitative bounds, phase-region classification, periodicity, the idempotent
gap, and the finite-quantum-group formulas."""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraError, State
from .cqg import CompactQuantumGroup
from .permutation import ClassicalVersion, decompose, quantum_fraction

SQRT2 = math.sqrt(2.0)
BOUNDARY_EPS = 1e-12


def convolution_bounds(alpha: float, beta: float) -> tuple[float, float]:
    """Sharp bounds a+b-2ab <= omega(p_Q of the convolution) <= a+b-ab."""
    for v in (alpha, beta):
        if not (0.0 - 1e-12 <= v <= 1.0 + 1e-12):
            raise AlgebraError("quantum fractions live in [0, 1]")
    lower = alpha + beta - 2 * alpha * beta
    upper = alpha + beta - alpha * beta
    return lower, upper


@dataclass
class PhasePoint:
    alpha: float
    beta: float

    def __post_init__(self):
        for v in (self.alpha, self.beta):
            if not (0.0 <= v <= 1.0):
                raise AlgebraError("phase point outside the unit square")


@dataclass
class RegionLabel:
    region: str          # Q_I | Boundary_W | Q_W | degenerate
    q2i: bool = False
    q3i: bool = False
    qhalfw: bool = False
    notes: list = field(default_factory=list)


def phase_region(point: PhasePoint | tuple) -> RegionLabel:
    """Classify a pair of quantum fractions into the convolution phase regions.

    The wild boundary is alpha + beta = 4 alpha beta (printed as
    beta = alpha/(4 alpha - 1)); ties within 1e-12 are labelled Boundary_W
    and the origin is degenerate.  The strictly-3-increasing inequality is
    applied verbatim, with a domain note whenever its threshold leaves [0, 1];
    the half-wild flag is gated to its region, with a note when the raw
    inequality fires outside it.
    """
    p = point if isinstance(point, PhasePoint) else PhasePoint(*point)
    a, b = p.alpha, p.beta
    if a <= BOUNDARY_EPS and b <= BOUNDARY_EPS:
        return RegionLabel("degenerate")
    disc = a + b - 4 * a * b
    if abs(disc) <= BOUNDARY_EPS:
        region = "Boundary_W"
    elif disc > 0:
        region = "Q_I"
    else:
        region = "Q_W"
    label = RegionLabel(region)

    def two_inc(x, y):
        if x >= 1.0 - BOUNDARY_EPS:
            return False
        return y < (2 * x - 1) / (2 * x - 2)

    raw_q2i = two_inc(a, b) or two_inc(b, a)
    label.q2i = raw_q2i and region == "Q_I"
    if raw_q2i and not label.q2i:
        label.notes.append("q2i inequality outside Q_I")

    def three_inc(x, y):
        if abs(1 - 2 * x) <= BOUNDARY_EPS:
            return False, "domain"
        t = 1 - SQRT2 / (1 - 2 * x)
        if not (0.0 <= t <= 1.0):
            return False, "domain"
        return y < t, None
    q3_ab, note_ab = three_inc(a, b)
    q3_ba, note_ba = three_inc(b, a)
    label.q3i = (q3_ab or q3_ba) and label.q2i
    if note_ab == "domain" and note_ba == "domain":
        label.notes.append("q3i threshold outside [0, 1]: domain undetermined")

    raw_half = a > 0 and b > (1 - 1 / SQRT2) / a
    label.qhalfw = raw_half and region == "Q_W"
    if raw_half and not label.qhalfw:
        label.notes.append("qhalfw inequality outside Q_W")
    return label


def idempotent_gap_check(alpha: float, tol: float = 1e-7) -> bool:
    """Idempotents are random or at least half quantum: alpha in {0} u [1/2, 1]."""
    return alpha <= tol or alpha >= 0.5 - tol


@dataclass
class BoundsSample:
    alpha: float
    beta: float
    omega: float


@dataclass
class BoundsReport:
    samples: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_bounds_empirically(G: CompactQuantumGroup, cv: ClassicalVersion,
                              n_samples: int = 500, seed: int = 0,
                              tol: float = 1e-8) -> BoundsReport:
    """Sample state pairs and check the convolution bounds and the qualitative
    convolution rules on every sample.

    Any violation raises, carrying the witness pair serialized to JSON.
    Alongside generic samples, the conditioned random / truly-quantum parts
    of the first few are paired to exercise the extreme rows alpha, beta in
    {0, 1}.
    """
    states = G.sample_states(2 * n_samples, seed=seed)
    pairs = [(states[2 * k], states[2 * k + 1]) for k in range(n_samples)]
    for phi, rho in pairs[:8]:
        a1, c1, q1 = decompose(G, phi, cv)
        a2, c2, q2 = decompose(G, rho, cv)
        for extra in ((c1, q2), (q1, c2), (q1, q2), (c1, c2)):
            if extra[0] is not None and extra[1] is not None:
                pairs.append(extra)

    threads = max(1, int(os.environ.get("QPERM_THREADS", "1")))

    def run(pair):
        phi, rho = pair
        a = quantum_fraction(phi, cv)
        b = quantum_fraction(rho, cv)
        w = quantum_fraction(G.convolve(phi, rho, check=False), cv)
        return BoundsSample(a, b, w), phi, rho

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]

    samples, violations = [], []
    for sample, phi, rho in results:
        a, b, w = sample.alpha, sample.beta, sample.omega
        lower, upper = convolution_bounds(a, b)
        bad = None
        if not (lower - tol <= w <= upper + tol):
            bad = "bounds"
        elif w <= tol and not ((a <= tol and b <= tol)
                               or (a >= 1 - tol and b >= 1 - tol)):
            bad = "random convolution from a mixed pair"
        elif a <= tol and b <= tol and w > tol:
            bad = "random pair with quantum convolution"
        elif ((a <= tol and b >= 1 - tol) or (a >= 1 - tol and b <= tol)) \
                and w < 1 - tol:
            bad = "random/quantum pair not truly quantum"
        samples.append(sample)
        if bad:
            witness = {"reason": bad, "alpha": a, "beta": b, "omega": w,
                       "phi": _ser(phi), "rho": _ser(rho)}
            violations.append(witness)
    if violations:
        raise AlgebraError("convolution bound violated: "
                           + json.dumps(violations[0]))
    return BoundsReport(samples, violations)


def _ser(phi: State) -> list:
    return [[float(z.real), float(z.imag)] for z in phi.duals]


@dataclass
class Trajectory:
    """Convolution powers of a seed: states[k] = phi^{*(k+1)}, k_max+1 of them."""

    states: list
    alphas: list
    distances_to_haar: list

    def __len__(self):
        return len(self.states)


def trajectory(G: CompactQuantumGroup, seed: State, k_max: int,
               cv: ClassicalVersion | None = None) -> Trajectory:
    states, alphas, dists = [], [], []
    cur = seed
    for _ in range(k_max + 1):
        states.append(cur)
        alphas.append(quantum_fraction(cur, cv) if cv is not None else float("nan"))
        dists.append(cur.distance(G.haar))
        cur = G.convolve(cur, seed, check=False)
    return Trajectory(states, alphas, dists)


def detect_period(G: CompactQuantumGroup, seed: State, k_max: int = 64,
                  tol: float = 1e-8, window_factor: int = 3):
    """Smallest d with phi^{*(k+d)} = phi^{*k} across a verification window.

    Returns None when no period at most k_max is certified.
    """
    traj = trajectory(G, seed, k_max).states
    for d in range(1, k_max + 1):
        window = min(window_factor * d, len(traj) - d)
        if window < 1:
            return None
        if all(traj[k + d].distance(traj[k]) < tol for k in range(window)):
            return d
    return None


def finite_quantum_formulas(G: CompactQuantumGroup, cv: ClassicalVersion) -> dict:
    """Closed-form quantum fraction of the Haar state, with the exotic bound.

    alpha(h) = 1 - |classical version| / dim must agree with the directly
    computed fraction; 2 N! is reported as the exotic lower bound context.
    """
    alpha_formula = 1.0 - len(cv) / G.dim
    alpha_direct = quantum_fraction(G.haar, cv)
    if abs(alpha_formula - alpha_direct) > 1e-9:
        raise AlgebraError(
            f"haar fraction {alpha_direct} disagrees with 1-|G|/dim {alpha_formula}")
    return {"alpha_haar": alpha_direct,
            "alpha_haar_formula": alpha_formula,
            "bound_2nfact": 2 * math.factorial(G.N)}


@dataclass
class ConvergenceReport:
    distances: list
    converged: bool
    strict: bool | None     # dual groups: |phi| = 1 only at the identity

    @property
    def final_distance(self) -> float:
        return self.distances[-1]


def convergence_to_haar(G: CompactQuantumGroup, seed: State, k_max: int = 200,
                        tol: float = 1e-8) -> ConvergenceReport:
    strict = None
    if G.kind == "dual":
        mags = np.abs(seed.duals)
        strict = bool(mags[0] > 1 - 1e-9
                      and np.all(mags[1:] < 1 - 1e-9))
    traj = trajectory(G, seed, k_max)
    dists = traj.distances_to_haar
    return ConvergenceReport(dists, bool(dists[-1] < tol), strict)


def phase_diagram_rows(n: int = 101) -> list[dict]:
    """Uniform grid over the unit square with region labels and bounds."""
    rows = []
    for i in range(n):
        for j in range(n):
            a = i / (n - 1)
            b = j / (n - 1)
            lab = phase_region((a, b))
            lower, upper = convolution_bounds(a, b)
            rows.append({"alpha": a, "beta": b, "region": lab.region,
                         "q2i": lab.q2i, "q3i": lab.q3i, "qhalfw": lab.qhalfw,
                         "lower": lower, "upper": upper})
    return rows
