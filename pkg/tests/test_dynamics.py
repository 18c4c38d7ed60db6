"""Convolution bounds, phase regions, periodicity and quantitative formulas."""
import numpy as np
import pytest

from qperm import permgroups
from qperm.algebra import AlgebraError, State
from qperm.cqg import classical_group, dual_symmetric_group, kac_paljutkin, point_state
from qperm.dynamics import (
    BOUNDARY_EPS,
    ConvergenceReport,
    PhasePoint,
    convergence_to_haar,
    convolution_bounds,
    detect_period,
    finite_quantum_formulas,
    idempotent_gap_check,
    phase_diagram_rows,
    phase_region,
    trajectory,
    verify_bounds_empirically,
)
from qperm.idempotent import cesaro_idempotent, dual_subgroup_idempotent
from qperm.permutation import classical_version, quantum_fraction


@pytest.fixture(scope="module")
def kp():
    return kac_paljutkin()


@pytest.fixture(scope="module")
def kp_cv(kp):
    return classical_version(kp)


@pytest.fixture(scope="module")
def ds4():
    return dual_symmetric_group(4)


@pytest.fixture(scope="module")
def ds4_cv(ds4):
    return classical_version(ds4)


@pytest.fixture(scope="module")
def cs4():
    return classical_group(permgroups.symmetric_group(4))


def test_bounds_rule_cases():
    assert convolution_bounds(0, 0) == (0, 0)
    assert convolution_bounds(0, 1) == (1, 1)
    assert convolution_bounds(1, 1) == (0, 1)


def test_bounds_ordered_and_in_range():
    grid = np.linspace(0, 1, 21)
    for a in grid:
        for b in grid:
            lo, hi = convolution_bounds(a, b)
            assert -1e-12 <= lo <= hi <= 1 + 1e-12


def test_bounds_rejects_out_of_range():
    with pytest.raises(AlgebraError):
        convolution_bounds(-0.1, 0.5)


def test_phase_region_examples():
    assert phase_region((0.25, 0.9)).region == "Q_I"
    assert phase_region((0.5, 0.5)).region == "Boundary_W"
    lab = phase_region((1.0, 1.0))
    assert lab.region == "Q_W" and lab.qhalfw
    assert phase_region((0.0, 0.0)).region == "degenerate"
    assert phase_region((0.05, 0.05)).region == "Q_I"


def test_phase_region_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b = rng.uniform(0, 1, size=2)
        x, y = phase_region((a, b)), phase_region((b, a))
        assert (x.region, x.q2i, x.q3i, x.qhalfw) == (y.region, y.q2i, y.q3i, y.qhalfw)


def test_phase_flags_monotone_along_rays():
    # Q_3I implies Q_2I implies Q_I; walking toward the origin preserves flags
    for ray in (0.7, 1.0, 0.3):
        prev = None
        for t in np.linspace(1, 0.01, 40):
            lab = phase_region((t * ray, t * 0.9))
            assert lab.q3i <= lab.q2i <= (lab.region == "Q_I")


def test_phase_point_validation():
    with pytest.raises(AlgebraError):
        PhasePoint(1.2, 0.0)


def test_phase_diagram_grid_shape():
    rows = phase_diagram_rows(11)
    assert len(rows) == 121
    regions = {r["region"] for r in rows}
    assert {"Q_I", "Q_W", "degenerate"} <= regions


def test_gap_check():
    assert idempotent_gap_check(0.0)
    assert idempotent_gap_check(0.5)
    assert idempotent_gap_check(5 / 6)
    assert not idempotent_gap_check(0.25)


def test_bounds_empirical_kp(kp, kp_cv):
    report = verify_bounds_empirically(kp, kp_cv, n_samples=150, seed=7)
    assert report.ok
    alphas = [s.alpha for s in report.samples]
    assert max(alphas) > 0.9 and min(alphas) < 0.1  # extremes exercised


def test_bounds_empirical_dual_s4(ds4, ds4_cv):
    assert verify_bounds_empirically(ds4, ds4_cv, n_samples=60, seed=8).ok


def test_bounds_empirical_classical_all_zero(cs4):
    cv = classical_version(cs4)
    report = verify_bounds_empirically(cs4, cv, n_samples=40, seed=9)
    for s in report.samples:
        assert s.alpha < 1e-9 and s.beta < 1e-9 and s.omega < 1e-9


def test_bounds_threads_do_not_change_results(kp, kp_cv, monkeypatch):
    base = verify_bounds_empirically(kp, kp_cv, n_samples=30, seed=4)
    monkeypatch.setenv("QPERM_THREADS", "4")
    threaded = verify_bounds_empirically(kp, kp_cv, n_samples=30, seed=4)
    for a, b in zip(base.samples, threaded.samples):
        assert (a.alpha, a.beta, a.omega) == (b.alpha, b.beta, b.omega)


def klein_coset_state(G, g):
    duals = np.zeros(G.dim)
    for p in permgroups.klein_four():
        duals[G.group_elements.index(permgroups.compose(p, g))] = 0.25
    return State(G.algebra, duals)


def test_coset_periods_match_quotient_order(cs4):
    # period of the uniform measure on Vg equals the order of the coset gV
    # in S_4 / V; for transpositions and 3-cycles this is the order of g
    klein = frozenset(permgroups.klein_four())
    for g in cs4.group_elements:
        nu = klein_coset_state(cs4, g)
        period = detect_period(cs4, nu)
        coset = frozenset(permgroups.compose(p, g) for p in klein)
        cur, order = coset, 1
        while cur != klein:
            cur = frozenset(permgroups.compose(a, b) for a in cur for b in coset)
            order += 1
        assert period == order


def test_coset_period_equals_element_order_when_orders_agree(cs4):
    klein = frozenset(permgroups.klein_four())
    for g in cs4.group_elements:
        coset = frozenset(permgroups.compose(p, g) for p in klein)
        cur, order = coset, 1
        while cur != klein:
            cur = frozenset(permgroups.compose(a, b) for a in cur for b in coset)
            order += 1
        if order == permgroups.perm_order(g):
            assert detect_period(cs4, klein_coset_state(cs4, g)) == permgroups.perm_order(g)


def test_haar_period_one(kp):
    assert detect_period(kp, kp.haar) == 1


def test_trajectory_shape(kp, kp_cv):
    seed = kp.sample_states(1, seed=77)[0]
    traj = trajectory(kp, seed, 10, kp_cv)
    assert len(traj) == 11
    assert traj.states[0].distance(seed) == 0.0


def test_point_mass_period_is_element_order(cs4):
    for g in [permgroups.from_cycles(4, (0, 1)),
              permgroups.from_cycles(4, (0, 1, 2)),
              permgroups.from_cycles(4, (0, 1, 2, 3))]:
        assert detect_period(cs4, point_state(cs4, g)) == permgroups.perm_order(g)


def test_e11_alternation(kp, kp_cv):
    e11 = State(kp.algebra, np.eye(8)[4])
    assert detect_period(kp, e11) == 2
    traj = trajectory(kp, e11, 8, kp_cv)
    for k, alpha in enumerate(traj.alphas, start=1):
        assert abs(alpha - (1.0 if k % 2 == 1 else 0.0)) < 1e-9


def test_finite_formulas(kp, kp_cv, ds4, ds4_cv):
    rec = finite_quantum_formulas(kp, kp_cv)
    assert abs(rec["alpha_haar"] - 0.5) < 1e-12
    assert rec["bound_2nfact"] == 48
    rec = finite_quantum_formulas(ds4, ds4_cv)
    assert abs(rec["alpha_haar"] - 11 / 12) < 1e-12
    cs3 = classical_group(permgroups.symmetric_group(3))
    rec = finite_quantum_formulas(cs3, classical_version(cs3))
    assert abs(rec["alpha_haar"]) < 1e-12


def test_gap_for_z4_indicator(ds4, ds4_cv):
    four = ds4.group.perms.index(permgroups.from_cycles(4, (0, 1, 2, 3)))
    psi = dual_subgroup_idempotent(ds4, sorted(ds4.group.generated_by([four])))
    alpha = quantum_fraction(psi, ds4_cv)
    assert abs(alpha - 5 / 6) < 1e-9
    assert idempotent_gap_check(alpha)


def test_convergence_to_haar_mixed_seed(kp):
    seed = State(kp.algebra, 0.6 * kp.haar.duals + 0.4 * kp.sample_states(1, seed=3)[0].duals)
    rep = convergence_to_haar(kp, seed, k_max=120)
    assert rep.converged


def test_point_mass_does_not_converge(cs4):
    g = permgroups.from_cycles(4, (0, 1, 2))
    rep = convergence_to_haar(cs4, point_state(cs4, g), k_max=60)
    assert not rep.converged


def test_strictness_flag_on_dual(ds4):
    rep = convergence_to_haar(ds4, ds4.haar, k_max=3)
    assert rep.strict is True  # |delta_e| profile: 1 at e only
    flat = State(ds4.algebra, np.ones(24))
    rep2 = convergence_to_haar(ds4, flat, k_max=3)
    assert rep2.strict is False
