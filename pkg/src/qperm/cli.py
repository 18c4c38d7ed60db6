"""Command-line front end.

    qperm validate <builtin-or-file>
    qperm run <experiment-spec.json> [--out DIR]
    qperm report <artifact-dir>

Group definition files are JSON:

    {"kind": "classical" | "dual" | "kac_paljutkin",
     "permutations": [[0,1,2], ...],          # classical: 0-indexed images
     "group_table": [[...], ...],             # dual: multiplication table
     "generators": [{"element": i, "order": d}, ...],   # dual
     "tolerance": 1e-9}

Experiment specs are JSON with a registered name, a group reference (builtin
name or definition-file path), parameters and optional explicit output paths:

    {"name": "bounds-empirical", "group": "kp",
     "parameters": {"n_samples": 500, "seed": 7}, "outputs": ["bounds.json"]}

Exit codes: 0 success, 1 assertion failure, 2 input error.  QPERM_THREADS
caps the thread count of sample batches.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, idempotent, permgroups, permutation
from .algebra import AlgebraError, State, gram_norm, meet
from .cqg import (
    CompactQuantumGroup,
    classical_group,
    dual_dihedral,
    dual_group,
    dual_symmetric_group,
    haar_state,
    kac_paljutkin,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(_fmt(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": float(_fmt(obj.real)), "im": float(_fmt(obj.imag))}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, State):
        return _jsonable(obj.duals)
    return obj


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- group registry -----------------------------------------------------------


def _klein_in_s4():
    return classical_group(permgroups.klein_four(), name="klein-s4")


def _z4_in_s4():
    four_cycle = permgroups.from_cycles(4, (0, 1, 2, 3))
    return classical_group(permgroups.closure([four_cycle]), name="z4-s4")


BUILTIN_GROUPS = {
    "trivial": lambda: classical_group([permgroups.identity_perm(1)], name="trivial"),
    "s2": lambda: classical_group(permgroups.symmetric_group(2), name="s2"),
    "s3": lambda: classical_group(permgroups.symmetric_group(3), name="s3"),
    "s4": lambda: classical_group(permgroups.symmetric_group(4), name="s4"),
    "klein-s4": _klein_in_s4,
    "z4-s4": _z4_in_s4,
    "kp": kac_paljutkin,
    "dual-z2": lambda: dual_group(permgroups.FiniteGroup.cyclic(2), [(1, 2)],
                                  name="dual-z2"),
    "dual-s3": lambda: dual_symmetric_group(3),
    "dual-s4": lambda: dual_symmetric_group(4),
}
for _m in range(3, 13):
    BUILTIN_GROUPS[f"dual-d{_m}"] = (lambda m=_m: dual_dihedral(m))


def load_group(ref: str) -> CompactQuantumGroup:
    if ref in BUILTIN_GROUPS:
        return BUILTIN_GROUPS[ref]()
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"unknown builtin and no such file: {ref}")
    with open(path) as fh:
        data = json.load(fh)
    kind = data.get("kind")
    tol = float(data.get("tolerance", 1e-9))
    if kind == "classical":
        perms = [tuple(p) for p in data["permutations"]]
        return classical_group(perms, name=path.stem, tol=tol)
    if kind == "dual":
        table = data["group_table"]
        labels = data.get("labels") or [f"g{i}" for i in range(len(table))]
        try:
            group = permgroups.FiniteGroup(labels, table)
        except ValueError as exc:
            raise AlgebraError(f"multiplication table axiom failed: {exc}") from exc
        gens = [(int(g["element"]), int(g["order"])) for g in data["generators"]]
        return dual_group(group, gens, name=path.stem, tol=tol)
    if kind == "kac_paljutkin":
        return kac_paljutkin(tol=tol)
    raise ValueError(f"unknown group kind: {kind!r}")


# -- experiments ----------------------------------------------------------------


def exp_haar(G, params, out):
    h = haar_state(G, cross_check=True)
    payload = {"group": G.name, "dim": G.dim, "N": G.N,
               "haar_duals": h, "matches_stored": float(h.distance(G.haar))}
    try:
        cv = permutation.classical_version(G)
        payload["alpha_haar"] = permutation.quantum_fraction(h, cv)
    except AlgebraError:
        pass
    write_json(out / "haar.json", payload)
    return ["haar.json"]


def exp_classical_version(G, params, out):
    cv = permutation.classical_version(G)
    forms = dynamics.finite_quantum_formulas(G, cv)
    payload = {
        "group": G.name,
        "order": len(cv),
        "permutations": [list(p) for p in cv.permutations],
        "labels": [permgroups.perm_label(p) for p in cv.permutations],
        "support_ranks": [int(round(np.trace(
            G.algebra.left_mult_matrix(p.coeffs)).real)) for p in cv.supports],
        "p_C_group_like": idempotent.is_group_like(G, cv.p_C),
        "alpha_haar": forms["alpha_haar"],
        "bound_2nfact": forms["bound_2nfact"],
    }
    write_json(out / "classical_version.json", payload)
    return ["classical_version.json"]


def exp_stabiliser(G, params, out):
    partition = params.get("partition")
    if partition is None:
        partition = [[0], list(range(1, G.N))]
    psi = permutation.stabiliser_idempotent(
        G, partition, n_samples=int(params.get("n_samples", 24)),
        seed=int(params.get("seed", 0)))
    cvα = None
    try:
        cv = permutation.classical_version(G)
        cvα = permutation.quantum_fraction(psi, cv)
    except AlgebraError:
        pass
    payload = {"group": G.name, "partition": partition,
               "idempotent_duals": psi,
               "diagonal_masses": [float(psi(G.magic_projection(j, j)).real)
                                   for j in range(G.N)],
               "alpha": cvα,
               "is_idempotent": idempotent.is_idempotent(G, psi)}
    write_json(out / "stabiliser.json", payload)
    return ["stabiliser.json"]


def exp_idempotent_census(G, params, out):
    n_seeds = int(params.get("n_seeds", 50))
    seed = int(params.get("seed", 0))
    cv = permutation.classical_version(G)
    extra = [G.counit, G.haar]
    results = idempotent.idempotent_census(G, n_seeds, seed=seed, extra_seeds=extra)
    rows, gap_ok = [], True
    for k, res in enumerate(results):
        alpha = permutation.quantum_fraction(res.limit, cv)
        cls = idempotent.classify_idempotent(G, res.limit)
        ok = dynamics.idempotent_gap_check(alpha)
        gap_ok = gap_ok and ok
        rows.append({"seed_index": k, "converged": res.converged,
                     "iterations": res.iterations, "alpha": alpha,
                     "kind": cls.kind, "null_dim": cls.null_space_dim,
                     "gap_ok": ok})
    chi_values = sorted({round(r["alpha"], 9) for r in rows})
    payload = {"group": G.name, "n": len(rows), "rows": rows,
               "all_gap_ok": gap_ok, "chi_values": chi_values}
    write_json(out / "census.json", payload)
    if not gap_ok:
        raise AlgebraError("idempotent gap violated in census")
    return ["census.json"]


def exp_phase_diagram(G, params, out):
    n = int(params.get("n", 101))
    rows = dynamics.phase_diagram_rows(n)
    path = out / "phase_diagram.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("alpha,beta,region,q2i,q3i,qhalfw,lower,upper\n")
        for r in rows:
            fh.write(",".join([_fmt(r["alpha"]), _fmt(r["beta"]), r["region"],
                               str(int(r["q2i"])), str(int(r["q3i"])),
                               str(int(r["qhalfw"])), _fmt(r["lower"]),
                               _fmt(r["upper"])]) + "\n")
    return ["phase_diagram.csv"]


def exp_bounds(G, params, out):
    cv = permutation.classical_version(G)
    rep = dynamics.verify_bounds_empirically(
        G, cv, n_samples=int(params.get("n_samples", 500)),
        seed=int(params.get("seed", 0)))
    alphas = [s.alpha for s in rep.samples]
    payload = {"group": G.name, "n_samples": len(rep.samples),
               "violations": len(rep.violations),
               "alpha_range": [min(alphas), max(alphas)],
               "samples": [[s.alpha, s.beta, s.omega] for s in rep.samples]}
    write_json(out / "bounds.json", payload)
    return ["bounds.json"]


def exp_periodicity(G, params, out):
    rows = []
    if G.kind == "classical" and G.N == 4 and len(G.group_elements) == 24:
        klein = permgroups.klein_four()
        quotient_elems = None
        for g in G.group_elements:
            duals = np.zeros(G.dim)
            for p in klein:
                duals[G.group_elements.index(permgroups.compose(p, g))] = 0.25
            nu = State(G.algebra, duals)
            period = dynamics.detect_period(G, nu)
            coset = frozenset(permgroups.compose(p, g) for p in klein)
            coset_order = 1
            cur = coset
            ident = frozenset(klein)
            while cur != ident:
                cur = frozenset(permgroups.compose(a, b) for a in cur for b in coset)
                coset_order += 1
            rows.append({"representative": permgroups.perm_label(g),
                         "element_order": permgroups.perm_order(g),
                         "coset_order": coset_order, "period": period})
    if G.kind == "kac_paljutkin":
        cv = permutation.classical_version(G)
        e11 = State(G.algebra, np.eye(G.dim)[4])
        traj = dynamics.trajectory(G, e11, int(params.get("k_max", 8)), cv)
        rows.append({"seed": "E11", "period": dynamics.detect_period(G, e11),
                     "alpha_k": traj.alphas})
    payload = {"group": G.name, "rows": rows}
    write_json(out / "periodicity.json", payload)
    return ["periodicity.json"]


def exp_fix_spectrum(G, params, out):
    fs = permutation.fix_spectrum(G)
    payload = {"group": G.name, "eigenvalues": fs.eigenvalues,
               "counit_distribution": fs.distribution(G.counit),
               "haar_distribution": fs.distribution(G.haar),
               "haar_integer_fixed_points":
                   permutation.has_integer_fixed_points(G, G.haar, fs)}
    write_json(out / "fix_spectrum.json", payload)
    return ["fix_spectrum.json"]


def exp_s4hat_walkthrough(G, params, out):
    if G.kind != "dual" or G.dim != 24:
        raise ValueError("s4hat-walkthrough runs on the dual-s4 builtin")
    fs = permutation.fix_spectrum(G)
    lam_plus = (5 + math.sqrt(17)) / 2
    lam_minus = (5 - math.sqrt(17)) / 2
    found_p = min(abs(l - lam_plus) for l in fs.eigenvalues)
    found_m = min(abs(l - lam_minus) for l in fs.eigenvalues)
    evals, U = np.linalg.eigh(G.algebra.to_hermitian_frame(
        G.algebra.left_mult_matrix(fs.element.coeffs)))
    # seed: equal mix of eigenvector states with two and four fixed points
    def eig_state(target):
        idx = int(np.argmin(np.abs(evals - target)))
        x = np.linalg.solve(G.algebra._chol.conj().T, U[:, idx])
        return G.vector_state(x)
    phi = State(G.algebra, 0.5 * eig_state(2.0).duals + 0.5 * eig_state(4.0).duals)
    conv = dynamics.convergence_to_haar(G, phi, k_max=int(params.get("k_max", 200)))
    p_plus = fs.projections[int(np.argmin([abs(l - lam_plus)
                                           for l in fs.eigenvalues]))]
    haar_weight = float(G.haar(p_plus).real)
    terminal = fs.distribution(G.haar)
    payload = {
        "group": G.name,
        "eigenvalues": fs.eigenvalues,
        "lambda_plus_error": found_p, "lambda_minus_error": found_m,
        "seed_strict": conv.strict,
        "distance_trace": conv.distances,
        "converged_to_haar": conv.converged,
        "haar_weight_at_lambda_plus": haar_weight,
        "terminal_distribution": terminal,
        "limit_has_integer_fixed_points":
            permutation.has_integer_fixed_points(G, G.haar, fs),
    }
    write_json(out / "s4hat.json", payload)
    if not conv.converged or haar_weight <= 0:
        raise AlgebraError("walkthrough failed its convergence targets")
    return ["s4hat.json"]


def exp_dihedral_sweep(G, params, out):
    ms = params.get("m_values") or list(range(3, 13))
    rows = []
    for m in ms:
        Dm = dual_dihedral(int(m))
        r = meet([Dm.magic_projection(0, 0), Dm.magic_projection(2, 2)])
        val = float(Dm.haar(r).real)
        rows.append({"m": int(m), "haar_of_meet": val, "expected": 1.0 / (2 * m),
                     "error": abs(val - 1.0 / (2 * m))})
    payload = {"rows": rows,
               "trend_to_zero": rows[-1]["haar_of_meet"] < rows[0]["haar_of_meet"]}
    write_json(out / "dihedral_sweep.json", payload)
    if any(r["error"] > 1e-8 for r in rows):
        raise AlgebraError("dihedral sweep mismatch with 1/(2m)")
    return ["dihedral_sweep.json"]


EXPERIMENTS = {
    "haar": exp_haar,
    "classical-version": exp_classical_version,
    "stabiliser": exp_stabiliser,
    "idempotent-census": exp_idempotent_census,
    "phase-diagram": exp_phase_diagram,
    "bounds-empirical": exp_bounds,
    "periodicity": exp_periodicity,
    "fix-spectrum": exp_fix_spectrum,
    "s4hat-walkthrough": exp_s4hat_walkthrough,
    "dihedral-sweep": exp_dihedral_sweep,
}

RANDOMIZED = {"stabiliser", "idempotent-census", "bounds-empirical"}


# -- commands --------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        G = load_group(args.group)
    except AlgebraError as exc:
        print(f"validation failure during construction: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = G.validate()
    print(f"group {G.name}: dim={G.dim}, N={G.N}")
    print(report)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_run(args) -> int:
    try:
        with open(args.spec) as fh:
            spec = json.load(fh)
        name = spec["name"]
        if name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {name!r}; "
                             f"choose from {sorted(EXPERIMENTS)}")
        params = spec.get("parameters", {})
        if name in RANDOMIZED and "seed" not in params:
            raise ValueError(f"experiment {name!r} requires a seed parameter")
        G = load_group(spec.get("group", "kp"))
    except AlgebraError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out)
    try:
        artifacts = EXPERIMENTS[name](G, params, out)
    except AlgebraError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    produced = [out / a for a in artifacts]
    for declared, src in zip(spec.get("outputs", []), produced):
        dest = Path(declared)
        if not dest.is_absolute():
            dest = out / dest
        if dest != src:
            dest.parent.mkdir(parents=True, exist_ok=True)
            src.replace(dest)
            produced[produced.index(src)] = dest
    for a in produced:
        print(a)
    return EXIT_OK


def cmd_report(args) -> int:
    d = Path(args.dir)
    files = sorted(d.glob("*.json"))
    if not d.is_dir() or not files:
        print(f"input error: no artifacts in {d}", file=sys.stderr)
        return EXIT_INPUT
    summary = {}
    lines = []
    for f in files:
        with open(f) as fh:
            data = json.load(fh)
        entry = {}
        for key in ("alpha_haar", "violations", "all_gap_ok", "order",
                    "converged_to_haar", "haar_weight_at_lambda_plus",
                    "p_C_group_like", "trend_to_zero"):
            if key in data:
                entry[key] = data[key]
        if "rows" in data and f.stem == "dihedral_sweep":
            entry["max_error"] = max(r["error"] for r in data["rows"])
        summary[f.stem] = entry
        desc = ", ".join(f"{k}={v}" for k, v in entry.items()) or "(raw data)"
        lines.append(f"{f.stem:24s} {desc}")
    width = max(len(l) for l in lines)
    print("-" * width)
    for l in lines:
        print(l)
    print("-" * width)
    write_json(d / "summary.json", summary)
    print(d / "summary.json")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qperm",
        description="finite-dimensional quantum permutation group toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    p_val = sub.add_parser("validate", help="check the axioms of a group")
    p_val.add_argument("group", help="builtin name or definition JSON path")
    p_run = sub.add_parser("run", help="run a named experiment")
    p_run.add_argument("spec", help="experiment spec JSON path")
    p_run.add_argument("--out", default="qperm-out", help="artifact directory")
    p_rep = sub.add_parser("report", help="summarize an artifact directory")
    p_rep.add_argument("dir")
    args = parser.parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    if args.command == "run":
        return cmd_run(args)
    return cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
