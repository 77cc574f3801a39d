"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantities; the lines are repeated in the terminal summary. Run alone with
``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.optimize

from nhkmr.cli import main as cli_main
from nhkmr.datasets import LabeledDataset, generate_spiral, label_k_per_class, load_idx, select_digits
from nhkmr.diffusion import contiguity_violations, diffusion_operator, gaussian_kernel_matrix
from nhkmr.evaluation import sweep_labeled_counts
from nhkmr.experiments import (MNIST_PARAMS, SPIRAL_CONFIG, SYNTHETIC_PARAMS, SYNTHETIC_SETS,
                               accuracy, spiral_trace)
from nhkmr.metricspace import floyd_warshall, floyd_warshall_matrix_form, pairwise_distances
from nhkmr.solvers import (ModelParams, fit_laprls, fit_nhkrls, knn_kernel_weights, laprls_fit,
                           nhk_penalty_matrix, nhkrls_fit, regularized_loss)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import MNIST_IMAGES, MNIST_LABELS, dijkstra_all_pairs, dyadic_graph  # noqa: E402
from test_solvers import central_gradient, loss_grad_hess, random_problem  # noqa: E402

RESULTS = []


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# -- 1 --------------------------------------------------------------------

def test_geodesic_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    sizes = []
    for _ in range(50):
        n = int(rng.integers(5, 51))
        k = int(rng.integers(1, 7))
        G = dyadic_graph(rng, n, min(k, n - 1))
        oracle = dijkstra_all_pairs(G.adjacency)
        classic = floyd_warshall(G).d
        matrix = floyd_warshall_matrix_form(G, n).d
        mismatches += (not np.array_equal(classic, oracle)) + (not np.array_equal(matrix, oracle))
        sizes.append(n)
    elapsed = time.perf_counter() - start
    report("geodesic oracle equivalence", mismatches == 0 and elapsed < 5.0,
           f"50 graphs, n in [{min(sizes)}, {max(sizes)}], {mismatches} mismatches, "
           f"{elapsed:.2f}s (limit 5s)")


# -- 2 --------------------------------------------------------------------

def test_solver_stationarity():
    worst_grad = 0.0
    worst_rel = 0.0
    for seed in range(20):
        ds, K, M, params = random_problem(1000 + seed)
        alpha = nhkrls_fit(ds, K, M, params).alpha
        loss = lambda a: regularized_loss(a, ds, K, M.M, params)  # noqa: E731
        worst_grad = max(worst_grad, np.abs(central_gradient(loss, alpha)).max())
        grad, H = loss_grad_hess(ds, K, M.M, params)
        res = scipy.optimize.minimize(loss, np.zeros(len(ds)), jac=grad, hess=lambda a: H,
                                      method="trust-exact", options={"gtol": 1e-13})
        worst_rel = max(worst_rel, np.linalg.norm(res.x - alpha) / np.linalg.norm(res.x))
    report("solver stationarity", worst_grad <= 1e-8 and worst_rel <= 1e-6,
           f"20 problems, max |FD grad| = {worst_grad:.2e} (limit 1e-8), "
           f"max rel. diff to minimiser = {worst_rel:.2e} (limit 1e-6)")


# -- configurations shared by criteria 3 and 4 ----------------------------

def experiment_operators():
    """Every transition matrix the experiments build, with its diffusion step count."""
    ops = []
    for name, (gen, noise) in SYNTHETIC_SETS.items():
        ds = gen(400, noise, 0)
        for metric in ("geodesic", "euclidean"):
            p = SYNTHETIC_PARAMS
            P = diffusion_operator(ds.points, metric, p.knn_k, p.epsilon, p.steps_per_unit,
                                   p.passes, p.epsilon_rule)
            ops.append((f"{name}/{metric}", P, max(1, p.diffusion_steps)))
    spiral = generate_spiral(SPIRAL_CONFIG["n"], SPIRAL_CONFIG["turns"], 0)
    for metric in ("geodesic", "euclidean"):
        P = diffusion_operator(spiral.points, metric, SPIRAL_CONFIG["knn_k"],
                               SPIRAL_CONFIG["epsilon"], SPIRAL_CONFIG["steps_per_unit"])
        ops.append((f"spiral/{metric}", P, 10))
    X, y = load_idx(MNIST_IMAGES, MNIST_LABELS)
    Xtr, _ = select_digits(X, y, (0, 8), 200)
    p = MNIST_PARAMS
    for metric in ("geodesic", "euclidean"):
        P = diffusion_operator(Xtr, metric, p.knn_k, p.epsilon, p.steps_per_unit, p.passes,
                               p.epsilon_rule)
        ops.append((f"mnist-0v8/{metric}", P, p.diffusion_steps))
    return ops


@pytest.fixture(scope="module")
def operators():
    return experiment_operators()


# -- 3 --------------------------------------------------------------------

def test_row_stochastic_max_principle(operators):
    rng = np.random.default_rng(7)
    worst_row = 0.0
    worst_ratio = 0.0
    for _, P, _ in operators:
        worst_row = max(worst_row, np.abs(P.P.sum(axis=1) - 1).max())
        assert np.all(P.P >= 0)
        v = rng.normal(size=(P.n, 100)) * rng.exponential(size=100)
        ratio = np.abs(P.P @ v).max(axis=0) / np.abs(v).max(axis=0)
        worst_ratio = max(worst_ratio, ratio.max())
    report("row-stochasticity and max principle",
           worst_row <= 1e-12 and worst_ratio <= 1.0,
           f"{len(operators)} operators, max |row sum - 1| = {worst_row:.1e} (limit 1e-12), "
           f"max |Pv|/|v| = {worst_ratio:.15f} (limit 1)")


# -- 4 --------------------------------------------------------------------

def test_penalty_psd(operators):
    worst = np.inf
    where = ""
    for name, P, t in operators:
        lam = np.linalg.eigvalsh(nhk_penalty_matrix(P, t).M).min()
        if lam < worst:
            worst, where = lam, name
    report("penalty PSD", worst >= -1e-10,
           f"{len(operators)} configurations, min eigenvalue {worst:.2e} ({where}), limit -1e-10")


# -- 5 --------------------------------------------------------------------

def test_two_moons_reproduction():
    start = time.perf_counter()
    seeds = range(5)
    nhk, lap = {}, {}
    for name, (gen, noise) in SYNTHETIC_SETS.items():
        nhk[name], lap[name] = [], []
        for seed in seeds:
            ds = gen(400, noise, seed)
            ds = label_k_per_class(ds, ds.classes, 1, seed)
            nhk[name].append(accuracy(fit_nhkrls(ds, SYNTHETIC_PARAMS), ds))
            lap[name].append(accuracy(fit_laprls(ds, SYNTHETIC_PARAMS), ds))
    elapsed = time.perf_counter() - start
    moons_min = min(nhk["two-moons"])
    lower = [n for n in SYNTHETIC_SETS if np.mean(lap[n]) < np.mean(nhk[n])]
    means = ", ".join(f"{n} {np.mean(nhk[n]):.3f} vs {np.mean(lap[n]):.3f}" for n in SYNTHETIC_SETS)
    report("two-moons reproduction",
           moons_min >= 0.95 and len(lower) >= 2 and elapsed < 30.0,
           f"NHKRLS two-moons min accuracy {moons_min:.4f} over {len(seeds)} seeds (limit 0.95); "
           f"mean NHKRLS vs LapRLS: {means}; LapRLS lower on {len(lower)}/3 (need 2); "
           f"{elapsed:.1f}s (limit 30s)")


# -- 6 --------------------------------------------------------------------

def test_spiral_manifold_order():
    start = time.perf_counter()
    n = SPIRAL_CONFIG["n"]
    steps = 12
    geo = [contiguity_violations(s.u) for s in spiral_trace("geodesic", steps)]
    euc = [contiguity_violations(s.u) for s in spiral_trace("euclidean", 3)]
    elapsed = time.perf_counter() - start
    limit = 0.02 * n
    geo_ok = max(geo) <= limit
    euc_breaks = any(v > limit for v in euc[1:4])
    report("spiral manifold-order diffusion", geo_ok and euc_breaks and elapsed < 10.0,
           f"geodesic max gaps {max(geo)} over {steps} steps (limit {limit:.0f}); "
           f"euclidean gaps at steps 1-3 {euc[1:]} (must exceed {limit:.0f}); "
           f"{elapsed:.2f}s (limit 10s)")


# -- 7 --------------------------------------------------------------------

def test_mnist_desk_scale():
    X, y = load_idx(MNIST_IMAGES, MNIST_LABELS)
    Xtr, ytr = select_digits(X, y, (0, 8), 200)
    Xte, yte = select_digits(X, y, (0, 8), 50, offset=200)
    ds = LabeledDataset(Xtr, np.zeros(Xtr.shape[0]), ytr)
    res = sweep_labeled_counts(ds, ytr, ["nhkrls", "ls"], [2, 8, 32], trials=3, seed=0,
                               params=MNIST_PARAMS, test_points=Xte, test_truths=yte)
    cells = {}
    for r in res.rows:
        cells.setdefault((r.count, r.trial), {})[r.model] = r.error
    ok = all(c["nhkrls"] <= c["ls"] for c in cells.values())
    table = res.table()
    detail = ", ".join(f"{c}: {table['nhkrls'][c]:.3f} vs {table['ls'][c]:.3f}" for c in (2, 8, 32))
    report("MNIST desk scale", ok,
           f"mean test error NHKRLS vs LS per labeled count ({detail}); "
           f"NHKRLS <= LS in {sum(c['nhkrls'] <= c['ls'] for c in cells.values())}/{len(cells)} "
           f"(count, trial) cells")


# -- 8 --------------------------------------------------------------------

def test_baseline_reduction():
    worst = 0.0
    for seed in range(20):
        ds, K, M, params = random_problem(2000 + seed)
        p0 = ModelParams(gamma_A=params.gamma_A, gamma_I=0.0)
        W = knn_kernel_weights(ds.points, min(3, len(ds) - 1), K.epsilon)
        a = nhkrls_fit(ds, K, M, p0).alpha
        b = laprls_fit(ds, K, W, p0).alpha
        worst = max(worst, np.abs(a - b).max())
    gen, noise = SYNTHETIC_SETS["two-moons"]
    ds = gen(400, noise, 0)
    ds = label_k_per_class(ds, ds.classes, 4, 0)
    K = gaussian_kernel_matrix(pairwise_distances(ds.points), 0.2)
    P = diffusion_operator(ds.points, "geodesic", 8)
    p0 = ModelParams(gamma_I=0.0)
    a = nhkrls_fit(ds, K, nhk_penalty_matrix(P, 1), p0).alpha
    b = laprls_fit(ds, K, knn_kernel_weights(ds.points, 8, 0.2), p0).alpha
    worst = max(worst, np.abs(a - b).max())
    report("baseline reduction", worst <= 1e-10,
           f"21 problems, max |alpha_NHKRLS - alpha_LapRLS| = {worst:.1e} (limit 1e-10)")


# -- 9 --------------------------------------------------------------------

CLI_RUNS = {
    "generate": ["generate", "--dataset", "two-moons", "--n", "400", "--seed", "7",
                 "--labels-per-class", "1"],
    "propagate": ["propagate", "--dataset", "spiral", "--n", "300", "--knn", "4",
                  "--epsilon", "0.01", "--steps-per-unit", "1", "--steps", "5"],
    "train": ["train", "--model", "nhkrls", "--preset", "synthetic", "--n", "200"],
    "train-mnist": ["train", "--dataset", "mnist", "--images", str(MNIST_IMAGES),
                    "--labels", str(MNIST_LABELS), "--preset", "mnist",
                    "--labels-per-class", "8"],
    "sweep-csv": ["sweep", "--n", "100", "--counts", "2,4,8", "--preset", "synthetic"],
    "sweep-json": ["sweep", "--n", "100", "--counts", "2,4", "--trials", "2"],
    "boundary": ["boundary", "--preset", "synthetic", "--n", "200", "--samples", "6000"],
}


def test_cli_determinism(tmp_path):
    differing = []
    for name, argv in CLI_RUNS.items():
        suffix = ".json" if name.startswith("train") or name.endswith("json") else ".csv"
        outs = []
        for attempt in range(2):
            out = tmp_path / f"{name}-{attempt}{suffix}"
            code = cli_main(argv + ["-o", str(out)])
            assert code == 0, (name, code)
            outs.append(out.read_bytes())
        if outs[0] != outs[1]:
            differing.append(name)
    report("determinism", not differing,
           f"{len(CLI_RUNS)} commands run twice, differing outputs: {differing or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
