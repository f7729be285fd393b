"""End-to-end acceptance suite.

Each test covers one acceptance criterion at full scale and prints a single
pass/fail line on the terminal (bypassing capture), so a complete run reads
as a nine-line scoreboard.  These tests are slower than the unit suite;
criterion 1 runs five hundred full-size Monte Carlo tests.
"""

import json
import time

import numpy as np
import pytest

from blockassoc.checkers import gaussian_block_association, l_superadditivity_check
from blockassoc.cli import run
from blockassoc.core import (
    BlockPartition,
    CovFunction,
    CovarianceMatrix,
    DiscreteJointDistribution,
    DiscreteLevyMeasure,
    IdTriplet,
    validate_partition,
)
from blockassoc.limits import (
    longrun_covariance,
    run_clt_experiment,
    run_invariance_check,
)
from blockassoc.mctest import (
    McConfig,
    SmoothFunction,
    exact_discrete_association,
    exact_discrete_association_witness,
    exact_discrete_block_association,
    hps_formula_verify,
    mc_block_association_test,
)
from blockassoc.simulate import GaussianSource, MaModel, brownian_antithetic_source, rng_for

C_REF = np.array([[1.0, -0.5], [-0.5, 1.0]])
THETA_REF = np.array([[0.5, 0.25], [0.25, 0.5]])
SIGMA_REF = np.array([[1.9375, -0.40625], [-0.40625, 1.9375]])
MODEL_REF = json.dumps(
    {"innovation_cov": C_REF.tolist(), "thetas": [THETA_REF.tolist()]}
)


def report_line(capsys, index, label, ok, detail=""):
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"\nacceptance {index}: {status} - {label}{suffix}")
    assert ok, f"criterion {index} failed: {label} {detail}"


def random_partition(rng, d, n_blocks=None):
    """A uniform random partition of {1..d} with at least two blocks."""
    while True:
        k = n_blocks or int(rng.integers(2, d + 1))
        labels = rng.integers(0, k, size=d)
        blocks = [list(np.flatnonzero(labels == v) + 1) for v in np.unique(labels)]
        if len(blocks) >= 2:
            return validate_partition(blocks, d)


def test_acceptance_1_gaussian_characterization(capsys):
    """Exact Gaussian verdicts against the Monte Carlo tester, 500 cases."""
    t0 = time.time()
    rng = np.random.default_rng(20_260_824)
    cfg_base = dict(n_samples=100_000, n_pairs=200, alpha_sig=0.01)
    false_violations = 0
    detections = 0
    n_pass_cases, n_planted = 400, 100

    for i in range(n_pass_cases):
        d = int(rng.integers(2, 9))
        a = np.abs(rng.normal(size=(d, d)))
        sigma = CovarianceMatrix(a @ a.T + 1e-6 * np.eye(d))
        p = random_partition(rng, d)
        assert gaussian_block_association(sigma, p).status == "PASS"
        v = mc_block_association_test(
            GaussianSource(sigma), p, McConfig(**cfg_base, seed=1000 + i)
        )
        false_violations += v.status == "VIOLATION"

    for i in range(n_planted):
        d = int(rng.integers(2, 9))
        p = random_partition(rng, d, n_blocks=2)
        sigma = np.zeros((d, d))
        for b in p.blocks:
            idx = np.array(b) - 1
            a = rng.normal(size=(len(b), len(b)))
            sigma[np.ix_(idx, idx)] = a @ a.T
        k = int(p.blocks[0][rng.integers(len(p.blocks[0]))]) - 1
        l = int(p.blocks[1][rng.integers(len(p.blocks[1]))]) - 1
        sigma[k, l] = sigma[l, k] = -max(0.3, 0.5 * np.sqrt(sigma[k, k] * sigma[l, l]))
        w = np.linalg.eigvalsh(sigma).min()
        if w < 1e-6:
            sigma += (1e-6 - w) * np.eye(d)
        cov = CovarianceMatrix(sigma)
        assert gaussian_block_association(cov, p).status == "VIOLATION"
        v = mc_block_association_test(
            GaussianSource(cov), p, McConfig(**cfg_base, seed=5000 + i)
        )
        detections += v.status == "VIOLATION"

    elapsed = time.time() - t0
    ok = (
        false_violations <= 0.01 * n_pass_cases
        and detections >= 0.95 * n_planted
        and elapsed <= 600
    )
    report_line(
        capsys, 1, "Gaussian characterization vs Monte Carlo",
        ok,
        f"false violations {false_violations}/{n_pass_cases}, "
        f"detections {detections}/{n_planted}, {elapsed:.0f}s",
    )


def test_acceptance_2_antithetic_counterexample(capsys):
    """Antithetic Brownian increments: the block structure decides the verdict."""
    t0 = time.time()
    src = brownian_antithetic_source()
    cfg = McConfig(n_samples=100_000, n_pairs=200, alpha_sig=0.01, seed=42)
    singleton = mc_block_association_test(src, BlockPartition.singletons(4), cfg)
    paired = mc_block_association_test(src, validate_partition([[1, 2], [3, 4]], 4), cfg)
    elapsed = time.time() - t0
    ok = singleton.status == "VIOLATION" and paired.status == "PASS" and elapsed <= 60
    report_line(
        capsys, 2, "antithetic Brownian increments",
        ok, f"singleton {singleton.status}, paired {paired.status}, {elapsed:.1f}s",
    )


def test_acceptance_3_support_equivalence(capsys):
    """Both routes of the jump-support characterization agree, 10^4 cases."""
    from blockassoc.checkers import levy_support_equivalence

    t0 = time.time()
    rng = np.random.default_rng(3)
    agreements = 0
    n_cases = 10_000
    for _ in range(n_cases):
        d = int(rng.integers(2, 8))
        n_atoms = int(rng.integers(1, 7))
        atoms = []
        for _ in range(n_atoms):
            x = rng.normal(size=d) * (rng.random(d) < 0.7)
            if rng.random() < 0.3:
                x = np.abs(x) * (1 if rng.random() < 0.5 else -1)
            if np.any(x != 0.0):
                atoms.append((x, float(rng.uniform(0.1, 1.0))))
        if not atoms:
            atoms = [(np.ones(d), 1.0)]
        nu = DiscreteLevyMeasure(d, atoms)
        p = random_partition(rng, d)
        a, b = levy_support_equivalence(nu, p)
        agreements += a == b
    elapsed = time.time() - t0
    ok = agreements == n_cases and elapsed <= 60
    report_line(
        capsys, 3, "support-set equivalence, both routes",
        ok, f"{agreements}/{n_cases} agree, {elapsed:.1f}s",
    )


def test_acceptance_4_l_superadditivity(capsys):
    """Rectangle verdicts for the min kernel and both fBm regimes."""
    t0 = time.time()
    times = [0.0, 1.0, 2.0, 3.0]
    v_min = l_superadditivity_check(CovFunction(1, "brownian-min"), times)
    worst_min = abs(v_min.statistics["worst_rectangle"]["value"])
    v_smooth = l_superadditivity_check(CovFunction(1, "fbm", {"H": 0.7}), times)
    v_rough = l_superadditivity_check(CovFunction(1, "fbm", {"H": 0.3}), times)
    # the failing rectangle's sign must match H(2H-1): negative for H < 1/2
    sign_ok = (
        v_rough.status == "VIOLATION"
        and v_rough.evidence["rectangle"]["value"] < 0
        and np.sign(0.3 * (2 * 0.3 - 1)) == -1.0
    )
    elapsed = time.time() - t0
    ok = (
        v_min.status == "PASS"
        and worst_min <= 1e-12
        and v_smooth.status == "PASS"
        and sign_ok
        and elapsed <= 1.0
    )
    report_line(
        capsys, 4, "L-superadditivity rectangle checks",
        ok, f"min worst {worst_min:.1e}, H=0.7 {v_smooth.status}, "
            f"H=0.3 {v_rough.status}, {elapsed:.2f}s",
    )


def test_acceptance_5_hps_formula(capsys):
    """Covariance interpolation identity on 10 random small triplets."""
    t0 = time.time()
    rng = rng_for(42, 20)
    agree = 0
    for i in range(10):
        d = int(rng.integers(2, 4))
        a = rng.normal(size=(d, d)) * 0.6
        sigma = CovarianceMatrix(a @ a.T)
        n_atoms = int(rng.integers(1, 6))
        atoms = []
        for _ in range(n_atoms):
            u = rng.normal(size=d)
            atoms.append((u, float(rng.uniform(0.1, 0.6))))
        triplet = IdTriplet(rng.normal(size=d) * 0.3, sigma, DiscreteLevyMeasure(d, atoms))
        psi1 = SmoothFunction.random_tanh(d, rng)
        psi2 = SmoothFunction.random_tanh(d, rng)
        report = hps_formula_verify(triplet, psi1, psi2, n_samples=100_000, n_nodes=8, seed=42)
        agree += report.agree
    elapsed = time.time() - t0
    ok = agree >= 9 and elapsed <= 900
    report_line(
        capsys, 5, "covariance interpolation identity",
        ok, f"{agree}/10 within 3 SE, {elapsed:.0f}s",
    )


def test_acceptance_6_exact_oracle_coherence(capsys):
    """Singleton-block oracle equals the plain oracle on 100 random laws."""
    t0 = time.time()
    rng = np.random.default_rng(6)
    coherent = 0
    n_cases = 100
    for _ in range(n_cases):
        d = int(rng.integers(2, 4))
        k = int(rng.integers(2, 6))
        support = np.unique(rng.integers(0, 4, size=(k, d)).astype(float), axis=0)
        probs = rng.dirichlet(np.ones(len(support)))
        dist = DiscreteJointDistribution(support, probs)
        coherent += exact_discrete_block_association(
            dist, BlockPartition.singletons(d)
        ) == exact_discrete_association(dist)

    # product laws of independent blocks are always block-associated
    products_ok = True
    for seed in range(10):
        r = np.random.default_rng(seed)
        parts = []
        for _ in range(2):
            pts = np.unique(r.integers(0, 3, size=(3, 2)).astype(float), axis=0)
            parts.append((pts, r.dirichlet(np.ones(len(pts)))))
        support, probs = [], []
        for xa, pa in zip(*parts[0]):
            for xb, pb in zip(*parts[1]):
                support.append(np.concatenate([xa, xb]))
                probs.append(pa * pb)
        dist = DiscreteJointDistribution(support, probs)
        p = validate_partition([[1, 2], [3, 4]], 4)
        products_ok &= exact_discrete_block_association(dist, p)

    anti = DiscreteJointDistribution([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
    ok_anti, witness = exact_discrete_association_witness(anti)
    anti_ok = not ok_anti and witness["covariance"] == -0.25

    elapsed = time.time() - t0
    ok = coherent == n_cases and products_ok and anti_ok and elapsed <= 120
    report_line(
        capsys, 6, "exact oracle coherence",
        ok, f"{coherent}/{n_cases} coherent, products {products_ok}, "
            f"anti-comonotone witness -1/4 {anti_ok}, {elapsed:.0f}s",
    )


def test_acceptance_7_clt(capsys):
    """Partial-sum limit of the certified MA(1) instance."""
    t0 = time.time()
    model = MaModel(CovarianceMatrix(C_REF), (THETA_REF,))
    assert np.allclose(longrun_covariance(model).entries, SIGMA_REF)
    report = run_clt_experiment(model, n=10_000, reps=2000, seed=42)
    elapsed = time.time() - t0
    negative_entry = report.theoretical[0][1] < 0
    ok = (
        report.covariance_ok
        and report.normality_ok
        and negative_entry
        and elapsed <= 300
    )
    report_line(
        capsys, 7, "central limit theorem for the certified MA(1)",
        ok, f"max deviation {report.max_abs_deviation:.4f}, "
            f"min KS p {min(report.ks_pvalues):.3g}, "
            f"negative limit entry {negative_entry}, {elapsed:.0f}s",
    )


def test_acceptance_8_invariance(capsys):
    """Rescaled partial-sum path covariance structure min(s,t) * Sigma."""
    t0 = time.time()
    model = MaModel(CovarianceMatrix(C_REF), (THETA_REF,))
    report = run_invariance_check(
        model, n=10_000, times=(0.25, 0.5, 1.0), reps=2000, seed=42
    )
    elapsed = time.time() - t0
    incr_ok = all(c["ok"] for c in report.extra["increment_checks"])
    ok = report.covariance_ok and incr_ok and elapsed <= 300
    report_line(
        capsys, 8, "invariance principle covariance pattern",
        ok, f"covariance {report.covariance_ok}, increments {incr_ok}, {elapsed:.0f}s",
    )


def test_acceptance_9_determinism(capsys, tmp_path):
    """Every subcommand run twice yields byte-identical reports sans timestamp."""
    t0 = time.time()
    triplet = json.dumps(
        {
            "drift": [0, 0],
            "gaussian": [[1, 0.2], [0.2, 1]],
            "levy": {"atoms": [{"x": [1, 1], "mass": 0.5}]},
        }
    )
    dist = '{"support": [[0, 1], [1, 0]], "probs": [0.5, 0.5]}'
    fbm = '{"family": "fbm", "d": 1, "params": {"H": 0.3}}'
    witness_path = str(tmp_path / "w.json")
    run(["mc-test", "--source", "brownian-antithetic", "--blocks", "singleton",
         "--n", "20000", "--m", "50", "--seed", "42", "--out", witness_path])

    commands = {
        "check-gaussian": ["check-gaussian", "--sigma", "[[1,-1],[-1,1]]",
                           "--blocks", "singleton"],
        "check-id": ["check-id", "--triplet", triplet, "--blocks", "singleton"],
        "check-support": ["check-support", "--levy",
                          '{"atoms": [{"x": [1, -1], "mass": 1.0}]}',
                          "--blocks", "singleton"],
        "check-covfun": ["check-covfun", "--covfun", fbm, "--times", "0,1,2,3"],
        "oracle": ["oracle", "--dist", dist],
        "mc-test": ["mc-test", "--source", "brownian-antithetic", "--blocks",
                    "singleton", "--n", "20000", "--m", "50", "--seed", "42"],
        "hps-verify": ["hps-verify", "--triplet", triplet, "--n", "20000",
                       "--nodes", "4", "--seed", "42"],
        "clt": ["clt", "--model", MODEL_REF, "--n", "500", "--reps", "400",
                "--seed", "42"],
        "replay": ["replay", witness_path],
    }
    stable = {}
    for name, args in commands.items():
        out = tmp_path / f"{name}.json"
        texts = []
        for _ in range(2):
            run(args + ["--out", str(out)])
            report = json.loads(out.read_text())
            report.pop("metadata")
            texts.append(json.dumps(report, sort_keys=True))
        stable[name] = texts[0] == texts[1]

    # simulate writes data, not a report: the data itself must be bit-stable
    sim = []
    for tag in ("a", "b"):
        path = tmp_path / f"sim_{tag}.csv"
        run(["simulate", "--source", "brownian-antithetic", "--count", "1000",
             "--seed", "42", "--out", str(path)])
        sim.append(path.read_bytes() + (tmp_path / f"sim_{tag}.csv.meta.json").read_bytes())
    stable["simulate"] = sim[0] == sim[1]

    elapsed = time.time() - t0
    unstable = sorted(k for k, v in stable.items() if not v)
    ok = not unstable
    report_line(
        capsys, 9, "report determinism across all subcommands",
        ok, f"{len(stable)} subcommands checked"
            + (f", unstable: {unstable}" if unstable else "") + f", {elapsed:.0f}s",
    )
