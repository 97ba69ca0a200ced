import json
import math
import os
import subprocess
import sys
import tempfile

import _spdelab as lab


def test_spectral_model():
    model = lab.SpectralModel.dirichlet(4)
    assert model.modes == 4
    assert math.isclose(model.eigenvalues[0], math.pi**2, rel_tol=1e-14)
    x = lab.semigroup_apply(model, 1.0, [1.0, 0.0, 0.0, 0.0])
    assert math.isclose(x[0], math.exp(-math.pi**2), rel_tol=1e-12)
    assert lab.smoothing_probe(model, 0.0, 0.5) <= 1.0


def test_noise_model():
    assert lab.admissible_beta(0.0) == 0.5
    assert lab.admissible_beta(2.0) == 1.0
    noise = lab.NoiseModel.power_decay(0.0, 256)
    v = lab.weighted_hs_norm(noise, 0.0)
    assert abs(v - 1.0 / math.sqrt(6.0)) < 3e-3
    # counter draws are pure functions of their arguments
    assert lab.normal_draw(1, 2, 3, 4) == lab.normal_draw(1, 2, 3, 4)
    a = lab.increments(noise, 7, 0, 2, 1, 1.0 / 8, 8)
    b = lab.increments(noise, 7, 0, 1, 2, 1.0 / 8, 8)
    c = lab.increments(noise, 7, 0, 1, 3, 1.0 / 8, 8)
    for x, y in zip(a, [u + v for u, v in zip(b, c)]):
        assert x == y  # refinement consistency, bit-exact


def test_fem_eigenvalues():
    ops = lab.FemOperators.assemble(3)
    mu = ops.eigenvalues()
    assert math.isclose(mu[0], ops.eigenvalue_closed_form(1), rel_tol=1e-12)
    assert math.isclose(mu[0], 10.3866, rel_tol=1e-4)


def test_weak_exact_slope_and_fit():
    model = lab.SpectralModel.dirichlet(64)
    noise = lab.NoiseModel.power_decay(0.0, 64)
    pts = []
    for e in range(5, 10):
        n = 2**e
        sm = lab.second_moment_linear(model, noise, 1.0, n, [0.0] * 64)
        pts.append((1.0 / n, abs(sm.exact - sm.discrete)))
    fit = lab.fit_rate(pts, "k")
    assert 0.35 <= fit.slope <= 0.6


def test_gronwall():
    phi = [0.0] * 17
    v = lab.gronwall_check(phi, 1.0, 0.5, 0.5, 0.5, 1.0 / 16)
    assert v.hypothesis_holds
    assert v.constant == 0.0


def test_run_experiment_roundtrip():
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "weak.csv")
        cfg = {
            "experiment": "converge-weak-exact",
            "problem": {"alpha": 0.0, "modes": 64},
            "grid": {"k": [2.0**-e for e in range(5, 9)]},
            "mc": {"seed": 3},
            "output": {"path": out},
        }
        code, message, csv_path = lab.run_experiment(json.dumps(cfg), True)
        assert code == 0, message
        body = open(csv_path).read()
        assert "converge-weak-exact:fit" in body
        assert os.path.exists(out + ".manifest.json")


def test_cli_binary():
    cli = os.environ.get("SPDELAB_CLI")
    if not cli:
        return
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "out.csv")
        run = subprocess.run(
            [cli, "converge-weak-exact", "--set", "mc.seed=1",
             "--set", f"output.path={out}"],
            capture_output=True, text=True)
        assert run.returncode == 0, run.stderr
        assert os.path.exists(out)
        # missing seed is a config error (exit 2)
        bad = subprocess.run([cli, "converge-weak-exact"],
                             capture_output=True, text=True)
        assert bad.returncode == 2
        assert "seed" in bad.stderr
        # report merges and refits
        rep = subprocess.run([cli, "report", out], capture_output=True, text=True)
        assert rep.returncode == 0
        assert "converge-weak-exact" in rep.stdout
