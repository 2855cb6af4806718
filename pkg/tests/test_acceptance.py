"""Acceptance criteria, one PASS/FAIL line each.

Suites run once per module at seed 42 with 1000 samples.  Every line is
printed and repeated in the terminal summary.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ksreg import verify
from ksreg.dynamics import HamiltonianSpec
from ksreg.flow import IntegratorConfig, integrate_at, kepler_elements, propagate_regularized_kepler

SEED = 42
N = 1000


@pytest.fixture(scope="module")
def suites():
    return {name: verify.run_suite(name, SEED, N) for name in verify.SUITES}


def report(number: int, title: str, checks: list[tuple[str, bool, str]]) -> bool:
    ok = all(passed for _, passed, _ in checks)
    detail = "; ".join(f"{label} {text}" for label, _, text in checks)
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} [{detail}]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def prop(rep, name):
    p = rep.get(name)
    cmp = "<" if p.expect == "below" else ">"
    return (name, p.passed, f"{p.max_error:.2e} {cmp} {p.tol:.0e}")


def below(label, value, tol):
    return (label, bool(value < tol), f"{value:.3g} < {tol:g}")


def test_criterion_01_brackets(suites):
    rep = suites["brackets"]
    names = ["tau {t1,t2} = -2 t3", "tau {t1,t3} = -2 t2", "tau {t2,t3} = 2 t1",
             "tau commutes with rho", "tau commutes with sigma", "rho commutes with sigma",
             "rho closes with +2", "sigma closes with -2", "printed rho1, rho2 commute"]
    checks = [prop(rep, n) for n in names]
    status = [p for p in rep.properties if p.expect == "report" and p.name.startswith("printed")]
    checks.append(("printed closure status reported", len(status) > 0, f"{len(status)} items"))
    checks.append(below("runtime s", rep.runtime_s, 5.0))
    assert report(1, "bracket algebra closure at 1000 points", checks)


def test_criterion_02_casimir(suites):
    rep = suites["brackets"]
    checks = [prop(rep, "casimir rho = 4M^2"), prop(rep, "casimir sigma = 4M^2")]
    assert report(2, "Casimir and centralizer identity", checks)


def test_criterion_03_hopf_and_fibers(suites):
    rep = suites["fibers"]
    checks = [prop(rep, "Hopf norm |KS(q)| = |q|^2"), prop(rep, "KS o chi0(a) = KS")]
    assert report(3, "Hopf norm and fiber collapse", checks)


def test_criterion_04_momentum_map(suites):
    rep = suites["fibers"]
    checks = [prop(rep, "flow of xi0 for time a = chi0(-a)")]
    assert report(4, "chi0 is the flow of Xi0 at alpha in {0.1, 1, pi}", checks)


def test_criterion_05_reduction(suites):
    rep = suites["reduction"]
    names = ["{x_i, y_j} = delta_ij on Xi0 = 0", "{x_i, x_j} = 0 on Xi0 = 0", "{y_i, y_j} = 0 on Xi0 = 0",
             "canonical brackets violated off Xi0 = 0"]
    checks = [prop(rep, n) for n in names]
    checks.append(("points", rep.n == 500, str(rep.n)))
    assert report(5, "KS is a Poisson map on Xi0 = 0", checks)


def test_criterion_06_chart_canonicity(suites):
    rep = suites["charts"]
    names = ["Euler symplectic J^T Omega J = Omega", "Andoyer calibrated symplectic", "Euler round trip"]
    assert report(6, "Euler and calibrated Andoyer charts are canonical", [prop(rep, n) for n in names])


def test_criterion_07_hamiltonian_identities(suites):
    rep = suites["identities"]
    names = ["oscillator pullback to Euler chart", "Andoyer energy identity, omega = 0", "Andoyer energy identity with omega/8 offset",
             "regularized = spherical Kepler on Psi = 0"]
    assert report(7, "Hamiltonian pullback, Andoyer energy and decomposition identities", [prop(rep, n) for n in names])


def test_criterion_08_diagram(suites):
    rep = suites["diagram"]
    assert report(8, "diagram commutes on Xi0 = 0", [prop(rep, "KS = Gamma o pi o PE^-1 on Xi0 = 0")])


def test_criterion_09_flow_equivalence():
    t0 = time.perf_counter()
    x0, y0 = verify.ECC_ORBIT
    el = kepler_elements(x0, y0, 1.0)
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    reg = propagate_regularized_kepler(x0, y0, 1.0, cfg)
    direct = integrate_at(HamiltonianSpec("kepler3"), np.r_[x0, y0], reg.t, cfg)
    elapsed = time.perf_counter() - t0
    checks = [
        below("eccentricity error", abs(el["e"] - 0.9), 1e-12),
        below("position error", float(np.max(np.abs(reg.states[:, :3] - direct[:, :3]))), 1e-6),
        below("energy drift", float(np.max(reg.drift)), 1e-9),
        below("period rel error", abs(reg.t[-1] - el["period"]) / el["period"], 1e-6),
        below("runtime s", elapsed, 10.0),
    ]
    assert report(9, "oscillator flow mapped by KS equals Kepler flow, e = 0.9", checks)


def test_criterion_10_regularization_payoff():
    t0 = time.perf_counter()
    props = {p.name: p for p in verify.near_rectilinear_properties(1.0)}
    elapsed = time.perf_counter() - t0
    tol = verify.NEAR_RECTILINEAR_TOL
    cmd = [sys.executable, "-m", "ksreg", "propagate", "--system", "kepler3", "--ic", "1,0,0,0,0.001,0",
           "--mu", "1", "--rel-tol", repr(tol), "--abs-tol", repr(tol * 1e-2), "--out", os.devnull]
    code = subprocess.run(cmd, capture_output=True, text=True).returncode
    collapse = props["|L|=1e-3 direct propagation step-collapses"]
    checks = [
        prop_from(props["|L|=1e-3 regularized energy drift, step samples"]),
        prop_from(props["|L|=1e-3 regularized energy drift, dense samples"]),
        prop_from(props["|L|=1e-3 half-period sample is the pericenter"]),
        ("direct step collapse", collapse.passed,
         f"min step {collapse.detail.get('min_step', float('nan')):.2e} vs threshold "
         f"{collapse.detail['collapse_threshold']:.2e}"),
        ("direct CLI exit code 4", code == 4, str(code)),
        below("runtime s", elapsed, 10.0),
    ]
    assert report(10, "regularized pericenter passage where direct propagation collapses, |L| = 1e-3", checks)


def prop_from(p):
    return (p.name, p.passed, f"{p.max_error:.2e} < {p.tol:.0e}")


def test_criterion_11_separability(suites):
    rep = suites["flow"]
    names = ["split K_rho/K_theta = coupled flow", "K_theta flow conserves Phi, Psi", "K_theta flow conserves K_theta"]
    assert report(11, "split rho/theta flows reproduce the coupled flow", [prop(rep, n) for n in names])


def test_criterion_12_levi_civita(suites):
    rep = suites["lc"]
    names = ["LC Jacobian symplectic, all variants", "scaled oscillator constant along Kepler orbit"]
    checks = [prop(rep, n) for n in names]
    value = rep.get("scaled oscillator constant along Kepler orbit").detail
    checks.append(("recorded constant", True, f"{value['value']!r} (mu/h = {value['mu_over_h']!r})"))
    assert report(12, "Levi-Civita map is symplectic and conjugates the planar flows", checks)


def test_criterion_13_full_verify_runtime(tmp_path):
    cmd = [sys.executable, "-m", "ksreg", "verify", "--suite", "all", "--samples", str(N), "--seed", str(SEED),
           "--out", str(tmp_path)]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    written = sorted(p.stem for p in tmp_path.glob("*.json"))
    checks = [
        ("all reports written", written == sorted(verify.SUITES), ",".join(written)),
        ("completed (exit 0 or 1)", proc.returncode in (0, 1), f"exit {proc.returncode}"),
        below("runtime s", elapsed, 60.0),
    ]
    assert report(13, "verify --suite all completes", checks)
