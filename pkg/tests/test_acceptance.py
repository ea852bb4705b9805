"""End-to-end acceptance checks, one per criterion, each with its runtime budget.

Every test prints a single ``[criterion N] PASS|FAIL ...`` line straight to the
terminal (capture is bypassed) and then asserts the same condition.
"""

import contextlib
import io
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from flmult.bilinear import (
    EnsembleConfig,
    KernelParams,
    OmegaParams,
    decomposition_terms,
    duality_sides,
    envelope_study,
    estimate_ratio_sup,
)
from flmult.cli import DEFAULT_ENVELOPE_PRESETS, VERIFY_PRESETS, ensemble_from, main
from flmult.exponents import (
    ExponentTriple,
    cond_base,
    cond_dprime,
    cond_dprime_dualized,
    cond_h,
    cond_prime,
    r_functional,
    triple_lattice,
)
from flmult.grid import Grid, GridFunction, pointwise_product, sample
from flmult.microlocal import cone_mesh, inclusion_check, wavefront_presets
from flmult.norms import JointFunction, stft, stft_product_rhs

LATTICE = list(triple_lattice(Fraction(1, 20)))


@pytest.fixture
def report(capsys):
    def emit(number, ok, elapsed, budget, detail=""):
        status = "PASS" if ok and elapsed < budget else "FAIL"
        line = f"[criterion {number}] {status} ({elapsed:.2f}s / {budget:g}s) {detail}".rstrip()
        with capsys.disabled():
            print("\n" + line)
        return status == "PASS"

    return emit


def test_criterion_01_lattice_equivalence(report):
    t = time.perf_counter()
    mismatches = sum(cond_base(q) != cond_prime(q) for q in LATTICE)
    elapsed = time.perf_counter() - t
    assert report(1, mismatches == 0, elapsed, 1.0, f"points={len(LATTICE)} mismatches={mismatches}")


def test_criterion_02_condition_cover(report):
    t = time.perf_counter()
    mismatches = 0
    for q in LATTICE:
        rhs = r_functional(q) >= 0 and (
            cond_dprime(q) or cond_dprime_dualized(q, 1) or cond_dprime_dualized(q, 2)
        )
        mismatches += cond_h(q) != rhs
    elapsed = time.perf_counter() - t
    assert report(2, mismatches == 0, elapsed, 1.0, f"points={len(LATTICE)} mismatches={mismatches}")


def test_criterion_03_decomposition(report):
    t = time.perf_counter()
    grid = Grid(1, 256, 0.5)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for s in [(0, 0, 0), (1, "1/2", "-1/4"), ("-1/2", 1, 1)]:
        v1 = GridFunction(grid, rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n))
        v2 = GridFunction(grid, rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n))
        lhs, terms = decomposition_terms(v1, v2, KernelParams(*s), OmegaParams(modified_omega2=True))
        err = np.linalg.norm(sum(x.values for x in terms) - lhs.values) / np.linalg.norm(lhs.values)
        worst = max(worst, float(err))
    elapsed = time.perf_counter() - t
    assert report(3, worst < 1e-10, elapsed, 5.0, f"max_rel_err={worst:.2e}")


def test_criterion_04_envelopes(report):
    t = time.perf_counter()
    op = OmegaParams()
    studies = []
    for pre in DEFAULT_ENVELOPE_PRESETS:
        kp = KernelParams(*pre["s"])
        studies.append(envelope_study(pre["j"], kp, op, pre["p"]))
    elapsed = time.perf_counter() - t
    slope_err = max(abs(s.fitted_slope - s.predicted_slope) for s in studies)
    drift = max(s.constant_drift for s in studies)
    regions = {s.j for s in studies}
    has_log = any(s.case == "log" for s in studies)
    ok = (
        len(studies) >= 6
        and {1, 2, 3, 4} <= regions
        and has_log
        and slope_err < 0.1
        and drift < 0.1
        and all(math.isfinite(s.constant) for s in studies)
    )
    detail = f"presets={len(studies)} max_slope_err={slope_err:.3f} max_drift={drift:.3f}"
    assert report(4, ok, elapsed, 60.0, detail)


YOUNG_TRIPLES = [(2, 1, 2), (1, 1, "inf"), ("4/3", "4/3", 2), ("3/2", "3/2", "3/2"), (1, 2, 2)]


def test_criterion_05_young(report):
    t = time.perf_counter()
    cfg = EnsembleConfig(seed=7, family="bandlimited", count=100, d=1, n=256, h=0.125, dyadic_levels=(0,))
    worst = 0.0
    for q in YOUNG_TRIPLES:
        triple = ExponentTriple.of(*q)
        assert r_functional(triple) == 0
        rep = estimate_ratio_sup("convolution", triple, (0, 0, 0), 1, cfg)
        assert len(rep.rows) == 100
        worst = max(worst, max(rep.maxima))
    elapsed = time.perf_counter() - t
    assert report(5, worst <= 1 + 1e-6, elapsed, 30.0, f"triples=5 members=100 max_ratio={worst:.4f}")


def test_criterion_06_hormander(report):
    t = time.perf_counter()
    q = ExponentTriple.of(2, 2, 2)
    stabilities = []
    for s in ("3/10", "1/2", "3/4"):  # 2s - 1/2 in {0.1, 0.5, 1}
        cfg = EnsembleConfig(seed=11, family="bandlimited", count=20, d=1, n=128, h=0.25, dyadic_levels=(0, 1, 2))
        rep = estimate_ratio_sup("fl-product", q, (0, s, s), 1, cfg)
        stabilities.append(rep.stability)
    refinement_ok = max(stabilities) < 1.1

    pre = VERIFY_PRESETS["strictness"]
    ens = ensemble_from(pre, None)
    rep = estimate_ratio_sup(pre["mode"], q, pre["s"], 1, ens)
    m = rep.maxima
    growth_ok = len(m) >= 4 and all(b > a for a, b in zip(m, m[1:])) and m[-1] / m[0] >= 2
    elapsed = time.perf_counter() - t
    detail = (
        f"refinement max/min={max(stabilities):.4f} ({'ok' if refinement_ok else 'bad'}); "
        f"s=(0,1/4,1/4) truncations={[round(x, 4) for x in m]} last/first={m[-1] / m[0]:.3f} "
        f"({'ok' if growth_ok else 'no divergence'})"
    )
    assert report(6, refinement_ok and growth_ok, elapsed, 120.0, detail)


def test_criterion_07_stft(report):
    t = time.perf_counter()
    grid = Grid(1, 128, math.sqrt(2 * math.pi / 128))

    def gauss(c, w, k=0.0):
        return sample(lambda x: np.exp(-((x - c) ** 2) / (2 * w * w) + 1j * k * x), grid)

    f1, f2 = gauss(0.5, 0.9, 1.0), gauss(-0.3, 1.2, -0.5)
    p1, p2 = gauss(0.0, 1.0), gauss(0.0, 1.5)
    lhs = stft(pointwise_product(f1, f2), pointwise_product(p1, p2)).values
    rhs = stft_product_rhs(f1, p1, f2, p2).values
    product_err = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))
    V = stft(f1, p2)
    moyal = math.sqrt(V.first.cell * V.second.cell * np.sum(np.abs(V.values) ** 2))
    moyal_err = abs(moyal - f1.l2() * p2.l2()) / (f1.l2() * p2.l2())
    elapsed = time.perf_counter() - t
    ok = product_err < 1e-6 and moyal_err < 1e-6
    assert report(7, ok, elapsed, 10.0, f"product_err={product_err:.2e} moyal_err={moyal_err:.2e}")


def _brute_sides(F, f, g, h):
    """Both sides of the duality identity by explicit double loops."""
    n, w = f.grid.n, f.grid.h
    mid = n // 2
    left = 0j
    right = 0j
    gr = g.reflect().values
    for i in range(n):
        tf = sum(F[i, j] * f.values[j] * g.values[(i - j + mid) % n] for j in range(n)) * w
        left += tf * h.values[i] * w
    for j in range(n):
        tt = sum(F[i, j] * h.values[i] * gr[(j - i + mid) % n] for i in range(n)) * w
        right += tt * f.values[j] * w
    return left, right


def test_criterion_08_duality(report):
    t = time.perf_counter()
    grid = Grid(1, 32, 0.4)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(5):
        M = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
        f, g, h = (GridFunction(grid, rng.normal(size=32) + 1j * rng.normal(size=32)) for _ in range(3))
        lhs, rhs = duality_sides(JointFunction(grid, grid, M), f, g, h)
        b_lhs, b_rhs = _brute_sides(M, f, g, h)
        scale = abs(b_lhs)
        worst = max(worst, abs(lhs - rhs) / scale, abs(lhs - b_lhs) / scale, abs(rhs - b_rhs) / scale)
    elapsed = time.perf_counter() - t
    assert report(8, worst < 1e-10, elapsed, 5.0, f"instances=5 max_rel_err={worst:.2e}")


def test_criterion_09_wavefront(report):
    t = time.perf_counter()
    summary = []
    ok = True
    for d, cones in ((1, 2), (2, 16)):
        mesh = cone_mesh(d, 16)
        assert len(mesh) == cones
        for pre in wavefront_presets(d):
            rep = inclusion_check(pre.f1, pre.f2, pre.q, pre.s, mesh, kmax=pre.kmax)
            ok = ok and rep.contained and not rep.failures
            summary.append(f"d{d}/{pre.name}={'ok' if rep.contained and not rep.failures else 'violated'}")
    elapsed = time.perf_counter() - t
    assert report(9, ok, elapsed, 120.0, " ".join(summary))


def _run_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue().encode()


def test_criterion_10_determinism(report, tmp_path):
    t = time.perf_counter()
    outputs = []
    for k in range(2):
        sweep_file = tmp_path / f"sweep{k}.csv"
        rows_file = tmp_path / f"rows{k}.csv"
        c1, _ = _run_cli(["sweep", "--preset", "default", "--out", str(sweep_file)])
        c2, summary = _run_cli(["verify", "--preset", "young", "--out", str(rows_file)])
        assert c1 == 0 and c2 == 0
        outputs.append((sweep_file.read_bytes(), summary, rows_file.read_bytes()))
    elapsed = time.perf_counter() - t
    same = outputs[0] == outputs[1]
    assert report(10, same, elapsed, 10.0, f"byte_identical={same} sweep_bytes={len(outputs[0][0])}")
