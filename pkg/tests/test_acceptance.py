"""Acceptance suite: one test per release criterion, each printing a
pass/fail line and asserting at the stated tolerance."""

import math
import time

import numpy as np
from scipy.optimize import brentq

from steermet.channels import (
    ControlState,
    PhaseConvention,
    canonical_dilation,
    dephased_shift,
    depolarized_shift,
    effective_dephasing_visibility,
    superposed_apply,
    conditioned_branch,
    ZeroProbabilityBranchError,
)
from steermet.circuits import (
    branch_states,
    build_dephased_circuit,
    build_depolarized_circuit,
    global_purity,
)
from steermet.devicenoise import (
    NoisePipeline,
    accumulate_gate_error,
    bundled_params,
    total_gate_time,
)
from steermet.harness import (
    SweepConfig,
    analytic_point,
    circuit_point,
    emit_csv,
    run_sweep,
)
from steermet.metrology import (
    PhaseFamily,
    branch_averaged_msi,
    build_table1_assemblage,
    classical_fi,
    measurement_curve,
    qfi,
)
from steermet.qmath import (
    DensityMatrix,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    trace_distance,
)

CONV = PhaseConvention(0.5)
PREPS = {"+": KET_PLUS, "-": KET_MINUS, "0": KET_0, "1": KET_1}


def report(name, ok, detail):
    line = f"{name}: {'PASS' if ok else 'FAIL'}  ({detail})"
    print(line)
    assert ok, line


def analytic_violation(noise, vis, kind):
    return analytic_point(noise, vis, ControlState(0.5, kind), 0.0,
                          CONV)["violation"]


def test_criterion_01_dephased_headline_value():
    t0 = time.monotonic()
    cfg = SweepConfig(noise="deph", controls=("plus",), grid=(1.0,),
                      mode="analytic", eta=0.5)
    records, failures = run_sweep(cfg)
    elapsed = time.monotonic() - t0
    value = records[0].violation
    ok = not failures and abs(value - 1 / 3) <= 0.005 and elapsed < 1.0
    report("criterion 1 (full-dephasing average violation = 1/3)", ok,
           f"value={value:.6f}, elapsed={elapsed:.2f}s")


def test_criterion_02_depolarized_vanishing_thresholds():
    t0 = time.monotonic()

    def gap(v, kind):
        est = analytic_point("depo", v, ControlState(0.5, kind), 0.0, CONV)
        return est["f_opt_avg"] - est["four_var_opt_avg"]

    thr_mixed = brentq(lambda v: gap(v, "mixed"), 0.1, 0.4, xtol=1e-10)
    thr_pure = brentq(lambda v: gap(v, "pure"), 0.3, 0.5, xtol=1e-10)
    elapsed = time.monotonic() - t0
    exact_mixed = 1 - 1 / math.sqrt(2)
    ok = (abs(thr_mixed - exact_mixed) <= 1e-6
          and abs(thr_pure - 0.414) <= 0.01
          and abs(round(thr_mixed, 2) - 0.29) <= 0.01
          and abs(round(thr_pure, 2) - 0.42) <= 0.01 + 1e-12
          and elapsed < 1.0)
    report("criterion 2 (sudden-vanishing thresholds 0.29 / 0.42)", ok,
           f"mixed={thr_mixed:.4f}, pure={thr_pure:.4f}, "
           f"elapsed={elapsed:.2f}s")


def test_criterion_03_effective_visibility_law():
    rng = np.random.default_rng(33)
    worst = 0.0
    states = [DensityMatrix.from_pure(v) for v in PREPS.values()]
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = a @ a.conj().T
    states.append(DensityMatrix(m / np.trace(m)))
    for w in np.linspace(0.0, 1.0, 11):
        dil = canonical_dilation(dephased_shift(float(w), 0.0, CONV))
        wp = effective_dephasing_visibility(float(w))
        for rho in states:
            cb = superposed_apply(dil, ControlState(0.5, "pure"), rho, 0.3,
                                  CONV)
            plus = conditioned_branch(cb, +1)
            oracle = dephased_shift(wp, 0.3, CONV).apply(rho.matrix)
            worst = max(worst, trace_distance(plus.state.matrix, oracle))
    ok = worst <= 1e-10
    report("criterion 3 (conditioned '+' branch = shift at w'=2w/(4-w))", ok,
           f"worst trace distance={worst:.2e}")


def test_criterion_04_circuit_channel_equivalence():
    t0 = time.monotonic()
    worst = 0.0
    worst_purity = 0.0
    grids = {
        "deph": (build_dephased_circuit, dephased_shift,
                 np.linspace(0.0, 1.0, 5)),
        "depo": (build_depolarized_circuit, depolarized_shift,
                 np.linspace(0.0, 1.0, 5)),
    }
    thetas = np.linspace(-1.2, 1.2, 5)
    for kind, (builder, shift, grid) in grids.items():
        for vis in grid:
            dil = canonical_dilation(shift(float(vis), 0.0, CONV))
            for theta in thetas:
                for prep, vec in PREPS.items():
                    circ = builder(float(vis), float(theta), prep, CONV)
                    got = branch_states(circ)
                    worst_purity = max(worst_purity,
                                       abs(global_purity(circ) - 1.0))
                    rho = DensityMatrix.from_pure(vec)
                    cb = superposed_apply(dil, ControlState(0.5, "pure"),
                                          rho, float(theta), CONV)
                    for sign in (+1, -1):
                        try:
                            br = conditioned_branch(cb, sign)
                        except ZeroProbabilityBranchError:
                            continue
                        p, st = got[sign]
                        worst = max(worst, abs(p - br.probability))
                        worst = max(worst, trace_distance(st, br.state))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-10 and worst_purity <= 1e-10 and elapsed < 30.0
    report("criterion 4 (circuit/channel equivalence on 5x5 grids)", ok,
           f"worst deviation={worst:.2e}, purity defect={worst_purity:.2e}, "
           f"elapsed={elapsed:.1f}s")


def test_criterion_05_error_bookkeeping():
    params = bundled_params()
    fig3 = build_dephased_circuit(0.5, 0.0, "+", CONV, measure_basis="y")
    appendix = build_depolarized_circuit(0.5, 0.0, "+", CONV,
                                         measure_basis="y")
    g3 = accumulate_gate_error(fig3, params)
    ga = accumulate_gate_error(appendix, params)
    t3 = total_gate_time(fig3, params)
    ta = total_gate_time(appendix, params)
    n_cnot = appendix.expanded_cnot_count()
    ok = (0.085 <= g3 <= 0.099
          and ga >= 0.943
          and 3725 * 0.95 <= t3 <= 3725 * 1.05
          and 111_945 * 0.95 <= ta <= 111_945 * 1.05
          and n_cnot == 328)
    report("criterion 5 (gate-error and gate-time bookkeeping)", ok,
           f"gamma_fig3={g3:.4f}, gamma_app={ga:.4f}, t_fig3={t3:.0f}ns, "
           f"t_app={ta:.0f}ns, cnots={n_cnot}")


def test_criterion_06_noise_simulated_crossover():
    t0 = time.monotonic()
    pipe = NoisePipeline(bundled_params(), "as-printed")

    def violation(w, kind):
        est, _ = circuit_point("deph", w, ControlState(0.5, kind), 0.0,
                               CONV, pipeline=pipe, shots=None)
        return est["violation"]

    def threshold(kind, lo, hi):
        assert violation(lo, kind) > 0 and violation(hi, kind) == 0
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            if violation(mid, kind) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    thr_mixed = threshold("mixed", 0.28, 0.60)
    thr_pure = threshold("pure", 0.55, 0.95)
    elapsed = time.monotonic() - t0
    ok = (thr_pure > thr_mixed
          and 0.30 <= thr_mixed <= 0.46
          and 0.60 <= thr_pure <= 0.78
          and elapsed < 300.0)
    report("criterion 6 (noisy crossover thresholds bracket 0.38 / 0.69)",
           ok, f"mixed={thr_mixed:.3f}, pure={thr_pure:.3f}, "
           f"elapsed={elapsed:.0f}s")


def test_criterion_07_appendix_noisy_circuit():
    t0 = time.monotonic()
    pipe = NoisePipeline(bundled_params(), "as-printed")
    worst_f = 0.0
    worst_var = 1.0
    for v in (0.25, 0.5):
        est, _ = circuit_point("depo", v, ControlState(0.5, "pure"), 0.0,
                               CONV, pipeline=pipe, shots=None)
        worst_f = max(worst_f, est["f_opt_avg"])
        worst_var = min(worst_var, est["four_var_opt_avg"])
    elapsed = time.monotonic() - t0
    ok = worst_f < 0.01 and worst_var > 0.99 and elapsed < 600.0
    report("criterion 7 (noisy six-qubit circuit: no violation survives)",
           ok, f"max F={worst_f:.5f}, min 4Var={worst_var:.5f}, "
           f"elapsed={elapsed:.0f}s")


def test_criterion_08_information_inequalities():
    t0 = time.monotonic()
    rng = np.random.default_rng(88)
    worst_excess = -math.inf
    for _ in range(1000):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m = a @ a.conj().T
        rho = DensityMatrix(m / np.trace(m))
        vis = float(rng.uniform(0, 1))
        shift = dephased_shift if rng.integers(2) else depolarized_shift
        state = DensityMatrix(shift(vis, 0.0, CONV).apply(rho.matrix))
        fam = PhaseFamily(state, CONV)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        obs = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
        probs, dprobs = measurement_curve(fam, obs)
        fi = classical_fi(probs, 0.0, dprob=dprobs)
        worst_excess = max(worst_excess, fi - qfi(fam))
    asm = build_table1_assemblage()
    ordering_ok = True
    for shift in (dephased_shift, depolarized_shift):
        for vis in np.linspace(0.0, 1.0, 21):
            dil = canonical_dilation(shift(float(vis), 0.0, CONV))
            vp = branch_averaged_msi(asm, dil, ControlState(0.5, "pure"),
                                     0.0, CONV).violation
            vm = branch_averaged_msi(asm, dil, ControlState(0.5, "mixed"),
                                     0.0, CONV).violation
            ordering_ok = ordering_ok and vp >= vm - 1e-10
    elapsed = time.monotonic() - t0
    ok = worst_excess <= 1e-8 and ordering_ok and elapsed < 60.0
    report("criterion 8 (FI <= QFI and coherent >= incoherent violation)",
           ok, f"max FI-QFI={worst_excess:.2e}, ordering={ordering_ok}, "
           f"elapsed={elapsed:.0f}s")


def test_criterion_09_statistical_reproduction():
    means, errs = circuit_point("deph", 0.0, ControlState(0.5, "pure"), 0.0,
                                CONV, shots=10_000, rounds=40,
                                seed_parts=[1234, 0])
    deviation = abs(means["f_opt_avg"] - 1.0)
    within = deviation <= 3 * errs["f_opt_avg"]
    cfg = SweepConfig(noise="deph", controls=("plus",), grid=(0.0,),
                      mode="circuit", shots=10_000, seed=1234, rounds=40)
    r1, _ = run_sweep(cfg)
    r2, _ = run_sweep(cfg)
    identical = emit_csv(r1) == emit_csv(r2)
    ok = within and identical
    report("criterion 9 (seeded sampling statistics and reproducibility)",
           ok, f"mean F={means['f_opt_avg']:.5f}, "
           f"3*stderr={3 * errs['f_opt_avg']:.5f}, "
           f"byte-identical CSV={identical}")
