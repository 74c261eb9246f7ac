import math

import numpy as np
import pytest

from steermet.channels import PhaseConvention
from steermet.circuits import (
    Circuit,
    Gate,
    build_dephased_circuit,
    build_depolarized_circuit,
    simulate,
)
from steermet.devicenoise import (
    DeviceParams,
    LindbladRates,
    NoisePipeline,
    PairCal,
    QubitCal,
    accumulate_gate_error,
    bundled_params,
    gate_error_channel,
    gate_error_rate,
    lindblad_evolve,
    load_params,
    noisy_pipeline,
    readout_error_channel,
    total_gate_time,
)
from steermet.qmath import KET_PLUS, projector

CONV = PhaseConvention(0.5)


def rk4_lindblad(rho, t_ns, rates, steps_per_ten_ns=1):
    """Independent fixed-step RK4 integration of the full master equation."""
    n = len(rates)
    dim = 2 ** n
    sm = np.array([[0, 1], [0, 0]], dtype=complex)   # |0><1|
    sp = sm.conj().T
    sz = np.diag([1, -1]).astype(complex)

    def lift(op, m):
        out = np.array([[1.0]], dtype=complex)
        for k in range(n):
            out = np.kron(out, op if k == m else np.eye(2))
        return out

    terms = []
    for m, r in enumerate(rates):
        terms.append((r.gamma_t1 * 1e-3, lift(sm, m), lift(sp, m)))
        terms.append((r.gamma_t2 * 1e-3, lift(sz, m), lift(sz, m)))

    def rhs(r_):
        out = np.zeros((dim, dim), dtype=complex)
        for g, a, adag in terms:
            out += g / 2 * (2 * a @ r_ @ adag
                            - adag @ a @ r_ - r_ @ adag @ a)
        return out

    n_steps = max(1, int(math.ceil(t_ns / 10.0)) * steps_per_ten_ns)
    h = t_ns / n_steps
    r_ = np.asarray(rho, dtype=complex).copy()
    for _ in range(n_steps):
        k1 = rhs(r_)
        k2 = rhs(r_ + h / 2 * k1)
        k3 = rhs(r_ + h / 2 * k2)
        k4 = rhs(r_ + h * k3)
        r_ = r_ + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return r_


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)


class TestParams:
    def test_bundled_values(self):
        p = bundled_params()
        assert p.qubit("B").t1_us == 118.4
        assert p.qubit("C").t2_us == 196.5
        assert p.qubit("E1").gamma_r == pytest.approx(0.001)
        assert p.qubit("E2").gamma_x == pytest.approx(3.0e-4)
        assert p.pair("B", "C").cnot_error == pytest.approx(6.8e-3)
        assert p.pair("B", "E1").cnot_time_ns == 248.9
        assert p.base_single_ns == 21.3

    def test_role_fallback(self):
        p = bundled_params()
        assert p.qubit("E1b") == p.qubit("E1")
        assert p.qubit("E2b") == p.qubit("E2")
        with pytest.raises(KeyError):
            p.qubit("Q7")

    def test_pair_fallback_is_worst_case(self):
        p = bundled_params()
        worst = p.worst_cnot()
        assert worst.cnot_error == pytest.approx(9.0e-3)
        assert worst.cnot_time_ns == 309.3
        assert p.pair("C", "E1") == worst
        assert not p.has_pair("C", "E1")

    def test_load_rejects_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_params(tmp_path / "nope.params")

    def test_validation(self):
        with pytest.raises(ValueError):
            QubitCal(t1_us=-1, t2_us=10, gamma_x=0, gamma_r=0)
        with pytest.raises(ValueError):
            PairCal(cnot_error=1.5, cnot_time_ns=100)


class TestLindbladRates:
    def test_as_printed_formula(self):
        cal = QubitCal(118.4, 194.5, 0.0, 0.0)
        r = LindbladRates.from_calibration(cal, "as-printed")
        assert r.gamma_t1 == pytest.approx(1 / 118.4)
        assert r.gamma_t2 == pytest.approx(1 / 118.4 - 1 / (2 * 194.5))

    def test_standard_formula(self):
        cal = QubitCal(118.4, 194.5, 0.0, 0.0)
        r = LindbladRates.from_calibration(cal, "standard")
        assert r.gamma_t2 == pytest.approx(1 / 194.5 - 1 / (2 * 118.4))

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            LindbladRates.from_calibration(QubitCal(1, 1, 0, 0), "other")

    def test_negative_rates_rejected(self):
        with pytest.raises(ValueError):
            LindbladRates(-0.1, 0.0)


class TestLindbladEvolve:
    def test_zero_time_identity(self):
        rng = np.random.default_rng(0)
        rho = random_density(4, rng)
        out = lindblad_evolve(rho, 0.0, [LindbladRates(0.01, 0.02)] * 2)
        np.testing.assert_allclose(out, rho, atol=1e-14)

    def test_population_decay(self):
        g1 = 0.012  # 1/us
        rho = np.diag([0.0, 1.0]).astype(complex)
        for t in (100.0, 2500.0, 40000.0):
            out = lindblad_evolve(rho, t, [LindbladRates(g1, 0.0)])
            assert out[1, 1].real == pytest.approx(
                math.exp(-g1 * t * 1e-3), abs=1e-12)

    def test_pure_dephasing_coherence(self):
        g2 = 0.004
        rho = projector(KET_PLUS)
        for t in (50.0, 3000.0):
            out = lindblad_evolve(rho, t, [LindbladRates(0.0, g2)])
            assert out[0, 1].real == pytest.approx(
                0.5 * math.exp(-2 * g2 * t * 1e-3), abs=1e-12)

    def test_semigroup_property(self):
        rng = np.random.default_rng(1)
        rates = [LindbladRates(0.008, 0.005), LindbladRates(0.012, 0.002)]
        rho = random_density(4, rng)
        a = lindblad_evolve(rho, 1500.0 + 2200.0, rates)
        b = lindblad_evolve(lindblad_evolve(rho, 1500.0, rates), 2200.0, rates)
        assert np.max(np.abs(a - b)) <= 1e-8

    def test_matches_rk4_oracle(self):
        rng = np.random.default_rng(2)
        rates = [LindbladRates(0.0085, 0.0059), LindbladRates(0.0118, 0.0025)]
        rho = random_density(4, rng)
        mine = lindblad_evolve(rho, 3725.0, rates)
        oracle = rk4_lindblad(rho, 3725.0, rates)
        assert np.max(np.abs(mine - oracle)) <= 1e-8

    def test_cptp_on_random_inputs(self):
        rng = np.random.default_rng(3)
        p = bundled_params()
        rates = [LindbladRates.from_calibration(p.qubit(r), "as-printed")
                 for r in ("C", "B", "E1", "E2")]
        for _ in range(5):
            rho = random_density(16, rng)
            out = lindblad_evolve(rho, 3725.0, rates)
            assert abs(np.trace(out) - 1) <= 1e-10
            assert np.linalg.eigvalsh(out)[0] >= -1e-9

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            lindblad_evolve(np.eye(2) / 2, -1.0, [LindbladRates(0.1, 0.1)])


class TestGateErrorChannel:
    def test_identity_at_zero(self):
        rng = np.random.default_rng(4)
        rho = random_density(4, rng)
        np.testing.assert_allclose(gate_error_channel(rho, 0.0, 2), rho)

    def test_fully_depolarizing(self):
        rng = np.random.default_rng(5)
        rho = random_density(8, rng)
        np.testing.assert_allclose(gate_error_channel(rho, 1.0, 3),
                                   np.eye(8) / 8, atol=1e-14)

    def test_purity_of_mixture(self):
        gamma = 0.092
        rho = projector(KET_PLUS)
        out = gate_error_channel(rho, gamma, 1)
        # direct mixture arithmetic for a pure input
        expected = np.trace(((1 - gamma) * rho + gamma * np.eye(2) / 2) @
                            ((1 - gamma) * rho + gamma * np.eye(2) / 2))
        assert np.real(np.trace(out @ out)) == pytest.approx(
            np.real(expected), abs=1e-14)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            gate_error_channel(np.eye(2) / 2, 1.2, 1)


class TestReadoutErrorChannel:
    def test_identity_at_zero(self):
        rng = np.random.default_rng(6)
        rho = random_density(2, rng)
        np.testing.assert_allclose(readout_error_channel(rho, 0.0), rho)

    def test_half_balances_diagonal(self):
        rho = np.diag([0.9, 0.1]).astype(complex)
        out = readout_error_channel(rho, 0.5)
        np.testing.assert_allclose(np.diag(out), [0.5, 0.5], atol=1e-14)

    def test_probability_table_flips(self):
        probs = {(0, 0): 1.0, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.0}
        out = readout_error_channel(probs, (0.1, 0.2))
        assert out[(0, 0)] == pytest.approx(0.9 * 0.8)
        assert out[(1, 0)] == pytest.approx(0.1 * 0.8)
        assert out[(0, 1)] == pytest.approx(0.9 * 0.2)
        assert out[(1, 1)] == pytest.approx(0.1 * 0.2)
        assert sum(out.values()) == pytest.approx(1.0)


class TestBookkeeping:
    def test_fig3_error_window(self):
        params = bundled_params()
        circ = build_dephased_circuit(0.5, 0.0, "+", CONV, measure_basis="y")
        gamma = accumulate_gate_error(circ, params)
        assert 0.085 <= gamma <= 0.099

    def test_fig3_error_hand_oracle(self):
        # recompute from the raw calibration numbers and the gate list
        params = bundled_params()
        circ = build_dephased_circuit(0.5, 0.0, "+", CONV, measure_basis="y")
        pair_rate = {frozenset({"B", "C"}): 6.8e-3,
                     frozenset({"B", "E1"}): 6.6e-3,
                     frozenset({"B", "E2"}): 9.0e-3}
        single_rate = {"C": 4.7e-4, "B": 1.5e-4, "E1": 1.7e-4, "E2": 3.0e-4}
        keep = 1.0
        for g in circ.gates:
            roles = [circ.roles[q] for q in g.qubits]
            if g.name == "CNOT":
                keep *= 1 - pair_rate[frozenset(roles)]
            else:
                keep *= 1 - single_rate[roles[0]]
        assert accumulate_gate_error(circ, params) == pytest.approx(1 - keep,
                                                                    abs=1e-12)

    def test_appendix_error_floor(self):
        params = bundled_params()
        circ = build_depolarized_circuit(0.5, 0.0, "+", CONV,
                                         measure_basis="y")
        assert accumulate_gate_error(circ, params) >= 0.943

    def test_empty_circuit(self):
        params = bundled_params()
        circ = Circuit(("C", "B"), ())
        assert accumulate_gate_error(circ, params) == 0.0
        assert total_gate_time(circ, params) == 0.0

    def test_permutation_invariance_and_union_bound(self):
        params = bundled_params()
        circ = build_dephased_circuit(0.4, 0.1, "+", CONV)
        reordered = Circuit(circ.roles, tuple(reversed(circ.gates)))
        a = accumulate_gate_error(circ, params)
        b = accumulate_gate_error(reordered, params)
        assert a == pytest.approx(b, abs=1e-15)
        total = sum(gate_error_rate(g, circ, params) for g in circ.gates)
        assert a <= total

    def test_missing_role_rejected(self):
        params = bundled_params()
        circ = Circuit(("C", "B", "Q9", "E2"), (Gate("X", (2,)),))
        with pytest.raises(KeyError):
            accumulate_gate_error(circ, params)

    def test_fig3_time_window(self):
        params = bundled_params()
        circ = build_dephased_circuit(0.5, 0.0, "+", CONV, measure_basis="y")
        t = total_gate_time(circ, params)
        assert 3725 * 0.95 <= t <= 3725 * 1.05

    def test_appendix_time_window(self):
        params = bundled_params()
        circ = build_depolarized_circuit(0.5, 0.0, "+", CONV,
                                         measure_basis="y")
        t = total_gate_time(circ, params)
        assert 111_945 * 0.95 <= t <= 111_945 * 1.05

    def test_single_cnot_time(self):
        params = bundled_params()
        circ = Circuit(("C", "B"), (Gate("CNOT", (1, 0)),))
        assert total_gate_time(circ, params) == pytest.approx(309.3)

    def test_duration_rules(self):
        params = bundled_params()
        circ = Circuit(("B",), (Gate("X", (0,)), Gate("H", (0,)),
                                Gate("S", (0,)), Gate("Ry", (0,), angle=0.1)))
        t = total_gate_time(circ, params)
        assert t == pytest.approx(21.3 + 5 * 21.3 + 3 * 21.3 + 21.3)


def zero_noise_params():
    qubits = {r: QubitCal(t1_us=1e15, t2_us=1e15, gamma_x=0.0, gamma_r=0.0)
              for r in ("B", "C", "E1", "E2")}
    pairs = {frozenset({"B", "C"}): PairCal(0.0, 309.3),
             frozenset({"B", "E1"}): PairCal(0.0, 248.9),
             frozenset({"B", "E2"}): PairCal(0.0, 202.7)}
    return DeviceParams(qubits, pairs, 21.3)


class TestNoisePipeline:
    def test_zero_noise_equals_noiseless(self):
        params = zero_noise_params()
        for basis in ("z", "y"):
            circ = build_dephased_circuit(0.6, 0.4, "+", CONV,
                                          measure_basis=basis)
            clean = simulate(circ)
            noisy = noisy_pipeline(circ, params)
            for key in clean.probs:
                assert noisy.probs[key] == pytest.approx(clean.probs[key],
                                                         abs=1e-12)

    def test_stages_are_cptp(self):
        rng = np.random.default_rng(7)
        params = bundled_params()
        pipe = NoisePipeline(params, "as-printed")
        circ = build_dephased_circuit(0.5, 0.0, "+", CONV)
        rho = random_density(16, rng)
        for stage in (pipe.apply_qrqd, pipe.apply_gate_error):
            out = stage(circ, rho)
            assert abs(np.trace(out) - 1) <= 1e-10
            assert np.linalg.eigvalsh(out)[0] >= -1e-9

    def test_readout_applied_to_both_measured_qubits(self):
        params = bundled_params()
        pipe = NoisePipeline(params)
        circ = build_dephased_circuit(0.0, 0.0, "0", CONV)
        probs = {(0, 0): 1.0, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.0}
        out = pipe.apply_readout_noise(circ, probs)
        g_c, g_b = 1.5e-2, 1.0e-2
        assert out[(1, 0)] == pytest.approx(g_c * (1 - g_b))
        assert out[(0, 1)] == pytest.approx((1 - g_c) * g_b)

    def test_rate_mode_changes_output(self):
        params = bundled_params()
        circ = build_dephased_circuit(0.8, 0.0, "+", CONV)
        a = noisy_pipeline(circ, params, "as-printed")
        b = noisy_pipeline(circ, params, "standard")
        diff = max(abs(a.probs[k] - b.probs[k]) for k in a.probs)
        assert diff > 1e-4
