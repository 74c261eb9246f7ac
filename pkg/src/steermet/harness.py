"""Sweep orchestration: seeded shot sampling, the sinusoidal-fit Fisher
information estimator, analytic and circuit evaluation modes, and CSV
emission.

One sweep evaluates the branch-averaged optimal Fisher information, the
optimal variance (times four), and their positive difference over a grid of
noise visibilities for a chosen control state.  The analytic mode uses the
channel-level machinery directly; circuit modes simulate the gate model,
optionally through the device-noise pipeline, draw multinomial shot counts,
and recover the Fisher information from a sinusoid fitted to the outcome
probabilities over a theta grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .channels import (
    ControlState,
    PhaseConvention,
    canonical_dilation,
    dephased_shift,
    depolarized_shift,
)
from .circuits import (
    MeasurementRecord,
    build_dephased_circuit,
    build_depolarized_circuit,
    simulate,
)
from .devicenoise import NoisePipeline, load_params
from .metrology import branch_averaged_msi, build_table1_assemblage, msi_violation

OUTCOMES = (("+", 0), ("+", 1), ("-", 0), ("-", 1))

# Table of preparations per setting: (label, probability).
TABLE1_PREPS: dict[str, tuple[tuple[str, float], ...]] = {
    "sigma_x": (("+", 0.5), ("-", 0.5)),
    "sigma_z": (("0", 0.5), ("1", 0.5)),
}

MEASUREMENT_BASES = ("y", "z")

CSV_COLUMNS = ("mode", "noise", "control", "visibility", "p_plus",
               "f_opt_avg", "four_var_opt_avg", "violation", "stderr_f",
               "stderr_var")


def sinusoid_wavenumber(conv: PhaseConvention) -> float:
    """Oscillation rate of outcome probabilities in theta.

    The induced Bloch rotation turns at 2*eta per unit theta, so measured
    probabilities follow 0.5 + alpha sin(2 eta theta + beta).
    """
    return conv.bloch_rate


def default_theta_grid(conv: PhaseConvention, n_points: int = 21,
                       center: float = 0.0) -> np.ndarray:
    """Equally spaced points spanning one full oscillation period."""
    period = 2.0 * math.pi / sinusoid_wavenumber(conv)
    return np.linspace(center - period / 2.0, center + period / 2.0, n_points)


@dataclass(frozen=True)
class FitModel:
    """Least-squares fit of 0.5 + alpha sin(k theta + beta).

    ``beta_defined`` is False for degenerate (constant) data, where the
    phase carries no information.  Fits of exact probability curves satisfy
    |alpha| <= 0.5; sampled curves may exceed that by shot noise.
    """

    alpha: float
    beta: float
    residual: float
    beta_defined: bool = True


def fit_sinusoid(theta_points: Sequence[float], probs: Sequence[float],
                 wavenumber: float = 1.0) -> FitModel:
    """Closed-form linear least squares on sin/cos regressors.

    Solves p - 0.5 ~ a sin(k theta) + b cos(k theta) and reports
    alpha = hypot(a, b), beta = atan2(b, a).
    """
    thetas = np.asarray(theta_points, dtype=float)
    p = np.asarray(probs, dtype=float)
    if thetas.size < 5:
        raise ValueError("need at least 5 distinct theta points")
    if np.unique(thetas).size != thetas.size:
        raise ValueError("theta points must be distinct")
    design = np.column_stack([np.sin(wavenumber * thetas),
                              np.cos(wavenumber * thetas)])
    coef, *_ = np.linalg.lstsq(design, p - 0.5, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    alpha = math.hypot(a, b)
    fitted = 0.5 + design @ coef
    residual = float(np.sqrt(np.mean((fitted - p) ** 2)))
    if alpha < 1e-12:
        return FitModel(0.0, 0.0, residual, beta_defined=False)
    return FitModel(alpha, math.atan2(b, a), residual)


def fi_from_fit(fit: FitModel, theta0: float, wavenumber: float = 1.0) -> float:
    """Two-outcome Fisher information of the fitted curve at theta0.

    Equals (k alpha cos(k theta0 + beta))^2 / (p (1-p)).  A fitted
    probability at the boundary with a significant slope is reported as
    divergent (``inf``).
    """
    phase = wavenumber * theta0 + fit.beta
    p = 0.5 + fit.alpha * math.sin(phase)
    dp = fit.alpha * wavenumber * math.cos(phase)
    if p <= 1e-12 or p >= 1.0 - 1e-12:
        return math.inf if abs(dp) > 1e-8 else 0.0
    return dp * dp / (p * (1.0 - p))


def sample_counts(probs: Mapping[tuple[str, int], float] | MeasurementRecord,
                  shots: int, seed) -> dict[tuple[str, int], int]:
    """Multinomial draw over the joint outcomes, reproducible per seed.

    ``seed`` may be an int or a sequence of ints (a derived stream key).
    """
    if isinstance(probs, MeasurementRecord):
        probs = probs.probs
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.array([max(probs.get(k, 0.0), 0.0) for k in OUTCOMES])
    total = p.sum()
    if not math.isfinite(total) or abs(total - 1.0) > 1e-9:
        raise ValueError(f"invalid outcome distribution (sum {total})")
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, p / total)
    return {k: int(c) for k, c in zip(OUTCOMES, draws)}


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep invocation."""

    noise: str                      # "deph" | "depo"
    controls: tuple[str, ...]       # labels: plus | mixed | alpha=<x>
    grid: tuple[float, ...]         # visibility values
    theta: float = 0.0
    eta: float = 0.5
    shots: int = 10_000
    seed: int = 0
    rounds: int = 1
    mode: str = "analytic"          # analytic | circuit | circuit+devicenoise
    device: str | None = None       # params file path for the noisy mode
    rate_mode: str = "as-printed"
    fit_points: int = 21

    def __post_init__(self):
        if self.noise not in ("deph", "depo"):
            raise ValueError(f"noise must be 'deph' or 'depo', got {self.noise}")
        if not self.grid:
            raise ValueError("visibility grid is empty")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.mode not in ("analytic", "circuit", "circuit+devicenoise"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "circuit+devicenoise" and not self.device:
            raise ValueError("device params file required for the noisy mode")

    def convention(self) -> PhaseConvention:
        return PhaseConvention(self.eta)


def parse_control(label: str) -> ControlState:
    if label == "plus":
        return ControlState(0.5, "pure")
    if label == "mixed":
        return ControlState(0.5, "mixed")
    if label.startswith("alpha="):
        return ControlState(float(label.split("=", 1)[1]), "pure")
    raise ValueError(f"unknown control label {label!r}")


def parse_grid(spec: str) -> tuple[float, ...]:
    """Parse 'start:stop:step' into an inclusive grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {spec!r}")
    start, stop, step = (float(x) for x in parts)
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(round((stop - start) / step))
    values = [start + i * step for i in range(n + 1)]
    return tuple(v for v in values if v <= stop + 1e-12)


@dataclass(frozen=True)
class SweepRecord:
    mode: str
    noise: str
    control: str
    visibility: float
    p_plus: float
    f_opt_avg: float
    four_var_opt_avg: float
    violation: float
    stderr_f: float = 0.0
    stderr_var: float = 0.0


# -- analytic mode ------------------------------------------------------------


def analytic_point(noise: str, visibility: float, control: ControlState,
                   theta: float, conv: PhaseConvention) -> dict[str, float]:
    shift = dephased_shift if noise == "deph" else depolarized_shift
    dil = canonical_dilation(shift(visibility, 0.0, conv))
    report = branch_averaged_msi(build_table1_assemblage(), dil, control,
                                 theta, conv)
    p_plus = report.branches[+1].probability if +1 in report.branches else 0.0
    return {
        "p_plus": p_plus,
        "f_opt_avg": report.f_opt,
        "four_var_opt_avg": report.four_var_opt,
        "violation": report.violation,
    }


# -- circuit modes ------------------------------------------------------------


def _control_runs(control: ControlState) -> tuple[tuple[float, float], ...]:
    """(weight, control_alpha) pairs of circuit executions realising the
    control preparation; a mixed control averages two basis preparations."""
    if control.kind == "pure":
        return ((1.0, control.alpha),)
    return tuple(p for p in ((control.alpha, 1.0), (1.0 - control.alpha, 0.0))
                 if p[0] > 0.0)


def circuit_point_tables(noise: str, visibility: float,
                         control: ControlState, conv: PhaseConvention,
                         thetas: Sequence[float],
                         pipeline: NoisePipeline | None = None,
                         ) -> dict[tuple[str, str, int], dict]:
    """Exact outcome tables per (preparation label, basis, theta index)."""
    builder = (build_dephased_circuit if noise == "deph"
               else build_depolarized_circuit)
    tables: dict[tuple[str, str, int], dict] = {}
    preps = [lab for preps in TABLE1_PREPS.values() for lab, _ in preps]
    for prep in preps:
        for basis in MEASUREMENT_BASES:
            for i, th in enumerate(thetas):
                mix: dict[tuple[str, int], float] = {k: 0.0 for k in OUTCOMES}
                for weight, alpha in _control_runs(control):
                    circ = builder(visibility, float(th), prep, conv,
                                   measure_basis=basis, control_alpha=alpha)
                    rec = simulate(circ, noise=pipeline)
                    for k in OUTCOMES:
                        mix[k] += weight * rec.probs[k]
                tables[(prep, basis, i)] = mix
    return tables


def estimate_from_tables(tables: Mapping[tuple[str, str, int], Mapping],
                         thetas: Sequence[float], theta0: float,
                         conv: PhaseConvention) -> dict[str, float]:
    """Branch-averaged estimates from (possibly empirical) outcome tables."""
    k = sinusoid_wavenumber(conv)
    i0 = int(np.argmin(np.abs(np.asarray(thetas) - theta0)))
    preps = [lab for preps in TABLE1_PREPS.values() for lab, _ in preps]
    # Control-branch weight per preparation, averaged over bases and thetas
    # (it is exactly theta- and basis-independent).
    p_branch_given_prep: dict[tuple[str, str], float] = {}
    for prep in preps:
        acc = {"+": 0.0, "-": 0.0}
        n = 0
        for basis in MEASUREMENT_BASES:
            for i in range(len(thetas)):
                t = tables[(prep, basis, i)]
                for c in ("+", "-"):
                    acc[c] += t[(c, 0)] + t[(c, 1)]
                n += 1
        for c in ("+", "-"):
            p_branch_given_prep[(prep, c)] = acc[c] / n

    def conditional_curve(prep: str, basis: str, c: str) -> np.ndarray:
        out = np.empty(len(thetas))
        for i in range(len(thetas)):
            t = tables[(prep, basis, i)]
            pc = t[(c, 0)] + t[(c, 1)]
            out[i] = t[(c, 0)] / pc if pc > 0 else 0.5
        return out

    fi: dict[tuple[str, str], float] = {}
    var: dict[tuple[str, str], float] = {}
    for prep in preps:
        for c in ("+", "-"):
            best = 0.0
            for basis in MEASUREMENT_BASES:
                fit = fit_sinusoid(thetas, conditional_curve(prep, basis, c), k)
                best = max(best, fi_from_fit(fit, theta0, k))
            fi[(prep, c)] = best
            t0 = tables[(prep, "z", i0)]
            pc = t0[(c, 0)] + t0[(c, 1)]
            mean_z = (t0[(c, 0)] - t0[(c, 1)]) / pc if pc > 0 else 0.0
            var[(prep, c)] = conv.eta ** 2 * (1.0 - mean_z ** 2)

    f_avg = 0.0
    var_avg = 0.0
    p_plus = 0.0
    for c in ("+", "-"):
        # Joint weights p(a|A) * P(c|prep); normalised per setting.
        p_c_setting = {}
        f_best = -math.inf
        v_best = math.inf
        for setting, preps_w in TABLE1_PREPS.items():
            p_c = sum(w * p_branch_given_prep[(prep, c)]
                      for prep, w in preps_w)
            p_c_setting[setting] = p_c
            if p_c < 1e-14:
                continue
            f_val = sum(w * p_branch_given_prep[(prep, c)] / p_c
                        * fi[(prep, c)] for prep, w in preps_w)
            v_val = sum(w * p_branch_given_prep[(prep, c)] / p_c
                        * var[(prep, c)] for prep, w in preps_w)
            f_best = max(f_best, f_val)
            v_best = min(v_best, v_val)
        p_c_mean = float(np.mean(list(p_c_setting.values())))
        if p_c_mean < 1e-14:
            continue
        f_avg += p_c_mean * f_best
        var_avg += p_c_mean * v_best
        if c == "+":
            p_plus = p_c_mean
    four_var = 4.0 * var_avg
    return {
        "p_plus": p_plus,
        "f_opt_avg": f_avg,
        "four_var_opt_avg": four_var,
        "violation": msi_violation(max(f_avg, 0.0), max(four_var, 0.0)),
    }


def sampled_tables(exact: Mapping[tuple[str, str, int], Mapping], shots: int,
                   seed_parts: Sequence[int]) -> dict:
    """Empirical outcome tables from seeded multinomial draws."""
    preps = [lab for preps in TABLE1_PREPS.values() for lab, _ in preps]
    out = {}
    for p_idx, prep in enumerate(preps):
        for b_idx, basis in enumerate(MEASUREMENT_BASES):
            i = 0
            while (prep, basis, i) in exact:
                key = (prep, basis, i)
                counts = sample_counts(exact[key], shots,
                                       list(seed_parts) + [p_idx, b_idx, i])
                out[key] = {k: c / shots for k, c in counts.items()}
                i += 1
    return out


def circuit_point(noise: str, visibility: float, control: ControlState,
                  theta0: float, conv: PhaseConvention,
                  thetas: Sequence[float] | None = None,
                  pipeline: NoisePipeline | None = None,
                  shots: int | None = None, rounds: int = 1,
                  seed_parts: Sequence[int] = (0,),
                  ) -> tuple[dict[str, float], dict[str, float]]:
    """Evaluate one grid point in circuit mode.

    Returns (means, stderrs) over rounds.  ``shots=None`` evaluates the
    exact probability tables deterministically in a single round.
    """
    if thetas is None:
        thetas = default_theta_grid(conv, center=theta0)
    exact = circuit_point_tables(noise, visibility, control, conv, thetas,
                                 pipeline)
    if shots is None:
        est = estimate_from_tables(exact, thetas, theta0, conv)
        return est, {k: 0.0 for k in est}
    per_round = []
    for r in range(rounds):
        emp = sampled_tables(exact, shots, list(seed_parts) + [r])
        per_round.append(estimate_from_tables(emp, thetas, theta0, conv))
    keys = per_round[0].keys()
    means = {k: float(np.mean([pr[k] for pr in per_round])) for k in keys}
    if rounds > 1:
        errs = {k: float(np.std([pr[k] for pr in per_round], ddof=1)
                         / math.sqrt(rounds)) for k in keys}
    else:
        errs = {k: 0.0 for k in keys}
    return means, errs


# -- sweep driver --------------------------------------------------------------


@dataclass
class SweepFailure:
    control: str
    visibility: float
    error: str


def run_sweep(cfg: SweepConfig) -> tuple[list[SweepRecord], list[SweepFailure]]:
    """Evaluate every grid point for every requested control.

    Failing points are reported in the second return value; the remaining
    points are still computed.
    """
    conv = cfg.convention()
    records: list[SweepRecord] = []
    failures: list[SweepFailure] = []
    pipeline = None
    if cfg.mode == "circuit+devicenoise":
        params = load_params(cfg.device)
        pipeline = NoisePipeline(params, cfg.rate_mode)
    thetas = default_theta_grid(conv, n_points=cfg.fit_points,
                                center=cfg.theta)
    for label in cfg.controls:
        control = parse_control(label)
        for point_idx, vis in enumerate(cfg.grid):
            try:
                if cfg.mode == "analytic":
                    est = analytic_point(cfg.noise, vis, control, cfg.theta,
                                         conv)
                    errs = {k: 0.0 for k in est}
                else:
                    est, errs = circuit_point(
                        cfg.noise, vis, control, cfg.theta, conv, thetas,
                        pipeline, shots=cfg.shots, rounds=cfg.rounds,
                        seed_parts=[cfg.seed, point_idx])
            except Exception as exc:  # noqa: BLE001 - per-point isolation
                failures.append(SweepFailure(label, vis, f"{type(exc).__name__}: {exc}"))
                continue
            records.append(SweepRecord(
                mode=cfg.mode, noise=cfg.noise, control=label,
                visibility=vis, p_plus=est["p_plus"],
                f_opt_avg=est["f_opt_avg"],
                four_var_opt_avg=est["four_var_opt_avg"],
                violation=est["violation"],
                stderr_f=errs["f_opt_avg"], stderr_var=errs["four_var_opt_avg"]))
    return records, failures


# -- CSV -----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(records: Sequence[SweepRecord]) -> str:
    """Stable-order CSV with full float precision; bit-exact round trip."""
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join([
            r.mode, r.noise, r.control, _fmt(r.visibility), _fmt(r.p_plus),
            _fmt(r.f_opt_avg), _fmt(r.four_var_opt_avg), _fmt(r.violation),
            _fmt(r.stderr_f), _fmt(r.stderr_var)]))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[SweepRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header: {header}")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        out.append(SweepRecord(
            mode=cells[0], noise=cells[1], control=cells[2],
            visibility=float(cells[3]), p_plus=float(cells[4]),
            f_opt_avg=float(cells[5]), four_var_opt_avg=float(cells[6]),
            violation=float(cells[7]), stderr_f=float(cells[8]),
            stderr_var=float(cells[9])))
    return out


# -- config files --------------------------------------------------------------


def load_config(path: str | Path) -> dict[str, str]:
    """Plain key = value file with '#' comments; keys mirror the CLI flags."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
