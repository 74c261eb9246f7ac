"""Steering assemblages, quantum and classical Fisher information, variances,
and violations of the metrological steering inequality, including averaging
over control-measurement branches.

The inequality compares the optimal quantum Fisher information for phase
estimation against four times the optimal variance of the generating
Hamiltonian; any positive excess certifies steering of the assemblage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .channels import (
    BranchResult,
    ControlState,
    DilationModel,
    KrausChannel,
    PhaseConvention,
    ZeroProbabilityBranchError,
    conditioned_branch,
    superposed_apply,
)
from .qmath import (
    DensityMatrix,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    SUPPORT_CUTOFF,
    dagger,
    eig_hermitian,
    require_hermitian,
)

# Tolerances for assemblage bookkeeping.
PROBABILITY_TOL = 1e-12
MARGINAL_TOL = 1e-10
# Outcome probabilities below this with a significant derivative make the
# Fisher information diverge.
FI_PROBABILITY_FLOOR = 1e-12
FI_DERIVATIVE_FLOOR = 1e-8


@dataclass(frozen=True)
class AssemblageMember:
    probability: float
    state: DensityMatrix


@dataclass(frozen=True)
class Assemblage:
    """Outcome probabilities and conditional states per measurement setting.

    Probabilities must sum to one within each setting and the weighted
    marginal state must agree across settings (no signaling).
    """

    settings: Mapping[str, tuple[AssemblageMember, ...]]

    def __post_init__(self):
        object.__setattr__(self, "settings",
                           {k: tuple(v) for k, v in self.settings.items()})
        if not self.settings:
            raise ValueError("assemblage has no settings")
        marginals = {}
        for name, members in self.settings.items():
            total = sum(m.probability for m in members)
            if abs(total - 1.0) > PROBABILITY_TOL:
                raise ValueError(f"probabilities for setting {name} sum to "
                                 f"{total}, not 1")
            marginals[name] = sum(m.probability * m.state.matrix
                                  for m in members)
        ref = next(iter(marginals.values()))
        for name, marg in marginals.items():
            if np.max(np.abs(marg - ref)) > MARGINAL_TOL:
                raise ValueError("assemblage signals: marginals differ "
                                 f"between settings (checked {name})")

    def marginal(self) -> DensityMatrix:
        name = next(iter(self.settings))
        return DensityMatrix(sum(m.probability * m.state.matrix
                                 for m in self.settings[name]))


def build_table1_assemblage() -> Assemblage:
    """The two-setting qubit assemblage used throughout: x-basis and z-basis
    eigenstates, each pair with probability one half."""
    return Assemblage({
        "sigma_x": (
            AssemblageMember(0.5, DensityMatrix.from_pure(KET_PLUS)),
            AssemblageMember(0.5, DensityMatrix.from_pure(KET_MINUS)),
        ),
        "sigma_z": (
            AssemblageMember(0.5, DensityMatrix.from_pure(KET_0)),
            AssemblageMember(0.5, DensityMatrix.from_pure(KET_1)),
        ),
    })


@dataclass(frozen=True)
class PhaseFamily:
    """Covariant phase family theta -> V(theta - theta_ref) rho V^dag.

    Every family in this package is of this form because the noise channels
    commute with the phase rotation, so the derivative is the exact
    commutator -i * eta * [sigma_z, rho(theta)].
    """

    base: DensityMatrix
    conv: PhaseConvention = PhaseConvention()
    theta_ref: float = 0.0

    def state_at(self, theta: float) -> DensityMatrix:
        u = self.conv.unitary(theta - self.theta_ref)
        return DensityMatrix(u @ self.base.matrix @ dagger(u))

    def derivative_at(self, theta: float) -> np.ndarray:
        rho = self.state_at(theta).matrix
        h = self.conv.hamiltonian()
        return -1j * (h @ rho - rho @ h)


def unitary_family(conv: PhaseConvention = PhaseConvention()
                   ) -> Callable[[DensityMatrix], PhaseFamily]:
    """Channel map for the noiseless case: each state rotates unchanged."""
    return lambda rho: PhaseFamily(rho, conv)


def channel_family(ch: KrausChannel,
                   conv: PhaseConvention = PhaseConvention()
                   ) -> Callable[[DensityMatrix], PhaseFamily]:
    """Channel map sending a state to the family of its noisy phase shifts.

    ``ch`` must be the channel at theta = 0; covariance then produces the
    correct family at every theta.
    """
    return lambda rho: PhaseFamily(ch.apply_density(rho), conv)


def sld(rho: DensityMatrix, drho: np.ndarray) -> np.ndarray:
    """Symmetric logarithmic derivative L solving drho = (L rho + rho L)/2.

    Built in the eigenbasis of rho; eigenvalue pairs with lambda_i+lambda_j
    below the support cutoff are excluded (pure states make them singular).
    """
    drho = require_hermitian(drho, tol=1e-10, what="state derivative")
    if abs(np.trace(drho)) > 1e-10:
        raise ValueError("state derivative must be traceless")
    vals, vecs = eig_hermitian(rho.matrix)
    d_in_basis = dagger(vecs) @ drho @ vecs
    l_in_basis = np.zeros_like(d_in_basis)
    for i in range(len(vals)):
        for j in range(len(vals)):
            s = vals[i] + vals[j]
            if s > SUPPORT_CUTOFF:
                l_in_basis[i, j] = 2.0 * d_in_basis[i, j] / s
    return vecs @ l_in_basis @ dagger(vecs)


def qfi(family: PhaseFamily, theta: float = 0.0) -> float:
    """Quantum Fisher information Tr[L^2 rho(theta)] of the family.

    For a qubit with xy-plane Bloch length r this equals (2 eta)^2 r^2.
    """
    rho = family.state_at(theta)
    l = sld(rho, family.derivative_at(theta))
    return float(np.real(np.trace(l @ l @ rho.matrix)))


def variance(rho: DensityMatrix, h: np.ndarray) -> float:
    """Var(H) = Tr(H^2 rho) - Tr(H rho)^2."""
    h = require_hermitian(h, what="observable")
    if h.shape[0] != rho.dim:
        raise ValueError(f"observable dimension {h.shape[0]} does not match "
                         f"state dimension {rho.dim}")
    m = rho.matrix
    ex2 = float(np.real(np.trace(h @ h @ m)))
    ex = float(np.real(np.trace(h @ m)))
    return ex2 - ex * ex


def optimal_qfi(asm: Assemblage,
                channel_map: Callable[[DensityMatrix], PhaseFamily],
                theta: float = 0.0) -> float:
    """max over settings of the probability-weighted member QFI."""
    best = -math.inf
    for members in asm.settings.values():
        total = sum(m.probability * qfi(channel_map(m.state), theta)
                    for m in members)
        best = max(best, total)
    return best


def optimal_variance(asm: Assemblage,
                     channel_map: Callable[[DensityMatrix], PhaseFamily],
                     theta: float, h: np.ndarray) -> float:
    """min over settings of the probability-weighted member variance of h."""
    best = math.inf
    for members in asm.settings.values():
        total = sum(m.probability
                    * variance(channel_map(m.state).state_at(theta), h)
                    for m in members)
        best = min(best, total)
    return best


def msi_violation(f_opt: float, four_var_opt: float) -> float:
    """max(F_opt - 4*Var_opt, 0); positive values certify steering."""
    if f_opt < 0 or four_var_opt < 0:
        raise ValueError("inputs must be nonnegative")
    return max(f_opt - four_var_opt, 0.0)


@dataclass(frozen=True)
class BranchSummary:
    probability: float
    f_opt: float
    four_var_opt: float
    per_setting_f: Mapping[str, float]
    per_setting_var: Mapping[str, float]


@dataclass(frozen=True)
class MsiReport:
    f_opt: float
    four_var_opt: float
    violation: float
    per_setting_f: Mapping[str, float]
    per_setting_var: Mapping[str, float]
    branches: Mapping[int, BranchSummary] | None = None


def _optimize(per_setting_f: Mapping[str, float],
              per_setting_var: Mapping[str, float]) -> tuple[float, float]:
    return max(per_setting_f.values()), min(per_setting_var.values())


def branch_averaged_msi(asm: Assemblage, dilation: DilationModel,
                        control: ControlState, theta: float = 0.0,
                        conv: PhaseConvention = PhaseConvention(),
                        h: np.ndarray | None = None) -> MsiReport:
    """Inequality test averaged over the +/- control-measurement branches.

    Each conditional state passes through the superposed channel; the
    control is projected onto |+> and |->, per-branch optimal QFI and
    variance are computed over the conditioned assemblage, and the two
    branches are combined with their outcome probabilities.  Branches of
    probability below 1e-14 are dropped along with their weight.
    """
    if h is None:
        h = conv.hamiltonian()
    # branch -> setting -> list of (joint probability, branch state)
    joint: dict[int, dict[str, list[tuple[float, DensityMatrix]]]] = {
        +1: {}, -1: {}}
    for name, members in asm.settings.items():
        for sign in (+1, -1):
            joint[sign][name] = []
        for m in members:
            rho_cb = superposed_apply(dilation, control, m.state, theta, conv)
            for sign in (+1, -1):
                try:
                    br: BranchResult = conditioned_branch(rho_cb, sign)
                except ZeroProbabilityBranchError:
                    joint[sign][name].append((0.0, None))
                    continue
                joint[sign][name].append(
                    (m.probability * br.probability, br.state))
    branches: dict[int, BranchSummary] = {}
    f_avg = 0.0
    var_avg = 0.0
    for sign in (+1, -1):
        per_setting = joint[sign]
        probs = {name: sum(p for p, _ in rows)
                 for name, rows in per_setting.items()}
        p_branch = float(np.mean(list(probs.values())))
        if p_branch < 1e-14:
            continue
        per_f = {}
        per_var = {}
        for name, rows in per_setting.items():
            f_tot = 0.0
            v_tot = 0.0
            for p_joint, state in rows:
                if state is None or p_joint == 0.0:
                    continue
                w = p_joint / probs[name]
                fam = PhaseFamily(state, conv, theta_ref=theta)
                f_tot += w * qfi(fam, theta)
                v_tot += w * variance(state, h)
            per_f[name] = f_tot
            per_var[name] = v_tot
        f_opt, var_opt = _optimize(per_f, per_var)
        branches[sign] = BranchSummary(p_branch, f_opt, 4.0 * var_opt,
                                       per_f, per_var)
        f_avg += p_branch * f_opt
        var_avg += p_branch * var_opt
    return MsiReport(
        f_opt=f_avg,
        four_var_opt=4.0 * var_avg,
        violation=msi_violation(f_avg, 4.0 * var_avg),
        per_setting_f={s: b.per_setting_f for s, b in branches.items()},
        per_setting_var={s: b.per_setting_var for s, b in branches.items()},
        branches=branches,
    )


def classical_fi(prob_curve: Callable[[float], np.ndarray], theta0: float,
                 dprob: Callable[[float], np.ndarray] | None = None,
                 step: float = 1e-6) -> float:
    """Fisher information sum_b (d_theta p_b)^2 / p_b at theta0.

    The derivative is taken analytically when ``dprob`` is supplied and by a
    central difference of width ``step`` otherwise.  An outcome with
    probability below 1e-12 but derivative above 1e-8 makes the information
    diverge (returned as ``inf``).
    """
    p = np.asarray(prob_curve(theta0), dtype=float)
    if dprob is not None:
        dp = np.asarray(dprob(theta0), dtype=float)
    else:
        hi = np.asarray(prob_curve(theta0 + step), dtype=float)
        lo = np.asarray(prob_curve(theta0 - step), dtype=float)
        dp = (hi - lo) / (2.0 * step)
    fi = 0.0
    for pb, dpb in zip(p, dp):
        if pb < FI_PROBABILITY_FLOOR:
            if abs(dpb) > FI_DERIVATIVE_FLOOR:
                return math.inf
            continue
        fi += dpb * dpb / pb
    return fi


def measurement_curve(family: PhaseFamily, observable: np.ndarray
                      ) -> tuple[Callable[[float], np.ndarray],
                                 Callable[[float], np.ndarray]]:
    """Outcome-probability curve and its exact derivative for a projective
    measurement of ``observable`` on the family."""
    _, vecs = eig_hermitian(observable)
    projs = [np.outer(vecs[:, i], vecs[:, i].conj())
             for i in range(vecs.shape[1])]

    def probs(theta: float) -> np.ndarray:
        rho = family.state_at(theta).matrix
        return np.array([float(np.real(np.trace(p @ rho))) for p in projs])

    def dprobs(theta: float) -> np.ndarray:
        dr = family.derivative_at(theta)
        return np.array([float(np.real(np.trace(p @ dr))) for p in projs])

    return probs, dprobs


def optimal_classical_fi(asm_by_branch: Mapping[int, tuple[float, Assemblage]],
                         measurement_set: Sequence[np.ndarray],
                         theta0: float = 0.0,
                         conv: PhaseConvention = PhaseConvention()) -> float:
    """Branch-averaged optimal Fisher information over a finite measurement
    set.

    ``asm_by_branch`` maps the control outcome (+1/-1) to its probability
    and conditioned assemblage.  Within each branch the information is
    maximised over the measurement per member and over the setting.
    """
    total = 0.0
    for _, (p_branch, asm) in asm_by_branch.items():
        if p_branch < 1e-14:
            continue
        best = -math.inf
        for members in asm.settings.values():
            f_setting = 0.0
            for m in members:
                fam = PhaseFamily(m.state, conv, theta_ref=theta0)
                f_member = -math.inf
                for obs in measurement_set:
                    probs, dprobs = measurement_curve(fam, obs)
                    f_member = max(f_member,
                                   classical_fi(probs, theta0, dprob=dprobs))
                f_setting += m.probability * f_member
            best = max(best, f_setting)
        total += p_branch * best
    return total


@dataclass(frozen=True)
class LhsModel:
    """Explicit local-hidden-state decomposition.

    ``weights[k]`` is the probability of hidden value k, ``response`` maps a
    setting name to the per-hidden-value outcome distributions, and
    ``states[k]`` is the hidden state handed to the receiver.  Assemblages
    produced this way are unsteerable by construction and never violate the
    inequality.
    """

    weights: tuple[float, ...]
    response: Mapping[str, tuple[tuple[float, ...], ...]]
    states: tuple[DensityMatrix, ...]

    def to_assemblage(self, theta: float = 0.0,
                      conv: PhaseConvention = PhaseConvention()) -> Assemblage:
        settings = {}
        for name, table in self.response.items():
            n_outcomes = len(table[0])
            members = []
            for a in range(n_outcomes):
                p_a = sum(self.weights[k] * table[k][a]
                          for k in range(len(self.weights)))
                u = conv.unitary(theta)
                mix = sum(self.weights[k] * table[k][a]
                          * (u @ self.states[k].matrix @ dagger(u))
                          for k in range(len(self.weights)))
                members.append(AssemblageMember(p_a, DensityMatrix(mix / p_a)))
            settings[name] = tuple(members)
        return Assemblage(settings)
