"""Noisy phase-shift channels, system-environment dilations, and the
control-qubit superposition of two identical channel implementations.

A noisy phase shift factors as a rotation about z followed by a noise
channel that commutes with that rotation.  Two noise families are provided:
pure dephasing with visibility ``w`` and depolarising noise with visibility
``v``.  Both come with a canonical dilation whose environment starts in
|0>, which fixes the interference operator governing the off-diagonal
control sector when the two implementations are superposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .qmath import (
    DensityMatrix,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    UNITARITY_TOL,
    dagger,
    embed,
    is_unitary,
    partial_trace,
    projector,
    tensor,
)

# Probability below which conditioning on a control outcome is undefined.
BRANCH_PROBABILITY_FLOOR = 1e-14


class ZeroProbabilityBranchError(ValueError):
    """Raised when conditioning on a control outcome of ~zero probability."""


@dataclass(frozen=True)
class PhaseConvention:
    """Scale of the phase generator H = eta * sigma_z.

    ``eta`` may be 1/2 (default) or 1.  The rotation for parameter theta is
    exp(-i * eta * theta * sigma_z), so a Bloch vector in the xy-plane turns
    at rate 2*eta in theta.
    """

    eta: float = 0.5

    def __post_init__(self):
        if self.eta not in (0.5, 1.0):
            raise ValueError(f"eta must be 0.5 or 1.0, got {self.eta}")

    def hamiltonian(self) -> np.ndarray:
        return self.eta * SIGMA_Z

    def unitary(self, theta: float) -> np.ndarray:
        return np.diag([np.exp(-1j * self.eta * theta),
                        np.exp(1j * self.eta * theta)])

    @property
    def bloch_rate(self) -> float:
        """Angular rate of the induced Bloch-vector rotation per unit theta."""
        return 2.0 * self.eta


def phase_unitary(theta: float, conv: PhaseConvention = PhaseConvention()) -> np.ndarray:
    """diag(exp(-i*eta*theta), exp(+i*eta*theta))."""
    return conv.unitary(theta)


@dataclass(frozen=True)
class KrausChannel:
    """Operator-sum representation with completeness validated on build."""

    input_dim: int
    output_dim: int
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        object.__setattr__(self, "kraus_ops", ops)
        s = sum(dagger(k) @ k for k in ops)
        if np.max(np.abs(s - np.eye(self.input_dim))) > UNITARITY_TOL:
            raise ValueError("Kraus operators do not satisfy completeness")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ dagger(k) for k in self.kraus_ops)

    def apply_density(self, rho: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(self.apply(rho.matrix))

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| (x) Lambda(|i><j|)."""
        d = self.input_dim
        c = np.zeros((d * self.output_dim, d * self.output_dim), dtype=complex)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                c += tensor(e, self.apply(e))
        return c


def dephased_shift(w: float, theta: float,
                   conv: PhaseConvention = PhaseConvention()) -> KrausChannel:
    """Phase shift followed by pure dephasing of visibility ``w``.

    Kraus operators sqrt(1-w/2) U(theta) and sqrt(w/2) sigma_z U(theta); an
    xy-plane Bloch component shrinks by the factor (1-w).
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"dephasing visibility must lie in [0, 1], got {w}")
    u = conv.unitary(theta)
    ops = (np.sqrt(1.0 - w / 2.0) * u, np.sqrt(w / 2.0) * SIGMA_Z @ u)
    return KrausChannel(2, 2, ops)


def depolarized_shift(v: float, theta: float,
                      conv: PhaseConvention = PhaseConvention()) -> KrausChannel:
    """Phase shift followed by depolarising noise of visibility ``v``.

    Equals (1-v) U rho U^dag + v I/2.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"depolarising visibility must lie in [0, 1], got {v}")
    u = conv.unitary(theta)
    ops = (np.sqrt(1.0 - 3.0 * v / 4.0) * u,
           np.sqrt(v / 4.0) * SIGMA_X @ u,
           np.sqrt(v / 4.0) * SIGMA_Y @ u,
           np.sqrt(v / 4.0) * SIGMA_Z @ u)
    return KrausChannel(2, 2, ops)


@dataclass(frozen=True)
class DilationModel:
    """System-environment unitary realising a channel by partial trace.

    The environment starts in |0><0| by default.  The unitary maps
    |psi> (x) |0>_E to sum_i K_i|psi> (x) |i>_E for the source Kraus
    operators; the remaining columns are an arbitrary deterministic
    orthonormal completion that never touches the populated |0>_E sector.
    """

    system_dim: int
    env_dim: int
    unitary: np.ndarray
    env_init: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        object.__setattr__(self, "unitary", u)
        if self.env_init is None:
            e = np.zeros((self.env_dim, self.env_dim), dtype=complex)
            e[0, 0] = 1.0
            object.__setattr__(self, "env_init", e)
        else:
            object.__setattr__(self, "env_init",
                               np.asarray(self.env_init, dtype=complex))
        d = self.system_dim * self.env_dim
        if u.shape != (d, d):
            raise ValueError(f"unitary shape {u.shape} does not match "
                             f"system_dim*env_dim = {d}")
        if not is_unitary(u):
            raise ValueError("dilation matrix is not unitary within tolerance")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Channel action: evolve rho (x) env_init and trace the environment."""
        joint = tensor(np.asarray(rho, dtype=complex), self.env_init)
        out = self.unitary @ joint @ dagger(self.unitary)
        return partial_trace(out, [self.system_dim, self.env_dim], [0])


def canonical_dilation(ch: KrausChannel) -> DilationModel:
    """Dilation with env_dim = number of Kraus operators rounded up to a
    power of two and the identity-on-vacuum column structure."""
    n_ops = len(ch.kraus_ops)
    env_dim = 1
    while env_dim < n_ops:
        env_dim *= 2
    ds, de = ch.output_dim, env_dim
    d = ds * de
    # Columns for inputs |b>|0>_E sit at index b*de.  Component (b', i) of
    # the image is K_i[b', b]; Kraus completeness makes them orthonormal.
    defined = np.zeros((d, ch.input_dim), dtype=complex)
    for b in range(ch.input_dim):
        for i, k in enumerate(ch.kraus_ops):
            defined[i::de, b] = k[:, b]
    # Deterministic orthonormal completion for the never-populated columns.
    q, _ = np.linalg.qr(defined, mode="complete")
    complement = q[:, ch.input_dim:]
    u = np.zeros((d, d), dtype=complex)
    for b in range(ch.input_dim):
        u[:, b * de] = defined[:, b]
    free_positions = [b * de + e for b in range(ch.input_dim)
                      for e in range(1, de)]
    for j, pos in enumerate(free_positions):
        u[:, pos] = complement[:, j]
    return DilationModel(ds, de, u)


def interference_operator(d: DilationModel) -> np.ndarray:
    """Environment-vacuum block of the dilation unitary.

    For the canonical dilations this equals the leading Kraus operator:
    sqrt(1-w/2) U(theta) for dephasing, sqrt(1-3v/4) U(theta) for
    depolarising noise.
    """
    e = d.env_init
    vals, vecs = np.linalg.eigh(e)
    if abs(vals[-1] - 1.0) > 1e-10:
        raise ValueError("interference operator requires a pure environment "
                         "state")
    chi = vecs[:, -1]
    u = d.unitary.reshape(d.system_dim, d.env_dim, d.system_dim, d.env_dim)
    return np.einsum("e,aebf,f->ab", chi.conj(), u, chi)


@dataclass(frozen=True)
class ControlState:
    """Control-qubit preparation: pure sqrt(a)|0> + sqrt(1-a)|1> or the
    incoherent mixture a|0><0| + (1-a)|1><1|."""

    alpha: float
    kind: str = "pure"  # "pure" | "mixed"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.kind not in ("pure", "mixed"):
            raise ValueError(f"kind must be 'pure' or 'mixed', got {self.kind}")

    def matrix(self) -> np.ndarray:
        if self.kind == "pure":
            v = np.array([np.sqrt(self.alpha), np.sqrt(1.0 - self.alpha)],
                         dtype=complex)
            return projector(v)
        return np.diag([self.alpha, 1.0 - self.alpha]).astype(complex)


@dataclass(frozen=True)
class BranchResult:
    """Probability and normalised system state after a control projection."""

    probability: float
    state: DensityMatrix


def total_unitary(d: DilationModel, theta: float = 0.0,
                  conv: PhaseConvention = PhaseConvention()) -> np.ndarray:
    """Controlled routing unitary over C (x) B (x) E1 (x) E2.

    The phase rotation acts on B first; the same dilation matrix then couples
    B to E1 when the control is |0> and to E2 when it is |1>.
    """
    ds, de = d.system_dim, d.env_dim
    dims = [2, ds, de, de]
    u_be = d.unitary @ tensor(conv.unitary(theta), np.eye(de))
    p0 = embed(projector(np.array([1, 0])), dims, [0])
    p1 = embed(projector(np.array([0, 1])), dims, [0])
    u1 = embed(u_be, dims, [1, 2])
    u2 = embed(u_be, dims, [1, 3])
    return p0 @ u1 + p1 @ u2


def superposed_apply(d: DilationModel, control: ControlState,
                     rho: DensityMatrix, theta: float = 0.0,
                     conv: PhaseConvention = PhaseConvention()) -> DensityMatrix:
    """Joint control-system state after the superposed noisy phase shift.

    Both environments start in the dilation's initial state and are traced
    out.  An incoherent control yields rho_C (x) channel(rho); a coherent
    control adds the off-diagonal interference block T rho T^dag with weight
    sqrt(alpha (1-alpha)).
    """
    if rho.dim != d.system_dim:
        raise ValueError(f"system state dimension {rho.dim} does not match "
                         f"dilation system_dim {d.system_dim}")
    ds, de = d.system_dim, d.env_dim
    dims = [2, ds, de, de]
    u_tot = total_unitary(d, theta, conv)
    rho_tot = tensor(control.matrix(), rho.matrix, d.env_init, d.env_init)
    out = u_tot @ rho_tot @ dagger(u_tot)
    return partial_trace(DensityMatrix(out), dims, [0, 1])


def conditioned_branch(rho_cb: DensityMatrix, outcome: int) -> BranchResult:
    """Project the control on |+> (outcome=+1) or |-> (outcome=-1).

    Returns the outcome probability and the normalised system state
    (channel output +/- T rho T^dag, renormalised).
    """
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    d = rho_cb.dim // 2
    m = rho_cb.matrix
    blocks = [[m[i * d:(i + 1) * d, j * d:(j + 1) * d] for j in range(2)]
              for i in range(2)]
    s = outcome
    unnorm = 0.5 * (blocks[0][0] + s * blocks[0][1]
                    + s * blocks[1][0] + blocks[1][1])
    p = float(np.real(np.trace(unnorm)))
    if p < BRANCH_PROBABILITY_FLOOR:
        raise ZeroProbabilityBranchError(
            f"control outcome {'+' if s > 0 else '-'} has probability {p}")
    return BranchResult(p, DensityMatrix(unnorm / p))


def effective_dephasing_visibility(w: float) -> float:
    """Visibility of the '+'-branch of a superposed dephased shift: 2w/(4-w)."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {w}")
    return 2.0 * w / (4.0 - w)


def effective_depolarizing_visibility(v: float) -> float:
    """Visibility of the '+'-branch of a superposed depolarised shift:
    4v/(8-3v)."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return 4.0 * v / (8.0 - 3.0 * v)
