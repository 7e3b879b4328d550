"""Constructors for the reference systems, states and couplings.

Qubits carry H = (omega/2) sigma_z with the excited level first, so the
thermal z-polarization is -tanh(beta omega / 2).  The exchange coupling is
normalized so the two-qubit dynamics oscillates at
Omega = sqrt(g^2 + (omega_A - omega_B)^2); this fixes the matrix element
between |01> and |10> at g/2 and is validated against the closed-form
solution implemented in :func:`analytic_two_qubit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DensityMatrix, Operator, SubsystemLayout, vn_entropy
from .dynamics import CompositeSystem
from .thermo import effective_beta, thermal_state

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "TwoQubitParams",
    "PassiveQuditSpec",
    "PassiveQudit",
    "make_subsystem",
    "qudit_ladder_energies",
    "rotated_thermal",
    "make_coupling",
    "couple_lowest_levels",
    "passive_qudit",
    "analytic_two_qubit",
    "two_qubit_layout",
    "fridge_system",
    "engine_system",
    "qutrit_swap_system",
    "passive_qudit_engine_system",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True)
class TwoQubitParams:
    """Two-qubit machine parameters, in units of omega_a.

    A refrigerator uses the exchange coupling ``g`` plus the initial
    rotation ``phi`` of qubit B; an engine uses the anisotropic couplings
    ``(gx, gy)`` with both qubits starting thermal.
    """

    omega_a: float = 1.0
    omega_b: float = 1.25
    beta_a0: float = 2.0
    beta_b0: float = 1.8
    g: float | None = None
    gx: float | None = None
    gy: float | None = None
    phi: float = 0.0

    def __post_init__(self):
        if self.omega_a <= 0 or self.omega_b <= 0:
            raise ValueError("frequencies must be positive")
        if self.beta_a0 < 0 or self.beta_b0 < 0:
            raise ValueError("inverse temperatures must be nonnegative")

    @property
    def rabi_frequency(self) -> float:
        """Effective oscillation frequency of the coupled pair."""
        detuning2 = (self.omega_a - self.omega_b) ** 2
        if self.g is not None:
            return math.sqrt(self.g**2 + detuning2)
        gx = self.gx or 0.0
        gy = self.gy or 0.0
        return math.sqrt(gx**2 + gy**2 + detuning2)


@dataclass(frozen=True)
class PassiveQuditSpec:
    """Qudit replacing the hot qubit of the engine: two coupled levels plus
    ``d`` spectator levels at omega_2, prepared passive and non-thermal."""

    d: int
    omega_b: float
    omega_2: float
    beta_b0: float
    beta_target: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("need at least one extra level")
        if self.omega_2 <= self.omega_b:
            raise ValueError("extra levels must sit above the coupled pair")
        if self.beta_b0 < 0 or self.beta_target <= 0:
            raise ValueError("invalid inverse temperatures")


def make_subsystem(kind: str, energies) -> Operator:
    """Diagonal Hamiltonian in the canonical basis.

    ``kind='qubit'`` takes a single frequency and yields levels
    (-omega/2, +omega/2) with the excited level first; ``kind='qudit'``
    takes the level energies verbatim.
    """
    if kind == "qubit":
        omega = float(energies)
        if not math.isfinite(omega):
            raise ValueError("frequency must be finite")
        return Operator(omega / 2 * SIGMA_Z, hermitian=True)
    if kind == "qudit":
        levels = np.asarray(energies, dtype=float)
        if levels.ndim != 1 or len(levels) < 2:
            raise ValueError("qudit needs at least two level energies")
        if not np.all(np.isfinite(levels)):
            raise ValueError("level energies must be finite")
        return Operator(np.diag(levels).astype(complex), hermitian=True)
    raise ValueError(f"unknown subsystem kind {kind!r}")


def qudit_ladder_energies(omega_b: float, omega_2: float, d: int) -> np.ndarray:
    """Levels {0, omega_b, omega_2 x d}: ground, coupled excited level, and
    d degenerate spectator levels."""
    return np.array([0.0, omega_b] + [omega_2] * d)


def rotated_thermal(h: Operator, beta: float, phi: float,
                    axis: str = "x") -> DensityMatrix:
    """Gibbs state conjugated by exp(-i phi sigma_axis); qubit only.

    The rotation preserves the entropy, so the effective temperature of the
    result equals ``beta`` while coherences (and, past phi = pi/4,
    population inversion) appear in the energy basis.
    """
    if h.dim != 2:
        raise ValueError("rotated_thermal expects a qubit Hamiltonian")
    try:
        pauli = _PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown rotation axis {axis!r}") from None
    w = thermal_state(h, beta)
    u = math.cos(phi) * np.eye(2) - 1j * math.sin(phi) * pauli
    return DensityMatrix(u @ w.entries @ u.conj().T)


def make_coupling(kind: str, layout: SubsystemLayout, *, g: float | None = None,
                  gx: float | None = None, gy: float | None = None) -> Operator:
    """Hermitian coupling on the full composite space.

    kinds: ``exchange`` (excitation swap between two qubits, matrix element
    g/2), ``xy`` (anisotropic gx sx sx / 2 + gy sy sy / 2), and
    ``qutrit_swap`` (g sum_{k != l} |kl><lk| between equal-dimension
    subsystems).
    """
    dims = layout.dims
    if kind == "exchange":
        if g is None:
            raise ValueError("exchange coupling needs g")
        if dims != (2, 2):
            raise ValueError("exchange coupling expects a two-qubit layout")
        v = g / 4.0 * (np.kron(SIGMA_X, SIGMA_X) + np.kron(SIGMA_Y, SIGMA_Y))
        return Operator(v, hermitian=True)
    if kind == "xy":
        if gx is None or gy is None:
            raise ValueError("xy coupling needs gx and gy")
        if dims != (2, 2):
            raise ValueError("xy coupling expects a two-qubit layout")
        v = (gx / 2.0 * np.kron(SIGMA_X, SIGMA_X)
             + gy / 2.0 * np.kron(SIGMA_Y, SIGMA_Y))
        return Operator(v, hermitian=True)
    if kind == "qutrit_swap":
        if g is None:
            raise ValueError("swap coupling needs g")
        if len(dims) != 2 or dims[0] != dims[1]:
            raise ValueError("swap coupling expects two equal-dimension slots")
        d = dims[0]
        v = np.zeros((d * d, d * d), dtype=complex)
        for k in range(d):
            for l in range(d):
                if k != l:
                    v[k * d + l, l * d + k] = g
        return Operator(v, hermitian=True)
    raise ValueError(f"unknown coupling kind {kind!r}")


def couple_lowest_levels(v_two_qubit: Operator, layout: SubsystemLayout) -> Operator:
    """Embed a two-qubit coupling onto qubit A and the two lowest levels of
    the second subsystem, zero elsewhere.

    This is a direct-sum (block) embedding, not a tensor embedding: with the
    second subsystem ordered (ground, first excited, spectators...), the
    result acts as ``v_two_qubit`` on the qubit x {ground, excited} sector
    and annihilates the spectator sector.
    """
    if v_two_qubit.dim != 4:
        raise ValueError("expected a two-qubit coupling (dim 4)")
    if layout.n_subsystems != 2 or layout.dims[0] != 2:
        raise ValueError("expected a layout (qubit, qudit)")
    d_b = layout.dims[1]
    if d_b < 2:
        raise ValueError("second subsystem needs at least two levels")
    full = np.zeros((2 * d_b, 2 * d_b), dtype=complex)
    # Qubit basis here is (excited, ground); the qudit pair is
    # (ground, excited), so qudit level k maps to two-qubit index 1 - k.
    for a in range(2):
        for k in range(2):
            for ap in range(2):
                for kp in range(2):
                    full[a * d_b + k, ap * d_b + kp] = \
                        v_two_qubit.entries[a * 2 + (1 - k), ap * 2 + (1 - kp)]
    return Operator(full, hermitian=v_two_qubit.hermitian)


@dataclass(frozen=True)
class PassiveQudit:
    hamiltonian: Operator
    state: DensityMatrix
    beta_2: float


def passive_qudit(spec: PassiveQuditSpec) -> PassiveQudit:
    """Passive non-thermal qudit state whose effective temperature matches
    ``spec.beta_target``.

    The coupled pair keeps the population ratio exp(-beta_b0 omega_b); the
    spectator levels share a colder local temperature beta_2 for the
    (omega_2 - omega_b) gap, solved by bisection so the total entropy
    matches the target Gibbs entropy.  Existence requires the target
    entropy to exceed the entropy of the coupled pair alone; too small a
    spectator space is reported as an error.
    """
    h = make_subsystem(
        "qudit", qudit_ladder_energies(spec.omega_b, spec.omega_2, spec.d))
    s_target = vn_entropy(thermal_state(h, spec.beta_target))
    p1 = math.exp(-spec.beta_b0 * spec.omega_b)
    gap = spec.omega_2 - spec.omega_b

    def populations(beta_2: float) -> np.ndarray:
        weights = np.array(
            [1.0, p1] + [p1 * math.exp(-beta_2 * gap)] * spec.d)
        return weights / weights.sum()

    def entropy(beta_2: float) -> float:
        p = populations(beta_2)
        p = p[p > 0.0]
        return float(-(p * np.log(p)).sum())

    floor_weights = np.array([1.0, p1])
    floor_weights /= floor_weights.sum()
    s_floor = float(-(floor_weights * np.log(floor_weights)).sum())
    if s_target < s_floor:
        raise ValueError(
            f"qudit dimension too small: the coupled-pair entropy "
            f"{s_floor:.6f} already exceeds the target Gibbs entropy "
            f"{s_target:.6f}; add spectator levels or raise the target "
            f"temperature")
    if s_target > entropy(0.0):
        raise ValueError(
            "target entropy above the zero-beta_2 maximum; the requested "
            "state would not be passive")
    lo, hi = 0.0, 1e6 / max(gap, 1e-12)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if entropy(mid) > s_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, mid):
            break
    beta_2 = 0.5 * (lo + hi)
    p = populations(beta_2)
    if np.any(np.diff(p) > 1e-15):
        raise ValueError("constructed qudit state is not passive")
    return PassiveQudit(hamiltonian=h,
                        state=DensityMatrix(np.diag(p).astype(complex)),
                        beta_2=beta_2)


def analytic_two_qubit(params: TwoQubitParams, t) -> dict[str, np.ndarray]:
    """Closed-form marginal Bloch vectors and coupling-energy change for
    the exchange-coupled pair (thermal A, rotated-thermal B).

    Returns arrays keyed x_a, y_a, z_a, x_b, y_b, z_b, de_int, evaluated on
    ``t`` (scalar or array).  The expressions are exact for the
    exp(-i H t) propagation convention used by :func:`dynamics.simulate`.
    """
    if params.g is None:
        raise ValueError("the closed forms cover the exchange-coupled pair")
    t = np.asarray(t, dtype=float)
    wa, wb = params.omega_a, params.omega_b
    g, phi = params.g, params.phi
    omega = math.sqrt(g * g + (wa - wb) ** 2)
    tanh_a = math.tanh(wa * params.beta_a0 / 2)
    tanh_b = math.tanh(wb * params.beta_b0 / 2)
    cs = math.cos(phi) * math.sin(phi)
    half_sum = (wa + wb) * t / 2
    half_rabi = omega * t / 2
    cos_rabi = np.cos(omega * t)
    x_a = -2 * (g / omega) * cs * tanh_a * tanh_b * np.cos(half_sum) * np.sin(half_rabi)
    y_a = -2 * (g / omega) * cs * tanh_a * tanh_b * np.sin(half_sum) * np.sin(half_rabi)
    z_a = (-(2 * g**2 * (1 + cos_rabi) + 4 * (wa - wb) ** 2) * tanh_a
           - 2 * g**2 * (1 - cos_rabi) * math.cos(2 * phi) * tanh_b) / (4 * omega**2)
    x_b = -(2 / omega) * cs * tanh_b * (
        -(wa - wb) * np.cos(half_sum) * np.sin(half_rabi)
        + omega * np.sin(half_sum) * np.cos(half_rabi))
    y_b = (2 / omega) * cs * tanh_b * (
        (wa - wb) * np.sin(half_sum) * np.sin(half_rabi)
        + omega * np.cos(half_sum) * np.cos(half_rabi))
    z_b = (-2 * g**2 * (1 - cos_rabi) * tanh_a
           - (2 * g**2 * (1 + cos_rabi) + 4 * (wa - wb) ** 2)
           * math.cos(2 * phi) * tanh_b) / (4 * omega**2)
    exp_a = math.exp(wa * params.beta_a0)
    exp_b = math.exp(wb * params.beta_b0)
    de_int = (-(g**2) * (wa - wb) * (1 - cos_rabi) / (2 * omega**2)
              * ((exp_a - exp_b) * math.cos(phi) ** 2
                 + (exp_a * exp_b - 1) * math.sin(phi) ** 2)
              / ((exp_a + 1) * (exp_b + 1)))
    return {"x_a": x_a, "y_a": y_a, "z_a": z_a,
            "x_b": x_b, "y_b": y_b, "z_b": z_b, "de_int": de_int}


def two_qubit_layout() -> SubsystemLayout:
    return SubsystemLayout(dims=(2, 2), labels=("A", "B"))


def fridge_system(params: TwoQubitParams) -> CompositeSystem:
    """Exchange-coupled pair: thermal qubit A, rotated-thermal qubit B."""
    if params.g is None:
        raise ValueError("refrigerator parameters need the exchange coupling g")
    layout = two_qubit_layout()
    h_a = make_subsystem("qubit", params.omega_a)
    h_b = make_subsystem("qubit", params.omega_b)
    coupling = make_coupling("exchange", layout, g=params.g)
    states = {
        "A": thermal_state(h_a, params.beta_a0),
        "B": rotated_thermal(h_b, params.beta_b0, params.phi),
    }
    return CompositeSystem.from_parts(layout, {"A": h_a, "B": h_b},
                                      coupling, states)


def engine_system(params: TwoQubitParams) -> CompositeSystem:
    """xy-coupled pair with both qubits thermal."""
    if params.gx is None or params.gy is None:
        raise ValueError("engine parameters need the couplings gx and gy")
    layout = two_qubit_layout()
    h_a = make_subsystem("qubit", params.omega_a)
    h_b = make_subsystem("qubit", params.omega_b)
    coupling = make_coupling("xy", layout, gx=params.gx, gy=params.gy)
    states = {
        "A": thermal_state(h_a, params.beta_a0),
        "B": thermal_state(h_b, params.beta_b0),
    }
    return CompositeSystem.from_parts(layout, {"A": h_a, "B": h_b},
                                      coupling, states)


def qutrit_swap_system(omegas: Sequence[float], beta_1: float, beta_2: float,
                       g: float, beta_a: float | None = None) -> CompositeSystem:
    """Two identical qutrits with a swap coupling.

    Qutrit B starts in the passive non-thermal state p_1 = e^{-beta_1 w_1}
    p_0, p_2 = e^{-beta_2 w_2} p_0 (requires beta_1 != beta_2); qutrit A
    starts thermal at B's effective temperature unless ``beta_a`` is given.
    """
    omegas = np.asarray(omegas, dtype=float)
    if len(omegas) != 3:
        raise ValueError("expected three qutrit level energies")
    if not np.all(np.diff(omegas) > 0):
        raise ValueError("level energies must be strictly increasing")
    if beta_1 == beta_2:
        raise ValueError("beta_1 = beta_2 makes the state thermal; the "
                         "passive non-thermal construction needs a bias")
    w0 = omegas - omegas[0]
    weights = np.array([1.0,
                        math.exp(-beta_1 * w0[1]),
                        math.exp(-beta_2 * w0[2])])
    if np.any(np.diff(weights) > 1e-15):
        raise ValueError("populations must be nonincreasing with energy "
                         "for a passive state")
    p = weights / weights.sum()
    rho_b = DensityMatrix(np.diag(p).astype(complex))
    h = make_subsystem("qudit", omegas)
    layout = SubsystemLayout(dims=(3, 3), labels=("A", "B"))
    if beta_a is None:
        beta_a = effective_beta(h, float(-(p * np.log(p)).sum()))
    states = {"A": thermal_state(h, beta_a), "B": rho_b}
    coupling = make_coupling("qutrit_swap", layout, g=g)
    return CompositeSystem.from_parts(layout, {"A": h, "B": h},
                                      coupling, states)


def passive_qudit_engine_system(spec: PassiveQuditSpec,
                                params: TwoQubitParams) -> CompositeSystem:
    """Engine with the hot qubit replaced by the passive non-thermal qudit.

    Only the two lowest qudit levels couple to qubit A, with the same xy
    coupling as the two-qubit engine; the spectator levels are inert.
    """
    if params.gx is None or params.gy is None:
        raise ValueError("engine parameters need the couplings gx and gy")
    qudit = passive_qudit(spec)
    layout = SubsystemLayout(dims=(2, spec.d + 2), labels=("A", "B"))
    h_a = make_subsystem("qubit", params.omega_a)
    v_2q = make_coupling("xy", two_qubit_layout(), gx=params.gx, gy=params.gy)
    coupling = couple_lowest_levels(v_2q, layout)
    states = {"A": thermal_state(h_a, params.beta_a0), "B": qudit.state}
    return CompositeSystem.from_parts(
        layout, {"A": h_a, "B": qudit.hamiltonian}, coupling, states)
