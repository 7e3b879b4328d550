"""Thermodynamic ledger primitives for finite quantum systems.

The central object is the entropy-matched inverse temperature: for a state
rho with Hamiltonian H, ``effective_beta`` returns the unique beta >= 0
whose Gibbs state has the same entropy as rho.  Heat is the decrease of the
matched Gibbs energy (the "thermal energy"), work is the remaining energy
change, and the generalized ergotropy E - E_th is the work-like reserve.

Temperatures are solved by bracketing and bisection on the strictly
decreasing map beta -> S[w(beta)]; robustness is preferred over speed,
and every solve is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .core import (
    DensityMatrix,
    Operator,
    relative_entropy,
    vn_entropy,
)

__all__ = [
    "ThermalSnapshot",
    "HeatWork",
    "SigmaBundle",
    "PreparationOptimum",
    "thermal_state",
    "effective_beta",
    "energy_beta",
    "effective_beta_series",
    "energy_beta_series",
    "snapshot_series",
    "thermal_snapshot",
    "heat_work",
    "entropy_production",
    "sigma_erg",
    "free_energy",
    "preparation_cost",
    "minimize_preparation_cost",
    "average_beta",
    "accessible_sigma",
    "ergotropy",
    "thermal_relative_entropy",
]

# Bracket cap for temperature solves: beta_max = BETA_CAP_SCALE / spread(H).
BETA_CAP_SCALE = 1e6
# Entropy targets above log(d) by more than this are rejected.
ENTROPY_SLACK = 1e-10
# Targets below the larger of this floor and the entropy at the bracket cap
# are treated as pure: the matching temperature is reported as +inf.
MIN_RESOLVABLE_ENTROPY = 1e-14
# Relative width at which a bisection bracket is considered converged.
_BRACKET_RTOL = 1e-13
_BRACKET_ATOL = 1e-15
_MAX_BISECT = 160


def _gibbs_populations(evals: np.ndarray, beta: float) -> np.ndarray:
    """Gibbs weights exp(-beta e)/Z, overflow-safe for either sign of beta."""
    w = beta * evals
    w = w - w.min()
    p = np.exp(-w)
    return p / p.sum()


def _ground_populations(evals: np.ndarray) -> np.ndarray:
    """beta -> +inf limit: uniform weight on the (near-)degenerate ground space."""
    spread = float(evals[-1] - evals[0])
    mask = evals <= evals[0] + max(spread, 1.0) * 1e-12
    p = np.zeros_like(evals)
    p[mask] = 1.0 / mask.sum()
    return p


def _entropy_of(p: np.ndarray) -> float:
    q = p[p > 0.0]
    return float(-np.sum(q * np.log(q)))


def _gibbs_entropy(evals: np.ndarray, beta: float) -> float:
    return _entropy_of(_gibbs_populations(evals, beta))


def _gibbs_energy(evals: np.ndarray, beta: float) -> float:
    return float(np.dot(_gibbs_populations(evals, beta), evals))


def thermal_state(h: Operator, beta: float) -> DensityMatrix:
    """Gibbs state exp(-beta H)/Z, computed in the eigenbasis of H.

    ``beta = math.inf`` returns the normalized projector onto the ground
    space.  The largest Boltzmann factor is normalized out first, so no
    overflow occurs for any finite beta.
    """
    if not h.hermitian:
        raise ValueError("thermal_state requires a hermitian Hamiltonian")
    evals, vecs = h.eigh()
    if math.isinf(beta):
        p = _ground_populations(evals)
    else:
        p = _gibbs_populations(evals, beta)
    return DensityMatrix((vecs * p) @ vecs.conj().T)


def _bisect_decreasing(fun: Callable[[float], float], target: float,
                       lo: float, hi: float) -> float:
    """Root of fun(x) = target for strictly decreasing fun on [lo, hi]."""
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if fun(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BRACKET_ATOL + _BRACKET_RTOL * abs(mid):
            break
    return 0.5 * (lo + hi)


def effective_beta(h: Operator, s_target: float) -> float:
    """Inverse temperature whose Gibbs state has entropy ``s_target``.

    The map beta -> S[w(beta)] decreases strictly from log(d) at beta = 0,
    so the solution is unique.  Targets below the resolvable floor (the
    entropy at the bracket cap, or machine level) return ``math.inf``: the
    ground-projector regime.  A fully degenerate Hamiltonian only supports
    S = log(d); any other target is an error rather than a silent default.
    """
    if not h.hermitian:
        raise ValueError("effective_beta requires a hermitian Hamiltonian")
    evals = np.linalg.eigvalsh(h.entries)
    d = len(evals)
    log_d = math.log(d)
    if s_target > log_d + ENTROPY_SLACK:
        raise ValueError(
            f"target entropy {s_target!r} exceeds log d = {log_d!r}")
    if s_target < -ENTROPY_SLACK:
        raise ValueError(f"target entropy {s_target!r} is negative")
    s_target = min(max(s_target, 0.0), log_d)
    spread = float(evals[-1] - evals[0])
    if spread <= 1e-14 * max(1.0, abs(float(evals[0]))):
        if abs(s_target - log_d) <= 1e-9:
            return 0.0
        raise ValueError(
            "Hamiltonian is proportional to the identity; the effective "
            "temperature is undefined for entropies below log d")
    if s_target >= log_d:
        return 0.0
    beta_max = BETA_CAP_SCALE / spread
    if s_target < max(_gibbs_entropy(evals, beta_max), MIN_RESOLVABLE_ENTROPY):
        return math.inf
    return _bisect_decreasing(
        lambda b: _gibbs_entropy(evals, b), s_target, 0.0, beta_max)


def energy_beta(h: Operator, e_target: float) -> float:
    """Inverse temperature (any sign) whose Gibbs state has mean energy
    ``e_target``.

    The Gibbs energy decreases strictly in beta from e_max (beta -> -inf)
    to e_min (beta -> +inf), so the solution in the open spectral interval
    is unique.  Targets at or outside the spectral bounds are errors.
    """
    if not h.hermitian:
        raise ValueError("energy_beta requires a hermitian Hamiltonian")
    evals = np.linalg.eigvalsh(h.entries)
    e_min, e_max = float(evals[0]), float(evals[-1])
    if not (e_min < e_target < e_max):
        raise ValueError(
            f"target energy {e_target!r} outside the open spectral "
            f"interval ({e_min!r}, {e_max!r})")
    spread = e_max - e_min
    cap = BETA_CAP_SCALE / spread
    return _bisect_decreasing(
        lambda b: _gibbs_energy(evals, b), e_target, -cap, cap)


def _gibbs_entropy_vec(evals: np.ndarray, betas: np.ndarray) -> np.ndarray:
    w = np.outer(betas, evals)
    w -= w.min(axis=1, keepdims=True)
    p = np.exp(-w)
    p /= p.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0.0, p * np.log(p), 0.0)
    return -plogp.sum(axis=1)


def _gibbs_energy_vec(evals: np.ndarray, betas: np.ndarray) -> np.ndarray:
    w = np.outer(betas, evals)
    w -= w.min(axis=1, keepdims=True)
    p = np.exp(-w)
    p /= p.sum(axis=1, keepdims=True)
    return p @ evals


def _bisect_decreasing_vec(fun_vec: Callable[[np.ndarray], np.ndarray],
                           targets: np.ndarray, lo: np.ndarray,
                           hi: np.ndarray) -> np.ndarray:
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        above = fun_vec(mid) > targets
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= _BRACKET_ATOL + _BRACKET_RTOL * np.abs(mid)):
            break
    return 0.5 * (lo + hi)


def effective_beta_series(h: Operator, s_targets: Sequence[float]) -> np.ndarray:
    """Vectorized :func:`effective_beta` over many entropy targets.

    One bisection sweep solves all targets together; results agree with
    the scalar solver to the bracket tolerance.
    """
    if not h.hermitian:
        raise ValueError("effective_beta requires a hermitian Hamiltonian")
    targets = np.asarray(s_targets, dtype=float)
    evals = np.linalg.eigvalsh(h.entries)
    d = len(evals)
    log_d = math.log(d)
    if np.any(targets > log_d + ENTROPY_SLACK) or np.any(targets < -ENTROPY_SLACK):
        raise ValueError("entropy target outside [0, log d]")
    targets = np.clip(targets, 0.0, log_d)
    spread = float(evals[-1] - evals[0])
    if spread <= 1e-14 * max(1.0, abs(float(evals[0]))):
        if np.all(np.abs(targets - log_d) <= 1e-9):
            return np.zeros_like(targets)
        raise ValueError(
            "Hamiltonian is proportional to the identity; the effective "
            "temperature is undefined for entropies below log d")
    beta_max = BETA_CAP_SCALE / spread
    s_floor = max(_gibbs_entropy(evals, beta_max), MIN_RESOLVABLE_ENTROPY)
    pure = targets < s_floor
    flat = targets >= log_d
    solve = ~(pure | flat)
    out = np.empty_like(targets)
    out[pure] = math.inf
    out[flat] = 0.0
    if np.any(solve):
        sub = targets[solve]
        out[solve] = _bisect_decreasing_vec(
            lambda b: _gibbs_entropy_vec(evals, b), sub,
            np.zeros_like(sub), np.full_like(sub, beta_max))
    return out


def energy_beta_series(h: Operator, e_targets: Sequence[float]) -> np.ndarray:
    """Vectorized :func:`energy_beta`; spectral-edge targets map to +-inf."""
    if not h.hermitian:
        raise ValueError("energy_beta requires a hermitian Hamiltonian")
    targets = np.asarray(e_targets, dtype=float)
    evals = np.linalg.eigvalsh(h.entries)
    e_min, e_max = float(evals[0]), float(evals[-1])
    spread = e_max - e_min
    edge = 1e-14 * max(1.0, spread)
    ground = targets <= e_min + edge
    ceiling = targets >= e_max - edge
    solve = ~(ground | ceiling)
    out = np.empty_like(targets)
    out[ground] = math.inf
    out[ceiling] = -math.inf
    if np.any(solve):
        cap = BETA_CAP_SCALE / spread
        sub = targets[solve]
        out[solve] = _bisect_decreasing_vec(
            lambda b: _gibbs_energy_vec(evals, b), sub,
            np.full_like(sub, -cap), np.full_like(sub, cap))
    return out


def snapshot_series(h: Operator, states: Sequence[DensityMatrix],
                    label: str) -> list[ThermalSnapshot]:
    """Thermal snapshots of many states under one Hamiltonian.

    Equivalent to calling :func:`thermal_snapshot` per state, but the
    temperature solves are batched, which matters on dense time grids.
    """
    evals = np.linalg.eigvalsh(h.entries)
    evals_sorted = np.sort(evals)
    energies = np.array([h.expectation(rho) for rho in states])
    pops = [rho.eigvals() for rho in states]
    entropies = np.array([_entropy_of(p) for p in pops])
    betas = effective_beta_series(h, entropies)
    finite = np.isfinite(betas)
    eths = np.empty_like(energies)
    if np.any(finite):
        eths[finite] = _gibbs_energy_vec(evals, betas[finite])
    ground_energy = float(np.dot(_ground_populations(evals), evals))
    eths[~finite] = ground_energy
    energy_betas = energy_beta_series(h, energies)
    out = []
    for k in range(len(states)):
        passive_energy = float(np.dot(np.sort(pops[k])[::-1], evals_sorted))
        out.append(ThermalSnapshot(
            label=label,
            energy=float(energies[k]),
            entropy=float(entropies[k]),
            beta=float(betas[k]),
            thermal_energy=float(eths[k]),
            ergotropy=float(energies[k] - passive_energy),
            gen_ergotropy=float(energies[k] - eths[k]),
            energy_beta=float(energy_betas[k]),
        ))
    return out


def ergotropy(h: Operator, rho: DensityMatrix) -> float:
    """Maximum energy extractable by one unitary: E minus the passive energy.

    The passive energy pairs populations sorted descending with energies
    sorted ascending, which is exact in finite dimension.
    """
    if not h.hermitian:
        raise ValueError("ergotropy requires a hermitian Hamiltonian")
    evals = np.sort(np.linalg.eigvalsh(h.entries))
    pops = np.sort(rho.eigvals())[::-1]
    energy = h.expectation(rho)
    return energy - float(np.dot(pops, evals))


@dataclass(frozen=True)
class ThermalSnapshot:
    """Per-subsystem thermodynamic record at one instant.

    ``beta`` is the entropy-matched inverse temperature (+inf for states
    purer than the bracket cap resolves); ``energy_beta`` matches the mean
    energy instead and may be negative (population inversion) or +-inf when
    the energy sits at a spectral edge.
    """

    label: str
    energy: float
    entropy: float
    beta: float
    thermal_energy: float
    ergotropy: float
    gen_ergotropy: float
    energy_beta: float


def thermal_snapshot(h: Operator, rho: DensityMatrix, label: str) -> ThermalSnapshot:
    """Full thermodynamic reading of ``rho`` under Hamiltonian ``h``."""
    if h.dim != rho.dim:
        raise ValueError(f"dimension mismatch: {h.dim} vs {rho.dim}")
    evals = np.linalg.eigvalsh(h.entries)
    energy = h.expectation(rho)
    entropy = vn_entropy(rho)
    beta = effective_beta(h, entropy)
    if math.isinf(beta):
        e_th = float(np.dot(_ground_populations(evals), evals))
    else:
        e_th = _gibbs_energy(evals, beta)
    e_min, e_max = float(evals[0]), float(evals[-1])
    spread = e_max - e_min
    edge = 1e-14 * max(1.0, spread)
    if energy <= e_min + edge:
        e_beta = math.inf
    elif energy >= e_max - edge:
        e_beta = -math.inf
    else:
        e_beta = energy_beta(h, energy)
    return ThermalSnapshot(
        label=label,
        energy=energy,
        entropy=entropy,
        beta=beta,
        thermal_energy=e_th,
        ergotropy=ergotropy(h, rho),
        gen_ergotropy=energy - e_th,
        energy_beta=e_beta,
    )


class HeatWork(NamedTuple):
    heat: float
    work: float


def heat_work(snap0: ThermalSnapshot, snap_t: ThermalSnapshot) -> HeatWork:
    """Heat and work provided by a subsystem between two snapshots.

    Q is the decrease of the thermal energy; W = -dE - Q is the rest of the
    energy released.  Both snapshots must describe the same subsystem.
    """
    if snap0.label != snap_t.label:
        raise ValueError(
            f"snapshot labels differ: {snap0.label!r} vs {snap_t.label!r}")
    q = snap0.thermal_energy - snap_t.thermal_energy
    w = (snap0.energy - snap_t.energy) - q
    return HeatWork(heat=q, work=w)


@dataclass(frozen=True)
class SigmaBundle:
    """Entropy-production variants for one time sample.

    ``sigma[j]`` is dS_j minus the initial-temperature-weighted heat from
    the other subsystems; ``clausius_sum`` is -sum_j beta_j(0) Q_j;
    ``corr_adjusted`` subtracts the correlation change from the Clausius
    sum; ``tighter_sigma`` uses the time-resolved integral of beta_i dQ_i
    (trapezoidal on the sampled grid) instead of beta_i(0) Q_i.
    """

    sigma: dict[str, float]
    clausius_sum: float
    corr_adjusted: float
    tighter_sigma: dict[str, float] | None = None


def entropy_production(
    snaps0: Mapping[str, ThermalSnapshot],
    snaps_t: Mapping[str, ThermalSnapshot],
    i_tot: float,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]] | None = None,
    i_tot0: float = 0.0,
) -> SigmaBundle:
    """Entropy productions between the initial and current snapshots.

    ``series`` maps each label to the sampled path ``(betas, thermal
    energies)`` from time 0 up to and including the current sample; it is
    required only for the time-resolved (tighter) variant.
    """
    if set(snaps0) != set(snaps_t):
        raise ValueError("initial and current snapshots cover different subsystems")
    labels = list(snaps0)
    heats = {}
    d_entropy = {}
    for lab in labels:
        q, _ = heat_work(snaps0[lab], snaps_t[lab])
        heats[lab] = q
        d_entropy[lab] = snaps_t[lab].entropy - snaps0[lab].entropy
    sigma = {
        j: d_entropy[j] - sum(
            snaps0[i].beta * heats[i] for i in labels if i != j)
        for j in labels
    }
    clausius = -sum(snaps0[j].beta * heats[j] for j in labels)
    corr_adjusted = clausius - (i_tot - i_tot0)
    tighter = None
    if series is not None:
        if set(series) != set(labels):
            raise ValueError("series cover different subsystems than snapshots")
        heat_integral = {}
        for lab in labels:
            betas, eths = (np.asarray(a, dtype=float) for a in series[lab])
            if betas.shape != eths.shape or betas.ndim != 1:
                raise ValueError("series must be matching 1-d samples")
            # integral of beta dQ = -integral of beta dE_th, trapezoidal
            heat_integral[lab] = -float(
                np.sum(0.5 * (betas[1:] + betas[:-1]) * np.diff(eths)))
        tighter = {
            j: d_entropy[j] - sum(
                heat_integral[i] for i in labels if i != j)
            for j in labels
        }
    return SigmaBundle(sigma=sigma, clausius_sum=clausius,
                       corr_adjusted=corr_adjusted, tighter_sigma=tighter)


def sigma_erg(snap_a0: ThermalSnapshot, snap_a_t: ThermalSnapshot,
              snap_b0: ThermalSnapshot, snap_b_t: ThermalSnapshot) -> float:
    """Pseudo entropy production with work identified as ergotropy change.

    Sign-indefinite diagnostic: unlike the generalized-ergotropy splitting,
    this quantity can go negative (qutrit swap scenarios exhibit it), so it
    is never used in bound checks.
    """
    ds_a = snap_a_t.entropy - snap_a0.entropy
    de_b = snap_b_t.energy - snap_b0.energy
    d_erg_b = snap_b_t.ergotropy - snap_b0.ergotropy
    return ds_a + snap_b0.beta * (de_b - d_erg_b)


def free_energy(snap: ThermalSnapshot, beta_ref: float) -> float:
    """Nonequilibrium free energy E - S/beta_ref at a reference temperature."""
    if not beta_ref > 0.0:
        raise ValueError("beta_ref must be positive")
    return snap.energy - snap.entropy / beta_ref


def preparation_cost(h: Operator, rho: DensityMatrix, beta: float) -> float:
    """Work (1/beta) D(rho || w[beta]) to prepare ``rho`` from equilibrium
    at inverse temperature ``beta`` with a reversible protocol.

    Computed in the log domain, E - S/beta + log Z / beta, which equals the
    relative-entropy form but stays finite at temperatures where Boltzmann
    factors underflow the matrix representation.
    """
    if not beta > 0.0:
        raise ValueError("beta must be positive")
    if not h.hermitian:
        raise ValueError("preparation_cost requires a hermitian Hamiltonian")
    evals = np.linalg.eigvalsh(h.entries)
    shifted = beta * (evals - evals[0])
    log_z = math.log(float(np.exp(-shifted).sum())) - beta * float(evals[0])
    energy = h.expectation(rho)
    return energy - vn_entropy(rho) / beta + log_z / beta


class PreparationOptimum(NamedTuple):
    beta_opt: float
    w_min: float


def minimize_preparation_cost(h: Operator, rho: DensityMatrix) -> PreparationOptimum:
    """Temperature minimizing the preparation cost, and the cost there.

    The cost is decreasing below and increasing above the entropy-matching
    temperature, so the minimizer is ``effective_beta(h, S[rho])`` and the
    minimum equals the generalized ergotropy E - E_th.  The minimum is
    evaluated through the cost functional when the minimizer is finite and
    through the ground-projector limit otherwise.
    """
    entropy = vn_entropy(rho)
    beta_opt = effective_beta(h, entropy)
    if math.isinf(beta_opt):
        evals = np.linalg.eigvalsh(h.entries)
        w_min = h.expectation(rho) - float(
            np.dot(_ground_populations(evals), evals))
    else:
        w_min = preparation_cost(h, rho, beta_opt)
    return PreparationOptimum(beta_opt=beta_opt, w_min=w_min)


def average_beta(betas: Sequence[float], eths: Sequence[float]) -> float:
    """Path-averaged inverse temperature weighted by thermal-energy flow.

    Defined by beta_bar * dE_th = integral of beta dE_th along the sampled
    path (trapezoidal quadrature); lies between the path minimum and
    maximum of beta up to quadrature error.  Undefined (error) when the net
    thermal-energy change vanishes.
    """
    b = np.asarray(betas, dtype=float)
    e = np.asarray(eths, dtype=float)
    if b.shape != e.shape or b.ndim != 1 or len(b) < 2:
        raise ValueError("need matching 1-d beta and thermal-energy samples")
    net = float(e[-1] - e[0])
    if abs(net) <= 1e-12:
        raise ValueError("net thermal-energy change is zero; average "
                         "temperature is undefined")
    integral = float(np.sum(0.5 * (b[1:] + b[:-1]) * np.diff(e)))
    return integral / net


def thermal_relative_entropy(h: Operator, beta_t: float, beta_0: float) -> float:
    """D(w[beta_t] || w[beta_0]) between Gibbs states of the same Hamiltonian."""
    evals = np.linalg.eigvalsh(h.entries)
    p_t = (_ground_populations(evals) if math.isinf(beta_t)
           else _gibbs_populations(evals, beta_t))
    p_0 = (_ground_populations(evals) if math.isinf(beta_0)
           else _gibbs_populations(evals, beta_0))
    support = p_0 > 0.0
    if float(np.sum(p_t[~support])) > 1e-12:
        return math.inf
    mask = support & (p_t > 0.0)
    return float(np.sum(p_t[mask] * (np.log(p_t[mask]) - np.log(p_0[mask]))))


def _golden_minimize(fun: Callable[[float], float], lo: float, hi: float,
                     tol: float) -> float:
    """Golden-section minimum of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def _scan_then_golden(fun: Callable[[float], float], lo: float, hi: float,
                      tol: float, n_scan: int = 64) -> float:
    """Coarse scan to bracket the global minimum, then golden-section refine."""
    xs = np.linspace(lo, hi, n_scan)
    vals = [fun(float(x)) for x in xs]
    k = int(np.argmin(vals))
    a = float(xs[max(k - 1, 0)])
    b = float(xs[min(k + 1, n_scan - 1)])
    return _golden_minimize(fun, a, b, tol)


def accessible_sigma(
    h_b: Operator,
    family: Callable[[float], np.ndarray],
    rho_b0: DensityMatrix,
    rho_bt: DensityMatrix,
    ds_a: float,
    beta0: float,
    alpha_range: tuple[float, float] = (-math.pi, math.pi),
) -> float:
    """Entropy production when only one family of unitaries counts as work.

    ``family`` maps a scalar parameter to a unitary matrix on B.  The
    initial state must lie on the family orbit of the reference Gibbs state
    w[beta0] (checked by fitting the parameter and comparing states); the
    heat then includes every resource the family cannot extract, and the
    returned production is nonnegative.
    """
    w_ref = thermal_state(h_b, beta0)

    def misfit(alpha: float) -> float:
        u = family(alpha)
        moved = u @ rho_b0.entries @ u.conj().T
        return float(np.max(np.abs(moved - w_ref.entries)))

    alpha0 = _scan_then_golden(misfit, alpha_range[0], alpha_range[1], 1e-8)
    if misfit(alpha0) > 1e-8:
        raise ValueError("initial state outside family orbit")

    def rotated_energy(alpha: float) -> float:
        u = family(alpha)
        moved = u @ rho_bt.entries @ u.conj().T
        return float(np.trace(h_b.entries @ moved).real)

    alpha_t = _scan_then_golden(rotated_energy, alpha_range[0],
                                alpha_range[1], 1e-8)
    q_acc = -(rotated_energy(alpha_t) - h_b.expectation(w_ref))
    return ds_a - beta0 * q_acc
