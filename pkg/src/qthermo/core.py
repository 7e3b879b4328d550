"""Dense complex linear algebra on small composite Hilbert spaces.

Operators and states are explicit complex matrices; every spectral
computation goes through numpy's Hermitian solvers so eigenvalues are real
and eigenbases orthonormal.  Dimensions stay small (tens, not thousands),
which keeps exact propagation and repeated eigendecompositions cheap.

All quantities use natural units (hbar = k_B = 1); entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Operator",
    "DensityMatrix",
    "SubsystemLayout",
    "UnitaryPropagator",
    "tensor_embed",
    "partial_trace",
    "propagator",
    "evolve",
    "vn_entropy",
    "relative_entropy",
    "correlation_info",
    "trace_distance",
]

# Validation tolerances.  Density-matrix spectra in [-EIG_FLOOR, 0) are
# round-off and get clipped; anything below -EIG_FLOOR is a real violation.
HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIG_FLOOR = 1e-12
UNITARITY_ATOL = 1e-10
SUPPORT_CUTOFF = 1e-14


def _as_square_matrix(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    m = np.array(m)  # private copy; callers keep their buffer
    m.setflags(write=False)
    return m


def _hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on a (possibly composite) Hilbert space.

    The ``hermitian`` flag is a promise checked at construction time; code
    that needs real spectra (propagators, Gibbs states) requires it.
    """

    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_square_matrix(self.entries))
        if self.hermitian:
            defect = _hermiticity_defect(self.entries)
            if defect > HERMITICITY_ATOL:
                raise ValueError(
                    f"operator flagged hermitian but max |M - M^dag| = {defect:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and eigenvectors; requires the hermitian flag."""
        if not self.hermitian:
            raise ValueError("eigh requires a hermitian operator")
        return np.linalg.eigh(self.entries)

    def expectation(self, rho: "DensityMatrix") -> float:
        """Real expectation value Tr{M rho} for a hermitian operator."""
        if not self.hermitian:
            raise ValueError("expectation requires a hermitian operator")
        if rho.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {rho.dim}")
        return float(np.trace(self.entries @ rho.entries).real)

    def __add__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return Operator(self.entries + other.entries,
                        hermitian=self.hermitian and other.hermitian)

    def __mul__(self, scale: float) -> "Operator":
        if not isinstance(scale, (int, float)):
            return NotImplemented
        return Operator(self.entries * scale, hermitian=self.hermitian)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive, unit-trace, Hermitian matrix: the simulation state."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_square_matrix(self.entries))
        defect = _hermiticity_defect(self.entries)
        if defect > HERMITICITY_ATOL:
            raise ValueError(f"density matrix not hermitian: defect {defect:.3e}")
        tr = float(np.trace(self.entries).real)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr!r} differs from 1")
        spectrum = np.linalg.eigvalsh(self.entries)
        if float(spectrum[0]) < -EIG_FLOOR:
            raise ValueError(
                f"density matrix has eigenvalue {spectrum[0]:.3e} < -{EIG_FLOOR}")
        spectrum.setflags(write=False)
        object.__setattr__(self, "_spectrum", spectrum)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigvals(self) -> np.ndarray:
        """Eigenvalues ascending, clipped to [0, 1] after the floor check."""
        return np.clip(self._spectrum, 0.0, 1.0)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered subsystem dimensions and labels of a composite space.

    Slot 0 is the leftmost tensor factor; composite indices are row-major,
    so the joint basis state |a, b, ...> has index ((a*d_1)+b)*d_2 + ...
    """

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels must have equal length")
        if len(self.dims) < 2:
            raise ValueError("composite layout needs at least two subsystems")
        if any(d < 1 for d in self.dims):
            raise ValueError("subsystem dimensions must be positive")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]


@dataclass(frozen=True, eq=False)
class UnitaryPropagator:
    """Unitary matrix; U U^dag = 1 is checked at construction."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_square_matrix(self.entries))
        defect = float(np.max(np.abs(
            self.entries @ self.entries.conj().T - np.eye(self.dim))))
        if defect > UNITARITY_ATOL:
            raise ValueError(f"matrix is not unitary: max defect {defect:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def tensor_embed(op: Operator, layout: SubsystemLayout,
                 slots: Sequence[str]) -> Operator:
    """Embed ``op`` so it acts on the named slots and as identity elsewhere.

    ``slots`` lists the subsystem labels in the order of the tensor factors
    of ``op``; non-contiguous or permuted slots are handled by index
    permutation.
    """
    slots = list(slots)
    if not slots:
        raise ValueError("slots must name at least one subsystem")
    slot_idx = [layout.index(s) for s in slots]
    if len(set(slot_idx)) != len(slot_idx):
        raise ValueError("slots must be distinct")
    dims = layout.dims
    n = layout.n_subsystems
    d_slots = int(np.prod([dims[i] for i in slot_idx]))
    if op.dim != d_slots:
        raise ValueError(
            f"operator dim {op.dim} does not match slots {slots} (dim {d_slots})")
    rest = [i for i in range(n) if i not in slot_idx]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    big = np.kron(op.entries, np.eye(d_rest, dtype=complex))
    order = slot_idx + rest  # tensor-factor order of `big`
    shape = [dims[i] for i in order]
    tens = big.reshape(shape + shape)
    perm = list(np.argsort(order))
    tens = tens.transpose(perm + [p + n for p in perm])
    full = tens.reshape(layout.dim, layout.dim)
    return Operator(full, hermitian=op.hermitian)


def partial_trace(rho: DensityMatrix, layout: SubsystemLayout,
                  keep: Sequence[str] | str) -> DensityMatrix:
    """Reduced state on the kept subsystems (in layout order)."""
    if isinstance(keep, str):
        keep = [keep]
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    keep_idx = sorted(layout.index(s) for s in keep)
    if len(set(keep_idx)) != len(keep_idx):
        raise ValueError("keep labels must be distinct")
    if rho.dim != layout.dim:
        raise ValueError(f"state dim {rho.dim} does not match layout dim {layout.dim}")
    dims = layout.dims
    n = layout.n_subsystems
    keep_set = set(keep_idx)
    tens = rho.entries.reshape(dims + dims)
    row = list(range(n))
    col = [n + i if i in keep_set else i for i in range(n)]
    out = [i for i in keep_idx] + [n + i for i in keep_idx]
    red = np.einsum(tens, row + col, out)
    d_keep = int(np.prod([dims[i] for i in keep_idx]))
    return DensityMatrix(red.reshape(d_keep, d_keep))


def propagator(h: Operator, dt: float) -> UnitaryPropagator:
    """exp(-i H dt) via the Hermitian eigendecomposition of H."""
    if not h.hermitian:
        raise ValueError("propagator requires a hermitian generator")
    evals, vecs = h.eigh()
    phases = np.exp(-1j * evals * dt)
    u = (vecs * phases) @ vecs.conj().T
    return UnitaryPropagator(u)


def evolve(rho: DensityMatrix, u: UnitaryPropagator) -> DensityMatrix:
    """U rho U^dag."""
    if rho.dim != u.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {u.dim}")
    return DensityMatrix(u.entries @ rho.entries @ u.entries.conj().T)


def vn_entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy -Tr{rho log rho} in nats, with 0 log 0 = 0."""
    p = rho.eigvals()
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def _spectral_entropy(p: np.ndarray) -> float:
    q = p[p > 0.0]
    return float(-np.sum(q * np.log(q)))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Relative entropy Tr{rho (log rho - log sigma)} on the support of sigma.

    Returns ``math.inf`` when rho has weight outside the support of sigma
    (eigenvalue cutoff ``SUPPORT_CUTOFF``).
    """
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    svals, svecs = np.linalg.eigh(sigma.entries)
    svals = np.clip(svals, 0.0, 1.0)
    weights = np.einsum("ij,jk,ki->i", svecs.conj().T, rho.entries, svecs).real
    on_support = svals > SUPPORT_CUTOFF
    leak = float(np.sum(weights[~on_support]))
    if leak > 1e-12:
        return math.inf
    cross = float(np.sum(weights[on_support] * np.log(svals[on_support])))
    return -_spectral_entropy(rho.eigvals()) - cross


def correlation_info(rho_tot: DensityMatrix, layout: SubsystemLayout) -> float:
    """Total correlation D(rho || prod of marginals) = sum_i S_i - S_tot.

    The marginal-entropy form is algebraically identical to the relative
    entropy against the product of marginals and is immune to support
    issues.
    """
    if rho_tot.dim != layout.dim:
        raise ValueError(
            f"state dim {rho_tot.dim} does not match layout dim {layout.dim}")
    s_marginals = sum(
        vn_entropy(partial_trace(rho_tot, layout, [label]))
        for label in layout.labels
    )
    return s_marginals - vn_entropy(rho_tot)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Trace distance (1/2)||rho - sigma||_1."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    diff = np.linalg.eigvalsh(rho.entries - sigma.entries)
    return 0.5 * float(np.sum(np.abs(diff)))
