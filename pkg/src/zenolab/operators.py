"""Dense complex operators on finite Hilbert spaces.

Everything downstream is built from three value types defined here:
``Operator`` (a square complex matrix with a validated structural tag),
``DensityOperator`` (unit-trace positive hermitian state), and
``StateVector`` (unit-norm amplitudes).  Matrix data is stored read-only,
so instances can be shared freely and all functions stay pure.

Time evolution is generated by hermitian Hamiltonians through the exact
spectral form of the matrix exponential: diagonalize once, exponentiate
the eigenvalues, transform back.  That keeps propagators unitary to
rounding for any duration instead of degrading like a truncated series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, StructuralError

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULIS",
    "Tolerances",
    "tolerances",
    "max_abs",
    "Operator",
    "DensityOperator",
    "StateVector",
    "projector_onto",
    "propagator",
    "evolve",
    "commutator_norm",
    "spectral_decompose",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
for _m in PAULIS:
    _m.setflags(write=False)


@dataclass
class Tolerances:
    """Global numerical tolerances.

    ``structural`` guards construction-time invariants (hermiticity,
    unitarity, idempotency, trace, positivity).  ``numeric`` guards
    algebraic identities checked after a computation.
    """

    structural: float = 1e-10
    numeric: float = 1e-9


tolerances = Tolerances()


def max_abs(matrix) -> float:
    """Entrywise max-modulus norm, the norm used by every structural check."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix)))


def _as_square_complex(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise StructuralError(
            f"operator entries must form a nonempty square matrix, got shape {m.shape}"
        )
    if not np.all(np.isfinite(m)):
        raise StructuralError("operator entries must be finite")
    return m


_KINDS = ("general", "hermitian", "unitary", "projector")


@dataclass(frozen=True, eq=False)
class Operator:
    """A dim x dim complex matrix with a structural tag.

    The tag is enforced on construction: ``hermitian`` and ``projector``
    require self-adjointness, ``unitary`` requires U*U = 1, and
    ``projector`` additionally requires idempotency, all within
    ``tolerances.structural`` in the max-modulus norm.
    """

    entries: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = _as_square_complex(self.entries)
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        tol = tolerances.structural
        if self.kind in ("hermitian", "projector"):
            skew = max_abs(m - m.conj().T)
            if skew > tol:
                raise StructuralError(
                    f"{self.kind} operator is not self-adjoint (deviation {skew:.3e})"
                )
        if self.kind == "unitary":
            defect = max_abs(m.conj().T @ m - np.eye(m.shape[0]))
            if defect > tol:
                raise StructuralError(f"unitary defect {defect:.3e} exceeds {tol:.1e}")
        if self.kind == "projector":
            defect = max_abs(m @ m - m)
            if defect > tol:
                raise StructuralError(f"projector is not idempotent (deviation {defect:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim, dtype=complex), kind="projector")


def projector_onto(amplitudes) -> Operator:
    """Rank-one projector onto the ray of a nonzero amplitude vector."""
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.all(np.isfinite(v)):
        raise StructuralError("cannot project onto a zero or non-finite vector")
    v = v / norm
    return Operator(np.outer(v, v.conj()), kind="projector")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm complex amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise StructuralError("state vector must be nonempty and finite")
        defect = abs(float(np.vdot(v, v).real) - 1.0)
        if defect > tolerances.structural:
            raise StructuralError(f"state vector norm deviates from 1 by {defect:.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise StructuralError("cannot normalize a zero vector")
        return cls(v / norm)

    def density(self) -> "DensityOperator":
        return DensityOperator.pure(self.amplitudes)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace state.

    Positivity violations beyond ``tolerances.structural`` are errors,
    never silently clamped; garbage states fail loudly at the boundary
    where they are produced.
    """

    op: Operator

    def __post_init__(self):
        if not isinstance(self.op, Operator) or self.op.kind != "hermitian":
            raise StructuralError("density operator wraps a hermitian-tagged Operator")
        m = self.op.entries
        tol = tolerances.structural
        trace_defect = abs(float(np.trace(m).real) - 1.0)
        if trace_defect > tol:
            raise StructuralError(f"density trace deviates from 1 by {trace_defect:.3e}")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -tol:
            raise StructuralError(f"density operator has negative eigenvalue {smallest:.3e}")
        purity = self.purity
        dim = m.shape[0]
        if purity < 1.0 / dim - tol or purity > 1.0 + tol:
            raise StructuralError(f"purity {purity:.6f} outside [1/{dim}, 1]")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def purity(self) -> float:
        m = self.op.entries
        return float(np.vdot(m, m).real)

    @classmethod
    def from_matrix(cls, matrix) -> "DensityOperator":
        return cls(Operator(matrix, kind="hermitian"))

    @classmethod
    def pure(cls, amplitudes) -> "DensityOperator":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0.0 or not np.all(np.isfinite(v)):
            raise StructuralError("cannot build a pure state from a zero or non-finite vector")
        v = v / norm
        return cls.from_matrix(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls.from_matrix(np.eye(dim, dtype=complex) / dim)


def _require_hermitian(op: Operator, what: str) -> np.ndarray:
    m = op.entries
    skew = max_abs(m - m.conj().T)
    if skew > tolerances.structural:
        raise StructuralError(f"{what} must be hermitian (deviation {skew:.3e})")
    return m


def _require_same_dim(*dims: int) -> None:
    if len(set(dims)) > 1:
        raise DimensionMismatchError(f"dimension mismatch: {dims}")


def propagator(hamiltonian: Operator, t: float, hbar: float = 1.0) -> Operator:
    """Unitary exp(-i H t / hbar) via spectral decomposition of H."""
    m = _require_hermitian(hamiltonian, "hamiltonian")
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("duration must be finite")
    hbar = float(hbar)
    if not np.isfinite(hbar) or hbar <= 0.0:
        raise ValueError("hbar must be positive and finite")
    energies, basis = np.linalg.eigh(m)
    phases = np.exp(-1.0j * energies * (t / hbar))
    u = (basis * phases) @ basis.conj().T
    return Operator(u, kind="unitary")


def evolve(rho: DensityOperator, hamiltonian: Operator, delta: float, hbar: float = 1.0) -> DensityOperator:
    """Conjugate a state by the propagator for duration ``delta``."""
    _require_same_dim(rho.dim, hamiltonian.dim)
    u = propagator(hamiltonian, delta, hbar).entries
    return DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T)


def commutator_norm(a: Operator, b: Operator) -> float:
    """Max-modulus norm of the commutator AB - BA."""
    _require_same_dim(a.dim, b.dim)
    am, bm = a.entries, b.entries
    return max_abs(am @ bm - bm @ am)


def spectral_decompose(a: Operator) -> list[tuple[float, Operator]]:
    """Eigenvalues with their eigenprojectors, degeneracies merged.

    Eigenvalues closer than ``tolerances.numeric`` (scaled by the
    spectral radius) are treated as one degenerate level so the returned
    projectors are mutually orthogonal and complete.
    """
    m = _require_hermitian(a, "operand of spectral_decompose")
    energies, basis = np.linalg.eigh(m)
    scale = max(1.0, max_abs(energies))
    gap_tol = tolerances.numeric * scale
    decomposition: list[tuple[float, Operator]] = []
    start = 0
    for stop in range(1, len(energies) + 1):
        if stop == len(energies) or energies[stop] - energies[stop - 1] > gap_tol:
            block = basis[:, start:stop]
            projector = Operator(block @ block.conj().T, kind="projector")
            decomposition.append((float(energies[start:stop].mean()), projector))
            start = stop
    return decomposition
