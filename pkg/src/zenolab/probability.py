"""Scalar functionals of states: detection probability, state overlap,
and the initial decay rate.

The central distinction maintained here is between the overlap
``autocorrelation(rho0, rho_t) = Tr(rho0 rho_t)``, which is invariant
under shifting the preparation time and is an even function of the lag,
and the observable probability ``probability(Lambda, rho_t)``, which has
neither property.  ``derivative_probe`` measures both derivatives two
ways (shifted origin vs direct lag) so the contrast can be tested
numerically rather than argued.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, StructuralError
from .operators import (
    DensityOperator,
    Operator,
    commutator_norm,
    evolve,
    max_abs,
    tolerances,
)

__all__ = [
    "ProbabilityValue",
    "WeightedObservable",
    "probability",
    "autocorrelation",
    "initial_decay_rate",
    "zeno_condition_holds",
    "central_difference",
    "default_step",
    "DerivativeProbe",
    "derivative_probe",
]


@dataclass(frozen=True, eq=False)
class ProbabilityValue:
    """A probability with its raw pre-clamp value retained.

    Construction rejects values outside [0, 1] by more than
    ``tolerances.numeric``; within that band, ``value`` clamps the
    rounding residue away while ``raw`` keeps it for diagnostics.
    """

    raw: float

    def __post_init__(self):
        raw = float(self.raw)
        tol = tolerances.numeric
        if not np.isfinite(raw) or raw < -tol or raw > 1.0 + tol:
            raise StructuralError(f"probability {raw!r} outside [0, 1] beyond tolerance {tol:.1e}")
        object.__setattr__(self, "raw", raw)

    @property
    def value(self) -> float:
        return min(max(self.raw, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class WeightedObservable:
    """Weighted sum of projectors, weights in [0, 1].

    Weight w_l is read as the detection efficiency of outcome l; the
    assembled operator is Sum_l w_l chi_l.  When the projectors are
    mutually orthogonal the assembled spectrum must land in [0, 1].
    Overlapping projectors are accepted but flagged via ``overlapping``
    since the efficiency reading no longer applies term by term.

    Weights participate only in probability evaluation.  Collapse after
    a measurement always uses a bare projector, never a weighted sum.
    """

    terms: tuple
    matrix: np.ndarray = field(init=False, repr=False)
    orthogonal: bool = field(init=False)

    def __post_init__(self):
        terms = tuple((float(w), chi) for w, chi in self.terms)
        if not terms:
            raise ValueError("weighted observable needs at least one term")
        dims = {chi.dim for _, chi in terms}
        if len(dims) > 1:
            raise DimensionMismatchError(f"projector dimensions differ: {sorted(dims)}")
        tol = tolerances.structural
        for weight, chi in terms:
            if not np.isfinite(weight) or weight < 0.0 or weight > 1.0:
                raise ValueError(f"weight {weight!r} outside [0, 1]")
            m = chi.entries
            if max_abs(m - m.conj().T) > tol or max_abs(m @ m - m) > tol:
                raise StructuralError("weighted observable terms must be orthogonal projectors")
        orthogonal = True
        for i in range(len(terms)):
            for j in range(i + 1, len(terms)):
                if max_abs(terms[i][1].entries @ terms[j][1].entries) > tol:
                    orthogonal = False
                    break
            if not orthogonal:
                break
        matrix = sum(w * chi.entries for w, chi in terms)
        if orthogonal:
            spectrum = np.linalg.eigvalsh(matrix)
            if spectrum[0] < -tol or spectrum[-1] > 1.0 + tol:
                raise StructuralError(
                    f"assembled spectrum [{spectrum[0]:.3e}, {spectrum[-1]:.3e}] escapes [0, 1]"
                )
        matrix.setflags(write=False)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "orthogonal", orthogonal)

    @property
    def overlapping(self) -> bool:
        return not self.orthogonal

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim

    @classmethod
    def from_projector(cls, chi: Operator, weight: float = 1.0) -> "WeightedObservable":
        return cls(((weight, chi),))


def _real_trace_product(a: np.ndarray, b: np.ndarray, what: str) -> float:
    value = complex(np.trace(a @ b))
    if abs(value.imag) > tolerances.numeric:
        raise StructuralError(
            f"{what} has imaginary part {value.imag:.3e}; inputs are corrupted"
        )
    return float(value.real)


def probability(observable: WeightedObservable, rho: DensityOperator) -> ProbabilityValue:
    """Detection probability Tr(Lambda rho)."""
    if observable.dim != rho.dim:
        raise DimensionMismatchError(
            f"observable dim {observable.dim} vs state dim {rho.dim}"
        )
    raw = _real_trace_product(observable.matrix, rho.matrix, "probability")
    return ProbabilityValue(raw)


def autocorrelation(rho0: DensityOperator, rho_t: DensityOperator) -> float:
    """State overlap Tr(rho0 rho_t); symmetric in its arguments."""
    if rho0.dim != rho_t.dim:
        raise DimensionMismatchError(f"state dims {rho0.dim} vs {rho_t.dim}")
    return _real_trace_product(rho0.matrix, rho_t.matrix, "autocorrelation")


def initial_decay_rate(
    rho: DensityOperator,
    observable: WeightedObservable,
    hamiltonian: Operator,
    hbar: float = 1.0,
) -> float:
    """Initial rate (i/hbar)(Tr(rho Lambda H) - Tr(Lambda rho H)).

    Equals -dP/dt of the detection probability at the preparation
    instant.  Vanishes identically when the state commutes with either
    the observable or the Hamiltonian.
    """
    if not (rho.dim == observable.dim == hamiltonian.dim):
        raise DimensionMismatchError(
            f"dims differ: state {rho.dim}, observable {observable.dim}, "
            f"hamiltonian {hamiltonian.dim}"
        )
    if not np.isfinite(hbar) or hbar <= 0.0:
        raise ValueError("hbar must be positive and finite")
    h = hamiltonian.entries
    skew = max_abs(h - h.conj().T)
    if skew > tolerances.structural:
        raise StructuralError(f"hamiltonian must be hermitian (deviation {skew:.3e})")
    r = rho.matrix
    lam = observable.matrix
    value = (1.0j / hbar) * (np.trace(r @ lam @ h) - np.trace(lam @ r @ h))
    scale = max(1.0, max_abs(h) / hbar)
    if abs(value.imag) > tolerances.numeric * scale:
        raise StructuralError(f"decay rate has imaginary part {value.imag:.3e}")
    return float(value.real)


def zeno_condition_holds(rho: DensityOperator, chi: Operator, tol: float) -> bool:
    """Whether the state commutes with the next measurement projector."""
    if tol < 0.0 or not np.isfinite(tol):
        raise ValueError("tolerance must be nonnegative and finite")
    return commutator_norm(rho.op, chi) <= tol


def central_difference(f: Callable[[float], float], x: float, h: float, richardson: bool = False) -> float:
    """Symmetric difference quotient, optionally Richardson-refined."""
    if h <= 0.0 or not np.isfinite(h):
        raise ValueError("step must be positive and finite")
    coarse = (f(x + h) - f(x - h)) / (2.0 * h)
    if not richardson:
        return coarse
    fine = (f(x + h / 2.0) - f(x - h / 2.0)) / h
    return (4.0 * fine - coarse) / 3.0


def default_step(hamiltonian: Operator, hbar: float = 1.0) -> float:
    """Finite-difference step scaled to the fastest dynamical timescale."""
    scale = max_abs(hamiltonian.entries)
    if scale == 0.0:
        return 1e-5
    return 1e-5 * hbar / scale


@dataclass(frozen=True)
class DerivativeProbe:
    """Four derivative estimates at the same physical instant.

    dp_shifted / dp_direct: detection-probability derivative computed by
    shifting the evolved-from-origin lag vs re-basing at t_star first.
    These agree; the probability derivative does not care how the
    instant is parameterized.

    dc_shifted / dc_direct: the same two constructions applied to the
    overlap with the respective reference state.  dc_direct sits at a
    fresh preparation and vanishes; dc_shifted keeps the original
    reference and in general does not.
    """

    dp_shifted: float
    dp_direct: float
    dc_shifted: float
    dc_direct: float
    step: float


def derivative_probe(
    rho0: DensityOperator,
    hamiltonian: Operator,
    observable: WeightedObservable,
    t_star: float,
    h: float | None = None,
    hbar: float = 1.0,
) -> DerivativeProbe:
    """Finite-difference probe of P and C derivatives at ``t_star``."""
    if h is None:
        h = default_step(hamiltonian, hbar)
    if h <= 0.0 or not np.isfinite(h):
        raise ValueError("step must be positive and finite")
    if not np.isfinite(t_star):
        raise ValueError("t_star must be finite")

    def p_from_origin(delta: float) -> float:
        return probability(observable, evolve(rho0, hamiltonian, delta, hbar)).raw

    rho_star = evolve(rho0, hamiltonian, t_star, hbar)

    def p_from_star(lag: float) -> float:
        return probability(observable, evolve(rho_star, hamiltonian, lag, hbar)).raw

    def c_from_origin(delta: float) -> float:
        return autocorrelation(rho0, evolve(rho0, hamiltonian, delta, hbar))

    def c_from_star(lag: float) -> float:
        return autocorrelation(rho_star, evolve(rho_star, hamiltonian, lag, hbar))

    return DerivativeProbe(
        dp_shifted=central_difference(p_from_origin, t_star, h),
        dp_direct=central_difference(p_from_star, 0.0, h),
        dc_shifted=central_difference(c_from_origin, t_star, h),
        dc_direct=central_difference(c_from_star, 0.0, h),
        step=h,
    )
