"""Sequences of ideal projective measurements on a single system.

A measurement sequence is a list of (projector, dwell) steps, not a
compound projector: between steps the system evolves unitarily, at each
step the positive outcome is recorded with probability Tr(chi rho) and
the state collapses to chi rho chi / p.  A run "survives" only while
every outcome is positive; the complement outcome is absorption.

Three ways of turning sequences into non-decay curves live here:

* ``conditional_product_curve`` multiplies the per-step conditional
  probabilities exactly (the expectation over outcome randomness for a
  fixed sequence),
* ``monte_carlo_curve`` samples outcome randomness (and, for random-axis
  monitoring, the axis randomness) over seeded trajectories,
* ``random_axis_expectation_curve`` averages the collapse map over the
  axis sphere in closed form for spin-1/2, yielding the exact ensemble
  curve that Monte Carlo estimates.

``zeno_limit_study`` drives the refinement limit n -> infinity at fixed
total duration and reports, next to each engine product, the prediction
obtained by accumulating the per-step initial decay rates of the states
actually prepared.

Monte Carlo determinism: trajectory j draws from a dedicated generator
seeded by (seed, j), so tallies are independent of execution order and
identical for any thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._version import __version__ as _version
from .errors import DimensionMismatchError, StructuralError, ZeroProbabilityBranchError
from .fileio import atomic_write_bytes, atomic_write_text
from .operators import (
    PAULIS,
    DensityOperator,
    Operator,
    max_abs,
    propagator,
    tolerances,
)
from .probability import WeightedObservable, initial_decay_rate

__all__ = [
    "P_FLOOR",
    "CSV_COLUMNS",
    "spin_projector",
    "MeasurementSequence",
    "random_axis_sequence",
    "collapse",
    "Trajectory",
    "simulate_trajectory",
    "DecayCurve",
    "conditional_product_curve",
    "ZenoLimitPoint",
    "zeno_limit_study",
    "monte_carlo_curve",
    "random_axis_expectation_curve",
    "ExponentialFit",
    "fit_exponential",
]

P_FLOOR = 1e-12
AXIS_ALIGNMENT_TOL = 1e-12
CSV_COLUMNS = ("step", "time", "nondecay_prob", "stderr")
CURVE_SCHEMA_VERSION = 1


def _axis_projector(axis: np.ndarray) -> Operator:
    m = 0.5 * (np.eye(2, dtype=complex) + sum(axis[i] * PAULIS[i] for i in range(3)))
    return Operator(m, kind="projector")


def spin_projector(theta: float, phi: float) -> Operator:
    """Spin-1/2 projector onto "up" along the (theta, phi) axis: (1 + n.sigma)/2."""
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise ValueError("angles must be finite")
    axis = np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )
    return _axis_projector(axis)


def _validate_projector(chi: Operator) -> np.ndarray:
    m = chi.entries
    tol = tolerances.structural
    if max_abs(m - m.conj().T) > tol or max_abs(m @ m - m) > tol:
        raise StructuralError("measurement requires an orthogonal projector")
    return m


@dataclass(frozen=True, eq=False)
class MeasurementSequence:
    """Ordered (projector, dwell) steps sharing one Hilbert space.

    ``generator`` records how the sequence was produced ("fixed",
    "random_axis" or "custom") with reproduction parameters in
    ``params``; the steps themselves are always materialized.
    """

    steps: tuple
    generator: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        steps = tuple((chi, float(dwell)) for chi, dwell in self.steps)
        if not steps:
            raise ValueError("measurement sequence needs at least one step")
        dims = {chi.dim for chi, _ in steps}
        if len(dims) > 1:
            raise DimensionMismatchError(f"step dimensions differ: {sorted(dims)}")
        for chi, dwell in steps:
            _validate_projector(chi)
            if dwell < 0.0 or not np.isfinite(dwell):
                raise ValueError(f"dwell {dwell!r} must be nonnegative and finite")
        total = sum(dwell for _, dwell in steps)
        if not np.isfinite(total):
            raise ValueError("total duration must be finite")
        object.__setattr__(self, "steps", steps)

    @property
    def dim(self) -> int:
        return self.steps[0][0].dim

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def total_duration(self) -> float:
        return float(sum(dwell for _, dwell in self.steps))

    def times(self) -> np.ndarray:
        """Cumulative measurement times, one per step."""
        return np.cumsum([dwell for _, dwell in self.steps])

    @classmethod
    def fixed(cls, chi: Operator, n: int, total_duration: float) -> "MeasurementSequence":
        if n < 1:
            raise ValueError("need at least one step")
        if total_duration < 0.0 or not np.isfinite(total_duration):
            raise ValueError("total duration must be nonnegative and finite")
        dwell = total_duration / n
        return cls(
            steps=tuple((chi, dwell) for _ in range(n)),
            generator="fixed",
            params={"n": n, "total_duration": total_duration},
        )


def _sample_axis(rng: np.random.Generator, previous: np.ndarray | None) -> np.ndarray:
    # Area-uniform: cos(theta) ~ U[-1, 1], phi ~ U[0, 2pi).
    while True:
        c = rng.uniform(-1.0, 1.0)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        s = math.sqrt(max(0.0, 1.0 - c * c))
        axis = np.array([s * math.cos(phi), s * math.sin(phi), c])
        if previous is None:
            return axis
        # Consecutive repeats defeat the purpose of changing the axis; the
        # collision threshold is an angle of AXIS_ALIGNMENT_TOL radians.
        if 1.0 - float(axis @ previous) > 0.5 * AXIS_ALIGNMENT_TOL**2:
            return axis


def _random_axis_steps(rng: np.random.Generator, n: int, total_duration: float) -> tuple:
    dwell = total_duration / n
    steps = []
    previous = None
    for _ in range(n):
        axis = _sample_axis(rng, previous)
        steps.append((_axis_projector(axis), dwell))
        previous = axis
    return tuple(steps)


def random_axis_sequence(n: int, total_duration: float, seed: int) -> MeasurementSequence:
    """Spin-1/2 sequence of n area-uniform random axes with equal dwell."""
    if n < 1:
        raise ValueError("need at least one step")
    if total_duration < 0.0 or not np.isfinite(total_duration):
        raise ValueError("total duration must be nonnegative and finite")
    rng = np.random.default_rng(seed)
    return MeasurementSequence(
        steps=_random_axis_steps(rng, n, total_duration),
        generator="random_axis",
        params={"seed": int(seed), "spin": 0.5, "n": n, "total_duration": total_duration},
    )


def collapse(rho: DensityOperator, chi: Operator, p_floor: float = P_FLOOR) -> tuple[float, DensityOperator]:
    """Positive-outcome probability and the conditioned post-measurement state.

    Raises ZeroProbabilityBranchError when the outcome probability does
    not exceed ``p_floor``; conditioning on a measure-zero branch is the
    caller's bug, not a state.
    """
    m = _validate_projector(chi)
    if rho.dim != chi.dim:
        raise DimensionMismatchError(f"state dim {rho.dim} vs projector dim {chi.dim}")
    p = complex(np.trace(m @ rho.matrix))
    if abs(p.imag) > tolerances.numeric:
        raise StructuralError(f"outcome probability has imaginary part {p.imag:.3e}")
    p = float(p.real)
    if p <= p_floor:
        raise ZeroProbabilityBranchError(
            f"outcome probability {p:.3e} at or below floor {p_floor:.1e}"
        )
    conditioned = m @ rho.matrix @ m / p
    return min(p, 1.0), DensityOperator.from_matrix(conditioned)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One realized measurement record.

    ``states`` holds the prepared states (initial state first, then the
    post-collapse state after each positive outcome); ``outcomes`` the
    recorded booleans, ending either with the first absorption or after
    the final step.  ``joint_log_prob`` is the log-probability of the
    realized record.
    """

    states: tuple
    outcomes: tuple
    joint_log_prob: float
    rng_stream_id: int


def simulate_trajectory(
    rho0: DensityOperator,
    hamiltonian: Operator,
    sequence: MeasurementSequence,
    seed: int,
    stream_id: int = 0,
    hbar: float = 1.0,
) -> Trajectory:
    """Sample one trajectory through ``sequence`` from stream (seed, stream_id)."""
    if rho0.dim != sequence.dim or rho0.dim != hamiltonian.dim:
        raise DimensionMismatchError("state, hamiltonian and sequence dimensions differ")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), int(stream_id))))
    propagators = _dwell_propagators(hamiltonian, sequence, hbar)
    states = [rho0]
    outcomes = []
    log_prob = 0.0
    rho = rho0
    for (chi, dwell), u in zip(sequence.steps, propagators):
        evolved = DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T)
        p = float(np.trace(chi.entries @ evolved.matrix).real)
        p = min(max(p, 0.0), 1.0)
        found = bool(rng.random() < p)
        outcomes.append(found)
        if not found:
            log_prob += math.log(max(1.0 - p, 1e-300))
            break
        log_prob += math.log(max(p, 1e-300))
        _, rho = collapse(evolved, chi)
        states.append(rho)
    return Trajectory(
        states=tuple(states),
        outcomes=tuple(outcomes),
        joint_log_prob=log_prob,
        rng_stream_id=int(stream_id),
    )


def _dwell_propagators(hamiltonian: Operator, sequence: MeasurementSequence, hbar: float) -> list:
    cache: dict[float, np.ndarray] = {}
    out = []
    for _, dwell in sequence.steps:
        if dwell not in cache:
            cache[dwell] = propagator(hamiltonian, dwell, hbar).entries
        out.append(cache[dwell])
    return out


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


@dataclass(frozen=True, eq=False)
class DecayCurve:
    """Non-decay probability against time.

    ``stderr`` is present only for Monte Carlo estimates.  ``meta``
    carries the provenance needed to reproduce the curve (generator,
    seed, model summary); it is emitted verbatim into the JSON sidecar.
    """

    times: np.ndarray
    nondecay_prob: np.ndarray
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        probs = np.array(self.nondecay_prob, dtype=float)
        if times.ndim != 1 or times.shape != probs.shape or times.size == 0:
            raise ValueError("times and nondecay_prob must be equal-length nonempty 1-d arrays")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(probs)):
            raise ValueError("curve data must be finite")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        tol = tolerances.numeric
        if probs.min() < -tol or probs.max() > 1.0 + tol:
            raise StructuralError("nondecay probabilities escape [0, 1] beyond tolerance")
        times.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "nondecay_prob", probs)
        if self.stderr is not None:
            err = np.array(self.stderr, dtype=float)
            if err.shape != times.shape or not np.all(np.isfinite(err)) or err.min() < 0.0:
                raise ValueError("stderr must match times and be nonnegative finite")
            err.setflags(write=False)
            object.__setattr__(self, "stderr", err)

    @property
    def n_points(self) -> int:
        return self.times.size

    def csv_bytes(self) -> bytes:
        """RFC-4180-style body: header row, CRLF, shortest round-trip floats."""
        lines = [",".join(CSV_COLUMNS)]
        for step in range(self.n_points):
            err = "" if self.stderr is None else repr(float(self.stderr[step]))
            lines.append(
                f"{step},{repr(float(self.times[step]))},"
                f"{repr(float(self.nondecay_prob[step]))},{err}"
            )
        return ("\r\n".join(lines) + "\r\n").encode("ascii")

    def sidecar_dict(self) -> dict:
        return {
            "schema_version": CURVE_SCHEMA_VERSION,
            "tool": "zenolab",
            "tool_version": _version,
            "columns": list(CSV_COLUMNS),
            "n_points": int(self.n_points),
            "meta": _jsonable(self.meta),
        }

    def write(self, csv_path, sidecar_path=None) -> None:
        """Atomically write the CSV and (optionally) its JSON sidecar."""
        atomic_write_bytes(csv_path, self.csv_bytes())
        if sidecar_path is not None:
            atomic_write_text(
                sidecar_path, json.dumps(self.sidecar_dict(), indent=2, sort_keys=True) + "\n"
            )


def conditional_product_curve(
    rho0: DensityOperator,
    hamiltonian: Operator,
    sequence: MeasurementSequence,
    hbar: float = 1.0,
) -> DecayCurve:
    """Running product of per-step conditional probabilities.

    Each factor is recomputed from the state actually prepared at the
    previous step; nothing is assumed stationary.  If a step's positive
    outcome has probability at or below the floor, the curve terminates
    there and the extinction step is recorded in ``meta``.
    """
    if rho0.dim != sequence.dim or rho0.dim != hamiltonian.dim:
        raise DimensionMismatchError("state, hamiltonian and sequence dimensions differ")
    propagators = _dwell_propagators(hamiltonian, sequence, hbar)
    times = [0.0]
    probs = [1.0]
    product = 1.0
    t = 0.0
    rho = rho0
    extinct_at = None
    for index, ((chi, dwell), u) in enumerate(zip(sequence.steps, propagators), start=1):
        evolved = DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T)
        try:
            p, rho = collapse(evolved, chi)
        except ZeroProbabilityBranchError:
            extinct_at = index
            break
        product *= p
        t += dwell
        times.append(t)
        probs.append(product)
    meta = {
        "kind": "conditional_product",
        "generator": sequence.generator,
        "params": _jsonable(sequence.params),
        "hbar": hbar,
        "extinct_at_step": extinct_at,
    }
    return DecayCurve(np.array(times), np.array(probs), None, meta)


@dataclass(frozen=True)
class ZenoLimitPoint:
    """Engine product and rate-based prediction for one refinement level."""

    n: int
    product: float
    predicted: float


def zeno_limit_study(
    rho0: DensityOperator,
    hamiltonian: Operator,
    chi: Operator,
    total_duration: float,
    n_schedule: Sequence[int],
    hbar: float = 1.0,
    sequence_factory: Callable[[int, float], MeasurementSequence] | None = None,
) -> tuple[ZenoLimitPoint, ...]:
    """Refinement study of the n-step conditional product at fixed duration.

    For each n the engine runs the full collapse dynamics and also
    accumulates exp(-sum_i dwell_i / tau_i), where 1/tau_i is the
    initial decay rate of the state prepared before step i against that
    step's projector.  When every preparation commutes with its
    projector all the rates vanish and both columns converge to 1; the
    deficit closes like 1/n.  ``sequence_factory`` overrides the default
    fixed-projector schedule for studies over changing sequences.
    """
    schedule = [int(n) for n in n_schedule]
    if not schedule or any(n < 1 for n in schedule):
        raise ValueError("n_schedule must be nonempty positive integers")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("n_schedule must be strictly increasing")
    if total_duration <= 0.0 or not np.isfinite(total_duration):
        raise ValueError("total duration must be positive and finite")

    points = []
    observable_cache: dict[int, WeightedObservable] = {}
    for n in schedule:
        if sequence_factory is None:
            sequence = MeasurementSequence.fixed(chi, n, total_duration)
        else:
            sequence = sequence_factory(n, total_duration)
            if sequence.dim != rho0.dim:
                raise DimensionMismatchError("sequence_factory produced a wrong-dimension sequence")
        propagators = _dwell_propagators(hamiltonian, sequence, hbar)
        rho = rho0
        product = 1.0
        log_predicted = 0.0
        for (step_chi, dwell), u in zip(sequence.steps, propagators):
            key = id(step_chi)
            if key not in observable_cache:
                observable_cache[key] = WeightedObservable.from_projector(step_chi)
            rate = initial_decay_rate(rho, observable_cache[key], hamiltonian, hbar)
            log_predicted -= dwell * rate
            evolved = DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T)
            try:
                p, rho = collapse(evolved, step_chi)
            except ZeroProbabilityBranchError:
                product = 0.0
                break
            product *= p
        points.append(ZenoLimitPoint(n=n, product=product, predicted=math.exp(log_predicted)))
    return tuple(points)


def _pure_amplitudes(rho: DensityOperator) -> np.ndarray | None:
    if rho.purity < 1.0 - 100.0 * tolerances.structural:
        return None
    values, vectors = np.linalg.eigh(rho.matrix)
    return vectors[:, -1]


def _decay_step_pure(psi0: np.ndarray, step_ops: list, rng: np.random.Generator) -> int:
    psi = psi0
    for k, (u, chi_m) in enumerate(step_ops, start=1):
        psi = u @ psi
        projected = chi_m @ psi
        p = float(np.vdot(psi, projected).real)
        p = min(max(p, 0.0), 1.0)
        if p <= P_FLOOR:
            return k
        if rng.random() >= p:
            return k
        psi = projected / math.sqrt(p)
    return len(step_ops) + 1


def _decay_step_mixed(rho0_m: np.ndarray, step_ops: list, rng: np.random.Generator) -> int:
    rho = rho0_m
    for k, (u, chi_m) in enumerate(step_ops, start=1):
        rho = u @ rho @ u.conj().T
        p = float(np.trace(chi_m @ rho).real)
        p = min(max(p, 0.0), 1.0)
        if p <= P_FLOOR:
            return k
        if rng.random() >= p:
            return k
        rho = chi_m @ rho @ chi_m / p
    return len(step_ops) + 1


def monte_carlo_curve(
    rho0: DensityOperator,
    hamiltonian: Operator,
    generator,
    total_duration: float,
    n: int,
    trajectories: int,
    seed: int,
    hbar: float = 1.0,
    threads: int = 1,
) -> DecayCurve:
    """Monte Carlo estimate of the non-decay curve over seeded trajectories.

    ``generator`` selects the sequence model: an ``Operator`` projector
    (fixed schedule of n equal dwells), a ``MeasurementSequence`` shared
    by all trajectories, the string ``"random_axis"`` (each trajectory
    realizes its own axes), or a callable ``f(rng, n, T)`` returning a
    per-trajectory sequence with the same dwell schedule.

    The estimate at step k is the surviving fraction through k, with
    binomial standard error.  Tallies depend only on (seed, trajectory
    index), never on thread scheduling, so ``threads`` cannot change the
    result.
    """
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    if int(seed) < 0:
        raise ValueError("seed must be a nonnegative integer")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    n = int(n)
    if n < 1:
        raise ValueError("need at least one step")

    shared_sequence = None
    descriptor: dict = {}
    if isinstance(generator, Operator):
        shared_sequence = MeasurementSequence.fixed(generator, n, total_duration)
        descriptor = {"generator": "fixed", "n": n, "total_duration": total_duration}
    elif isinstance(generator, MeasurementSequence):
        shared_sequence = generator
        n = shared_sequence.n_steps
        total_duration = shared_sequence.total_duration
        descriptor = {"generator": shared_sequence.generator, "params": _jsonable(shared_sequence.params)}
    elif generator == "random_axis":
        if rho0.dim != 2:
            raise DimensionMismatchError("random-axis monitoring is defined for spin-1/2 (dim 2)")
        descriptor = {"generator": "random_axis", "n": n, "total_duration": total_duration}
    elif callable(generator):
        descriptor = {"generator": "custom", "n": n, "total_duration": total_duration}
    else:
        raise ValueError(f"unrecognized sequence generator {generator!r}")

    if shared_sequence is not None:
        if shared_sequence.dim != rho0.dim or rho0.dim != hamiltonian.dim:
            raise DimensionMismatchError("state, hamiltonian and sequence dimensions differ")
        shared_ops = [
            (u, chi.entries)
            for (chi, _), u in zip(
                shared_sequence.steps, _dwell_propagators(hamiltonian, shared_sequence, hbar)
            )
        ]
        times = np.concatenate([[0.0], shared_sequence.times()])
    else:
        if rho0.dim != hamiltonian.dim:
            raise DimensionMismatchError("state and hamiltonian dimensions differ")
        dwell = total_duration / n
        dwell_u = propagator(hamiltonian, dwell, hbar).entries
        times = dwell * np.arange(n + 1)

    psi0 = _pure_amplitudes(rho0)
    rho0_m = rho0.matrix

    def run_range(start: int, stop: int) -> np.ndarray:
        counts = np.zeros(n + 2, dtype=np.int64)
        for j in range(start, stop):
            rng = np.random.default_rng(np.random.SeedSequence((int(seed), j)))
            if shared_sequence is not None:
                step_ops = shared_ops
            elif generator == "random_axis":
                steps = _random_axis_steps(rng, n, total_duration)
                step_ops = [(dwell_u, chi.entries) for chi, _ in steps]
            else:
                sequence = generator(rng, n, total_duration)
                if sequence.n_steps != n or sequence.dim != rho0.dim:
                    raise ValueError("per-trajectory sequence must keep n steps and the dimension")
                step_ops = [
                    (u, chi.entries)
                    for (chi, _), u in zip(
                        sequence.steps, _dwell_propagators(hamiltonian, sequence, hbar)
                    )
                ]
            if psi0 is not None:
                decay_step = _decay_step_pure(psi0, step_ops, rng)
            else:
                decay_step = _decay_step_mixed(rho0_m, step_ops, rng)
            counts[decay_step] += 1
        return counts

    if threads == 1 or trajectories < 2 * threads:
        decay_counts = run_range(0, trajectories)
    else:
        from concurrent.futures import ThreadPoolExecutor

        chunk = -(-trajectories // threads)
        ranges = [
            (start, min(start + chunk, trajectories))
            for start in range(0, trajectories, chunk)
        ]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda r: run_range(*r), ranges))
        decay_counts = np.sum(parts, axis=0)

    # survivors[k] = trajectories whose first absorption came after step k
    survivors = trajectories - np.cumsum(decay_counts)[: n + 1]
    fraction = survivors / trajectories
    stderr = np.sqrt(fraction * (1.0 - fraction) / trajectories)
    meta = {
        "kind": "monte_carlo",
        "seed": int(seed),
        "trajectories": int(trajectories),
        "hbar": hbar,
        **descriptor,
    }
    return DecayCurve(times, fraction, stderr, meta)


def random_axis_expectation_curve(
    rho0: DensityOperator,
    hamiltonian: Operator,
    n: int,
    total_duration: float,
    hbar: float = 1.0,
) -> DecayCurve:
    """Exact ensemble non-decay curve for spin-1/2 random-axis monitoring.

    Averaging the conditioned, probability-weighted collapse over an
    area-uniform axis gives the linear map X -> (X + sum_a s_a X s_a / 3)/4,
    whose trace is half the input trace whatever the unitary in between:
    the ensemble curve is exactly 2^-k after k steps, for any Hamiltonian
    including none.
    """
    if rho0.dim != 2 or hamiltonian.dim != 2:
        raise DimensionMismatchError("random-axis monitoring is defined for spin-1/2 (dim 2)")
    if n < 1:
        raise ValueError("need at least one step")
    dwell = total_duration / n
    u = propagator(hamiltonian, dwell, hbar).entries
    block = rho0.matrix.copy()
    probs = [1.0]
    for _ in range(n):
        block = u @ block @ u.conj().T
        block = (block + sum(s @ block @ s for s in PAULIS) / 3.0) / 4.0
        probs.append(float(np.trace(block).real))
    times = dwell * np.arange(n + 1)
    meta = {
        "kind": "random_axis_expectation",
        "n": int(n),
        "total_duration": total_duration,
        "hbar": hbar,
    }
    return DecayCurve(times, np.array(probs), None, meta)


@dataclass(frozen=True)
class ExponentialFit:
    """Weighted log-linear fit of a non-decay curve.

    ``tau_inv`` is the decay rate (minus the log-slope), ``intercept``
    the back-extrapolated amplitude at t = 0.
    """

    tau_inv: float
    intercept: float
    r_squared: float
    n_points: int
    window: tuple


def fit_exponential(curve: DecayCurve, window: tuple[float, float]) -> ExponentialFit:
    """Fit log P = a - t/tau over ``window`` by weighted least squares.

    Monte Carlo points are weighted by their inverse log-variance
    (sigma/p propagated through the log); deterministic curves get
    uniform weights.  Points at or below the probability floor are
    excluded.  Requires at least five usable points.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError("window must be a finite (low, high) interval")
    mask = (curve.times >= lo) & (curve.times <= hi) & (curve.nondecay_prob > P_FLOOR)
    if int(mask.sum()) == 0:
        raise ValueError("no curve points above the probability floor inside the window")
    if int(mask.sum()) < 5:
        raise ValueError(f"only {int(mask.sum())} usable points in window; need at least 5")
    t = curve.times[mask]
    p = curve.nondecay_prob[mask]
    y = np.log(p)
    if curve.stderr is None:
        weights = np.ones_like(y)
    else:
        rel = curve.stderr[mask] / p
        positive = rel[rel > 0.0]
        if positive.size == 0:
            weights = np.ones_like(y)
        else:
            rel = np.maximum(rel, positive.min())
            weights = 1.0 / rel**2
    wsum = weights.sum()
    t_bar = float((weights * t).sum() / wsum)
    y_bar = float((weights * y).sum() / wsum)
    var_t = float((weights * (t - t_bar) ** 2).sum())
    if var_t == 0.0:
        raise ValueError("window collapses to a single abscissa")
    slope = float((weights * (t - t_bar) * (y - y_bar)).sum() / var_t)
    log_intercept = y_bar - slope * t_bar
    residuals = y - (log_intercept + slope * t)
    ss_res = float((weights * residuals**2).sum())
    ss_tot = float((weights * (y - y_bar) ** 2).sum())
    r_squared = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    return ExponentialFit(
        tau_inv=-slope,
        intercept=float(np.exp(log_intercept)),
        r_squared=r_squared,
        n_points=int(mask.sum()),
        window=(lo, hi),
    )
