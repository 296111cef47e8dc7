"""Discretized-continuum decay models.

One excited level sits above one or more flat bands of equally spaced
bath levels; the coupling attaches the excited state to bath states
only.  With spacing dE, uniform coupling g and the excited energy inside
the band, the golden-rule rate per channel is

    Gamma = (2 pi / hbar) g^2 / dE,

the density of states being 1/dE.  The discretization is honest about
its own limits: the exponential window opens only for dwell times well
above hbar/(N dE) (band resolution) and well below the recurrence time
2 pi hbar / dE, and every fit here is kept inside that guard.

``monitored_decay_experiment`` watches the excited-state projector at a
fixed dwell and, per channel, ``multichannel_decay_check`` verifies that
rates add, that the non-decay curve factorizes into per-channel
exponentials, and how decayed population splits between channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, StructuralError
from .measurement import (
    DecayCurve,
    ExponentialFit,
    MeasurementSequence,
    conditional_product_curve,
    fit_exponential,
    monte_carlo_curve,
)
from .operators import DensityOperator, Operator, max_abs, propagator, tolerances

__all__ = [
    "Channel",
    "ContinuumModel",
    "build_model",
    "ChannelRates",
    "golden_rule_rate",
    "channel_orthogonality_check",
    "monitored_decay_experiment",
    "decayed_spectrum",
    "RateSweepPoint",
    "rate_sweep",
    "MultichannelCheck",
    "multichannel_decay_check",
]


@dataclass(frozen=True)
class Channel:
    """One flat quasi-continuum band.

    ``size`` levels spaced by ``spacing`` around ``center``; ``coupling``
    is the uniform excited-to-bath matrix element, overridable per level
    through ``couplings``.
    """

    label: str
    size: int
    spacing: float
    center: float
    coupling: float
    couplings: tuple | None = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("channel label must be nonempty")
        if self.size < 3 or self.size % 2 == 0:
            raise ValueError(f"channel size must be odd and >= 3, got {self.size}")
        if self.spacing <= 0.0 or not np.isfinite(self.spacing):
            raise ValueError(f"level spacing must be positive, got {self.spacing!r}")
        if not np.isfinite(self.center) or not np.isfinite(self.coupling):
            raise ValueError("center and coupling must be finite")
        if self.couplings is not None:
            couplings = tuple(float(g) for g in self.couplings)
            if len(couplings) != self.size:
                raise ValueError(
                    f"couplings override has {len(couplings)} entries for {self.size} levels"
                )
            if not all(np.isfinite(g) for g in couplings):
                raise ValueError("couplings must be finite")
            object.__setattr__(self, "couplings", couplings)

    def energies(self) -> np.ndarray:
        offsets = np.arange(self.size) - (self.size - 1) / 2.0
        return self.center + offsets * self.spacing

    def coupling_vector(self) -> np.ndarray:
        if self.couplings is not None:
            return np.array(self.couplings, dtype=float)
        return np.full(self.size, float(self.coupling))

    def covers(self, energy: float) -> bool:
        half_band = (self.size - 1) / 2.0 * self.spacing
        return abs(energy - self.center) <= half_band


@dataclass(frozen=True, eq=False)
class ContinuumModel:
    """Assembled excited-plus-bands Hamiltonian with channel bookkeeping.

    Basis index 0 is the excited state; each channel occupies the
    contiguous index range in ``channel_ranges``.  ``v_parts`` keeps the
    full-dimension coupling column attributed to each channel, so
    channel attribution can be audited independently of the assembled
    coupling operator.
    """

    excited_energy: float
    channels: tuple
    hbar: float
    h0: Operator
    v: Operator
    v_parts: dict
    channel_ranges: dict

    def __post_init__(self):
        if not self.channels:
            raise ValueError("model needs at least one channel")
        labels = [c.label for c in self.channels]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate channel labels: {labels}")
        if self.hbar <= 0.0 or not np.isfinite(self.hbar):
            raise ValueError("hbar must be positive and finite")
        h0_m, v_m = self.h0.entries, self.v.entries
        if h0_m.shape != v_m.shape:
            raise DimensionMismatchError("h0 and v dimensions differ")
        if max_abs(h0_m - np.diag(np.diag(h0_m))) > tolerances.structural:
            raise StructuralError("h0 must be diagonal in the model basis")
        if max_abs(np.diag(v_m)) > tolerances.structural:
            raise StructuralError("v must have zero diagonal")
        attributed = sum(np.asarray(part) for part in self.v_parts.values())
        if max_abs(v_m[0, :] - attributed) > tolerances.structural:
            raise StructuralError("channel-attributed couplings do not add up to v's excited row")

    @property
    def dim(self) -> int:
        return self.h0.dim

    @property
    def hamiltonian(self) -> Operator:
        return Operator(self.h0.entries + self.v.entries, kind="hermitian")

    @property
    def recurrence_time(self) -> float:
        finest = min(c.spacing for c in self.channels)
        return 2.0 * math.pi * self.hbar / finest

    def excited_state(self) -> DensityOperator:
        amplitudes = np.zeros(self.dim, dtype=complex)
        amplitudes[0] = 1.0
        return DensityOperator.pure(amplitudes)

    def excited_projector(self) -> Operator:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[0, 0] = 1.0
        return Operator(m, kind="projector")

    def channel_projector(self, label: str) -> Operator:
        start, stop = self.channel_ranges[label]
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[np.arange(start, stop), np.arange(start, stop)] = 1.0
        return Operator(m, kind="projector")


def build_model(
    excited_energy: float,
    channels: Sequence[Channel],
    hbar: float = 1.0,
    bath_couplings: Sequence[tuple] = (),
) -> ContinuumModel:
    """Assemble the model Hamiltonian from channel descriptions.

    Raises when no channel's band covers the excited energy (the model
    would be trivially off-resonant); a single off-resonant channel
    among several is allowed and shows up as a zero-rate diagnostic in
    ``golden_rule_rate``.  ``bath_couplings`` adds explicit hermitian
    (i, j, value) couplings between bath states, for probing that terms
    not connecting the excited state to decay products do not matter.
    """
    if not np.isfinite(excited_energy):
        raise ValueError("excited energy must be finite")
    channels = tuple(channels)
    if not channels:
        raise ValueError("model needs at least one channel")
    if not any(c.covers(excited_energy) for c in channels):
        raise ValueError(
            f"no channel band covers the excited energy {excited_energy!r}; "
            "the discretization cannot represent the decay"
        )
    dim = 1 + sum(c.size for c in channels)
    diag = np.zeros(dim)
    diag[0] = excited_energy
    v = np.zeros((dim, dim), dtype=complex)
    v_parts: dict[str, np.ndarray] = {}
    ranges: dict[str, tuple] = {}
    cursor = 1
    for channel in channels:
        start, stop = cursor, cursor + channel.size
        diag[start:stop] = channel.energies()
        part = np.zeros(dim, dtype=complex)
        part[start:stop] = channel.coupling_vector()
        part.setflags(write=False)
        v[0, start:stop] = part[start:stop]
        v[start:stop, 0] = np.conj(part[start:stop])
        v_parts[channel.label] = part
        ranges[channel.label] = (start, stop)
        cursor = stop
    for entry in bath_couplings:
        i, j, value = int(entry[0]), int(entry[1]), complex(entry[2])
        if i < 1 or j < 1 or i >= dim or j >= dim:
            raise ValueError(f"bath coupling ({i}, {j}) must connect bath states only")
        if i == j:
            raise ValueError("bath couplings must be off-diagonal")
        v[i, j] += value
        v[j, i] += np.conj(value)
    return ContinuumModel(
        excited_energy=float(excited_energy),
        channels=channels,
        hbar=float(hbar),
        h0=Operator(np.diag(diag).astype(complex), kind="hermitian"),
        v=Operator(v, kind="hermitian"),
        v_parts=v_parts,
        channel_ranges=ranges,
    )


@dataclass(frozen=True)
class ChannelRates:
    """Golden-rule rates per channel; ``total`` is their exact sum."""

    per_channel: dict
    total: float
    diagnostics: tuple


def golden_rule_rate(model: ContinuumModel) -> ChannelRates:
    """Golden-rule decay rate (2 pi / hbar) g^2 / dE per channel.

    Uses the coupling of the bath level nearest the excited energy and
    the flat density of states 1/dE.  Channels whose band does not reach
    the excited energy contribute zero and a diagnostic.
    """
    per_channel: dict[str, float] = {}
    diagnostics = []
    for channel in model.channels:
        if not channel.covers(model.excited_energy):
            per_channel[channel.label] = 0.0
            diagnostics.append(
                f"channel {channel.label!r}: band does not cover the excited energy; rate set to 0"
            )
            continue
        energies = channel.energies()
        resonant = int(np.argmin(np.abs(energies - model.excited_energy)))
        g = float(channel.coupling_vector()[resonant])
        per_channel[channel.label] = (
            2.0 * math.pi / model.hbar * g * g / channel.spacing
        )
    return ChannelRates(
        per_channel=per_channel,
        total=float(sum(per_channel.values())),
        diagnostics=tuple(diagnostics),
    )


def channel_orthogonality_check(model: ContinuumModel) -> dict:
    """Whether each channel's coupling sends the excited state only into its own band.

    Returns a boolean per ordered pair (a, b), a != b: True when the
    part of the coupling attributed to channel a has no support on
    channel b's levels.
    """
    labels = [c.label for c in model.channels]
    result: dict[tuple, bool] = {}
    for a in labels:
        part = np.asarray(model.v_parts[a])
        for b in labels:
            if a == b:
                continue
            start, stop = model.channel_ranges[b]
            result[(a, b)] = bool(max_abs(part[start:stop]) <= tolerances.structural)
    return result


def _steps_for(delta: float, horizon: float) -> int:
    if not (np.isfinite(delta) and np.isfinite(horizon)) or delta <= 0.0 or horizon <= delta:
        raise ValueError("need 0 < delta < horizon, both finite")
    return max(1, int(math.floor(horizon / delta + 1e-9)))


def monitored_decay_experiment(
    model: ContinuumModel,
    delta: float,
    horizon: float,
    mode: str = "expectation",
    trajectories: int | None = None,
    seed: int | None = None,
    threads: int = 1,
) -> DecayCurve:
    """Watch the excited-state projector every ``delta`` up to ``horizon``.

    ``mode="expectation"`` computes the exact conditional product;
    ``mode="monte_carlo"`` samples outcomes and then requires
    ``trajectories`` and ``seed``.
    """
    n = _steps_for(delta, horizon)
    chi = model.excited_projector()
    rho0 = model.excited_state()
    hamiltonian = model.hamiltonian
    rates = golden_rule_rate(model)
    base_meta = {
        "model": _model_summary(model),
        "delta": float(delta),
        "horizon": float(horizon),
        "golden_rule_total": rates.total,
        "golden_rule_per_channel": dict(rates.per_channel),
        "recurrence_time": model.recurrence_time,
    }
    if mode == "expectation":
        sequence = MeasurementSequence.fixed(chi, n, n * delta)
        curve = conditional_product_curve(rho0, hamiltonian, sequence, model.hbar)
    elif mode == "monte_carlo":
        if trajectories is None or seed is None:
            raise ValueError("monte_carlo mode requires trajectories and seed")
        curve = monte_carlo_curve(
            rho0,
            hamiltonian,
            chi,
            n * delta,
            n,
            trajectories,
            seed,
            model.hbar,
            threads,
        )
    else:
        raise ValueError(f"unknown mode {mode!r}")
    meta = dict(curve.meta)
    meta.update(base_meta)
    return DecayCurve(curve.times, curve.nondecay_prob, curve.stderr, meta)


def decayed_spectrum(model: ContinuumModel, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Bath energies and normalized one-step decayed population per level.

    The weight on level k is |<k| U(delta) |excited>|^2, the population a
    single monitoring step deposits there; its peak should sit at the
    bath level resonant with the excited energy.
    """
    if delta <= 0.0 or not np.isfinite(delta):
        raise ValueError("delta must be positive and finite")
    u = propagator(model.hamiltonian, delta, model.hbar).entries
    column = u[:, 0]
    weights = np.abs(column[1:]) ** 2
    total = weights.sum()
    if total > 0.0:
        weights = weights / total
    energies = np.concatenate([c.energies() for c in model.channels])
    return energies, weights


def _model_summary(model: ContinuumModel) -> dict:
    return {
        "excited_energy": model.excited_energy,
        "hbar": model.hbar,
        "channels": [
            {
                "label": c.label,
                "size": c.size,
                "spacing": c.spacing,
                "center": c.center,
                "coupling": c.coupling,
            }
            for c in model.channels
        ],
    }


def _default_window(model: ContinuumModel, horizon: float) -> tuple[float, float]:
    return (0.0, min(horizon, model.recurrence_time))


@dataclass(frozen=True)
class RateSweepPoint:
    """Fitted rate at one dwell; ``error`` is set when the fit failed."""

    delta: float
    tau_inv: float | None
    r_squared: float | None
    error: str | None = None


def rate_sweep(
    model: ContinuumModel,
    deltas: Sequence[float],
    horizon: float,
    window: tuple[float, float] | None = None,
) -> list[RateSweepPoint]:
    """Fitted decay rate against dwell time.

    Per-dwell failures (too few usable points, extinct curves) are
    collected on the sweep point instead of aborting the sweep.  Fits
    stay inside the recurrence guard.
    """
    if window is None:
        window = _default_window(model, horizon)
    points = []
    for delta in deltas:
        try:
            curve = monitored_decay_experiment(model, delta, horizon, mode="expectation")
            fit = fit_exponential(curve, window)
            points.append(
                RateSweepPoint(delta=float(delta), tau_inv=fit.tau_inv, r_squared=fit.r_squared)
            )
        except (ValueError, StructuralError) as exc:
            points.append(
                RateSweepPoint(delta=float(delta), tau_inv=None, r_squared=None, error=str(exc))
            )
    return points


@dataclass(frozen=True)
class MultichannelCheck:
    """Additivity, factorization and branching results for a multichannel model."""

    fitted_total: float
    sum_of_channel_rates: float
    product_law_residual: float
    per_channel_rates: dict
    decayed_counts: dict
    survived: int
    trajectories: int
    r_squared: float


def _branching_counts(
    model: ContinuumModel, delta: float, n: int, trajectories: int, seed: int
) -> tuple[dict, int]:
    """Sample decay channels over seeded trajectories.

    The monitored system restarts from the exact excited state after
    every positive outcome, so each step decays with the same
    probability; on absorption the channel is drawn from the decayed
    population split of that step.
    """
    u = propagator(model.hamiltonian, delta, model.hbar).entries
    column = u[:, 0]
    p_survive = min(max(float(np.abs(column[0]) ** 2), 0.0), 1.0)
    labels = [c.label for c in model.channels]
    channel_weights = []
    for label in labels:
        start, stop = model.channel_ranges[label]
        channel_weights.append(float(np.sum(np.abs(column[start:stop]) ** 2)))
    channel_weights = np.array(channel_weights)
    total_weight = channel_weights.sum()
    if total_weight <= 0.0:
        # No decayed population at all: every trajectory survives.
        return {label: 0 for label in labels}, trajectories
    channel_split = channel_weights / total_weight
    cumulative = np.cumsum(channel_split)
    counts = {label: 0 for label in labels}
    survived = 0
    for j in range(trajectories):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), j)))
        decayed_label = None
        for _ in range(n):
            if rng.random() >= p_survive:
                pick = int(np.searchsorted(cumulative, rng.random(), side="right"))
                decayed_label = labels[min(pick, len(labels) - 1)]
                break
        if decayed_label is None:
            survived += 1
        else:
            counts[decayed_label] += 1
    return counts, survived


def multichannel_decay_check(
    model: ContinuumModel,
    delta: float,
    horizon: float,
    trajectories: int,
    seed: int,
    window: tuple[float, float] | None = None,
) -> MultichannelCheck:
    """Verify rate additivity and per-channel factorization.

    Refuses models whose channel attribution is not orthogonal; with
    cross-coupled channels the per-channel bookkeeping is meaningless.
    ``product_law_residual`` is the largest gap between the expectation
    curve and the product of single-channel exponentials over the fit
    window.
    """
    if len(model.channels) < 2:
        raise ValueError("multichannel check needs at least two channels")
    orthogonality = channel_orthogonality_check(model)
    violations = sorted(pair for pair, ok in orthogonality.items() if not ok)
    if violations:
        raise ValueError(f"channels are cross-coupled: {violations}; refusing per-channel rates")
    if window is None:
        window = _default_window(model, horizon)
    rates = golden_rule_rate(model)
    curve = monitored_decay_experiment(model, delta, horizon, mode="expectation")
    fit = fit_exponential(curve, window)
    mask = (curve.times >= window[0]) & (curve.times <= window[1])
    expected = np.ones_like(curve.times[mask])
    for label in rates.per_channel:
        expected = expected * np.exp(-rates.per_channel[label] * curve.times[mask])
    residual = float(np.max(np.abs(curve.nondecay_prob[mask] - expected)))
    n = _steps_for(delta, horizon)
    counts, survived = _branching_counts(model, delta, n, trajectories, seed)
    return MultichannelCheck(
        fitted_total=fit.tau_inv,
        sum_of_channel_rates=rates.total,
        product_law_residual=residual,
        per_channel_rates=dict(rates.per_channel),
        decayed_counts=counts,
        survived=survived,
        trajectories=int(trajectories),
        r_squared=fit.r_squared,
    )
