"""Scenario files: parse, run, verify.

A scenario is one YAML document (format version 1) naming an experiment
kind plus its system, sequence, execution and output sections, with
optional embedded acceptance ``checks``.  The run writes CSV artifacts
with JSON sidecars atomically and returns a RunReport carrying every
fitted quantity and the outcome of every declared check.

Document layout (see README for the full field reference)::

    version: 1
    name: my-experiment
    kind: zeno_limit | random_axis | derivative_probe | golden_rule |
          multichannel | rate_sweep
    system: {...}
    sequence: {...}
    execution: {mode, trajectories, seed}
    output: {directory}
    checks:
      - {name, quantity, expect, rtol}    # or atol / min / max / equals

Determinism contract: for a fixed (scenario, seed) the CSV bodies are
byte-identical between runs and across thread counts.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._version import __version__
from .errors import StructuralError
from .fileio import atomic_write_text
from .goldenrule import (
    Channel,
    build_model,
    golden_rule_rate,
    monitored_decay_experiment,
    multichannel_decay_check,
    rate_sweep,
)
from .measurement import (
    fit_exponential,
    monte_carlo_curve,
    random_axis_expectation_curve,
    spin_projector,
    zeno_limit_study,
)
from .operators import SIGMA_X, SIGMA_Y, SIGMA_Z, DensityOperator, Operator

__all__ = [
    "SCENARIO_FORMAT_VERSION",
    "ScenarioError",
    "Check",
    "Scenario",
    "parse_scenario",
    "load_scenario",
    "RunReport",
    "run",
    "verify",
]

SCENARIO_FORMAT_VERSION = 1

KINDS = (
    "zeno_limit",
    "random_axis",
    "derivative_probe",
    "golden_rule",
    "multichannel",
    "rate_sweep",
)

_AXIS_ANGLES = {
    "x": (math.pi / 2.0, 0.0),
    "y": (math.pi / 2.0, math.pi / 2.0),
    "z": (0.0, 0.0),
}
_AXIS_SIGMA = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class ScenarioError(ValueError):
    """A scenario document is malformed; the message names the field."""


def _require(mapping: dict, key: str, path: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(f"missing required field {path}.{key}")
    return mapping[key]


def _as_number(value, path: str, *, minimum=None, maximum=None, strict_min=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path} must be a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ScenarioError(f"{path} must be finite")
    if minimum is not None:
        if strict_min and value <= minimum:
            raise ScenarioError(f"{path} must be > {minimum}, got {value}")
        if not strict_min and value < minimum:
            raise ScenarioError(f"{path} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ScenarioError(f"{path} must be <= {maximum}, got {value}")
    return value


def _as_int(value, path: str, *, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{path} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{path} must be >= {minimum}, got {value}")
    return int(value)


def _as_axis(value, path: str) -> str:
    if value not in _AXIS_ANGLES:
        raise ScenarioError(f"{path} must be one of x, y, z; got {value!r}")
    return value


@dataclass(frozen=True)
class Check:
    """One embedded acceptance clause against a reported quantity."""

    name: str
    quantity: str
    expect: float | None = None
    rtol: float | None = None
    atol: float | None = None
    min: float | None = None
    max: float | None = None
    equals: object = None

    def evaluate(self, quantities: dict) -> dict:
        if self.quantity not in quantities:
            return {
                "name": self.name,
                "quantity": self.quantity,
                "passed": False,
                "detail": "quantity not reported by this scenario kind",
            }
        observed = quantities[self.quantity]
        passed = True
        details = []
        if self.expect is not None:
            tol = 0.0
            if self.rtol is not None:
                tol += self.rtol * abs(self.expect)
            if self.atol is not None:
                tol += self.atol
            gap = abs(float(observed) - self.expect)
            passed &= gap <= tol
            details.append(f"|{observed!r} - {self.expect!r}| = {gap:.3e} vs tol {tol:.3e}")
        if self.min is not None:
            passed &= float(observed) >= self.min
            details.append(f"{observed!r} >= {self.min!r}")
        if self.max is not None:
            passed &= float(observed) <= self.max
            details.append(f"{observed!r} <= {self.max!r}")
        if self.equals is not None:
            passed &= observed == self.equals
            details.append(f"{observed!r} == {self.equals!r}")
        return {
            "name": self.name,
            "quantity": self.quantity,
            "observed": observed,
            "passed": bool(passed),
            "detail": "; ".join(details),
        }


def _parse_check(raw, index: int) -> Check:
    path = f"checks[{index}]"
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path} must be a mapping")
    name = str(_require(raw, "name", path))
    quantity = str(_require(raw, "quantity", path))
    kwargs = {}
    for key in ("expect", "rtol", "atol", "min", "max"):
        if key in raw:
            kwargs[key] = _as_number(raw[key], f"{path}.{key}")
    if "equals" in raw:
        kwargs["equals"] = raw["equals"]
    if not kwargs or set(kwargs) == {"rtol"} or set(kwargs) == {"atol"}:
        raise ScenarioError(f"{path} needs a comparator: expect (+rtol/atol), min, max or equals")
    if "expect" in kwargs and "rtol" not in kwargs and "atol" not in kwargs:
        raise ScenarioError(f"{path}.expect needs rtol and/or atol")
    return Check(name=name, quantity=quantity, **kwargs)


@dataclass(frozen=True)
class Scenario:
    """A validated scenario document."""

    name: str
    kind: str
    system: dict
    sequence: dict
    execution: dict
    output: dict
    checks: tuple = ()

    @property
    def stochastic(self) -> bool:
        if self.kind in ("random_axis", "multichannel"):
            return True
        return self.execution.get("mode") == "monte_carlo"

    @property
    def seed(self) -> int | None:
        return self.execution.get("seed")


def _parse_channels(raw, path: str) -> list[Channel]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(f"{path} must be a nonempty list of channel mappings")
    channels = []
    for i, entry in enumerate(raw):
        cpath = f"{path}[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{cpath} must be a mapping")
        label = str(_require(entry, "label", cpath))
        size = _as_int(_require(entry, "size", cpath), f"{cpath}.size", minimum=3)
        spacing = _as_number(
            _require(entry, "spacing", cpath), f"{cpath}.spacing", minimum=0.0, strict_min=True
        )
        center = _as_number(_require(entry, "center", cpath), f"{cpath}.center")
        coupling = _as_number(_require(entry, "coupling", cpath), f"{cpath}.coupling")
        try:
            channels.append(
                Channel(label=label, size=size, spacing=spacing, center=center, coupling=coupling)
            )
        except ValueError as exc:
            raise ScenarioError(f"{cpath}: {exc}") from exc
    return channels


def _validate_spin_system(system: dict, defaults: dict) -> dict:
    spin = system.get("spin", 0.5)
    if spin != 0.5:
        raise ScenarioError(f"system.spin: only spin 1/2 is supported, got {spin!r}")
    out = {
        "spin": 0.5,
        "omega": _as_number(system.get("omega", defaults.get("omega", 0.0)), "system.omega"),
        "hbar": _as_number(system.get("hbar", 1.0), "system.hbar", minimum=0.0, strict_min=True),
    }
    for key, default in (
        ("hamiltonian_axis", defaults.get("hamiltonian_axis", "x")),
        ("initial_axis", defaults.get("initial_axis", "z")),
        ("measurement_axis", defaults.get("measurement_axis", "z")),
        ("observable_axis", defaults.get("observable_axis", "x")),
    ):
        out[key] = _as_axis(system.get(key, default), f"system.{key}")
    return out


def _validate_continuum_system(system: dict) -> dict:
    return {
        "excited_energy": _as_number(_require(system, "excited_energy", "system"), "system.excited_energy"),
        "hbar": _as_number(system.get("hbar", 1.0), "system.hbar", minimum=0.0, strict_min=True),
        "channels": _parse_channels(_require(system, "channels", "system"), "system.channels"),
    }


def _validate_window(raw, path: str):
    if raw is None:
        return None
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ScenarioError(f"{path} must be a [low, high] pair")
    lo = _as_number(raw[0], f"{path}[0]")
    hi = _as_number(raw[1], f"{path}[1]")
    if hi <= lo:
        raise ScenarioError(f"{path} must satisfy low < high")
    return (lo, hi)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate one scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ScenarioError(f"scenario document is not valid YAML{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    version = _require(doc, "version", "document")
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioError(
            f"document.version must be {SCENARIO_FORMAT_VERSION}, got {version!r}"
        )
    name = str(_require(doc, "name", "document"))
    if not name.strip():
        raise ScenarioError("document.name must be nonempty")
    kind = _require(doc, "kind", "document")
    if kind not in KINDS:
        raise ScenarioError(f"document.kind must be one of {', '.join(KINDS)}; got {kind!r}")
    system = doc.get("system", {}) or {}
    sequence = doc.get("sequence", {}) or {}
    execution = doc.get("execution", {}) or {}
    output = doc.get("output", {}) or {}
    for section, value in (
        ("system", system),
        ("sequence", sequence),
        ("execution", execution),
        ("output", output),
    ):
        if not isinstance(value, dict):
            raise ScenarioError(f"{section} must be a mapping")

    if kind == "zeno_limit":
        system = _validate_spin_system(system, {"hamiltonian_axis": "x", "measurement_axis": "z"})
        schedule = _require(sequence, "n_schedule", "sequence")
        if not isinstance(schedule, list) or not schedule:
            raise ScenarioError("sequence.n_schedule must be a nonempty list of integers")
        schedule = [_as_int(v, f"sequence.n_schedule[{i}]", minimum=1) for i, v in enumerate(schedule)]
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ScenarioError("sequence.n_schedule must be strictly increasing")
        sequence = {
            "duration": _as_number(
                _require(sequence, "duration", "sequence"), "sequence.duration", minimum=0.0, strict_min=True
            ),
            "n_schedule": schedule,
        }
        execution = {"mode": "expectation"}
    elif kind == "random_axis":
        system = _validate_spin_system(system, {"omega": 0.0})
        sequence = {
            "n": _as_int(_require(sequence, "n", "sequence"), "sequence.n", minimum=1),
            "duration": _as_number(
                _require(sequence, "duration", "sequence"), "sequence.duration", minimum=0.0, strict_min=True
            ),
        }
        execution = {
            "mode": "monte_carlo",
            "trajectories": _as_int(
                _require(execution, "trajectories", "execution"), "execution.trajectories", minimum=1
            ),
            "seed": _as_int(_require(execution, "seed", "execution"), "execution.seed", minimum=0),
        }
    elif kind == "derivative_probe":
        system = _validate_spin_system(
            system, {"hamiltonian_axis": "y", "initial_axis": "z", "observable_axis": "x"}
        )
        step = sequence.get("step")
        sequence = {
            "t_star": _as_number(_require(sequence, "t_star", "sequence"), "sequence.t_star"),
            "step": None if step is None else _as_number(step, "sequence.step", minimum=0.0, strict_min=True),
        }
        execution = {"mode": "expectation"}
    elif kind in ("golden_rule", "multichannel", "rate_sweep"):
        system = _validate_continuum_system(system)
        if kind == "multichannel" and len(system["channels"]) < 2:
            raise ScenarioError("system.channels: multichannel scenarios need at least two channels")
        common = {"fit_window": _validate_window(sequence.get("fit_window"), "sequence.fit_window")}
        if kind == "rate_sweep":
            deltas = _require(sequence, "deltas", "sequence")
            if not isinstance(deltas, list) or not deltas:
                raise ScenarioError("sequence.deltas must be a nonempty list")
            deltas = [
                _as_number(v, f"sequence.deltas[{i}]", minimum=0.0, strict_min=True)
                for i, v in enumerate(deltas)
            ]
            plateau = sequence.get("plateau_delta", max(deltas))
            plateau = _as_number(plateau, "sequence.plateau_delta", minimum=0.0, strict_min=True)
            if plateau not in deltas:
                raise ScenarioError("sequence.plateau_delta must be one of sequence.deltas")
            sequence = {
                "deltas": deltas,
                "horizon": _as_number(
                    _require(sequence, "horizon", "sequence"), "sequence.horizon", minimum=0.0, strict_min=True
                ),
                "plateau_delta": plateau,
                **common,
            }
            execution = {"mode": "expectation"}
        else:
            sequence = {
                "delta": _as_number(
                    _require(sequence, "delta", "sequence"), "sequence.delta", minimum=0.0, strict_min=True
                ),
                "horizon": _as_number(
                    _require(sequence, "horizon", "sequence"), "sequence.horizon", minimum=0.0, strict_min=True
                ),
                **common,
            }
            if sequence["horizon"] <= sequence["delta"]:
                raise ScenarioError("sequence.horizon must exceed sequence.delta")
            if kind == "multichannel":
                execution = {
                    "mode": "monte_carlo",
                    "trajectories": _as_int(
                        _require(execution, "trajectories", "execution"),
                        "execution.trajectories",
                        minimum=1,
                    ),
                    "seed": _as_int(_require(execution, "seed", "execution"), "execution.seed", minimum=0),
                }
            else:
                mode = execution.get("mode", "expectation")
                if mode == "expectation":
                    execution = {"mode": "expectation"}
                elif mode == "monte_carlo":
                    execution = {
                        "mode": "monte_carlo",
                        "trajectories": _as_int(
                            _require(execution, "trajectories", "execution"),
                            "execution.trajectories",
                            minimum=1,
                        ),
                        "seed": _as_int(
                            _require(execution, "seed", "execution"), "execution.seed", minimum=0
                        ),
                    }
                else:
                    raise ScenarioError(
                        f"execution.mode must be expectation or monte_carlo, got {mode!r}"
                    )

    checks_raw = doc.get("checks", []) or []
    if not isinstance(checks_raw, list):
        raise ScenarioError("checks must be a list")
    checks = tuple(_parse_check(raw, i) for i, raw in enumerate(checks_raw))
    directory = output.get("directory")
    output = {} if directory is None else {"directory": str(directory)}
    return Scenario(
        name=name,
        kind=kind,
        system=system,
        sequence=sequence,
        execution=execution,
        output=output,
        checks=checks,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        return parse_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class RunReport:
    """Outcome of one scenario run."""

    scenario_name: str
    kind: str
    seed: int | None
    artifacts: tuple
    quantities: dict
    checks: tuple
    wall_time_s: float
    tool_version: str = __version__

    @property
    def all_checks_passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "kind": self.kind,
            "seed": self.seed,
            "artifacts": list(self.artifacts),
            "quantities": self.quantities,
            "checks": list(self.checks),
            "wall_time_s": self.wall_time_s,
            "tool_version": self.tool_version,
        }


def _slug(name: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9._-]+", "-", name.strip()).strip("-")
    return slug or "scenario"


def _spin_hamiltonian(system: dict) -> Operator:
    scale = system["hbar"] * system["omega"] / 2.0
    return Operator(scale * _AXIS_SIGMA[system["hamiltonian_axis"]], kind="hermitian")


def _axis_up_projector(axis: str) -> Operator:
    theta, phi = _AXIS_ANGLES[axis]
    return spin_projector(theta, phi)


def _write_table(path: Path, columns: tuple, rows: list) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for cell in row:
            if cell is None:
                cells.append("")
            elif isinstance(cell, (int, np.integer)) and not isinstance(cell, bool):
                cells.append(str(int(cell)))
            elif isinstance(cell, str):
                cells.append(cell)
            else:
                cells.append(repr(float(cell)))
        lines.append(",".join(cells))
    atomic_write_text(path, "\r\n".join(lines) + "\r\n")


def _write_json(path: Path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _sidecar(columns: tuple, meta: dict) -> dict:
    return {
        "schema_version": 1,
        "tool": "zenolab",
        "tool_version": __version__,
        "columns": list(columns),
        "meta": meta,
    }


def _measured_order(ns: list, deficits: list) -> float | None:
    """Mean log2 deficit ratio over consecutive exact doublings of n.

    Only the last few doublings are used; small n sits outside the
    asymptotic regime the order describes.
    """
    orders = []
    for (n1, d1), (n2, d2) in zip(zip(ns, deficits), zip(ns[1:], deficits[1:])):
        if n2 == 2 * n1 and d1 > 1e-14 and d2 > 1e-14:
            orders.append(math.log2(d1 / d2))
    if not orders:
        return None
    return float(np.mean(orders[-6:]))


def _run_zeno_limit(scenario: Scenario, out: Path, stem: str, threads: int) -> tuple[dict, list]:
    system = scenario.system
    hamiltonian = _spin_hamiltonian(system)
    chi = _axis_up_projector(system["measurement_axis"])
    rho0 = DensityOperator.from_matrix(chi.entries)
    points = zeno_limit_study(
        rho0,
        hamiltonian,
        chi,
        scenario.sequence["duration"],
        scenario.sequence["n_schedule"],
        system["hbar"],
    )
    csv_path = out / f"{stem}__products.csv"
    _write_table(csv_path, ("n", "product", "predicted"), [(p.n, p.product, p.predicted) for p in points])
    _write_json(
        out / f"{stem}__products.json",
        _sidecar(("n", "product", "predicted"), {"kind": "zeno_limit", "scenario": scenario.name}),
    )
    products = [p.product for p in points]
    deficits = [abs(1.0 - v) for v in products]
    monotone = all(b >= a - 1e-12 for a, b in zip(products, products[1:]))
    order = _measured_order([p.n for p in points], deficits)
    quantities = {
        "product_final": products[-1],
        "predicted_final": points[-1].predicted,
        "final_deficit": deficits[-1],
        "monotone_to_one": bool(monotone),
    }
    if order is not None:
        quantities["deficit_order"] = order
    return quantities, [csv_path, out / f"{stem}__products.json"]


def _run_random_axis(scenario: Scenario, out: Path, stem: str, threads: int) -> tuple[dict, list]:
    system = scenario.system
    hamiltonian = _spin_hamiltonian(system)
    rho0 = DensityOperator.from_matrix(_axis_up_projector(system["initial_axis"]).entries)
    n = scenario.sequence["n"]
    duration = scenario.sequence["duration"]
    mc = monte_carlo_curve(
        rho0,
        hamiltonian,
        "random_axis",
        duration,
        n,
        scenario.execution["trajectories"],
        scenario.execution["seed"],
        system["hbar"],
        threads,
    )
    exact = random_axis_expectation_curve(rho0, hamiltonian, n, duration, system["hbar"])
    fit = fit_exponential(exact, (0.0, duration))
    dwell = duration / n
    sigma_floor = 0.5 / scenario.execution["trajectories"]
    deviations = np.abs(mc.nondecay_prob - exact.nondecay_prob) / np.maximum(mc.stderr, sigma_floor)
    artifacts = []
    for curve, tag in ((mc, "curve"), (exact, "expectation")):
        csv_path = out / f"{stem}__{tag}.csv"
        curve.write(csv_path, out / f"{stem}__{tag}.json")
        artifacts += [csv_path, out / f"{stem}__{tag}.json"]
    fit_path = out / f"{stem}__fit.json"
    _write_json(
        fit_path,
        {
            "schema_version": 1,
            "tool_version": __version__,
            "fit": {
                "tau_inv": fit.tau_inv,
                "rate_per_step": fit.tau_inv * dwell,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "n_points": fit.n_points,
                "window": list(fit.window),
            },
        },
    )
    artifacts.append(fit_path)
    quantities = {
        "rate_per_step": fit.tau_inv * dwell,
        "ln2_gap": abs(fit.tau_inv * dwell - math.log(2.0)),
        "r_squared": fit.r_squared,
        "max_sigma_deviation": float(deviations.max()),
        "final_survival": float(mc.nondecay_prob[-1]),
    }
    return quantities, artifacts


def _run_derivative_probe(scenario: Scenario, out: Path, stem: str, threads: int) -> tuple[dict, list]:
    from .probability import WeightedObservable, derivative_probe

    system = scenario.system
    hamiltonian = _spin_hamiltonian(system)
    rho0 = DensityOperator.from_matrix(_axis_up_projector(system["initial_axis"]).entries)
    observable = WeightedObservable.from_projector(_axis_up_projector(system["observable_axis"]))
    probe = derivative_probe(
        rho0,
        hamiltonian,
        observable,
        scenario.sequence["t_star"],
        scenario.sequence["step"],
        system["hbar"],
    )
    payload = {
        "schema_version": 1,
        "tool_version": __version__,
        "probe": {
            "dp_shifted": probe.dp_shifted,
            "dp_direct": probe.dp_direct,
            "dc_shifted": probe.dc_shifted,
            "dc_direct": probe.dc_direct,
            "step": probe.step,
        },
    }
    probe_path = out / f"{stem}__probe.json"
    _write_json(probe_path, payload)
    quantities = {
        "dp_shifted": probe.dp_shifted,
        "dp_direct": probe.dp_direct,
        "dc_shifted": probe.dc_shifted,
        "dc_direct": probe.dc_direct,
        "dp_gap": abs(probe.dp_shifted - probe.dp_direct),
        "dc_direct_abs": abs(probe.dc_direct),
        "dc_shifted_abs": abs(probe.dc_shifted),
    }
    return quantities, [probe_path]


def _continuum_model(system: dict):
    return build_model(system["excited_energy"], system["channels"], system["hbar"])


def _run_golden_rule(scenario: Scenario, out: Path, stem: str, threads: int) -> tuple[dict, list]:
    model = _continuum_model(scenario.system)
    delta = scenario.sequence["delta"]
    horizon = scenario.sequence["horizon"]
    window = scenario.sequence["fit_window"] or (0.0, min(horizon, model.recurrence_time))
    mode = scenario.execution["mode"]
    if mode == "monte_carlo":
        curve = monitored_decay_experiment(
            model,
            delta,
            horizon,
            mode="monte_carlo",
            trajectories=scenario.execution["trajectories"],
            seed=scenario.execution["seed"],
            threads=threads,
        )
    else:
        curve = monitored_decay_experiment(model, delta, horizon, mode="expectation")
    fit = fit_exponential(curve, window)
    rates = golden_rule_rate(model)
    csv_path = out / f"{stem}__curve.csv"
    curve.write(csv_path, out / f"{stem}__curve.json")
    fit_path = out / f"{stem}__fit.json"
    _write_json(
        fit_path,
        {
            "schema_version": 1,
            "tool_version": __version__,
            "fit": {
                "tau_inv": fit.tau_inv,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "n_points": fit.n_points,
                "window": list(fit.window),
            },
            "golden_rule": {"per_channel": rates.per_channel, "total": rates.total},
        },
    )
    quantities = {
        "tau_inv": fit.tau_inv,
        "r_squared": fit.r_squared,
        "golden_rule_total": rates.total,
        "relative_rate_error": abs(fit.tau_inv - rates.total) / rates.total if rates.total else 0.0,
        "window_inside_recurrence": bool(window[1] <= model.recurrence_time),
    }
    return quantities, [csv_path, out / f"{stem}__curve.json", fit_path]


def _run_multichannel(scenario: Scenario, out: Path, stem: str, threads: int) -> tuple[dict, list]:
    model = _continuum_model(scenario.system)
    result = multichannel_decay_check(
        model,
        scenario.sequence["delta"],
        scenario.sequence["horizon"],
        scenario.execution["trajectories"],
        scenario.execution["seed"],
        scenario.sequence["fit_window"],
    )
    curve = monitored_decay_experiment(
        model, scenario.sequence["delta"], scenario.sequence["horizon"], mode="expectation"
    )
    csv_path = out / f"{stem}__curve.csv"
    curve.write(csv_path, out / f"{stem}__curve.json")
    report_path = out / f"{stem}__channels.json"
    labels = [c.label for c in model.channels]
    decayed_total = sum(result.decayed_counts.values())
    quantities = {
        "fitted_total": result.fitted_total,
        "sum_of_channel_rates": result.sum_of_channel_rates,
        "additivity_error": abs(result.fitted_total - result.sum_of_channel_rates)
        / result.sum_of_channel_rates
        if result.sum_of_channel_rates
        else 0.0,
        "product_law_residual": result.product_law_residual,
        "r_squared": result.r_squared,
        "decayed_fraction": decayed_total / result.trajectories,
    }
    if len(labels) == 2 and decayed_total > 0:
        count_a = result.decayed_counts[labels[0]]
        count_b = result.decayed_counts[labels[1]]
        rate_a = result.per_channel_rates[labels[0]]
        rate_b = result.per_channel_rates[labels[1]]
        expected_fraction = rate_a / (rate_a + rate_b) if rate_a + rate_b else 0.0
        observed_fraction = count_a / decayed_total
        sigma = math.sqrt(max(expected_fraction * (1.0 - expected_fraction) / decayed_total, 1e-300))
        quantities["branching_ratio"] = count_a / count_b if count_b else math.inf
        quantities["branching_sigma_gap"] = abs(observed_fraction - expected_fraction) / sigma
    _write_json(
        report_path,
        {
            "schema_version": 1,
            "tool_version": __version__,
            "per_channel_rates": result.per_channel_rates,
            "decayed_counts": result.decayed_counts,
            "survived": result.survived,
            "trajectories": result.trajectories,
            "quantities": quantities,
        },
    )
    return quantities, [csv_path, out / f"{stem}__curve.json", report_path]


def _run_rate_sweep(scenario: Scenario, out: Path, stem: str, threads: int) -> tuple[dict, list]:
    model = _continuum_model(scenario.system)
    deltas = scenario.sequence["deltas"]
    horizon = scenario.sequence["horizon"]
    window = scenario.sequence["fit_window"]
    points = rate_sweep(model, deltas, horizon, window)
    rates = golden_rule_rate(model)
    csv_path = out / f"{stem}__sweep.csv"
    _write_table(
        csv_path,
        ("delta", "tau_inv", "r_squared", "error"),
        [(p.delta, p.tau_inv, p.r_squared, p.error or "") for p in points],
    )
    _write_json(
        out / f"{stem}__sweep.json",
        _sidecar(
            ("delta", "tau_inv", "r_squared", "error"),
            {"kind": "rate_sweep", "scenario": scenario.name, "golden_rule_total": rates.total},
        ),
    )
    by_delta = {p.delta: p for p in points}
    plateau = by_delta[scenario.sequence["plateau_delta"]]
    smallest = by_delta[min(deltas)]
    quantities = {
        "golden_rule_total": rates.total,
        "plateau_delta": scenario.sequence["plateau_delta"],
    }
    if plateau.tau_inv is not None:
        quantities["plateau_tau_inv"] = plateau.tau_inv
        quantities["plateau_r_squared"] = plateau.r_squared
        if rates.total:
            quantities["plateau_relative_error"] = abs(plateau.tau_inv - rates.total) / rates.total
    if smallest.tau_inv is not None and plateau.tau_inv:
        quantities["min_delta_tau_inv"] = smallest.tau_inv
        quantities["suppression_ratio"] = smallest.tau_inv / plateau.tau_inv
    return quantities, [csv_path, out / f"{stem}__sweep.json"]


_RUNNERS = {
    "zeno_limit": _run_zeno_limit,
    "random_axis": _run_random_axis,
    "derivative_probe": _run_derivative_probe,
    "golden_rule": _run_golden_rule,
    "multichannel": _run_multichannel,
    "rate_sweep": _run_rate_sweep,
}


def run(
    scenario: Scenario,
    out_dir=None,
    seed_override: int | None = None,
    threads: int = 1,
) -> RunReport:
    """Run one scenario, write artifacts, evaluate embedded checks."""
    if threads < 1:
        raise ScenarioError("threads must be >= 1")
    if seed_override is not None and scenario.stochastic:
        execution = dict(scenario.execution)
        execution["seed"] = int(seed_override)
        scenario = Scenario(
            name=scenario.name,
            kind=scenario.kind,
            system=scenario.system,
            sequence=scenario.sequence,
            execution=execution,
            output=scenario.output,
            checks=scenario.checks,
        )
    if out_dir is None:
        out_dir = scenario.output.get("directory", f"zenolab-out/{_slug(scenario.name)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(f"cannot create output directory {out}: {exc}") from exc
    stem = _slug(scenario.name)
    started = time.perf_counter()
    try:
        quantities, artifacts = _RUNNERS[scenario.kind](scenario, out, stem, threads)
    except (ScenarioError,):
        raise
    except (ValueError, StructuralError) as exc:
        raise ScenarioError(f"scenario {scenario.name!r} ({scenario.kind}): {exc}") from exc
    wall = time.perf_counter() - started
    checks = tuple(check.evaluate(quantities) for check in scenario.checks)
    report = RunReport(
        scenario_name=scenario.name,
        kind=scenario.kind,
        seed=scenario.seed,
        artifacts=tuple(str(p) for p in artifacts),
        quantities=quantities,
        checks=checks,
        wall_time_s=wall,
    )
    _write_json(out / f"{stem}__report.json", report.to_dict())
    return report


def verify(directory, out_dir=None, seed_override=None, threads: int = 1) -> tuple[list, bool]:
    """Run every scenario in a directory; aggregate embedded check results.

    Check failures are collected, not fatal; unreadable or malformed
    scenario files abort the whole verification.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ScenarioError(f"{directory} is not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix in (".yaml", ".yml"))
    if not files:
        raise ScenarioError(f"no scenarios found in {directory}")
    if out_dir is None:
        out_dir = Path("zenolab-out") / "verify"
    reports = []
    for path in files:
        scenario = load_scenario(path)
        report = run(
            scenario,
            out_dir=Path(out_dir) / _slug(path.stem),
            seed_override=seed_override,
            threads=threads,
        )
        reports.append((path, report))
    all_passed = all(report.all_checks_passed for _, report in reports)
    summary = {
        "tool_version": __version__,
        "all_passed": all_passed,
        "scenarios": [
            {
                "file": str(path),
                "name": report.scenario_name,
                "passed": report.all_checks_passed,
                "checks": list(report.checks),
            }
            for path, report in reports
        ],
    }
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    _write_json(Path(out_dir) / "verify__summary.json", summary)
    return reports, all_passed
