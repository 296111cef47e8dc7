"""End-to-end acceptance gate.

Every test here checks one headline behavior at its stated tolerance
and prints exactly one PASS/FAIL line (visible via the -rP summary), so
the whole contract can be audited from the test log at a glance.
"""

import math
import time

import numpy as np

from zenolab import (
    Channel,
    DensityOperator,
    Operator,
    SIGMA_X,
    WeightedObservable,
    autocorrelation,
    build_model,
    central_difference,
    evolve,
    fit_exponential,
    golden_rule_rate,
    initial_decay_rate,
    max_abs,
    monitored_decay_experiment,
    monte_carlo_curve,
    multichannel_decay_check,
    parse_scenario,
    projector_onto,
    random_axis_expectation_curve,
    rate_sweep,
    run_scenario,
    zeno_limit_study,
)
from helpers import (
    expm_propagator,
    random_density_matrix,
    random_hermitian,
    random_projector_matrix,
)

UP = np.array([1.0, 0.0], dtype=complex)


def _verdict(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}: {name} [{detail}]"
    print(line)
    assert ok, line


def test_autocorrelation_shift_invariance_bulk():
    rng = np.random.default_rng(20230501)
    worst = 0.0
    started = time.perf_counter()
    for trial in range(1000):
        dim = 2 + trial % 4
        rho = DensityOperator.from_matrix(random_density_matrix(rng, dim))
        h = Operator(random_hermitian(rng, dim), kind="hermitian")
        t0 = rng.uniform(-4.0, 4.0)
        lag = rng.uniform(-4.0, 4.0)
        direct = autocorrelation(rho, evolve(rho, h, lag))
        rebased = autocorrelation(evolve(rho, h, t0), evolve(rho, h, t0 + lag))
        worst = max(worst, abs(direct - rebased))
    elapsed = time.perf_counter() - started
    _verdict(
        "autocorrelation is shift invariant on 1000 random systems",
        worst <= 1e-9 and elapsed < 10.0,
        f"worst gap {worst:.2e} (tol 1e-9), {elapsed:.1f}s (limit 10s)",
    )


def test_rebased_overlap_slope_quadratic_bound_and_order():
    rng = np.random.default_rng(42)
    hbar = 1.0
    bound_ok = True
    worst_ratio = 0.0
    for trial in range(50):
        dim = 2 + trial % 3
        rho = DensityOperator.from_matrix(random_density_matrix(rng, dim))
        h = Operator(random_hermitian(rng, dim), kind="hermitian")
        t0 = rng.uniform(0.0, 3.0)
        base = evolve(rho, h, t0)
        scale = 2.0 * (max_abs(h.entries) / hbar) ** 2

        def c_of(lag, base=base, h=h):
            return autocorrelation(base, evolve(base, h, lag))

        for k in range(5):
            step = 0.02 / 2**k
            slope = abs(central_difference(c_of, 0.0, step))
            ratio = slope / (scale * step**2)
            worst_ratio = max(worst_ratio, ratio)
            bound_ok = bound_ok and ratio <= 1.0

    # order of the deficit C(0) - C(h) across four octaves of h
    rho = DensityOperator.pure(UP)
    h = Operator(0.5 * SIGMA_X, kind="hermitian")
    base = evolve(rho, h, 0.37)
    steps = [0.02 / 2**k for k in range(5)]
    deficits = [
        autocorrelation(base, base) - autocorrelation(base, evolve(base, h, s)) for s in steps
    ]
    orders = [math.log2(a / b) for a, b in zip(deficits, deficits[1:])]
    order = float(np.mean(orders))
    _verdict(
        "rebased overlap slope is bounded by curvature*h^2 with quadratic deficit",
        bound_ok and abs(order - 2.0) <= 0.2,
        f"worst slope/(K h^2) {worst_ratio:.2e}, deficit order {order:.3f} (want 2.0+/-0.2)",
    )


def test_initial_rate_matches_derivative_and_vanishes_when_commuting():
    rng = np.random.default_rng(777)
    worst_rel = 0.0
    for trial in range(1000):
        dim = 2 + trial % 4
        hbar = 1.0 if trial % 3 else 0.7
        rho = DensityOperator.from_matrix(random_density_matrix(rng, dim))
        h = Operator(random_hermitian(rng, dim), kind="hermitian")
        chi = Operator(
            random_projector_matrix(rng, dim, 1 + trial % (dim - 1)), kind="projector"
        )
        obs = WeightedObservable.from_projector(chi)
        rate = initial_decay_rate(rho, obs, h, hbar)

        def p_at(t, h=h, rho=rho, obs=obs, hbar=hbar):
            u = expm_propagator(h.entries, t, hbar)
            return float(np.trace(obs.matrix @ u @ rho.matrix @ u.conj().T).real)

        step = 1e-3 / max(1.0, max_abs(h.entries) / hbar)
        slope = central_difference(p_at, 0.0, step, richardson=True)
        rel = abs(rate + slope) / max(abs(rate), 1e-6)
        worst_rel = max(worst_rel, rel)

    worst_commuting = 0.0
    for trial in range(100):
        dim = 4
        weights = rng.uniform(0.05, 1.0, size=dim)
        rho = DensityOperator.from_matrix(np.diag(weights / weights.sum()))
        chi = Operator(np.diag([1.0, 1.0, 0.0, 0.0]), kind="projector")
        h = Operator(random_hermitian(rng, dim), kind="hermitian")
        worst_commuting = max(
            worst_commuting,
            abs(initial_decay_rate(rho, WeightedObservable.from_projector(chi), h)),
        )
    for trial in range(100):
        dim = 3
        h = Operator(random_hermitian(rng, dim), kind="hermitian")
        _, basis = np.linalg.eigh(h.entries)
        weights = rng.uniform(0.05, 1.0, size=dim)
        rho = DensityOperator.from_matrix(
            basis @ np.diag(weights / weights.sum()) @ basis.conj().T
        )
        chi = Operator(random_projector_matrix(rng, dim, 1), kind="projector")
        worst_commuting = max(
            worst_commuting,
            abs(initial_decay_rate(rho, WeightedObservable.from_projector(chi), h)),
        )
    _verdict(
        "initial rate equals -dP/dt (1000 systems) and is 0 for commuting pairs",
        worst_rel <= 1e-6 and worst_commuting <= 1e-12,
        f"worst rel gap {worst_rel:.2e} (tol 1e-6), worst commuting rate {worst_commuting:.2e} (tol 1e-12)",
    )


def test_repeated_check_products_follow_closed_form():
    omega = 1.0
    duration = math.pi / omega
    h = Operator(omega / 2.0 * SIGMA_X, kind="hermitian")
    chi = projector_onto(UP)
    rho = DensityOperator.pure(UP)
    schedule = [2**k for k in range(15)]
    points = zeno_limit_study(rho, h, chi, duration, schedule)
    worst = max(
        abs(p.product - math.cos(math.pi / (2 * p.n)) ** (2 * p.n)) for p in points
    )
    ten = zeno_limit_study(rho, h, chi, duration, [10])[0].product
    deficits = [(p.n, 1.0 - p.product) for p in points if p.n >= 64]
    orders = [
        math.log2(d1 / d2) for (_, d1), (_, d2) in zip(deficits, deficits[1:])
    ]
    order = float(np.mean(orders))
    _verdict(
        "n-check survival matches cos^2n(pi/2n) up to n=16384 with 1/n deficit",
        worst <= 1e-9 and abs(ten - 0.7805) <= 1e-3 and abs(order - 1.0) <= 0.1,
        f"worst gap {worst:.2e} (tol 1e-9), P(n=10) {ten:.4f} (want 0.7805+/-1e-3), order {order:.3f}",
    )


def test_random_axis_monitoring_halves_survival():
    n, duration, shots = 10, 10.0, 10_000
    rho = DensityOperator.pure(UP)
    h = Operator(0.5 * SIGMA_X, kind="hermitian")
    started = time.perf_counter()
    mc = monte_carlo_curve(rho, h, "random_axis", duration, n, shots, seed=20260815)
    elapsed = time.perf_counter() - started
    expected = 0.5 ** np.arange(n + 1)
    sigma = np.sqrt(expected * (1.0 - expected) / shots)
    sigma[0] = 1.0  # step 0 is exact by construction
    gaps = np.abs(mc.nondecay_prob - expected) / sigma
    exact = random_axis_expectation_curve(rho, h, n, duration)
    fit = fit_exponential(exact, (0.0, duration))
    _verdict(
        "random-axis monitoring: sampled survival is 2^-k and expectation is exponential",
        bool(np.all(gaps <= 3.0)) and fit.r_squared >= 0.999 and elapsed < 60.0,
        f"max deviation {gaps.max():.2f} sigma (limit 3), R^2 {fit.r_squared:.6f} (min 0.999), {elapsed:.1f}s (limit 60s)",
    )


def test_monitored_decay_plateau_reproduces_golden_rule():
    channel = Channel(label="bath", size=201, spacing=0.01, center=1.0, coupling=0.01)
    model = build_model(1.0, [channel])
    started = time.perf_counter()
    curve = monitored_decay_experiment(model, 12.0, 120.0)
    window = (0.0, min(120.0, model.recurrence_time))
    fit = fit_exponential(curve, window)
    elapsed = time.perf_counter() - started
    golden = golden_rule_rate(model).total
    rel = abs(fit.tau_inv - golden) / golden
    _verdict(
        "monitored decay plateau reproduces the flat-band golden-rule rate",
        rel <= 0.10 and fit.r_squared >= 0.99 and window[1] <= model.recurrence_time
        and elapsed < 300.0,
        f"rate {fit.tau_inv:.5f} vs {golden:.5f} (rel {rel:.3f}, tol 0.10), R^2 {fit.r_squared:.4f}, {elapsed:.0f}s",
    )


def test_frequent_monitoring_suppresses_the_rate():
    channel = Channel(label="bath", size=201, spacing=0.01, center=1.0, coupling=0.01)
    model = build_model(1.0, [channel])
    points = {p.delta: p for p in rate_sweep(model, [0.1, 12.0], 120.0)}
    fast, plateau = points[0.1].tau_inv, points[12.0].tau_inv
    _verdict(
        "the smallest swept dwell suppresses the fitted rate",
        fast is not None and plateau is not None and fast <= 0.5 * plateau,
        f"rate at dwell 0.1 is {fast:.5f} vs plateau {plateau:.5f} (need <= 0.5x)",
    )


def test_two_channel_rates_add_and_branching_follows_couplings():
    channels = [
        Channel(label="a", size=201, spacing=0.01, center=1.0, coupling=0.01),
        Channel(label="b", size=201, spacing=0.01, center=1.0, coupling=0.005),
    ]
    model = build_model(1.0, channels)
    result = multichannel_decay_check(model, 12.0, 120.0, trajectories=4000, seed=7041)
    total = result.sum_of_channel_rates
    additivity = abs(result.fitted_total - total) / total
    decayed = result.decayed_counts["a"] + result.decayed_counts["b"]
    fraction = result.decayed_counts["a"] / decayed
    expected_fraction = 0.8  # coupling ratio 2 gives rate ratio 4
    sigma = math.sqrt(expected_fraction * (1 - expected_fraction) / decayed)
    sigma_gap = abs(fraction - expected_fraction) / sigma
    _verdict(
        "two-channel rates add and branching follows the squared couplings",
        additivity <= 0.10 and sigma_gap <= 3.0,
        f"additivity gap {additivity:.3f} (tol 0.10), branching off by {sigma_gap:.2f} sigma (limit 3)",
    )


def test_stochastic_outputs_are_thread_invariant():
    rho = DensityOperator.pure(UP)
    h = Operator(0.5 * SIGMA_X, kind="hermitian")
    a = monte_carlo_curve(rho, h, "random_axis", 5.0, 8, 2000, seed=3, threads=1)
    b = monte_carlo_curve(rho, h, "random_axis", 5.0, 8, 2000, seed=3, threads=4)
    engine_ok = a.csv_bytes() == b.csv_bytes()

    channel = Channel(label="bath", size=51, spacing=0.04, center=1.0, coupling=0.02)
    model = build_model(1.0, [channel])
    c = monitored_decay_experiment(
        model, 10.0, 100.0, mode="monte_carlo", trajectories=500, seed=6, threads=1
    )
    d = monitored_decay_experiment(
        model, 10.0, 100.0, mode="monte_carlo", trajectories=500, seed=6, threads=3
    )
    decay_ok = c.csv_bytes() == d.csv_bytes()

    doc = """
version: 1
name: thread-check
kind: random_axis
system: {omega: 1.0}
sequence: {n: 6, duration: 3.0}
execution: {trajectories: 500, seed: 12}
"""
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        scenario = parse_scenario(doc)
        run_scenario(scenario, out_dir=Path(tmp) / "t1", threads=1)
        run_scenario(scenario, out_dir=Path(tmp) / "t2", threads=2)
        file_ok = (Path(tmp) / "t1" / "thread-check__curve.csv").read_bytes() == (
            Path(tmp) / "t2" / "thread-check__curve.csv"
        ).read_bytes()
    _verdict(
        "stochastic curves are byte-identical across thread counts",
        engine_ok and decay_ok and file_ok,
        f"engine {engine_ok}, monitored decay {decay_ok}, scenario files {file_ok}",
    )
