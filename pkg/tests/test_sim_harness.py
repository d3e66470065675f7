"""Monte Carlo experiment harness: determinism, calibration, aggregation."""

import math

import numpy as np
import pytest

from dsn.priors import PriorParams, sample_sources
from dsn.sim_harness import (
    ExperimentConfig,
    SimulationReport,
    run_experiment,
    run_trial,
)


REFERENCE_PRIOR = PriorParams(
    common_var=0.5, private_vars=(0.5, 0.5), common_rate=0.3, private_rates=(0.1, 0.1)
)

ZERO_PRIOR = PriorParams(
    common_var=0.5, private_vars=(0.5, 0.5), common_rate=0.0, private_rates=(0.0, 0.0)
)


def make_config(**overrides):
    base = dict(
        n=100,
        rhos=(0.8, 0.8),
        prior=REFERENCE_PRIOR,
        noise_vars=(0.01, 0.01),
        lambdas=(0.04, 0.04),
        psi=0.8,
        scheme="coupled",
        trials=200,
        base_seed=0,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def redraw_instance(config, trial_seed):
    """Reproduce one trial's draws per the documented order contract.

    Order: sources, then the two sensing matrices, then the two noise
    vectors.  Fidelity to run_trial is verified by
    test_redraw_contract_matches_run_trial below.
    """
    rng = np.random.Generator(np.random.Philox(trial_seed))
    x = sample_sources(config.prior, config.n, rng)
    mats = []
    for j in (1, 2):
        m = config.measurements(j)
        mats.append(rng.standard_normal((m, config.n)) / math.sqrt(m))
    noises = []
    for j in (1, 2):
        noises.append(rng.standard_normal(mats[j - 1].shape[0]) * math.sqrt(config.noise_vars[j - 1]))
    return x, mats, noises


class TestExperimentConfig:
    def test_measurement_counts(self):
        config = make_config(n=100, rhos=(0.8, 0.33))
        assert config.measurements(1) == 80
        assert config.measurements(2) == 33

    def test_validation(self):
        with pytest.raises(ValueError):
            make_config(n=0)
        with pytest.raises(ValueError):
            make_config(trials=0)
        with pytest.raises(ValueError):
            make_config(scheme="ridge")
        with pytest.raises(ValueError):
            make_config(rhos=(0.0, 0.8))
        with pytest.raises(ValueError):
            make_config(noise_vars=(-0.01, 0.01))
        with pytest.raises(ValueError):
            make_config(n=100, rhos=(0.004, 0.8))  # rounds to zero rows
        with pytest.raises(ValueError):
            make_config().measurements(3)


class TestRunTrial:
    def test_deterministic(self):
        config = make_config(n=40, trials=1)
        a = run_trial(config, 123)
        b = run_trial(config, 123)
        assert a.distortion == b.distortion
        assert a.iterations == b.iterations
        assert a.converged and b.converged

    def test_zero_source_zero_noise(self):
        config = make_config(prior=ZERO_PRIOR, noise_vars=(0.0, 0.0), n=40)
        result = run_trial(config, 7)
        assert result.distortion == 0.0
        assert result.converged

    def test_redraw_contract_matches_run_trial(self):
        # With an enormous regularization weight the solver returns the
        # zero estimate, so the trial distortion equals the drawn sources'
        # half power exactly — which pins the source draw stream.
        config = make_config(n=60, lambdas=(1e12, 1e12), scheme="l21")
        result = run_trial(config, 11)
        x, mats, noises = redraw_instance(config, 11)
        assert result.distortion == float(np.mean(0.5 * np.sum(x**2, axis=1)))
        assert mats[0].shape == (48, 60) and mats[1].shape == (48, 60)
        assert noises[0].shape == (48,)

    def test_dimension_law_and_entry_variance(self):
        config = make_config(n=150, rhos=(0.8, 0.5))
        _, mats, _ = redraw_instance(config, 3)
        assert mats[0].shape == (120, 150)
        assert mats[1].shape == (75, 150)
        for j, m in ((0, 120), (1, 75)):
            var = float(np.var(mats[j]))
            assert abs(var - 1.0 / m) <= 0.05 / m

    def test_snr_calibration(self):
        # Reference configuration: source power 0.2 against noise variance
        # 0.01 is 13 dB.
        config = make_config(n=100)
        signal = []
        noise = []
        for seed in range(100):
            x, _, noises = redraw_instance(config, seed)
            signal.append(np.mean(x**2))
            noise.append(np.mean(np.concatenate(noises) ** 2))
        snr_db = 10.0 * math.log10(np.mean(signal) / np.mean(noise))
        assert abs(snr_db - 10.0 * math.log10(0.2 / 0.01)) <= 0.2


class TestRunExperiment:
    def test_single_trial_aggregation(self):
        config = make_config(n=40, trials=1, base_seed=5)
        report = run_experiment(config)
        assert report.trial_seeds == [5]
        assert report.mean == report.distortions[0]
        assert report.mean_db == 10.0 * math.log10(report.mean)
        assert report.stderr == 0.0
        assert report.flagged_trials == 0
        assert report.warning is None

    def test_doubling_trials_preserves_prefix(self):
        short = run_experiment(make_config(n=40, trials=10))
        long = run_experiment(make_config(n=40, trials=20))
        assert np.array_equal(long.distortions[:10], short.distortions)
        assert long.trial_seeds[:10] == short.trial_seeds

    def test_stderr_shrinks_with_trial_count(self):
        half = run_experiment(make_config(n=32, trials=80))
        full = run_experiment(make_config(n=32, trials=160))
        ratio = full.stderr / half.stderr
        assert 0.5 <= ratio <= 0.95

    def test_worker_pool_is_bit_identical(self):
        config = make_config(n=30, trials=8)
        serial = run_experiment(config, workers=1)
        parallel = run_experiment(config, workers=2)
        assert np.array_equal(serial.distortions, parallel.distortions)
        assert serial.mean == parallel.mean
        assert serial.stderr == parallel.stderr

    def test_all_flagged_trials(self):
        config = make_config(n=40, trials=5, solver_max_iter=1, solver_tol=1e-16)
        report = run_experiment(config)
        assert report.flagged_trials == 5
        assert math.isnan(report.mean)
        assert math.isnan(report.mean_db)
        assert len(report.distortions) == 0
        assert "5 of 5" in report.warning

    def test_rejects_bad_worker_count(self):
        with pytest.raises(ValueError):
            run_experiment(make_config(n=40, trials=1), workers=0)
