import numpy as np
import pytest

from lumispec.errors import BudgetError, UnstableSystemError
from lumispec.model import LaserParams
from lumispec.montecarlo import BudgetWarning, factor_covariance, simulate, worker_count
from lumispec.system import LinearNoiseSystem, build_coupled, build_isolated_2l


def iso(xi=0.5, n=100.0):
    return build_isolated_2l(LaserParams(kappa0=0.0, kappa_tilde=0.0, xi=xi, pump_rate=n))


def scalar(a=-1.0, sigma2=2.0):
    return LinearNoiseSystem(drift=[[a]], input_map=[[1.0]], output_map=[[1.0]], feedthrough=[[0.0]],
                             noise_cov=[[sigma2]], shot_levels=[1.0], state_labels=("x",), source_labels=("w",),
                             channel_labels=("y",))


def test_factor_identity():
    fac = factor_covariance(np.eye(3))
    assert fac.mode == "real"
    np.testing.assert_array_equal(fac.factor, np.eye(3))


def test_factor_negative_entry():
    fac = factor_covariance([[0.0, 0.0], [0.0, -2.0]])
    assert fac.mode == "complex"
    col = fac.factor[:, np.flatnonzero(np.abs(fac.factor).sum(axis=0))[0]]
    np.testing.assert_allclose(col, [0.0, 1j * np.sqrt(2.0)], atol=1e-15)


def test_factor_coupled_is_complex():
    D = build_coupled(LaserParams(kappa0=1.0, pump_rate=200.0)).noise_cov
    fac = factor_covariance(D)
    assert fac.mode == "complex"
    np.testing.assert_allclose(fac.reconstruct(), D, atol=1e-12 * np.abs(D).max())


def test_factor_singular_psd_is_real():
    D = np.diag([0.0, 1.0, 4.0])
    fac = factor_covariance(D)
    assert fac.mode == "real"
    np.testing.assert_allclose(fac.reconstruct(), D, atol=1e-12)
    assert np.allclose(fac.factor, np.tril(fac.factor))


def test_factor_random_reconstruction():
    rng = np.random.default_rng(5)
    for _ in range(20):
        M = rng.normal(size=(4, 4))
        D = M + M.T
        np.testing.assert_allclose(factor_covariance(D).reconstruct(), D, atol=1e-12 * np.abs(D).max())
        P = M @ M.T
        np.testing.assert_allclose(factor_covariance(P).reconstruct(), P, atol=1e-12 * np.abs(P).max())


def test_factor_asymmetric():
    with pytest.raises(ValueError):
        factor_covariance([[1.0, 0.5], [0.0, 1.0]])


def test_zero_noise_decay():
    ens = simulate(scalar(sigma2=0.0), 1e-3, 60.0, 1, 0, burn_in=0.0, x0=[1.0])
    t = ens.times
    k = int(np.argmin(np.abs(t - 1.0)))
    assert ens.states[0, k, 0] == pytest.approx(np.exp(-1.0), rel=1e-3)


def test_shapes_and_metadata():
    ens = simulate(iso(), 1e-2, 60.0, 3, 7, record_every=5)
    assert ens.currents.shape == (3, 1200, 1) and ens.states.shape == (3, 1200, 1)
    assert ens.sample_interval == pytest.approx(0.05)
    assert ens.metadata()["seed"] == 7 and ens.mode == "real"
    assert not simulate(iso(), 1e-2, 60.0, 1, 7, record_states=False).states.size


def test_determinism_across_workers():
    a = simulate(iso(), 1e-2, 60.0, 6, 11, workers=1)
    b = simulate(iso(), 1e-2, 60.0, 6, 11, workers=4)
    c = simulate(iso(), 1e-2, 60.0, 6, 12, workers=1)
    assert np.array_equal(a.currents, b.currents) and np.array_equal(a.states, b.states)
    assert not np.array_equal(a.currents, c.currents)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("LUMISPEC_THREADS", "2")
    assert worker_count(8) == 2
    monkeypatch.delenv("LUMISPEC_THREADS")
    assert worker_count(3) == 3


def test_unstable_refused():
    s = scalar(a=0.5)
    with pytest.raises(UnstableSystemError):
        simulate(s, 1e-3, 100.0, 1, 0)


def test_step_refused():
    with pytest.raises(BudgetError):
        simulate(iso(), 0.02, 100.0, 1, 0)


def test_short_run_warns():
    with pytest.warns(BudgetWarning):
        simulate(iso(), 1e-2, 10.0, 1, 0)


def test_stationary_variance():
    # OU with D=2, A=-1: stationary variance D / 2 = 1
    ens = simulate(scalar(), 1e-2, 500.0, 16, 3)
    assert ens.states.real.var() == pytest.approx(1.0, rel=0.05)


def test_complex_mode_real_part_of_pair_moments():
    ens = simulate(build_coupled(LaserParams(kappa0=1.0, pump_rate=2000.0)), 1 / 300, 200.0, 16, 4)
    assert ens.mode == "complex" and np.iscomplexobj(ens.states)
    # <eps eps> without conjugation reproduces the Lyapunov covariance, which is real
    x = ens.states[:, :, 0]
    assert abs(np.mean(x * x).imag) < 0.1 * abs(np.mean(x * x).real)


def test_dt_halving_coupling():
    # coarse draws are sums of fine draw pairs, so both runs follow the same Brownian path
    m, seed = 2, 9
    coarse_dt, t_max = 1e-2, 60.0
    n_coarse = int(round((10.0 + t_max) / coarse_dt))
    fine = np.random.default_rng(seed).standard_normal((2 * n_coarse, m))
    coarse = (fine[0::2] + fine[1::2]) / np.sqrt(2.0)

    def feeder(draws):
        pos = [0]

        def noise(j, count):
            out = draws[pos[0]:pos[0] + count]
            pos[0] += count
            return out
        return noise

    s = iso()
    a = simulate(s, coarse_dt, t_max, 1, 0, noise=feeder(coarse), record_every=1)
    b = simulate(s, coarse_dt / 2, t_max, 1, 0, noise=feeder(fine), record_every=2)
    xa, xb = a.states[0, :, 0], b.states[0, :, 0]
    assert np.sqrt(np.mean((xa - xb) ** 2)) < 0.05 * np.std(xa)


def test_trajectory_csv(tmp_path):
    ens = simulate(build_coupled(LaserParams(kappa0=1.0, pump_rate=2000.0)), 1 / 300, 100.0, 1, 0)
    path = ens.to_csv(tmp_path / "t.csv")
    header = path.read_text().splitlines()[0]
    assert header == "t,eps_re,eps_im,eps_tilde_re,eps_tilde_im,i_re,i_im,i_tilde_re,i_tilde_im"
