import numpy as np
import pytest

from scanspectra.common.exceptions import DomainError, SimulationError
from scanspectra.lab.hardcore import (compact_distribution, compact_equivalence_check, compact_glauber_kernel,
                                      compact_scan_kernel, compact_site_kernel, concentration_check,
                                      decomposition_check, exact_residue_law, glauber_tail_bound, nu_moment_check,
                                      SeparationTable, separation_experiment, separation_verdicts, simulate_scan,
                                      tail_bound_check)
from scanspectra.markov.mixing import mixing_time
from scanspectra.odm.models.report import SeparationRow


def test_compact_distribution():
    dist = compact_distribution(3, 2.0)
    assert dist.probs.tolist() == pytest.approx([1 / 7, 2 / 7, 2 / 7, 2 / 7])
    assert dist.pi_min == pytest.approx(1 / 7)

    with pytest.raises(DomainError):
        compact_distribution(0)

    with pytest.raises(DomainError):
        compact_distribution(3, float("inf"))


def test_compact_kernels():
    assert np.allclose(compact_glauber_kernel(2).matrix, [[.5, .25, .25], [.25, .75, 0], [.25, 0, .75]])
    assert np.allclose(compact_scan_kernel(2).matrix, [[.25, .5, .25], [.25, .5, .25], [.5, 0, .5]])
    assert np.allclose(compact_site_kernel(2, 0).matrix, [[.5, .5, 0], [.5, .5, 0], [0, 0, 1]])

    scan = compact_scan_kernel(4, 3.0, order=(2, 0, 3, 1))
    assert scan.unit == "sweeps"
    assert scan.updates_per_step == 4
    sites = [compact_site_kernel(4, site, 3.0).matrix for site in (2, 0, 3, 1)]
    assert np.allclose(scan.matrix, sites[0] @ sites[1] @ sites[2] @ sites[3])

    with pytest.raises(DomainError):
        compact_scan_kernel(3, order=(0, 1, 1))

    with pytest.raises(DomainError):
        compact_site_kernel(3, 3)


@pytest.mark.parametrize("n, fugacity", [(1, 1.0), (3, 1.0), (4, 0.5), (5, 2.5)])
def test_compact_equivalence(n, fugacity):
    verdict = compact_equivalence_check(n, fugacity)
    assert verdict.verdict == "pass"
    assert verdict.values["glauber_residual"] <= 1e-12


def test_simulate_scan():
    stats = simulate_scan(8, sweeps=50, seed=17, stream=3)
    assert stats == simulate_scan(8, sweeps=50, seed=17, stream=3)
    assert stats.total_updates == 400
    assert stats.start == 8
    assert stats.interleaved
    # Leaving the start e_8 needs an update of site 7, at multiples of 8
    assert stats.tau[0] % 8 == 0
    assert len(stats.tau) >= 1

    if len(stats.tau) > len(stats.nu):
        assert stats.final_state == 0
    else:
        assert stats.final_state != 0


def test_simulate_scan_from_empty():
    stats = simulate_scan(5, sweeps=20, seed=2, start=0)
    assert stats.tau[0] == 0
    assert stats.interleaved

    idle = simulate_scan(5, sweeps=0, seed=2)
    assert idle.tau == []
    assert idle.nu == []
    assert idle.final_state == 5

    with pytest.raises(DomainError):
        simulate_scan(5, sweeps=10, seed=2, start=6)

    with pytest.raises(DomainError):
        simulate_scan(5, sweeps=-1, seed=2)


def test_exact_residue_law():
    assert exact_residue_law(2, 1).tolist() == pytest.approx([1 / 3, 2 / 3])
    assert exact_residue_law(5, 0).tolist() == pytest.approx([1, 0, 0, 0, 0], abs=1e-12)
    # Many excitations wash the residue out
    assert exact_residue_law(4, 200).tolist() == pytest.approx([0.25] * 4, abs=1e-9)
    assert exact_residue_law(6, 3, fugacity=2.0).sum() == pytest.approx(1.0)


def test_nu_moments():
    verdict = nu_moment_check(8, 3, trials=2000, seed=5)
    assert verdict.values["expected_mean"] == pytest.approx(2 * 9 * 3)
    assert verdict.values["expected_variance"] == pytest.approx(2 * 65 * 3)
    assert verdict.values["trials"] == 2000
    assert verdict.values["mean"] == pytest.approx(54, rel=0.1)
    assert verdict.values["variance"] == pytest.approx(390, rel=0.25)

    with pytest.raises(DomainError):
        nu_moment_check(8, 3, trials=10, seed=5)

    with pytest.raises(DomainError):
        nu_moment_check(8, 0, trials=200, seed=5)


def test_truncated_trajectories_are_errors(config, monkeypatch):
    monkeypatch.setattr(config.simulation, "max_updates", 20)
    with pytest.raises(SimulationError, match="did not reach nu_3 within 20 updates"):
        nu_moment_check(8, 3, trials=100, seed=5)

    with pytest.raises(SimulationError):
        decomposition_check(8, 3, trials=100, seed=5)


def test_decomposition():
    verdict = decomposition_check(4, 3, trials=4000, seed=12)
    assert verdict.verdict == "pass"
    assert verdict.values["tv_exact"] < 0.05
    assert sum(verdict.values["empirical"]) == pytest.approx(1.0)

    # One excitation is far from uniform
    assert decomposition_check(4, 1, trials=1000, seed=12, reference="uniform").verdict == "fail"

    with pytest.raises(DomainError):
        decomposition_check(4, 1, trials=200, seed=12, reference="poisson")


def test_concentration():
    # 0.002 * 16^3 rounds up to 9 updates, before site 15 is ever touched
    verdict = concentration_check(16, trials=100, seed=3)
    assert verdict.values["horizon_updates"] == 9
    assert verdict.values["set_size"] == 1
    assert verdict.values["captured_mass"] == pytest.approx(1.0)
    assert verdict.verdict == "pass"

    with pytest.raises(DomainError):
        concentration_check(15, trials=100, seed=3)

    with pytest.raises(DomainError):
        concentration_check(16, trials=100, seed=3, c_prime=0.0)


def test_tail_bound():
    tail = glauber_tail_bound(3, 10)
    assert tail[0] == pytest.approx(1.0)
    assert tail[1] == pytest.approx(1.0)
    assert np.all(np.diff(tail) <= 0)

    verdict = tail_bound_check(3, 60)
    assert verdict.verdict == "pass"
    assert verdict.values["t_max"] == 60


def test_separation_experiment():
    table = separation_experiment([5, 2, 3, 4, 2], epsilon=0.25, t_max=2000, max_workers=2)
    assert [row.n for row in table.rows] == [2, 3, 4, 5]
    first = table.rows[0]
    assert first.t_gd_steps == 3
    assert first.t_ss_sweeps == 2
    assert first.ratio == pytest.approx(2 / 3)
    assert all(row.bound_check == "pass" for row in table.rows)
    assert set(table.slopes) == {"t_gd_steps", "t_ss_sweeps"}
    assert table.slopes["t_gd_steps"] > 0

    for row in table.rows:
        assert row.t_gd_steps == mixing_time(compact_glauber_kernel(row.n), 0.25, 2000).t_mix


def test_separation_slopes():
    table = separation_experiment([4, 8, 16, 32, 64], epsilon=0.25, t_max=100_000, max_workers=2)
    verdicts = separation_verdicts(table)
    assert [verdict.check for verdict in verdicts] == ["glauber-slope", "scan-slope", "ratio-growth"]
    assert [verdict.verdict for verdict in verdicts] == ["pass", "pass", "pass"]
    assert 0.8 <= verdicts[0].values["slope"] <= 1.2
    assert 1.7 <= verdicts[1].values["slope"] <= 2.3
    assert verdicts[2].values["n_values"] == [4, 8, 16, 32, 64]


def test_separation_slopes_small_tables():
    table = separation_experiment([2, 3, 4, 5], epsilon=0.25, t_max=2000)
    # Only n = 4 and n = 5 are fitted
    assert [verdict.verdict for verdict in separation_verdicts(table)] == ["info", "info", "info"]


def _row(n, t_gd, t_ss):
    return SeparationRow({"n": n, "t_gd_steps": t_gd, "t_ss_sweeps": t_ss,
                          "ratio": t_ss / t_gd if t_ss and t_gd else None, "bound_check": "pass"})


def test_separation_slope_failures():
    # Flat scan sweeps: Glauber slope 1, scan slope 0, falling ratio
    rows = (_row(4, 10, 20), _row(8, 20, 20), _row(16, 40, 20))
    table = SeparationTable(rows, 0.25, {"t_gd_steps": 1.0, "t_ss_sweeps": 0.0})
    assert [verdict.verdict for verdict in separation_verdicts(table)] == ["pass", "fail", "fail"]

    # A size past the horizon cannot be fitted
    rows = (_row(4, 10, 20), _row(8, 20, 80), _row(16, 40, None))
    table = SeparationTable(rows, 0.25, {"t_gd_steps": 1.0, "t_ss_sweeps": 2.0})
    verdicts = separation_verdicts(table)
    assert [verdict.verdict for verdict in verdicts] == ["pass", "fail", "fail"]
    assert verdicts[2].values["ratios"] == [2.0, 4.0, None]
