import math

import pytest

import selfstab as ss


@pytest.fixture
def planar():
    return ss.Model.gradient(2, "6*x1^2 + 0.5*x2^2", "4*u")


@pytest.fixture
def ellipse():
    return ss.Domain.ellipse([0.0, 0.0], [1.0, 2.0])


def test_expression_and_model(planar):
    e = ss.Expression("x1^2 + sin(x2)", 2)
    assert e([3.0, 0.0]) == 9.0
    assert e.gradient([3.0, 0.0]) == pytest.approx([6.0, 1.0])
    assert planar.drift([1.0, 2.0]) == pytest.approx([-12.0, -2.0])
    assert planar.potential([1.0, 2.0]) == pytest.approx(8.0)
    with pytest.raises(ss.SyntaxError):
        ss.Expression("x1 +", 1)


def test_closed_form_boundary_minimum(planar, ellipse):
    limiting = ss.boundary_min_closed_form(planar, [0.0, 0.0], ellipse, ss.ActionVariant.limiting)
    assert abs(limiting["value"] - 16.0) <= 1e-9
    assert sorted(round(z[0]) for z in limiting["argmins"]) == [-1, 1]
    classical = ss.boundary_min_closed_form(planar, [0.0, 0.0], ellipse, ss.ActionVariant.classical)
    assert abs(classical["value"] - 4.0) <= 1e-9
    assert sorted(round(z[1]) for z in classical["argmins"]) == [-2, 2]


def test_numeric_cost_matches_closed_form(planar):
    r = ss.minimize_cost(planar, ss.ActionVariant.limiting, [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], 4.0, 100)
    assert r["converged"]
    assert r["value"] == pytest.approx(16.0, rel=0.03)
    assert len(r["path"]["states"]) == 101


def test_simulation_is_seed_deterministic(planar):
    a = ss.simulate(planar, "classical", [0.5, 0.5], 0.5, 1.0, seed=3)
    b = ss.simulate(planar, "classical", [0.5, 0.5], 0.5, 1.0, seed=3)
    c = ss.simulate(planar, "classical", [0.5, 0.5], 0.5, 1.0, seed=4)
    assert a[0]["states"] == b[0]["states"]
    assert a[0]["states"] != c[0]["states"]
    single = ss.simulate(planar, "particle", [0.5, 0.5], 0.5, 1.0, seed=3, particles=1)
    for x, y in zip(single[0]["states"], a[0]["states"]):
        assert x == pytest.approx(y, abs=1e-12)


def test_exit_trials_and_kramers():
    well = ss.Model.gradient(1, "0.5*x1^2", "u")
    domain = ss.Domain.interval(-1.0, 1.0)
    records = ss.run_exit_trials(well, "classical", domain, [0.0], 0.5, 50, 1e4, seed=1)
    lower, upper, censored = ss.exit_sides(records)
    assert censored == 0 and lower + upper == 50
    for r in records:
        assert abs(abs(r.exit_point[0]) - 1.0) <= 1e-6
    stats = ss.exit_statistics(records, domain)
    assert stats["n_trials"] == 50 and stats["mean_exit_time"] > 0

    series = [(eps, math.exp(1.45 / eps), 0.0) for eps in (0.2, 0.25, 0.3, 0.4)]
    assert abs(ss.kramers_fit(series)["quasipotential"] - 1.45) <= 1e-12


def test_config_and_commands(tmp_path):
    assert "paper-5.2" in ss.ScenarioConfig.builtin_names()
    config = ss.ScenarioConfig.builtin("paper-5.2")
    status, printed, outputs = ss.run_command("quasipotential", config, str(tmp_path), True)
    assert status == 0
    assert "Qbar = 16" in printed
    assert (tmp_path / "quasipotential.csv").exists()
    again = ss.ScenarioConfig.parse(config.resolved_text())
    assert again.get("model", "phi") == "4*u"
    with pytest.raises(ss.ConfigError):
        ss.ScenarioConfig.parse("")
