import json

import numpy as np
import pytest

import dwcplan


def test_version():
    assert dwcplan.__version__ == "0.1.0"


def test_flat_day_cost():
    assert dwcplan.cost_eq1([20.0] * 24, 40.0, 0.002) == pytest.approx(19219.2, abs=1e-9)


def test_drive_power_overrides():
    base = dwcplan.drive_power(26.82)
    assert base == pytest.approx(144.40697679329023, rel=1e-9)
    # Power at the wheel over drivetrain efficiency.
    assert dwcplan.drive_power(26.82, {"eta_drive": 1.0}) < base


def test_simulate_conserves_vehicles():
    traj = dwcplan.simulate(dwcplan.builtin("synthetic_corridor"))
    assert traj["rho_veh_per_mi"].shape == (289, 40)
    assert traj["q_veh_per_h"].shape == (289, 41)
    assert traj["conservation_error"] <= 1e-9
    assert (traj["rho_veh_per_mi"] >= 0).all()


def test_config_errors_are_value_errors():
    cor = dwcplan.builtin("synthetic_corridor")
    del cor["cells"][3]["rho_jam_veh_per_mi"]
    with pytest.raises(ValueError, match="/cells/3/rho_jam_veh_per_mi"):
        dwcplan.simulate(cor)
    with pytest.raises(dwcplan.ConfigError):
        dwcplan.builtin("no_such_case")


def test_network_orientation():
    net = dwcplan.network(dwcplan.builtin("twelve_bus_grid"))
    assert net["num_buses"] == 12
    assert net["parent"][0] == -1
    assert net["parent"][7] == 1
    assert np.isinf(net["l_max_pu"]).all()


def test_motivating_dispatch():
    grid = dwcplan.builtin("three_bus_grid")
    flat = dwcplan.solve_opf(grid, dwcplan.builtin("motivating_case1"))
    varying = dwcplan.solve_opf(grid, dwcplan.builtin("motivating_case2"))
    assert flat["status"] == "optimal"
    assert flat["operational_cost_usd"] == pytest.approx(19219.2, abs=1e-4)
    reduction = 1 - varying["operational_cost_usd"] / flat["operational_cost_usd"]
    assert reduction == pytest.approx(0.233, abs=0.01)


def test_run_document_loads(configs):
    run = dwcplan.load_run(configs / "case_study" / "run_reduced.json")
    assert run["resolved"]["ensemble"]["master_seed"] == 2024
    p = np.asarray(run["baseline"]["p_mw"])
    assert p.shape == (12, 288)
    assert p.sum(axis=0).max() == pytest.approx(27.842, rel=1e-3)
    json.dumps(run)  # plain data only
