import json
import math
import pathlib

import numpy as np
import pytest

import binaria

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_polytrope_identity():
    eos = binaria.EquationOfState.polytrope(1.0, 2.0)
    s = np.logspace(-6, 3, 60)
    lhs = eos.enthalpy(s) * s - eos.energy_density(s)
    assert np.max(np.abs(lhs - eos.pressure(s)) / eos.pressure(s)) <= 1e-12
    assert np.allclose(eos.inverse_enthalpy(eos.enthalpy(s)), s, rtol=1e-12)


def test_gamma_below_four_thirds_rejected():
    with pytest.raises(ValueError):
        binaria.EquationOfState.polytrope(1.0, 1.3)


def test_field_functionals():
    grid = binaria.Grid.centered((0.0, 0.0, 0.0), 0.5, 4, 4, 4)
    values = np.zeros(grid.shape)
    values[1, 1, 1] = 1.0
    rho = binaria.DensityField(grid, values)
    assert binaria.mass(rho) == pytest.approx(0.125)
    assert binaria.center_of_mass(rho) == pytest.approx((-0.25, -0.25, -0.25))
    assert binaria.moment_of_inertia(rho) == 0.0
    with pytest.raises(ValueError):
        binaria.DensityField(grid, -values)


def test_binary_geometry():
    p = binaria.build_problem(0.5, 1.0)
    assert (p.mu_r, p.eta, p.radius, p.distance, p.diameter) == (0.25, 16.0, 4.0, 8.0, 24.0)


def test_winf_distance():
    a = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    d, matching = binaria.winf_distance(a, a + [0.5, 0.0, 0.0])
    assert d == 0.5
    assert matching == [0, 1]


def test_lane_emden_n1():
    p = binaria.lane_emden_reference(2.0, 1.0, 1.0)
    assert abs(p.xi1 - math.pi) <= 1e-8
    x = np.linspace(0.1, 3.0, 30)
    assert np.max(np.abs(p.theta(x) - np.sin(x) / x)) <= 1e-8


def test_single_star_small_grid():
    eos = binaria.EquationOfState.polytrope(1.0, 2.0)
    config = binaria.SolverConfig()
    config.grid = (24, 24, 24)
    sol = binaria.solve_single_star(eos, 1.0, config)
    assert sol.status == "converged"
    assert sol.lambda_[0] < 0
    assert sol.rho.values.shape == (24, 24, 24)
    e = sol.energy
    assert e["E_J"] == e["U"] - e["G"] / 2 + e["T_J"]
    el = binaria.el_residual(eos, sol.rho, 0.0, sol.domains, sol.lambda_)
    assert el["pass"]


def test_rearrangement():
    rho = binaria.spiked_density(32, 3, 5)
    sigma, R, audit = binaria.rearrange_to_bounded(rho, 32 * math.sqrt(3) / 32, 128)
    assert audit["pass"]
    assert sigma.values.max() <= 2 * R


def test_run_config(tmp_path):
    code = binaria.run_config(ROOT / "configs" / "wasserstein.cfg", out=tmp_path, deterministic=True)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["scenario"] == "wasserstein"
    assert report["distance"] > 0
