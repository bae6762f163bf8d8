"""Traffic-aware microgrid planning for dynamic wireless charging corridors.

Configuration values use the same JSON schemas as the ``dwcplan`` command
line tool; they are passed as plain dicts here.
"""

import json

import numpy as np

from . import _core
from ._core import ConfigError, Error, __version__, cost_eq1

__all__ = [
    "ConfigError",
    "Error",
    "__version__",
    "builtin",
    "cost_eq1",
    "drive_power",
    "load_run",
    "network",
    "simulate",
    "size",
    "solve_opf",
]

# Keys whose values are rectangular numeric tables.
_ARRAYS = {
    "rho_veh_per_mi", "q_veh_per_h", "v_mph", "p_g_mw", "q_g_mvar", "p_solar_mw", "p_ch_mw",
    "p_dis_mw", "e_mwh", "v_pu2", "l_pu2", "p_line_mw", "q_line_mvar", "r_pu", "x_pu",
}


def _arrays(doc):
    for key in _ARRAYS & doc.keys():
        doc[key] = np.asarray(doc[key], dtype=float)
    return doc


def _dump(value):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"{type(o).__name__} is not JSON serializable")

    return json.dumps(value, default=default)


def builtin(name):
    """Bundled configuration as a dict: ``synthetic_corridor``,
    ``twelve_bus_grid``, ``three_bus_grid``, ``motivating_case1`` or
    ``motivating_case2``."""
    return json.loads(_core.builtin(name))


def drive_power(v_mps, vehicle=None):
    """Drive power in kW at speed ``v_mps``; ``vehicle`` overrides defaults."""
    return _core.drive_power(v_mps, _dump(vehicle or {}))


def simulate(corridor, strict=False):
    """Runs the cell transmission model; densities are (steps + 1, cells)."""
    return _arrays(json.loads(_core.simulate(_dump(corridor), strict)))


def network(grid):
    """Oriented radial network with per-unit line data."""
    out = json.loads(_core.network(_dump(grid)))
    out["l_max_pu"] = np.array([np.inf if v is None else v for v in out["l_max_pu"]])
    return _arrays(out)


def solve_opf(grid, demand, solar_availability=None, solar_mw=None, es_units=None,
              coupling_mw=None, loss_penalty=None):
    """Daily dispatch with the relaxed branch-flow model."""
    problem = {"grid": grid, "demand": demand}
    for key, value in (("solar_availability", solar_availability), ("solar_mw", solar_mw),
                       ("es_units", es_units), ("coupling_mw", coupling_mw),
                       ("loss_penalty", loss_penalty)):
        if value is not None:
            problem[key] = value
    return _arrays(json.loads(_core.solve_opf(_dump(problem))))


def load_run(path):
    """Validated run document: the resolved configuration and its baseline demand."""
    return json.loads(_core.load_run(str(path)))


def size(path, es_buses):
    """Sizing on the baseline demand of a run document."""
    return json.loads(_core.size(str(path), list(es_buses)))
