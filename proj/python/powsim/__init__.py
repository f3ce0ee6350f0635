"""Discrete-round proof-of-work attack simulator and bound calculator."""

try:
    from ._powsim import (  # noqa: F401  (installed layout)
        analytics,
        pragthos,
        run_simulation,
        run_scenario,
        run_catalog,
        catalog_names,
        poi_window_trial,
        c1_filter_rate,
    )
except ImportError:  # in-tree build: extension sits on sys.path directly
    from _powsim import (  # noqa: F401
        analytics,
        pragthos,
        run_simulation,
        run_scenario,
        run_catalog,
        catalog_names,
        poi_window_trial,
        c1_filter_rate,
    )

__all__ = [
    "analytics",
    "pragthos",
    "run_simulation",
    "run_scenario",
    "run_catalog",
    "catalog_names",
    "poi_window_trial",
    "c1_filter_rate",
]
