from setnet.analysis.connectivity import ConnectivityMap, visible_connectivity_map
from setnet.analysis.powerlaw import (
    PowerLawReport,
    fit_power_law,
    null_hypothesis_p_value,
    null_hypothesis_test,
    power_law_report,
    sample_discrete_power_law,
    select_d_min,
)

__all__ = [
    "ConnectivityMap",
    "visible_connectivity_map",
    "PowerLawReport",
    "fit_power_law",
    "null_hypothesis_p_value",
    "null_hypothesis_test",
    "power_law_report",
    "sample_discrete_power_law",
    "select_d_min",
]
