"""Fluid limits, asymptotic covariances and Monte Carlo validation of
random graph processes.

The heavy lifting lives in the compiled extension; this package adds a
small convenience layer (JSON decoding of ensemble reports).
"""

import json as _json

from ._core import (  # noqa: F401
    LN2,
    __version__,
    beta,
    dproc_diffusion,
    dproc_drift,
    ensemble_report,
    final_covariance,
    fundamental_closed,
    mindeg_diffusion,
    mindeg_drift,
    mu,
    solve,
)


def ensemble(**kwargs):
    """Runs a Monte Carlo ensemble and returns the decoded report.

    Accepts the same keyword arguments as :func:`ensemble_report`;
    returns a dict with the fields config, checkpoints, stopping and
    verdict.
    """
    _, report_json = ensemble_report(**kwargs)
    return _json.loads(report_json)


__all__ = [
    "LN2",
    "__version__",
    "beta",
    "dproc_diffusion",
    "dproc_drift",
    "ensemble",
    "ensemble_report",
    "final_covariance",
    "fundamental_closed",
    "mindeg_diffusion",
    "mindeg_drift",
    "mu",
    "solve",
]
