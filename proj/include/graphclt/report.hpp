#pragma once

#include <string>

#include "graphclt/ensemble.hpp"

namespace graphclt {

/// Pass/fail bands for the ensemble-vs-prediction comparison. The
/// defaults are ~5-sigma Monte Carlo noise bands so repeated runs are
/// stable.
struct Tolerances {
    double mean_band_se = 4.0;     // |mean W_k| <= band * SE
    double cov_rel = 0.10;         // |cov_obs - cov_pred| <= max(abs, rel sqrt(S_ii S_jj))
    double cov_abs = 0.02;
    double maha_band_sigmas = 5.0;
    double ks_coeff = 1.63;        // ks <= coeff / sqrt(N)
    double degenerate_var = 1e-8;  // below this predicted variance a coordinate is degenerate
    double stopping_band = 0.01;   // |mean H/n - ln 2|
    double final_cov_rel = 0.15;   // covariance tolerance at the stopping time
};

struct Report {
    bool pass = false;
    std::string json;  // serialized document; see compare_report
};

/// Entrywise covariance and per-coordinate mean comparison of the
/// ensemble statistics against the solved predictions, plus the
/// Mahalanobis and KS diagnostics. Degenerate coordinates (predicted
/// variance below tolerance, e.g. the isolated-vertex count at the
/// stopping time) are excluded from relative tests and instead asserted
/// near zero; the document flags them. Emits a JSON document with fields
/// config, checkpoints[], stopping, verdict in fixed key order; output is
/// a pure function of the inputs.
Report compare_report(const EnsembleStats& stats, const TrajectoryTable& table,
                      const Tolerances& tol = {});

}  // namespace graphclt
