#include "graphclt/report.hpp"

#include <cmath>
#include <json.hpp>

#include "graphclt/version.hpp"

namespace graphclt {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json json_vec(const Vec& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(x);
    return a;
}

ordered_json json_matrix(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

struct CheckList {
    ordered_json checks = ordered_json::array();
    bool all_pass = true;

    void add(const std::string& name, double predicted, double observed, double tolerance, bool pass) {
        checks.push_back(ordered_json{{"name", name},
                                      {"predicted", predicted},
                                      {"observed", observed},
                                      {"tolerance", tolerance},
                                      {"pass", pass}});
        all_pass = all_pass && pass;
    }
};

void mean_checks(CheckList& list, const Vec& w_mean, const Matrix& w_cov, int samples,
                 const Tolerances& tol) {
    for (std::size_t k = 0; k < w_mean.size(); ++k) {
        const double se = std::sqrt(std::max(0.0, w_cov(static_cast<int>(k), static_cast<int>(k))) / samples);
        const double band = tol.mean_band_se * se;
        list.add("mean_w_" + std::to_string(k + 1), 0.0, w_mean[k], band, std::fabs(w_mean[k]) <= band);
    }
}

void cov_checks(CheckList& list, const Matrix& obs, const Matrix& pred, double rel, const Tolerances& tol) {
    const int q = pred.rows();
    for (int i = 0; i < q; ++i) {
        for (int j = i; j < q; ++j) {
            const std::string name = "cov_" + std::to_string(i + 1) + std::to_string(j + 1);
            const bool degenerate = pred(i, i) < tol.degenerate_var || pred(j, j) < tol.degenerate_var;
            if (degenerate) {
                // No relative scale; the observation itself must vanish.
                list.add(name + "_degenerate", pred(i, j), obs(i, j), tol.cov_abs,
                         std::fabs(obs(i, j)) <= tol.cov_abs);
                continue;
            }
            const double band = std::max(tol.cov_abs, rel * std::sqrt(pred(i, i) * pred(j, j)));
            list.add(name, pred(i, j), obs(i, j), band, std::fabs(obs(i, j) - pred(i, j)) <= band);
        }
    }
}

}  // namespace

Report compare_report(const EnsembleStats& stats, const TrajectoryTable& table, const Tolerances& tol) {
    const EnsembleConfig& config = stats.config;
    for (const CheckpointStats& cp : stats.checkpoints) {
        if (static_cast<int>(cp.z_pred.size()) != table.q) {
            throw std::invalid_argument("compare_report: trajectory table does not match the statistics");
        }
    }
    ordered_json doc;
    doc["config"] = ordered_json{{"model", config.model},
                                 {"q", config.params.q},
                                 {"d", config.params.d},
                                 {"epsilon", config.params.epsilon},
                                 {"delta", config.params.delta},
                                 {"corrected_diffusion", config.params.corrected_diffusion},
                                 {"n", config.n},
                                 {"trials", config.trials},
                                 {"checkpoints", json_vec(config.checkpoints)},
                                 {"stop_at_terminal", config.stop_at_terminal},
                                 {"seed", config.seed},
                                 {"dt", config.dt},
                                 {"version", kVersion}};

    bool verdict = true;
    ordered_json checkpoints = ordered_json::array();
    for (const CheckpointStats& cp : stats.checkpoints) {
        CheckList list;
        mean_checks(list, cp.w_mean, cp.w_cov, cp.samples, tol);
        cov_checks(list, cp.w_cov, cp.sigma_pred, tol.cov_rel, tol);
        list.add("mahalanobis_mean", cp.mahalanobis.dim, cp.mahalanobis.mean_d2, cp.mahalanobis.band,
                 cp.mahalanobis.pass);
        if (cp.ks_coordinate >= 0) {
            const double ks_band = tol.ks_coeff / std::sqrt(static_cast<double>(cp.samples));
            list.add("ks_coordinate_" + std::to_string(cp.ks_coordinate + 1), 0.0, cp.ks, ks_band,
                     cp.ks <= ks_band);
        }
        verdict = verdict && list.all_pass;
        checkpoints.push_back(ordered_json{{"t", cp.t_requested},
                                           {"mean_obs", json_vec(cp.mean_scaled)},
                                           {"mean_pred", json_vec(cp.z_pred)},
                                           {"cov_obs", json_matrix(cp.w_cov)},
                                           {"cov_pred", json_matrix(cp.sigma_pred)},
                                           {"mahalanobis_mean", cp.mahalanobis.mean_d2},
                                           {"ks_stat", cp.ks},
                                           {"pass", list.all_pass},
                                           {"samples", cp.samples},
                                           {"censored", cp.censored},
                                           {"checks", std::move(list.checks)}});
    }
    doc["checkpoints"] = std::move(checkpoints);

    if (stats.stopping) {
        const StoppingStats& stop = *stats.stopping;
        CheckList list;
        list.add("isolated_left_trials", 0.0, static_cast<double>(stop.isolated_left_trials), 0.0,
                 stop.isolated_left_trials == 0);
        list.add("h_mean", stop.h_pred, stop.h_mean, tol.stopping_band,
                 std::fabs(stop.h_mean - stop.h_pred) <= tol.stopping_band);
        for (std::size_t k = 0; k < stop.mu.size(); ++k) {
            const double se = std::sqrt(std::max(0.0, stop.w_cov(static_cast<int>(k), static_cast<int>(k))) /
                                        stop.samples);
            const double band = tol.mean_band_se * se;
            const double observed = stop.w_mean[k];
            list.add("mean_w_" + std::to_string(k + 1), 0.0, observed, band, std::fabs(observed) <= band);
        }
        cov_checks(list, stop.w_cov, stop.sigma_pred, tol.final_cov_rel, tol);
        list.add("mahalanobis_mean", stop.mahalanobis.dim, stop.mahalanobis.mean_d2, stop.mahalanobis.band,
                 stop.mahalanobis.pass);
        verdict = verdict && list.all_pass;

        // Row/column 1 of the predicted matrix is degenerate by
        // construction (no isolated vertices remain at the stopping
        // time); the checks above assert the empirical entries are zero
        // rather than comparing them in relative terms.
        doc["stopping"] = ordered_json{{"h_mean", stop.h_mean},
                                       {"h_pred", stop.h_pred},
                                       {"h_sd", stop.h_sd},
                                       {"t", stop.h_pred},
                                       {"mean_obs", json_vec(stop.mean_scaled)},
                                       {"mean_pred", json_vec(stop.mu)},
                                       {"cov_obs", json_matrix(stop.w_cov)},
                                       {"cov_pred", json_matrix(stop.sigma_pred)},
                                       {"mahalanobis_mean", stop.mahalanobis.mean_d2},
                                       {"ks_stat", stop.ks},
                                       {"degenerate_coordinates", ordered_json::array({1})},
                                       {"pass", list.all_pass},
                                       {"samples", stop.samples},
                                       {"checks", std::move(list.checks)}};
    } else {
        doc["stopping"] = nullptr;
    }

    if (!stats.warnings.empty()) {
        ordered_json warnings = ordered_json::array();
        for (const std::string& w : stats.warnings) warnings.push_back(w);
        doc["warnings"] = std::move(warnings);
    }

    doc["verdict"] = verdict ? "pass" : "fail";

    Report report;
    report.pass = verdict;
    report.json = doc.dump(2) + "\n";
    return report;
}

}  // namespace graphclt
