#pragma once

#include <optional>
#include <string>

#include "graphclt/models.hpp"
#include "graphclt/ode.hpp"
#include "graphclt/stats.hpp"

namespace graphclt {

struct EnsembleConfig {
    std::string model = "mindeg";
    ModelParams params;
    Count n = 10000;
    int trials = 1000;
    std::vector<double> checkpoints;  // ascending times; checkpoint step is round(t n)
    bool stop_at_terminal = false;    // run each trial to its stopping time (mindeg only)
    std::uint64_t seed = 0;
    double dt = 1e-4;
    int workers = 0;                  // 0 = hardware concurrency
};

/// Raw outcome of one trial: counts at each checkpoint step (empty when
/// the trial ended or left the domain first), or the stopping data.
struct TrialRecord {
    std::vector<std::vector<Count>> checkpoint_counts;
    std::vector<bool> censored;
    std::int64_t stop_step = -1;
    std::vector<Count> final_counts;
};

/// One path of the configured process. The trial RNG stream is a pure
/// function of (config.seed, trial_index), so results do not depend on
/// scheduling.
TrialRecord run_trial(const EnsembleConfig& config, const ModelSpec& spec, int trial_index);

struct CheckpointStats {
    double t_requested = 0.0;
    double t_grid = 0.0;
    std::int64_t target_step = 0;
    int samples = 0;
    int censored = 0;
    Vec mean_scaled;        // mean of counts / n
    Vec z_pred;             // grid value used for standardization
    Vec w_mean;
    Matrix w_cov;
    Matrix sigma_pred;
    MahalanobisResult mahalanobis;
    double ks = 0.0;
    int ks_coordinate = -1;  // 0-based; -1 when no coordinate is testable
};

struct StoppingStats {
    int samples = 0;
    double h_mean = 0.0;
    double h_sd = 0.0;
    double h_pred = 0.0;
    Vec mean_scaled;   // mean of final counts / n
    Vec mu;            // predicted limit of counts / n
    Vec w_mean;        // W = (C - n mu) / sqrt(n)
    Matrix w_cov;
    Matrix sigma_pred;  // transformed Sigma(h)
    MahalanobisResult mahalanobis;
    double ks = 0.0;
    int ks_coordinate = -1;
    std::int64_t isolated_left_trials = 0;  // trials ending with isolated vertices (must be 0)
};

struct EnsembleStats {
    EnsembleConfig config;
    std::vector<CheckpointStats> checkpoints;
    std::optional<StoppingStats> stopping;
    std::vector<std::string> warnings;
};

/// Trajectory solve matching the config (model, margins, dt; t_end is the
/// last checkpoint, or ln 2 for stopping-time runs).
TrajectoryTable solve_for_config(const EnsembleConfig& config);

/// N trials, parallelized over workers, reduced in trial-index order so
/// the result is a pure function of the config. More than 10% censored
/// trials at any checkpoint is an error; more than 1% records a warning.
EnsembleStats run_ensemble(const EnsembleConfig& config, const TrajectoryTable& table);
EnsembleStats run_ensemble(const EnsembleConfig& config);

}  // namespace graphclt
