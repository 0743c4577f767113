#include "graphclt/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "graphclt/mindeg.hpp"

namespace graphclt {

namespace {

void validate_config(const EnsembleConfig& config) {
    if (config.trials < 2) throw std::invalid_argument("ensemble: need at least 2 trials");
    if (config.n < 2) throw std::invalid_argument("ensemble: n must be >= 2");
    if (config.dt <= 0.0) throw std::invalid_argument("ensemble: dt must be positive");
    if (config.stop_at_terminal) {
        if (config.model != "mindeg") {
            throw std::invalid_argument("ensemble: stop-at-H runs are defined for the mindeg model");
        }
        return;
    }
    if (config.checkpoints.empty()) {
        throw std::invalid_argument("ensemble: need checkpoints or a stop-at-H rule");
    }
    double prev = 0.0;
    for (double t : config.checkpoints) {
        if (t <= prev) throw std::invalid_argument("ensemble: checkpoints must be ascending and positive");
        prev = t;
    }
}

int effective_workers(const EnsembleConfig& config) {
    if (config.workers > 0) return config.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

double ks_of_coordinate(const std::vector<Vec>& w, int coordinate, double pred_var) {
    std::vector<double> sample;
    sample.reserve(w.size());
    const double sd = std::sqrt(pred_var);
    for (const Vec& row : w) sample.push_back(row[coordinate] / sd);
    return ks_statistic_standard_normal(std::move(sample));
}

int first_testable_coordinate(const Matrix& sigma, double tol = 1e-8) {
    for (int i = 0; i < sigma.rows(); ++i)
        if (sigma(i, i) >= tol) return i;
    return -1;
}

}  // namespace

TrialRecord run_trial(const EnsembleConfig& config, const ModelSpec& spec, int trial_index) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(trial_index)));
    auto sim = spec.make_simulator(config.n);

    TrialRecord record;
    if (config.stop_at_terminal) {
        while (sim->step(rng)) {
        }
        record.stop_step = sim->steps_taken();
        record.final_counts = sim->counts();
        return record;
    }

    const std::size_t k = config.checkpoints.size();
    record.checkpoint_counts.resize(k);
    record.censored.assign(k, false);
    bool dead = false;
    for (std::size_t c = 0; c < k; ++c) {
        const auto target = static_cast<std::int64_t>(std::llround(config.checkpoints[c] * static_cast<double>(config.n)));
        while (!dead && sim->steps_taken() < target) {
            if (!sim->step(rng)) dead = true;
        }
        if (dead) {
            record.censored[c] = true;
            continue;
        }
        Vec scaled(sim->dim());
        for (int i = 0; i < sim->dim(); ++i) {
            scaled[i] = static_cast<double>(sim->counts()[i]) / static_cast<double>(config.n);
        }
        if (!in_domain(scaled, spec.model.domain)) {
            record.censored[c] = true;
            dead = true;
            continue;
        }
        record.checkpoint_counts[c] = sim->counts();
    }
    return record;
}

TrajectoryTable solve_for_config(const EnsembleConfig& config) {
    validate_config(config);
    const ModelSpec spec = make_model_spec(config.model, config.params);
    const double t_end = config.stop_at_terminal ? std::numbers::ln2 : config.checkpoints.back();
    return solve_augmented(spec.model, t_end, config.dt);
}

EnsembleStats run_ensemble(const EnsembleConfig& config) {
    return run_ensemble(config, solve_for_config(config));
}

EnsembleStats run_ensemble(const EnsembleConfig& config, const TrajectoryTable& table) {
    validate_config(config);
    const ModelSpec spec = make_model_spec(config.model, config.params);
    if (!config.stop_at_terminal && table.domain_exit &&
        table.t.back() < config.checkpoints.back() - 1e-12) {
        throw std::invalid_argument("ensemble: last checkpoint lies beyond the solvable window (domain exit at t=" +
                                    std::to_string(table.exit_time) + ")");
    }

    const int trials = config.trials;
    std::vector<TrialRecord> records(trials);
    {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto work = [&] {
            try {
                for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) {
                    records[i] = run_trial(config, spec, i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        };
        const int workers = std::min(effective_workers(config), trials);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    EnsembleStats stats;
    stats.config = config;
    const double sqrt_n = std::sqrt(static_cast<double>(config.n));

    if (config.stop_at_terminal) {
        StoppingStats stop;
        stop.samples = trials;
        stop.h_pred = std::numbers::ln2;
        const int q = spec.model.q;
        stop.mu.resize(q);
        for (int k = 1; k <= q; ++k) stop.mu[k - 1] = mindeg::mu(k);

        double h_sum = 0.0, h_sq = 0.0;
        std::vector<Vec> w;
        w.reserve(trials);
        stop.mean_scaled.assign(q, 0.0);
        for (const TrialRecord& record : records) {
            const double h = static_cast<double>(record.stop_step) / static_cast<double>(config.n);
            h_sum += h;
            h_sq += h * h;
            if (record.final_counts[0] != 0) ++stop.isolated_left_trials;
            Vec wi(q);
            for (int i = 0; i < q; ++i) {
                const double c = static_cast<double>(record.final_counts[i]);
                stop.mean_scaled[i] += c / static_cast<double>(config.n);
                wi[i] = (c - static_cast<double>(config.n) * stop.mu[i]) / sqrt_n;
            }
            w.push_back(std::move(wi));
        }
        for (double& m : stop.mean_scaled) m /= trials;
        stop.h_mean = h_sum / trials;
        stop.h_sd = std::sqrt(std::max(0.0, (h_sq - trials * stop.h_mean * stop.h_mean) / (trials - 1)));

        const Moments moments = empirical_moments(w);
        stop.w_mean = moments.mean;
        stop.w_cov = moments.cov;
        stop.sigma_pred = mindeg::final_covariance(table.covariance[table.nearest_index(std::numbers::ln2)]);
        stop.mahalanobis = mahalanobis_check(w, stop.sigma_pred);
        stop.ks_coordinate = first_testable_coordinate(stop.sigma_pred);
        if (stop.ks_coordinate >= 0) {
            stop.ks = ks_of_coordinate(w, stop.ks_coordinate, stop.sigma_pred(stop.ks_coordinate, stop.ks_coordinate));
        }
        stats.stopping = std::move(stop);
        return stats;
    }

    const int q = spec.model.q;
    for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
        CheckpointStats cp;
        cp.t_requested = config.checkpoints[c];
        cp.target_step = static_cast<std::int64_t>(std::llround(cp.t_requested * static_cast<double>(config.n)));
        const std::size_t grid = table.nearest_index(static_cast<double>(cp.target_step) / static_cast<double>(config.n));
        cp.t_grid = table.t[grid];
        cp.z_pred = table.z[grid];
        cp.sigma_pred = table.covariance[grid];

        std::vector<Vec> w;
        w.reserve(trials);
        cp.mean_scaled.assign(q, 0.0);
        for (const TrialRecord& record : records) {
            if (record.censored[c]) {
                ++cp.censored;
                continue;
            }
            const auto& counts = record.checkpoint_counts[c];
            Vec wi(q);
            for (int i = 0; i < q; ++i) {
                const double value = static_cast<double>(counts[i]);
                cp.mean_scaled[i] += value / static_cast<double>(config.n);
                wi[i] = (value - static_cast<double>(config.n) * cp.z_pred[i]) / sqrt_n;
            }
            w.push_back(std::move(wi));
        }
        cp.samples = static_cast<int>(w.size());
        if (cp.samples < 2) {
            throw std::runtime_error("ensemble: fewer than 2 surviving trials at checkpoint t=" +
                                     std::to_string(cp.t_requested));
        }
        for (double& m : cp.mean_scaled) m /= cp.samples;

        const double censored_fraction = static_cast<double>(cp.censored) / trials;
        if (censored_fraction > 0.10) {
            throw std::runtime_error("ensemble: " + std::to_string(100.0 * censored_fraction) +
                                     "% of trials censored at checkpoint t=" + std::to_string(cp.t_requested));
        }
        if (censored_fraction > 0.01) {
            stats.warnings.push_back("checkpoint t=" + std::to_string(cp.t_requested) + ": " +
                                     std::to_string(cp.censored) + " of " + std::to_string(trials) +
                                     " trials censored");
        }

        const Moments moments = empirical_moments(w);
        cp.w_mean = moments.mean;
        cp.w_cov = moments.cov;
        cp.mahalanobis = mahalanobis_check(w, cp.sigma_pred);
        cp.ks_coordinate = first_testable_coordinate(cp.sigma_pred);
        if (cp.ks_coordinate >= 0) {
            cp.ks = ks_of_coordinate(w, cp.ks_coordinate, cp.sigma_pred(cp.ks_coordinate, cp.ks_coordinate));
        }
        stats.checkpoints.push_back(std::move(cp));
    }
    return stats;
}

}  // namespace graphclt
