#include "graphclt/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "graphclt/dprocess.hpp"
#include "graphclt/ensemble.hpp"
#include "graphclt/mindeg.hpp"
#include "graphclt/report.hpp"

namespace graphclt {

namespace {

void add_check(CriterionResult& r, const std::string& name, double observed, double tolerance,
               bool pass) {
    r.checks.push_back({name, observed, tolerance, pass});
    r.pass = r.pass && pass;
}

void add_max_check(CriterionResult& r, const std::string& name, double observed, double tolerance) {
    add_check(r, name, observed, tolerance, observed <= tolerance);
}

/// Collects report checks whose name starts with one of the prefixes;
/// with expect_pass the worst offender is recorded and all must pass,
/// otherwise at least one collected check must fail.
void adopt_report_checks(CriterionResult& r, const std::string& report_json,
                         const std::vector<std::string>& prefixes, const std::string& label,
                         bool expect_pass) {
    const nlohmann::json doc = nlohmann::json::parse(report_json);
    int collected = 0, failed = 0;
    auto visit_block = [&](const nlohmann::json& block) {
        if (!block.is_object() || !block.contains("checks")) return;
        for (const auto& check : block["checks"]) {
            const std::string name = check["name"];
            bool wanted = false;
            for (const std::string& prefix : prefixes) {
                if (name.rfind(prefix, 0) == 0) {
                    wanted = true;
                    break;
                }
            }
            if (!wanted) continue;
            ++collected;
            const bool ok = check["pass"];
            if (!ok) ++failed;
            if (expect_pass) {
                add_check(r, label + ": " + name, check["observed"], check["tolerance"], ok);
            }
        }
    };
    for (const auto& block : doc["checkpoints"]) visit_block(block);
    visit_block(doc["stopping"]);
    if (!expect_pass) {
        add_check(r, label + ": at least one comparison fails", failed, collected, failed > 0);
    }
}

// -------------------------------------------------------------------------
// 1. closed-form trajectory

CriterionResult criterion_closed_form_trajectory() {
    CriterionResult r{1, "closed-form trajectory (mindeg q=6)"};
    const int q = 6;
    const double dt = 1e-4;
    const ProcessModel model = mindeg::model(q);
    const TrajectoryTable table = solve_augmented(model, 0.69, dt);

    double z_err = 0.0, t_err = 0.0;
    for (int hundredths = 10; hundredths <= 69; ++hundredths) {
        const double t = hundredths / 100.0;
        const std::size_t idx = table.nearest_index(t);
        for (int k = 1; k <= q; ++k) {
            z_err = std::max(z_err, std::fabs(table.z[idx][k - 1] - mindeg::beta(table.t[idx], k)));
        }
        t_err = std::max(t_err, max_abs_diff(table.fundamental[idx], mindeg::fundamental_closed(table.t[idx], q)));
    }
    add_max_check(r, "max |z - beta| over t in [0.10, 0.69]", z_err, 1e-9);
    add_max_check(r, "max |T - closed form|", t_err, 1e-8);
    return r;
}

// -------------------------------------------------------------------------
// 2. two-route covariance

CriterionResult criterion_two_route_sigma() {
    CriterionResult r{2, "two-route covariance (mindeg q=4)"};
    const int q = 4;
    const double dt = 1e-4;
    const ProcessModel model = mindeg::model(q);
    const TrajectoryTable table = solve_augmented(model, std::numbers::ln2, dt);
    const Matrix a = mindeg::jacobian(q);

    double worst = 0.0;
    for (const double t : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, std::numbers::ln2}) {
        const std::size_t idx = table.nearest_index(t);
        const Matrix direct = table.covariance[idx];
        const Matrix quadrature = sigma_linear_closed_form(a, model, table.t[idx], dt);
        for (int i = 0; i < q; ++i) {
            for (int j = 0; j < q; ++j) {
                const double scale = std::max({std::fabs(direct(i, j)), std::fabs(quadrature(i, j)), 1e-12});
                worst = std::max(worst, std::fabs(direct(i, j) - quadrature(i, j)) / scale);
            }
        }
    }
    add_max_check(r, "max entrywise relative gap on [0, ln 2]", worst, 1e-6);
    return r;
}

// -------------------------------------------------------------------------
// 3. RK4 order

CriterionResult criterion_rk4_order() {
    CriterionResult r{3, "RK4 order (dt-halving ratio)"};
    const ProcessModel model = mindeg::model(6);
    const double t_end = 0.5;
    const double dt = 0.02;
    const Vec z1 = solve_augmented(model, t_end, dt).z.back();
    const Vec z2 = solve_augmented(model, t_end, dt / 2).z.back();
    const Vec z4 = solve_augmented(model, t_end, dt / 4).z.back();
    const double ratio = max_abs_diff(z1, z2) / max_abs_diff(z2, z4);
    add_check(r, "error ratio |z_dt - z_dt/2| / |z_dt/2 - z_dt/4|", ratio, 20.0,
              ratio >= 12.0 && ratio <= 20.0);
    return r;
}

// -------------------------------------------------------------------------
// 4. oracle equivalence

struct MindegStateKey {
    std::vector<Count> counts;
    bool operator==(const MindegStateKey& other) const { return counts == other.counts; }
};

struct MindegStateHash {
    std::size_t operator()(const MindegStateKey& key) const {
        std::size_t h = 1469598103934665603ull;
        for (Count c : key.counts) {
            h ^= static_cast<std::size_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

/// Exhaustive check of the mindeg one-step formulas at exact
/// probabilities on every reachable pre-stop state: the enumeration
/// oracle must match both the drift identity and the pattern-based
/// second moment to rounding. Returns the worst deviation.
double mindeg_oracle_sweep(int n, int q, std::size_t& states_checked) {
    double worst = 0.0;
    std::unordered_set<MindegStateKey, MindegStateHash> seen;
    std::vector<std::vector<Count>> frontier;
    std::vector<Count> initial(static_cast<std::size_t>(n), 0);
    initial[0] = n;
    seen.insert({initial});
    frontier.push_back(initial);
    while (!frontier.empty()) {
        std::vector<std::vector<Count>> next;
        for (const auto& full : frontier) {
            if (full[0] == 0) continue;  // stopping time reached
            // Project to q tracked orders for the formula check.
            std::vector<Count> tracked(full.begin(), full.begin() + q);
            const StepDistribution dist = mindeg::step_distribution(tracked, n);
            const OneStepMoments oracle = exact_one_step_moments(dist);
            ++states_checked;

            Vec p(static_cast<std::size_t>(q) + 1, 0.0);
            Count mass = 0;
            for (int k = 1; k <= q; ++k) {
                p[k - 1] = (static_cast<double>(k) * tracked[k - 1] - (k == 1 ? 1.0 : 0.0)) / (n - 1.0);
                mass += k * tracked[k - 1];
            }
            p[q] = static_cast<double>(n - mass) / (n - 1.0);
            const OneStepMoments predicted = mindeg::moments_at_probabilities(p);

            // Independent drift route: f_k at the exact probabilities.
            Vec drift_hat(q);
            for (int k = 1; k <= q; ++k) {
                drift_hat[k - 1] = (k == 1 ? -1.0 : 0.0) - p[k - 1] + (k >= 2 ? p[k - 2] : 0.0);
            }
            worst = std::max(worst, max_abs_diff(oracle.mean, drift_hat));
            worst = std::max(worst, max_abs_diff(oracle.mean, predicted.mean));
            worst = std::max(worst, max_abs_diff(oracle.second, predicted.second));

            // Expand in the full (order <= n) representation.
            for (int v = 1; v <= n; ++v) {
                const Count weight = static_cast<Count>(v) * full[v - 1] - (v == 1 ? 1 : 0);
                if (weight <= 0) continue;
                std::vector<Count> child = full;
                child[0] -= 1;
                child[v - 1] -= 1;
                if (v < n) child[v] += 1;
                MindegStateKey key{child};
                if (seen.insert(key).second) next.push_back(std::move(key.counts));
            }
        }
        frontier = std::move(next);
    }
    return worst;
}

/// Exhaustive BFS over reachable d=2 graphs on n labelled vertices; on
/// every state with a valid pair the two-endpoint moment formulas at the
/// exact pair law must match the enumeration oracle to rounding.
double dproc_oracle_sweep(int n, std::size_t& states_checked) {
    const int d = 2;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::uint32_t i = 0; i + 1 < static_cast<std::uint32_t>(n); ++i)
        for (std::uint32_t j = i + 1; j < static_cast<std::uint32_t>(n); ++j) pairs.emplace_back(i, j);
    auto pair_bit = [&](std::uint32_t u, std::uint32_t v) {
        std::size_t idx = 0;
        for (; idx < pairs.size(); ++idx)
            if (pairs[idx].first == std::min(u, v) && pairs[idx].second == std::max(u, v)) break;
        return idx;
    };

    double worst = 0.0;
    std::unordered_set<std::uint32_t> seen{0u};
    std::vector<std::uint32_t> frontier{0u};
    while (!frontier.empty()) {
        std::vector<std::uint32_t> next;
        for (const std::uint32_t mask : frontier) {
            dproc::GraphSimulator g(n, d);
            for (std::size_t b = 0; b < pairs.size(); ++b) {
                if (mask >> b & 1u) g.add_edge(pairs[b].first, pairs[b].second);
            }
            const auto valid = g.valid_pairs();
            if (valid.empty()) continue;
            ++states_checked;

            const OneStepMoments oracle = exact_one_step_moments(dproc::step_distribution(g));
            const OneStepMoments predicted = dproc::moments_from_pair_law(dproc::pair_law(g), d);
            worst = std::max(worst, max_abs_diff(oracle.mean, predicted.mean));
            worst = std::max(worst, max_abs_diff(oracle.second, predicted.second));

            for (const auto& [u, v] : valid) {
                const std::uint32_t child = mask | (1u << pair_bit(u, v));
                if (seen.insert(child).second) next.push_back(child);
            }
        }
        frontier = std::move(next);
    }
    return worst;
}

CriterionResult criterion_oracle_equivalence() {
    CriterionResult r{4, "oracle equivalence (exhaustive, n <= 8)"};

    std::size_t mindeg_states = 0;
    double mindeg_worst = 0.0;
    for (int n = 2; n <= 8; ++n) {
        for (const int q : {n, std::min(n, 4)}) {
            mindeg_worst = std::max(mindeg_worst, mindeg_oracle_sweep(n, q, mindeg_states));
            if (q == n) break;  // avoid re-running identical q for tiny n
        }
    }
    add_max_check(r, "mindeg max |oracle - formulas| at exact probabilities", mindeg_worst, 1e-12);
    r.notes.push_back("mindeg states checked: " + std::to_string(mindeg_states));

    std::size_t dproc_states = 0;
    double dproc_worst = 0.0;
    for (int n = 2; n <= 8; ++n) dproc_worst = std::max(dproc_worst, dproc_oracle_sweep(n, dproc_states));
    add_max_check(r, "dproc max |oracle - two-endpoint form| at exact pair law", dproc_worst, 1e-12);
    r.notes.push_back("dproc states checked: " + std::to_string(dproc_states));

    // The cross-term-only form understates the second moment; record the
    // canonical disagreement at the empty-graph state.
    {
        dproc::GraphSimulator empty(8, 2);
        const OneStepMoments oracle = exact_one_step_moments(dproc::step_distribution(empty));
        const Vec z{1.0, 0.0, 0.0};
        const double plain = dproc::diffusion(z, 2, 0.0, false)(0, 0);
        const double corrected = dproc::diffusion(z, 2, 0.0, true)(0, 0);
        add_check(r, "uncorrected (0,0) entry stays at 1", plain, 1e-12, std::fabs(plain - 1.0) <= 1e-12);
        add_check(r, "oracle (0,0) entry is 4", oracle.second(0, 0), 1e-12,
                  std::fabs(oracle.second(0, 0) - 4.0) <= 1e-12);
        add_check(r, "corrected (0,0) entry matches oracle", corrected, 1e-12,
                  std::fabs(corrected - oracle.second(0, 0)) <= 1e-12);
        r.notes.push_back("empty-graph second moment (0,0): uncorrected form 1 vs oracle 4");
    }
    return r;
}

// -------------------------------------------------------------------------
// 5. CLT, minimum-degree interior

CriterionResult criterion_mindeg_clt() {
    CriterionResult r{5, "CLT, mindeg interior (n=1e4, N=1e4, t=0.5)"};
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 4;
    config.n = 10000;
    config.trials = 10000;
    config.checkpoints = {0.5};
    config.seed = 42;
    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    const Report report = compare_report(stats, table);
    adopt_report_checks(r, report.json, {"mean_w_", "cov_", "mahalanobis_mean", "ks_"},
                        "mindeg t=0.5", true);
    return r;
}

// -------------------------------------------------------------------------
// 6. CLT, d-process

CriterionResult criterion_dproc_clt() {
    CriterionResult r{6, "CLT, d-process (d=2, n=1e4, N=5e3, t=0.2)"};
    EnsembleConfig config;
    config.model = "dproc";
    config.params.d = 2;
    config.n = 10000;
    config.trials = 5000;
    config.checkpoints = {0.2};
    config.seed = 43;

    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    const Report report = compare_report(stats, table);
    adopt_report_checks(r, report.json, {"mean_w_", "cov_"}, "corrected", true);

    EnsembleConfig plain = config;
    plain.params.corrected_diffusion = false;
    const TrajectoryTable plain_table = solve_for_config(plain);
    const EnsembleStats plain_stats = run_ensemble(plain, plain_table);
    const Report plain_report = compare_report(plain_stats, plain_table);
    adopt_report_checks(r, plain_report.json, {"cov_"}, "uncorrected (expected failure)", false);
    r.notes.push_back("uncorrected diffusion must fail the covariance comparison, and does");
    return r;
}

// -------------------------------------------------------------------------
// 7. stopping time

CriterionResult criterion_stopping_time() {
    CriterionResult r{7, "stopping time (mindeg, n=1e5, N=500)"};
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 6;
    config.n = 100000;
    config.trials = 500;
    config.stop_at_terminal = true;
    config.seed = 44;
    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    const Report report = compare_report(stats, table);
    adopt_report_checks(r, report.json,
                        {"isolated_left_trials", "h_mean", "mean_w_", "cov_"}, "at H", true);
    const StoppingStats& stop = *stats.stopping;
    r.notes.push_back("mean H/n = " + std::to_string(stop.h_mean));
    return r;
}

// -------------------------------------------------------------------------
// 8. harness self-test

CriterionResult criterion_harness_self_test() {
    CriterionResult r{8, "harness self-test (synthetic Gaussian)"};
    EnsembleConfig config;
    config.model = "gauss";
    config.n = 10000;
    config.trials = 4000;
    config.checkpoints = {0.5};
    config.seed = 45;
    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    const Report report = compare_report(stats, table);
    add_check(r, "known covariance accepted", report.pass ? 1.0 : 0.0, 1.0, report.pass);

    TrajectoryTable scaled = table;
    for (Matrix& sigma : scaled.covariance) sigma *= 1.5;
    const EnsembleStats bad_stats = run_ensemble(config, scaled);
    const Report bad_report = compare_report(bad_stats, scaled);
    add_check(r, "mis-scaled covariance (x1.5) rejected", bad_report.pass ? 1.0 : 0.0, 0.0,
              !bad_report.pass);
    return r;
}

// -------------------------------------------------------------------------
// 9. determinism

CriterionResult criterion_determinism() {
    CriterionResult r{9, "determinism across worker counts"};
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 4;
    config.n = 2000;
    config.trials = 300;
    config.checkpoints = {0.25, 0.5};
    config.seed = 777;
    const TrajectoryTable table = solve_for_config(config);

    config.workers = 1;
    const Report first = compare_report(run_ensemble(config, table), table);
    config.workers = 4;
    const Report second = compare_report(run_ensemble(config, table), table);
    const Report third = compare_report(run_ensemble(config, table), table);

    add_check(r, "workers=1 vs workers=4 byte-identical", first.json == second.json ? 1.0 : 0.0, 1.0,
              first.json == second.json);
    add_check(r, "repeated run byte-identical", second.json == third.json ? 1.0 : 0.0, 1.0,
              second.json == third.json);
    return r;
}

double runtime_budget_seconds(int id) {
    switch (id) {
        case 1:
        case 2:
        case 3: return 5.0;
        case 4: return 30.0;
        case 5:
        case 6: return 180.0;
        case 7: return 300.0;
        case 8: return 30.0;
        case 9: return 60.0;
        default: return 0.0;
    }
}

}  // namespace

std::vector<int> acceptance_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

CriterionResult run_acceptance_criterion(int id) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    switch (id) {
        case 1: r = criterion_closed_form_trajectory(); break;
        case 2: r = criterion_two_route_sigma(); break;
        case 3: r = criterion_rk4_order(); break;
        case 4: r = criterion_oracle_equivalence(); break;
        case 5: r = criterion_mindeg_clt(); break;
        case 6: r = criterion_dproc_clt(); break;
        case 7: r = criterion_stopping_time(); break;
        case 8: r = criterion_harness_self_test(); break;
        case 9: r = criterion_determinism(); break;
        default: throw std::invalid_argument("unknown criterion id " + std::to_string(id));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double budget = runtime_budget_seconds(id);
    add_check(r, "runtime seconds", r.seconds, budget, r.seconds < budget);
    return r;
}

std::vector<int> criteria_for_selection(const std::string& selection) {
    if (selection.empty() || selection == "all") return acceptance_criteria();
    if (selection == "numerics") return {1, 2, 3};
    if (selection == "oracle" || selection == "core") return {4};
    if (selection == "clt" || selection == "ensemble") return {5, 6};
    if (selection == "stopping") return {7};
    if (selection == "harness") return {8};
    if (selection == "determinism") return {9};
    std::vector<int> ids;
    std::stringstream stream(selection);
    std::string token;
    while (std::getline(stream, token, ',')) {
        try {
            const int id = std::stoi(token);
            if (id < 1 || id > 9) throw std::invalid_argument("");
            ids.push_back(id);
        } catch (...) {
            throw std::invalid_argument("unknown criterion selection: " + selection);
        }
    }
    if (ids.empty()) throw std::invalid_argument("unknown criterion selection: " + selection);
    return ids;
}

bool run_acceptance(const std::vector<int>& ids, std::ostream& out, bool verbose) {
    bool all_pass = true;
    for (const int id : ids) {
        const CriterionResult r = run_acceptance_criterion(id);
        all_pass = all_pass && r.pass;
        char line[160];
        std::snprintf(line, sizeof(line), "criterion %d  %-48s  %s  (%.1f s)", r.id, r.name.c_str(),
                      r.pass ? "PASS" : "FAIL", r.seconds);
        out << line << "\n";
        if (verbose || !r.pass) {
            for (const CriterionCheck& c : r.checks) {
                std::snprintf(line, sizeof(line), "    %-52s  observed %-12.6g tolerance %-12.6g %s",
                              c.name.c_str(), c.observed, c.tolerance, c.pass ? "ok" : "FAIL");
                out << line << "\n";
            }
            for (const std::string& note : r.notes) out << "    note: " << note << "\n";
        }
    }
    out << (all_pass ? "all criteria passed" : "CRITERIA FAILED") << "\n";
    return all_pass;
}

}  // namespace graphclt
