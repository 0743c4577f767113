#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "graphclt/ensemble.hpp"
#include "graphclt/mindeg.hpp"
#include "graphclt/report.hpp"
#include "graphclt/stats.hpp"

using namespace graphclt;

TEST_CASE("empirical_moments") {
    SUBCASE("constant samples have zero covariance") {
        const std::vector<Vec> samples(5, Vec{1.0, -2.0});
        const Moments m = empirical_moments(samples);
        CHECK(m.mean[0] == 1.0);
        CHECK(m.mean[1] == -2.0);
        CHECK(max_abs(m.cov) == 0.0);
    }
    SUBCASE("two samples +-u give 2 u u'") {
        const Vec u{0.5, -1.5};
        const Moments m = empirical_moments({u, {-u[0], -u[1]}});
        CHECK(max_abs(m.mean) == 0.0);
        CHECK(m.cov(0, 0) == doctest::Approx(2 * u[0] * u[0]));
        CHECK(m.cov(0, 1) == doctest::Approx(2 * u[0] * u[1]));
        CHECK(m.cov(1, 1) == doctest::Approx(2 * u[1] * u[1]));
    }
    SUBCASE("standard normal synthetic sample") {
        const int n = 100000;
        Rng rng(123);
        std::vector<Vec> samples;
        samples.reserve(n);
        for (int i = 0; i < n; ++i) samples.push_back({rng.normal(), rng.normal(), rng.normal()});
        const Moments m = empirical_moments(samples);
        const double band = 5.0 / std::sqrt(static_cast<double>(n));
        CHECK(max_abs_diff(m.cov, Matrix::identity(3)) <= band);
        CHECK(max_abs(m.mean) <= band);
    }
    SUBCASE("fewer than two samples is an error") {
        CHECK_THROWS_AS(empirical_moments({Vec{1.0}}), std::invalid_argument);
    }
}

TEST_CASE("incomplete gamma and chi-square") {
    // P(1/2, x) = erf(sqrt(x)); P(1, x) = 1 - e^{-x}.
    for (double x : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        CHECK(lower_regularized_gamma(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
        CHECK(lower_regularized_gamma(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
    }
    // The 0.99 quantile used as the exceedance threshold.
    CHECK(chi_square_quantile(0.99, 4) == doctest::Approx(13.2767).epsilon(1e-5));
    for (int k : {1, 2, 4, 9}) {
        const double x = chi_square_quantile(0.99, k);
        CHECK(chi_square_cdf(x, k) == doctest::Approx(0.99).epsilon(1e-10));
    }
}

TEST_CASE("KS statistic") {
    Rng rng(2024);
    std::vector<double> sample;
    const int n = 20000;
    sample.reserve(n);
    for (int i = 0; i < n; ++i) sample.push_back(rng.normal());
    CHECK(ks_statistic_standard_normal(sample) <= 1.63 / std::sqrt(static_cast<double>(n)));

    for (double& x : sample) x += 0.1;  // a shift this size must be detected
    CHECK(ks_statistic_standard_normal(sample) > 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mahalanobis_check") {
    SUBCASE("synthetic Gaussian with the right covariance passes") {
        Matrix sigma(3, 3);
        sigma(0, 0) = 2.0; sigma(0, 1) = 0.5; sigma(0, 2) = -0.3;
        sigma(1, 0) = 0.5; sigma(1, 1) = 1.5; sigma(1, 2) = 0.2;
        sigma(2, 0) = -0.3; sigma(2, 1) = 0.2; sigma(2, 2) = 1.0;
        const Matrix l = cholesky(sigma);
        Rng rng(5);
        std::vector<Vec> w;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            Vec g{rng.normal(), rng.normal(), rng.normal()};
            Vec x(3, 0.0);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c <= r; ++c) x[r] += l(r, c) * g[c];
            w.push_back(std::move(x));
        }
        const MahalanobisResult res = mahalanobis_check(w, sigma);
        CHECK(res.dim == 3);
        CHECK(res.pass);
        CHECK(res.mean_d2 == doctest::Approx(3.0).epsilon(0.05));
        CHECK(res.exceed_fraction == doctest::Approx(0.01).epsilon(0.5));
        CHECK(res.exceed_threshold == doctest::Approx(chi_square_quantile(0.99, 3)));
    }
    SUBCASE("a fixed direction fails for dimension >= 2") {
        const std::vector<Vec> w(2000, Vec{1.0, 0.0});
        const MahalanobisResult res = mahalanobis_check(w, Matrix::identity(2));
        CHECK(res.dim == 2);
        CHECK(res.mean_d2 == doctest::Approx(1.0));
        CHECK_FALSE(res.pass);
    }
    SUBCASE("rank-deficient prediction reduces to an invertible sub-block") {
        // Sigma = a v v' with v = (1, -2, 1): the one-dimensional picture
        // of the d-process fluctuations.
        const Vec v{1.0, -2.0, 1.0};
        Matrix sigma = outer(v, v) * 0.25;
        Rng rng(6);
        std::vector<Vec> w;
        for (int i = 0; i < 5000; ++i) {
            const double g = 0.5 * rng.normal();
            w.push_back({g * v[0], g * v[1], g * v[2]});
        }
        const MahalanobisResult res = mahalanobis_check(w, sigma);
        CHECK(res.dim == 1);
        CHECK(res.pass);
        CHECK(res.mean_d2 == doctest::Approx(1.0).epsilon(0.1));
    }
    SUBCASE("degenerate coordinates are dropped") {
        Matrix sigma = Matrix::identity(2);
        sigma(1, 1) = 1e-12;
        std::vector<Vec> w;
        Rng rng(7);
        for (int i = 0; i < 3000; ++i) w.push_back({rng.normal(), 0.0});
        const MahalanobisResult res = mahalanobis_check(w, sigma);
        CHECK(res.dim == 1);
        CHECK(res.kept == std::vector<int>{0});
        CHECK(res.pass);
    }
}

TEST_CASE("run_trial determinism: identical records for identical (seed, index)") {
    for (const char* label : {"mindeg", "dproc", "gauss"}) {
        ModelParams params;
        params.q = 3;
        params.d = 2;
        const ModelSpec spec = make_model_spec(label, params);
        EnsembleConfig config;
        config.model = label;
        config.params = params;
        config.n = 500;
        config.trials = 4;
        config.checkpoints = {0.2, 0.4};
        config.seed = 31337;
        const TrialRecord a = run_trial(config, spec, 2);
        const TrialRecord b = run_trial(config, spec, 2);
        CHECK(a.checkpoint_counts == b.checkpoint_counts);
        CHECK(a.censored == b.censored);
        const TrialRecord c = run_trial(config, spec, 3);
        CHECK(a.checkpoint_counts != c.checkpoint_counts);
    }
}

TEST_CASE("run_trial: mindeg n=2 stops immediately with counts (0,1,0,...)") {
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 4;
    config.n = 2;
    config.stop_at_terminal = true;
    const ModelSpec spec = make_model_spec("mindeg", config.params);
    const TrialRecord record = run_trial(config, spec, 0);
    CHECK(record.stop_step == 1);
    CHECK(record.final_counts == std::vector<Count>{0, 1, 0, 0});
}

TEST_CASE("run_trial: dproc counts sum to n at a checkpoint") {
    EnsembleConfig config;
    config.model = "dproc";
    config.params.d = 2;
    config.n = 10000;
    config.checkpoints = {0.2};
    const ModelSpec spec = make_model_spec("dproc", config.params);
    const TrialRecord record = run_trial(config, spec, 0);
    REQUIRE_FALSE(record.censored[0]);
    Count total = 0;
    for (Count c : record.checkpoint_counts[0]) total += c;
    CHECK(total == config.n);
}

TEST_CASE("run_ensemble: N=2 uses the unbiased denominator") {
    EnsembleConfig config;
    config.model = "gauss";
    config.n = 100;
    config.trials = 2;
    config.checkpoints = {0.5};
    config.seed = 9;
    const EnsembleStats stats = run_ensemble(config);
    REQUIRE(stats.checkpoints.size() == 1);
    const CheckpointStats& cp = stats.checkpoints[0];
    REQUIRE(cp.samples == 2);
    // With two samples the covariance is (x1-x2)(x1-x2)'/2; check one
    // entry against the raw records.
    const ModelSpec spec = make_model_spec("gauss", config.params);
    const TrialRecord a = run_trial(config, spec, 0);
    const TrialRecord b = run_trial(config, spec, 1);
    const double w0 = (a.checkpoint_counts[0][0] - b.checkpoint_counts[0][0]) / std::sqrt(100.0);
    CHECK(cp.w_cov(0, 0) == doctest::Approx(w0 * w0 / 2.0).epsilon(1e-12));
}

TEST_CASE("run_ensemble: checkpoints beyond the solvable window are rejected") {
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 3;
    config.n = 200;
    config.trials = 10;
    config.checkpoints = {1.0};  // the drift solve leaves the box before t=1
    CHECK_THROWS_AS(run_ensemble(config), std::invalid_argument);
}

TEST_CASE("run_ensemble: heavy censoring is an error, light censoring a warning") {
    // The stopping time sits near 0.693 n; a checkpoint just below it
    // censors a few percent of trials, one above censors all of them.
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 3;
    config.n = 400;
    config.trials = 400;
    config.seed = 11;

    config.checkpoints = {0.75};
    CHECK_THROWS_AS(run_ensemble(config), std::runtime_error);

    config.checkpoints = {0.2, 0.66};
    const EnsembleStats stats = run_ensemble(config);
    REQUIRE(stats.checkpoints.size() == 2);
    CHECK(stats.checkpoints[0].censored == 0);
    CHECK(stats.checkpoints[1].censored > 0);
    CHECK(stats.checkpoints[1].censored < 40);
    CHECK(stats.checkpoints[1].samples + stats.checkpoints[1].censored == config.trials);
    REQUIRE(!stats.warnings.empty());
}

TEST_CASE("run_ensemble is a pure function of the config") {
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 4;
    config.n = 1000;
    config.trials = 120;
    config.checkpoints = {0.3};
    config.seed = 424242;
    const TrajectoryTable table = solve_for_config(config);

    config.workers = 1;
    const Report one = compare_report(run_ensemble(config, table), table);
    config.workers = 4;
    const Report four = compare_report(run_ensemble(config, table), table);
    CHECK(one.json == four.json);
}

TEST_CASE("synthetic Gaussian calibration: correct covariance accepted, mis-scaled rejected") {
    EnsembleConfig config;
    config.model = "gauss";
    config.n = 4000;
    config.trials = 1500;
    config.checkpoints = {0.5};
    config.seed = 4;
    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    const Report good = compare_report(stats, table);
    CHECK(good.pass);

    // The predicted covariance grows linearly in t with the increment
    // covariance as slope.
    const Matrix expected = gauss_increment_covariance() * 0.5;
    CHECK(max_abs_diff(stats.checkpoints[0].sigma_pred, expected) <= 1e-9 * max_abs(expected));

    TrajectoryTable scaled = table;
    for (Matrix& sigma : scaled.covariance) sigma *= 1.5;
    const Report bad = compare_report(run_ensemble(config, scaled), scaled);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("report document structure") {
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 3;
    config.n = 500;
    config.trials = 60;
    config.checkpoints = {0.25, 0.5};
    config.seed = 2;
    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    const Report report = compare_report(stats, table);

    const auto doc = nlohmann::json::parse(report.json);
    REQUIRE(doc.contains("config"));
    REQUIRE(doc.contains("checkpoints"));
    REQUIRE(doc.contains("stopping"));
    REQUIRE(doc.contains("verdict"));
    CHECK(doc["stopping"].is_null());
    CHECK(doc["config"]["n"] == 500);
    CHECK(doc["config"]["seed"] == 2);
    CHECK(doc["config"].contains("dt"));
    CHECK(doc["config"].contains("version"));
    REQUIRE(doc["checkpoints"].size() == 2);
    for (const auto& block : doc["checkpoints"]) {
        for (const char* key :
             {"t", "mean_obs", "mean_pred", "cov_obs", "cov_pred", "mahalanobis_mean", "ks_stat", "pass"}) {
            CHECK(block.contains(key));
        }
    }
    // Fixed key order in the serialized text.
    const auto pos_config = report.json.find("\"config\"");
    const auto pos_checkpoints = report.json.find("\"checkpoints\"");
    const auto pos_stopping = report.json.find("\"stopping\"");
    const auto pos_verdict = report.json.find("\"verdict\"");
    CHECK(pos_config < pos_checkpoints);
    CHECK(pos_checkpoints < pos_stopping);
    CHECK(pos_stopping < pos_verdict);
}

TEST_CASE("stop-at-H report carries the stopping block") {
    EnsembleConfig config;
    config.model = "mindeg";
    config.params.q = 4;
    config.n = 3000;
    config.trials = 150;
    config.stop_at_terminal = true;
    config.seed = 77;
    const TrajectoryTable table = solve_for_config(config);
    const EnsembleStats stats = run_ensemble(config, table);
    REQUIRE(stats.stopping.has_value());
    CHECK(stats.stopping->isolated_left_trials == 0);
    CHECK(stats.stopping->h_pred == doctest::Approx(std::numbers::ln2));
    CHECK(std::fabs(stats.stopping->h_mean - std::numbers::ln2) < 0.05);
    // W_1 is identically zero at the stopping time.
    CHECK(stats.stopping->w_mean[0] == 0.0);
    CHECK(stats.stopping->w_cov(0, 0) == 0.0);

    const Report report = compare_report(stats, table);
    const auto doc = nlohmann::json::parse(report.json);
    REQUIRE(doc["stopping"].is_object());
    CHECK(doc["stopping"].contains("h_mean"));
    CHECK(doc["stopping"].contains("h_pred"));
    CHECK(doc["stopping"]["degenerate_coordinates"][0] == 1);
}

TEST_CASE("a wrong sign in the fundamental-matrix equation is caught by the closed-form cross-check") {
    // Mutation fixture: flip the Jacobian's sign, which turns T' = -TJ
    // into T' = +TJ inside the solver.
    ProcessModel broken = mindeg::model(3);
    const Matrix j = mindeg::jacobian(3);
    broken.jacobian = [j](const Vec&) { return j * -1.0; };
    const TrajectoryTable table = solve_augmented(broken, 0.5, 1e-3);
    const std::size_t idx = table.nearest_index(0.5);
    const double mismatch = max_abs_diff(table.fundamental[idx], mindeg::fundamental_closed(0.5, 3));
    CHECK(mismatch > 0.1);

    const TrajectoryTable healthy = solve_augmented(mindeg::model(3), 0.5, 1e-3);
    CHECK(max_abs_diff(healthy.fundamental[idx], mindeg::fundamental_closed(0.5, 3)) <= 1e-8);
}
