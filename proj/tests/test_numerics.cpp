#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "graphclt/mindeg.hpp"
#include "graphclt/models.hpp"
#include "graphclt/ode.hpp"

using namespace graphclt;

namespace {

ProcessModel scalar_decay_model() {
    ProcessModel m;
    m.q = 1;
    m.label = "decay";
    m.drift = [](const Vec& z) { return Vec{-z[0]}; };
    m.diffusion = [](const Vec&) { return Matrix::zero(1); };
    m.domain.lo = {-10.0};
    m.domain.hi = {10.0};
    m.initial_state = {1.0};
    return m;
}

}  // namespace

TEST_CASE("mat_inverse basics") {
    CHECK(max_abs_diff(mat_inverse(Matrix::identity(3)), Matrix::identity(3)) == 0.0);

    Matrix d(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    const Matrix dinv = mat_inverse(d);
    CHECK(dinv(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(dinv(1, 1) == doctest::Approx(0.25).epsilon(1e-15));

    // Fundamental matrix of the 2d minimum-degree system at t = ln 2.
    const Matrix t = mindeg::fundamental_closed(std::numbers::ln2, 2);
    CHECK(t(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t(1, 0) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(t(1, 1) == doctest::Approx(4.0).epsilon(1e-14));
    const Matrix tinv = mat_inverse(t);
    CHECK(tinv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(tinv(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(tinv(1, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(tinv(1, 1) == doctest::Approx(0.25).epsilon(1e-14));

    Matrix singular(2, 2);
    singular(0, 0) = 1.0;
    singular(0, 1) = 2.0;
    singular(1, 0) = 2.0;
    singular(1, 1) = 4.0;
    CHECK_THROWS_AS(mat_inverse(singular), std::runtime_error);
}

TEST_CASE("mat_inverse residual stays tiny on random well-conditioned matrices") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(6));
        Matrix m = Matrix::identity(n) * (1.0 + rng.uniform());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) += 0.5 * (rng.uniform() - 0.5);
        const Matrix inv = mat_inverse(m);
        CHECK(max_abs_diff(m * inv, Matrix::identity(n)) <= 1e-10);
    }
}

TEST_CASE("mat_exp") {
    CHECK(max_abs_diff(mat_exp(Matrix::zero(3)), Matrix::identity(3)) == 0.0);

    Matrix d(2, 2);
    d(0, 0) = 1.5;
    d(1, 1) = -0.7;
    const Matrix e = mat_exp(d);
    CHECK(e(0, 0) == doctest::Approx(std::exp(1.5)).epsilon(1e-13));
    CHECK(e(1, 1) == doctest::Approx(std::exp(-0.7)).epsilon(1e-13));
    CHECK(e(0, 1) == 0.0);

    Matrix nilpotent(2, 2);
    nilpotent(0, 1) = 1.0;
    const Matrix en = mat_exp(nilpotent);
    CHECK(en(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(en(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(en(1, 0) == 0.0);
    CHECK(en(1, 1) == doctest::Approx(1.0).epsilon(1e-15));

    // Norm around 8: scaling-and-squaring path.
    Matrix big(2, 2);
    big(0, 0) = 4.0;
    big(0, 1) = 4.0;
    big(1, 1) = -4.0;
    const Matrix eb = mat_exp(big);
    // exp of [[a, b], [0, c]] has (0,1) entry b (e^a - e^c)/(a - c).
    const double expected = 4.0 * (std::exp(4.0) - std::exp(-4.0)) / 8.0;
    CHECK(eb(0, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("jacobian_fd") {
    Matrix a(3, 3);
    Rng rng(5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = 2.0 * rng.uniform() - 1.0;
    const auto linear = [&a](const Vec& z) { return matvec(a, z); };
    CHECK(max_abs_diff(jacobian_fd(linear, {0.3, -0.2, 0.9}), a) <= 1e-8);

    const auto constant = [](const Vec& z) { return Vec(z.size(), 3.14); };
    CHECK(max_abs(jacobian_fd(constant, {1.0, 2.0})) == 0.0);

    const auto md = [](const Vec& z) { return mindeg::drift(z); };
    CHECK(max_abs_diff(jacobian_fd(md, {0.4, 0.2, 0.1, 0.05}), mindeg::jacobian(4)) <= 1e-6);
}

TEST_CASE("solve_augmented: t_end = 0 gives the single initial row") {
    const TrajectoryTable table = solve_augmented(mindeg::model(3), 0.0, 1e-3);
    REQUIRE(table.size() == 1);
    CHECK(table.t[0] == 0.0);
    CHECK(max_abs_diff(table.fundamental[0], Matrix::identity(3)) == 0.0);
    CHECK(max_abs(table.fluctuation[0]) == 0.0);
    CHECK(max_abs(table.covariance[0]) == 0.0);
}

TEST_CASE("solve_augmented: scalar linear decay hits e^{-1}") {
    const TrajectoryTable table = solve_augmented(scalar_decay_model(), 1.0, 1e-3);
    CHECK(table.z.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("solve_augmented: a noiseless process has zero covariance") {
    ProcessModel m = scalar_decay_model();
    m.diffusion = [&m](const Vec& z) {
        const Vec f = m.drift(z);
        return outer(f, f);  // deterministic step: second moment is exactly F F'
    };
    const TrajectoryTable table = solve_augmented(m, 1.0, 1e-3);
    CHECK(max_abs(table.covariance.back()) <= 1e-15);
}

TEST_CASE("solve_augmented: mindeg q=2 matches the closed forms") {
    const int q = 2;
    const TrajectoryTable table = solve_augmented(mindeg::model(q), std::numbers::ln2, 1e-4);
    double z_err = 0.0, t_err = 0.0, inv_err = 0.0;
    for (std::size_t i = 0; i < table.size(); i += 50) {
        const double t = table.t[i];
        for (int k = 1; k <= q; ++k) z_err = std::max(z_err, std::fabs(table.z[i][k - 1] - mindeg::beta(t, k)));
        t_err = std::max(t_err, max_abs_diff(table.fundamental[i], mindeg::fundamental_closed(t, q)));
        inv_err = std::max(inv_err, max_abs_diff(table.fundamental[i] * mat_inverse(table.fundamental[i]),
                                                 Matrix::identity(q)));
    }
    CHECK(z_err <= 1e-10);
    CHECK(t_err <= 1e-8);
    CHECK(inv_err <= 1e-9);
}

TEST_CASE("solve_augmented: drift matches the flow of the closed-form solution") {
    // F(beta(t)) against a central difference of beta.
    const double h = 1e-5;
    double worst = 0.0;
    for (double t = 0.05; t <= 0.6; t += 0.05) {
        Vec b(4), derivative(4);
        for (int k = 1; k <= 4; ++k) {
            b[k - 1] = mindeg::beta(t, k);
            derivative[k - 1] = (mindeg::beta(t + h, k) - mindeg::beta(t - h, k)) / (2.0 * h);
        }
        worst = std::max(worst, max_abs_diff(mindeg::drift(b), derivative));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("solve_augmented: Sigma symmetric and positive semidefinite on the grid") {
    for (const char* label : {"mindeg", "dproc"}) {
        ModelParams params;
        params.q = 4;
        params.d = 2;
        const ModelSpec spec = make_model_spec(label, params);
        const TrajectoryTable table = solve_augmented(spec.model, 0.5, 1e-3);
        double asym = 0.0, min_eig = 0.0;
        for (std::size_t i = 0; i < table.size(); i += 10) {
            asym = std::max(asym, max_abs_diff(table.covariance[i], transpose(table.covariance[i])));
            min_eig = std::min(min_eig, min_eigenvalue_sym(table.covariance[i]));
        }
        CHECK(asym <= 1e-9);
        CHECK(min_eig >= -1e-8);
    }
}

TEST_CASE("solve_augmented: domain exit truncates the table with a flag") {
    ModelParams params;
    params.d = 2;
    params.delta = 0.1;
    const ModelSpec spec = make_model_spec("dproc", params);
    const TrajectoryTable table = solve_augmented(spec.model, 4.0, 1e-3);
    CHECK(table.domain_exit);
    CHECK(table.exit_time > 0.5);
    CHECK(table.t.back() < 4.0);
    // All retained rows are inside the window, the next one was not.
    CHECK(table.z.back()[2] < 0.9);
    CHECK(table.exit_time == doctest::Approx(table.t.back() + 1e-3).epsilon(1e-9));
}

TEST_CASE("solve_augmented: anisotropic growth trips the conditioning guard") {
    ProcessModel m;
    m.q = 2;
    m.label = "stretch";
    m.drift = [](const Vec& z) { return Vec{30.0 * z[0], -30.0 * z[1]}; };
    m.diffusion = [](const Vec&) { return Matrix::zero(2); };
    m.domain.lo = {-1e300, -1e300};
    m.domain.hi = {1e300, 1e300};
    m.initial_state = {1.0, 1.0};
    CHECK_THROWS_WITH_AS(static_cast<void>(solve_augmented(m, 1.0, 1e-3)),
                         doctest::Contains("condition estimate"), std::runtime_error);
}

TEST_CASE("solve_augmented: non-finite states are reported with the offending time") {
    ProcessModel m;
    m.q = 1;
    m.label = "blowup";
    m.drift = [](const Vec& z) { return Vec{z[0] * z[0]}; };  // escapes in finite time
    m.diffusion = [](const Vec&) { return Matrix::zero(1); };
    m.domain.lo = {-1e300};
    m.domain.hi = {1e300};
    m.initial_state = {1.0};
    CHECK_THROWS_AS(static_cast<void>(solve_augmented(m, 2.0, 1e-3)), std::runtime_error);
}

TEST_CASE("RK4 order: dt-halving ratio lands near 16") {
    const ProcessModel model = mindeg::model(4);
    const Vec z1 = solve_augmented(model, 0.5, 0.02).z.back();
    const Vec z2 = solve_augmented(model, 0.5, 0.01).z.back();
    const Vec z4 = solve_augmented(model, 0.5, 0.005).z.back();
    const double ratio = max_abs_diff(z1, z2) / max_abs_diff(z2, z4);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("sigma_linear_closed_form") {
    const int q = 4;
    const ProcessModel model = mindeg::model(q);
    const Matrix a = mindeg::jacobian(q);

    SUBCASE("zero integrand gives zero") {
        ProcessModel quiet = model;
        quiet.diffusion = [&quiet](const Vec& z) {
            const Vec f = mindeg::drift(z);
            return outer(f, f);
        };
        const Matrix sigma = sigma_linear_closed_form(a, quiet, 0.4, 1e-3);
        CHECK(max_abs(sigma) <= 1e-12);
    }

    SUBCASE("t_end -> 0 gives zero") {
        CHECK(max_abs(sigma_linear_closed_form(a, model, 0.0, 1e-3)) == 0.0);
        CHECK(max_abs(sigma_linear_closed_form(a, model, 1e-3, 1e-3)) <= 1e-2);
    }

    SUBCASE("agrees with the coupled solve") {
        const TrajectoryTable table = solve_augmented(model, 0.5, 1e-4);
        const Matrix direct = table.covariance[table.nearest_index(0.5)];
        const Matrix quadrature = sigma_linear_closed_form(a, model, 0.5, 1e-4);
        double rel = 0.0;
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) {
                const double scale = std::max({std::fabs(direct(i, j)), std::fabs(quadrature(i, j)), 1e-12});
                rel = std::max(rel, std::fabs(direct(i, j) - quadrature(i, j)) / scale);
            }
        CHECK(rel <= 1e-6);
    }

    SUBCASE("rejects a nonlinear model") {
        ModelParams params;
        params.d = 2;
        const ModelSpec spec = make_model_spec("dproc", params);
        const Matrix a_sample = jacobian_fd(spec.model.drift, spec.model.initial_state);
        CHECK_THROWS_WITH_AS(static_cast<void>(sigma_linear_closed_form(a_sample, spec.model, 0.2, 1e-3)),
                             "model not linear", std::invalid_argument);
    }
}

TEST_CASE("trajectory CSV round-trips exactly") {
    const TrajectoryTable table = solve_augmented(mindeg::model(3), 0.3, 1e-2);
    std::stringstream stream;
    write_trajectory_csv(stream, table);

    const std::string text = stream.str();
    CHECK(text.rfind("t,z_1,z_2,z_3,Sigma_11,Sigma_12,Sigma_13,Sigma_21,", 0) == 0);

    std::stringstream replay(text);
    const TrajectoryCsv parsed = read_trajectory_csv(replay);
    REQUIRE(parsed.q == table.q);
    REQUIRE(parsed.t.size() == table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        CHECK(parsed.t[i] == table.t[i]);
        for (int k = 0; k < table.q; ++k) CHECK(parsed.z[i][k] == table.z[i][k]);
        CHECK(max_abs_diff(parsed.covariance[i], table.covariance[i]) == 0.0);
    }
}
