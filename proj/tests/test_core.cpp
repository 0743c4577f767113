#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graphclt/dprocess.hpp"
#include "graphclt/mindeg.hpp"
#include "graphclt/process.hpp"

using namespace graphclt;

TEST_CASE("in_domain: open intervals") {
    DomainBox box;
    box.lo = {-0.1, -0.1};
    box.hi = {1.1, 1.1};

    CHECK(in_domain({0.5, 0.1}, box));
    CHECK_FALSE(in_domain({1.1, 0.0}, box));  // boundary excluded
    CHECK_FALSE(in_domain({1.2, 0.5}, box));
    CHECK(in_domain({-0.05, 0.0}, box));  // inside the margin

    CHECK_THROWS_AS(in_domain({0.5}, box), std::invalid_argument);
}

TEST_CASE("in_domain: mindeg default box admits slightly negative counts") {
    const ProcessModel m = mindeg::model(4, 0.1);
    CHECK(in_domain({-0.05, 0.2, 0.1, 0.0}, m.domain));
    CHECK_FALSE(in_domain({-0.15, 0.2, 0.1, 0.0}, m.domain));
}

TEST_CASE("StepDistribution validation") {
    StepDistribution dist;
    dist.q = 2;
    dist.outcomes.push_back({0.5, {1, 0}});
    dist.outcomes.push_back({0.5, {0, 1}});
    CHECK_NOTHROW(validate(dist));

    StepDistribution bad_sum = dist;
    bad_sum.outcomes[0].probability = 0.4;
    CHECK_THROWS_AS(exact_one_step_moments(bad_sum), std::invalid_argument);

    StepDistribution negative = dist;
    negative.outcomes[0].probability = -0.5;
    CHECK_THROWS_AS(validate(negative), std::invalid_argument);

    StepDistribution ragged = dist;
    ragged.outcomes[0].delta = {1};
    CHECK_THROWS_AS(validate(ragged), std::invalid_argument);
}

TEST_CASE("exact_one_step_moments: trivial single outcome") {
    StepDistribution dist;
    dist.q = 3;
    dist.outcomes.push_back({1.0, {0, 0, 0}});
    const OneStepMoments m = exact_one_step_moments(dist);
    CHECK(max_abs(m.mean) == 0.0);
    CHECK(max_abs(m.second) == 0.0);
}

TEST_CASE("exact_one_step_moments: mindeg state with 3 isolated vertices and one edge") {
    // n=5, counts (3,1,0): picking another isolated vertex or the
    // 2-component are equally likely.
    const StepDistribution dist = mindeg::step_distribution({3, 1, 0}, 5);
    double p1 = 0.0;
    for (const auto& o : dist.outcomes) {
        if (o.delta == std::vector<Count>{-2, 1, 0}) p1 = o.probability;
    }
    CHECK(p1 == doctest::Approx(0.5).epsilon(1e-14));

    const OneStepMoments m = exact_one_step_moments(dist);
    CHECK(m.mean[0] == doctest::Approx(-1.5).epsilon(1e-14));
    CHECK(m.mean[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m.mean[2] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.second(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("exact_one_step_moments: dproc n=4 with one edge") {
    dproc::GraphSimulator g(4, 2);
    g.add_edge(0, 1);
    CHECK(g.valid_pairs().size() == 5);
    const OneStepMoments m = exact_one_step_moments(dproc::step_distribution(g));
    CHECK(m.mean[0] == doctest::Approx(-1.2).epsilon(1e-14));
    CHECK(m.second(0, 0) == doctest::Approx(1.6).epsilon(1e-14));
}

TEST_CASE("one-step conditional covariance is positive semidefinite") {
    // Over a spread of mindeg count states: second - mean mean' is a
    // covariance, so its smallest eigenvalue must not dip below zero.
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Count n = 20 + static_cast<Count>(rng.below(200));
        std::vector<Count> counts(4, 0);
        Count mass = 0;
        counts[0] = 1 + static_cast<Count>(rng.below(static_cast<std::uint64_t>(n / 2)));
        mass += counts[0];
        for (int k = 2; k <= 4; ++k) {
            const Count room = (n - mass) / k;
            if (room <= 0) continue;
            counts[k - 1] = static_cast<Count>(rng.below(static_cast<std::uint64_t>(room + 1)));
            mass += k * counts[k - 1];
        }
        const OneStepMoments m = exact_one_step_moments(mindeg::step_distribution(counts, n));
        const Matrix cov = m.second - outer(m.mean, m.mean);
        CHECK(min_eigenvalue_sym(cov) >= -1e-10);
    }
}

TEST_CASE("step distributions follow the legal step patterns") {
    // mindeg: every outcome is (-e_1) plus at most one adjacent-order swap.
    const StepDistribution md = mindeg::step_distribution({5, 2, 1, 0}, 20);
    double total = 0.0;
    for (const auto& o : md.outcomes) {
        total += o.probability;
        Count sum = 0;
        for (Count d : o.delta) sum += d;
        CHECK(o.delta[0] <= -1);
        CHECK(sum >= -2);
        CHECK(sum <= 0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    // dproc: every outcome is the sum of two unit degree shifts.
    dproc::GraphSimulator g(6, 2);
    g.add_edge(0, 1);
    g.add_edge(2, 3);
    const StepDistribution dd = dproc::step_distribution(g);
    total = 0.0;
    for (const auto& o : dd.outcomes) {
        total += o.probability;
        Count sum = 0, abs_sum = 0;
        for (Count d : o.delta) {
            sum += d;
            abs_sum += std::llabs(d);
        }
        CHECK(sum == 0);
        CHECK(abs_sum <= 4);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("standardize") {
    StateVector x;
    x.n = 10000;
    x.counts = {2200};
    const Vec w = standardize(x, {0.21306});
    CHECK(w[0] == doctest::Approx(0.694).epsilon(1e-12));

    // counts = n z exactly -> 0
    StateVector y;
    y.n = 400;
    y.counts = {100, 300};
    const Vec w0 = standardize(y, {0.25, 0.75});
    CHECK(max_abs(w0) == 0.0);

    CHECK_THROWS_AS(standardize(y, {0.25}), std::invalid_argument);
}

TEST_CASE("standardize is affine: shifting by sqrt(n) u shifts W by u") {
    Rng rng(11);
    const Count n = 2500;  // sqrt(n) = 50 keeps the shift integral
    for (int trial = 0; trial < 20; ++trial) {
        StateVector x;
        x.n = n;
        x.counts = {static_cast<Count>(rng.below(n)), static_cast<Count>(rng.below(n))};
        const Vec z{0.3, 0.4};
        const std::vector<Count> u{static_cast<Count>(rng.below(9)) - 4,
                                   static_cast<Count>(rng.below(9)) - 4};
        StateVector shifted = x;
        for (int i = 0; i < 2; ++i) shifted.counts[i] += 50 * u[i];
        const Vec w = standardize(x, z);
        const Vec ws = standardize(shifted, z);
        for (int i = 0; i < 2; ++i) CHECK(ws[i] - w[i] == doctest::Approx(u[i]).epsilon(1e-12));
    }
}
