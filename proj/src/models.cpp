#include "graphclt/models.hpp"

#include <cmath>
#include <stdexcept>

#include "graphclt/dprocess.hpp"
#include "graphclt/mindeg.hpp"

namespace graphclt {

namespace {

/// Walk with i.i.d. Gaussian increments of known mean and covariance.
/// Exercises the whole ensemble/report pipeline with a case whose limit
/// covariance is available in closed form: Sigma(t) = t * cov.
class GaussSimulator : public Simulator {
public:
    explicit GaussSimulator(Count n)
        : n_(n), accum_(3, 0.0), counts_(3, 0),
          mean_(gauss_increment_mean()), chol_(cholesky(gauss_increment_covariance())) {}

    int dim() const override { return 3; }
    std::int64_t scale() const override { return n_; }

    bool step(Rng& rng) override {
        Vec g(3);
        for (double& x : g) x = rng.normal();
        for (int i = 0; i < 3; ++i) {
            double inc = mean_[i];
            for (int j = 0; j <= i; ++j) inc += chol_(i, j) * g[j];
            accum_[i] += inc;
            counts_[i] = std::llround(accum_[i]);
        }
        ++steps_;
        return true;
    }

    const std::vector<Count>& counts() const override { return counts_; }
    std::int64_t steps_taken() const override { return steps_; }

private:
    Count n_;
    Vec accum_;
    std::vector<Count> counts_;
    Vec mean_;
    Matrix chol_;
    std::int64_t steps_ = 0;
};

ProcessModel gauss_model() {
    ProcessModel m;
    m.q = 3;
    m.label = "gauss";
    const Vec mean = gauss_increment_mean();
    const Matrix cov = gauss_increment_covariance();
    m.drift = [mean](const Vec&) { return mean; };
    m.diffusion = [mean, cov](const Vec&) { return cov + outer(mean, mean); };
    m.jacobian = [](const Vec&) { return Matrix::zero(3); };
    m.domain.lo.assign(3, -1e9);
    m.domain.hi.assign(3, 1e9);
    m.domain.margin = 1e9;
    m.initial_state.assign(3, 0.0);
    return m;
}

}  // namespace

Vec gauss_increment_mean() { return {0.2, -0.1, 0.05}; }

Matrix gauss_increment_covariance() {
    Matrix c(3, 3);
    c(0, 0) = 25.0; c(0, 1) = 6.0;  c(0, 2) = -4.0;
    c(1, 0) = 6.0;  c(1, 1) = 16.0; c(1, 2) = 3.0;
    c(2, 0) = -4.0; c(2, 1) = 3.0;  c(2, 2) = 9.0;
    return c;
}

ModelSpec make_model_spec(const std::string& label, const ModelParams& params) {
    ModelSpec spec;
    if (label == "mindeg") {
        spec.model = mindeg::model(params.q, params.epsilon);
        const int q = params.q;
        spec.make_simulator = [q](Count n) -> std::unique_ptr<Simulator> {
            return std::make_unique<mindeg::GraphSimulator>(n, q);
        };
    } else if (label == "dproc") {
        spec.model = dproc::model(params.d, params.epsilon);
        spec.model.domain.hi[params.d] = 1.0 - params.delta;
        {
            // Rebind with a guard inside whichever margin is tighter.
            const int d = params.d;
            const double guard = 0.5 * std::min(params.epsilon, params.delta);
            const bool corrected = params.corrected_diffusion;
            spec.model.drift = [d, guard](const Vec& z) { return dproc::drift(z, d, guard); };
            spec.model.diffusion = [d, guard, corrected](const Vec& z) {
                return dproc::diffusion(z, d, guard, corrected);
            };
        }
        const int d = params.d;
        spec.make_simulator = [d](Count n) -> std::unique_ptr<Simulator> {
            return std::make_unique<dproc::GraphSimulator>(n, d);
        };
    } else if (label == "gauss") {
        spec.model = gauss_model();
        spec.make_simulator = [](Count n) -> std::unique_ptr<Simulator> {
            return std::make_unique<GaussSimulator>(n);
        };
    } else {
        throw std::invalid_argument("unknown model label: " + label);
    }
    return spec;
}

}  // namespace graphclt
