#include "graphclt/process.hpp"

#include <cmath>
#include <stdexcept>

namespace graphclt {

bool in_domain(const Vec& z, const DomainBox& box) {
    if (z.size() != box.lo.size() || z.size() != box.hi.size()) {
        throw std::invalid_argument("in_domain: state dimension does not match domain box");
    }
    for (size_t k = 0; k < z.size(); ++k) {
        if (!(z[k] > box.lo[k] && z[k] < box.hi[k])) return false;
    }
    return true;
}

void validate(const StepDistribution& dist) {
    double total = 0.0;
    for (const auto& outcome : dist.outcomes) {
        if (outcome.probability < 0.0) {
            throw std::invalid_argument("StepDistribution: negative probability");
        }
        if (static_cast<int>(outcome.delta.size()) != dist.q) {
            throw std::invalid_argument("StepDistribution: delta has wrong dimension");
        }
        total += outcome.probability;
    }
    if (std::fabs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("StepDistribution: probabilities sum to " + std::to_string(total));
    }
}

OneStepMoments exact_one_step_moments(const StepDistribution& dist) {
    validate(dist);
    OneStepMoments m;
    m.mean.assign(dist.q, 0.0);
    m.second = Matrix(dist.q, dist.q);
    for (const auto& outcome : dist.outcomes) {
        for (int i = 0; i < dist.q; ++i) {
            const double di = static_cast<double>(outcome.delta[i]);
            m.mean[i] += outcome.probability * di;
            for (int j = 0; j < dist.q; ++j) {
                m.second(i, j) += outcome.probability * di * static_cast<double>(outcome.delta[j]);
            }
        }
    }
    return m;
}

Vec standardize(const StateVector& x, const Vec& z_t) {
    if (x.counts.size() != z_t.size()) {
        throw std::invalid_argument("standardize: dimension mismatch");
    }
    const double sqrt_n = std::sqrt(static_cast<double>(x.n));
    Vec w(x.counts.size());
    for (size_t k = 0; k < w.size(); ++k) {
        w[k] = (static_cast<double>(x.counts[k]) - static_cast<double>(x.n) * z_t[k]) / sqrt_n;
    }
    return w;
}

}  // namespace graphclt
