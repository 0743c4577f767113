#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "graphclt/matrix.hpp"
#include "graphclt/rng.hpp"

namespace graphclt {

using Count = std::int64_t;

/// Integer count vector of a process at step m, on scale n.
struct StateVector {
    std::vector<Count> counts;
    std::int64_t step = 0;
    std::int64_t n = 0;
};

/// Open box (lo_k, hi_k) per coordinate of the scaled state, with the
/// margin the box was built from. Boundaries are excluded.
struct DomainBox {
    Vec lo;
    Vec hi;
    double margin = 0.1;
};

/// true iff lo_k < z_k < hi_k for every coordinate. The first step at
/// which this fails is the stopping time of the scaled process.
bool in_domain(const Vec& z, const DomainBox& box);

/// Analytic face of a process: dimension, drift F, one-step second
/// moment G, optional Jacobian of F (finite differences otherwise),
/// domain and initial scaled state.
struct ProcessModel {
    int q = 0;
    std::function<Vec(const Vec&)> drift;
    std::function<Matrix(const Vec&)> diffusion;
    std::function<Matrix(const Vec&)> jacobian;  // may be empty
    DomainBox domain;
    Vec initial_state;
    std::string label;
};

/// One step's exact outcome law from a fixed state: (probability, delta)
/// pairs. Probabilities must be nonnegative and sum to 1.
struct StepOutcome {
    double probability = 0.0;
    std::vector<Count> delta;
};

struct StepDistribution {
    int q = 0;
    std::vector<StepOutcome> outcomes;
};

/// Throws std::invalid_argument if probabilities are negative, deltas
/// have the wrong length, or the total misses 1 by more than 1e-12.
void validate(const StepDistribution& dist);

struct OneStepMoments {
    Vec mean;       // E[delta]
    Matrix second;  // E[delta delta']
};

/// Exact conditional mean and second moment of a one-step law.
OneStepMoments exact_one_step_moments(const StepDistribution& dist);

/// W_k = (counts_k - n z_k) / sqrt(n), the standardized fluctuation.
Vec standardize(const StateVector& x, const Vec& z_t);

/// Exact simulator of one process trial. Single-owner mutable value;
/// each trial gets its own instance and RNG stream.
class Simulator {
public:
    virtual ~Simulator() = default;
    virtual int dim() const = 0;
    virtual std::int64_t scale() const = 0;
    /// Advances one step. Returns false (without advancing) once the
    /// process is terminal.
    virtual bool step(Rng& rng) = 0;
    virtual const std::vector<Count>& counts() const = 0;
    virtual std::int64_t steps_taken() const = 0;
};

}  // namespace graphclt
