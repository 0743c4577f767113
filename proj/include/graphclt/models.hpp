#pragma once

#include <memory>

#include "graphclt/process.hpp"

namespace graphclt {

struct ModelParams {
    int q = 6;                        // mindeg component orders tracked
    int d = 2;                        // dproc degree cap
    double epsilon = 0.1;             // domain margin
    double delta = 0.1;               // dproc window: solve stops once z_d >= 1 - delta
    bool corrected_diffusion = true;  // two-endpoint second moment vs cross term only
};

/// Analytic model plus a factory for per-trial simulators.
struct ModelSpec {
    ProcessModel model;
    std::function<std::unique_ptr<Simulator>(Count n)> make_simulator;
};

/// Labels: "mindeg" (component counts of the minimum-degree process),
/// "dproc" (degree counts of the random d-process), "gauss" (synthetic
/// Gaussian-increment process with known covariance; harness self-test).
ModelSpec make_model_spec(const std::string& label, const ModelParams& params);

/// Mean and covariance of the synthetic model's per-step increments.
Vec gauss_increment_mean();
Matrix gauss_increment_covariance();

}  // namespace graphclt
