#pragma once

#include "graphclt/process.hpp"

namespace graphclt::dproc {

/// Drift of the degree-count vector, coordinates 0..d:
///   f_k = (2 [k>0] z_{k-1} - 2 [k<d] z_k) / (1 - z_d).
/// Throws std::domain_error when the denominator is <= eps.
Vec drift(const Vec& z, int d, double eps = 0.0);

/// One-step conditional second moment of the degree-count changes.
/// corrected=true uses the two-endpoint decomposition
///   g_ij = 2 sum_k p_k c_i(k) c_j(k) + 2 sum_{k,l} p_k p_l c_i(k) c_j(l),
/// p_k = z_k / (1 - z_d), c_i(k) = [k=i-1] - [k=i]; this is the moment the
/// enumeration oracle confirms. corrected=false keeps only the cross
/// product without the factor 2 (an outer product of half the drift, not
/// a second moment); exposed for side-by-side reporting.
Matrix diffusion(const Vec& z, int d, double eps = 0.0, bool corrected = true);

/// Exact mean/second moment given the joint law of the two endpoint
/// degrees over valid pairs (symmetric (d x d) matrix over degrees
/// 0..d-1 summing to 1). Agrees with the enumeration oracle to rounding.
OneStepMoments moments_from_pair_law(const Matrix& joint, int d);

ProcessModel model(int d, double epsilon = 0.1);

/// Exact simulator: repeatedly joins a uniformly random valid pair (both
/// degrees < d, not adjacent). Pairs are drawn by rejection from the
/// degree-deficient vertices, falling back to explicit enumeration when
/// few remain.
class GraphSimulator : public Simulator {
public:
    GraphSimulator(Count n, int d);

    int dim() const override { return d_ + 1; }
    std::int64_t scale() const override { return n_; }
    bool step(Rng& rng) override;
    const std::vector<Count>& counts() const override { return counts_; }
    std::int64_t steps_taken() const override { return steps_; }

    /// Adds a specific edge (for building test states); both endpoints
    /// must have degree < d and must not be adjacent.
    void add_edge(std::uint32_t u, std::uint32_t v);
    bool adjacent(std::uint32_t u, std::uint32_t v) const;
    int degree(std::uint32_t v) const { return static_cast<int>(adjacency_[v].size()); }
    /// True when no valid pair remains (scans when in doubt).
    bool terminal();

    /// Uniform valid pair, or false when terminal.
    bool sample_pair(Rng& rng, std::uint32_t& u, std::uint32_t& v);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> valid_pairs() const;

private:
    void remove_eligible(std::uint32_t v);

    Count n_;
    int d_;
    std::vector<std::vector<std::uint32_t>> adjacency_;
    std::vector<std::uint32_t> eligible_;      // degree < d
    std::vector<std::uint32_t> eligible_pos_;
    std::vector<Count> counts_;                // V_0..V_d
    std::int64_t steps_ = 0;
    bool terminal_ = false;
};

/// Exact one-step law over count changes, by enumerating valid pairs.
StepDistribution step_distribution(const GraphSimulator& g);

/// Exact symmetric joint law of the endpoint degrees over valid pairs.
Matrix pair_law(const GraphSimulator& g);

}  // namespace graphclt::dproc
