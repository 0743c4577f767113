#pragma once

#include <optional>

#include "graphclt/process.hpp"
#include "graphclt/union_find.hpp"

namespace graphclt::mindeg {

/// Scaled number of components of order k at time t (closed form).
double beta(double t, int k);

/// Limit of the component counts at the stopping time: (k-1)/(k 2^k).
double mu(int k);

/// Drift of the component-count vector: f_k = -[k=1] - k z_k + (k-1) z_{k-1}.
Vec drift(const Vec& z);

/// One-step conditional second moment of the count changes. The sum over
/// component orders runs over all k >= 1; orders above q only touch the
/// isolated-vertex coordinate, and their total weight is pinned by mass
/// conservation (sum_k k z_k = 1), so the q-dimensional state determines
/// the full matrix.
Matrix diffusion(const Vec& z);

/// Same sum cut off at k = q, i.e. with the mass in components of order
/// above q ignored. Understates the (1,1) entry; kept for side-by-side
/// reporting only.
Matrix diffusion_truncated(const Vec& z);

/// Constant Jacobian of the drift: J_ij = j([i=j+1] - [i=j]).
Matrix jacobian(int q);

/// Fundamental matrix exp(-tJ) in closed form:
///   T_ij = [j<=i] (-1)^{i+j} C(i-1, j-1) e^{jt} (e^t - 1)^{i-j}.
/// The compact form often quoted without the binomial coefficient fails
/// T' = -TJ for q >= 3; the exponential is the source of truth and the
/// tests pin this form against it.
Matrix fundamental_closed(double t, int q);

/// Predicted covariance of (C_H - n mu)/sqrt(n) from Sigma(h), h = ln 2.
/// corrected=true applies W_k = W*_k + W*_1 (k-3)/2^k for k >= 2 and
/// W_1 = 0, the transform consistent with mass conservation and with the
/// measured rate (k-1)/2^k of order-k choices near the stopping time.
/// corrected=false applies the transform L_k1 += (k-1)/2^{k-1} instead
/// (kept for side-by-side reporting; fails the Monte Carlo oracle).
Matrix final_covariance(const Matrix& sigma_h, bool corrected = true);

/// Drift and second moment evaluated at an exact one-step law
/// p = (P[V=1], ..., P[V=q], P[V>q]); matches the enumeration oracle to
/// rounding.
OneStepMoments moments_at_probabilities(const Vec& p);

/// Exact one-step law of the tracked count changes from a state with the
/// given component counts (orders 1..q; vertices in larger components are
/// implied by n - sum k C_k). Requires counts[0] >= 1.
StepDistribution step_distribution(const std::vector<Count>& counts, Count n);

ProcessModel model(int q, double epsilon = 0.1);

/// Exact graph-backed simulator: joins a uniformly random isolated
/// vertex to a uniformly random other vertex, tracked with a union-find
/// over components. Before the stopping time the graph is a forest.
class GraphSimulator : public Simulator {
public:
    GraphSimulator(Count n, int q);
    /// Starts from a given forest; for tests.
    GraphSimulator(Count n, int q, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

    int dim() const override { return q_; }
    std::int64_t scale() const override { return n_; }
    bool step(Rng& rng) override;
    const std::vector<Count>& counts() const override { return counts_; }
    std::int64_t steps_taken() const override { return steps_; }

    /// At the stopping time H (no isolated vertices left)?
    bool stopped() const { return isolated_.empty(); }
    std::optional<std::int64_t> stopping_step() const { return stopped_at_; }
    /// Order of the component the last-joined neighbour belonged to.
    Count last_merge_order() const { return last_order_; }
    /// Number of vertices in components of order greater than q.
    Count untracked_vertices() const;
    /// Advances one step; throws std::logic_error at or after H.
    void advance(Rng& rng);

private:
    void absorb(std::uint32_t isolated_vertex, std::uint32_t other);
    void remove_isolated(std::uint32_t v);

    Count n_;
    int q_;
    UnionFind components_;
    std::vector<std::uint32_t> isolated_;      // current isolated vertices
    std::vector<std::uint32_t> isolated_pos_;  // index into isolated_, npos when absent
    std::vector<Count> counts_;                // C_1..C_q
    std::int64_t steps_ = 0;
    std::optional<std::int64_t> stopped_at_;
    Count last_order_ = 0;
};

/// Count-only chain that coincides with the graph-backed counts up to the
/// stopping time and stays defined past it (entries may go negative).
class ExtendedChain {
public:
    ExtendedChain(Count n, int q);

    int dim() const { return q_; }
    const std::vector<Count>& counts() const { return counts_; }
    std::int64_t steps_taken() const { return steps_; }

    /// One step with the chain's own sampling rule.
    void step(Rng& rng);
    /// Applies the count update for a given merge order (q+1 means an
    /// untracked order); used to couple the chain to a graph trial.
    void apply(Count order);

private:
    Count n_;
    int q_;
    std::vector<Count> counts_;
    std::int64_t steps_ = 0;
};

}  // namespace graphclt::mindeg
