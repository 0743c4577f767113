#include "graphclt/dprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace graphclt::dproc {

namespace {

constexpr std::uint32_t kNoPos = std::numeric_limits<std::uint32_t>::max();

/// Effect on coordinate i (0-based degree count) of one endpoint of
/// degree k gaining an edge.
double endpoint_effect(int k, int i) {
    return (k == i - 1 ? 1.0 : 0.0) - (k == i ? 1.0 : 0.0);
}

double checked_denominator(const Vec& z, int d, double eps) {
    if (static_cast<int>(z.size()) != d + 1) {
        throw std::invalid_argument("dproc: state must have d+1 coordinates");
    }
    const double den = 1.0 - z[d];
    if (den <= eps) {
        throw std::domain_error("dproc: 1 - z_d = " + std::to_string(den) +
                                " is at or below the margin " + std::to_string(eps));
    }
    return den;
}

}  // namespace

Vec drift(const Vec& z, int d, double eps) {
    const double den = checked_denominator(z, d, eps);
    Vec f(d + 1);
    for (int k = 0; k <= d; ++k) {
        double num = 0.0;
        if (k > 0) num += 2.0 * z[k - 1];
        if (k < d) num -= 2.0 * z[k];
        f[k] = num / den;
    }
    return f;
}

Matrix diffusion(const Vec& z, int d, double eps, bool corrected) {
    const double den = checked_denominator(z, d, eps);
    Vec p(d, 0.0);
    for (int k = 0; k < d; ++k) p[k] = z[k] / den;

    const int q = d + 1;
    Vec mean_effect(q, 0.0);
    for (int i = 0; i < q; ++i)
        for (int k = 0; k < d; ++k) mean_effect[i] += p[k] * endpoint_effect(k, i);

    Matrix g(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) g(i, j) = mean_effect[i] * mean_effect[j];
    if (!corrected) return g;

    g *= 2.0;
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < q; ++i) {
            const double ci = endpoint_effect(k, i);
            if (ci == 0.0) continue;
            for (int j = 0; j < q; ++j) g(i, j) += 2.0 * p[k] * ci * endpoint_effect(k, j);
        }
    }
    return g;
}

OneStepMoments moments_from_pair_law(const Matrix& joint, int d) {
    if (joint.rows() != d || joint.cols() != d) {
        throw std::invalid_argument("moments_from_pair_law: joint must be d x d");
    }
    double total = 0.0;
    Vec marginal(d, 0.0);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            total += joint(k, l);
            marginal[k] += joint(k, l);
        }
    if (std::fabs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("moments_from_pair_law: joint does not sum to 1");
    }

    const int q = d + 1;
    OneStepMoments m;
    m.mean.assign(q, 0.0);
    m.second = Matrix(q, q);
    for (int i = 0; i < q; ++i) {
        for (int k = 0; k < d; ++k) m.mean[i] += 2.0 * marginal[k] * endpoint_effect(k, i);
        for (int j = 0; j < q; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                s += 2.0 * marginal[k] * endpoint_effect(k, i) * endpoint_effect(k, j);
                for (int l = 0; l < d; ++l) {
                    s += 2.0 * joint(k, l) * endpoint_effect(k, i) * endpoint_effect(l, j);
                }
            }
            m.second(i, j) = s;
        }
    }
    return m;
}

ProcessModel model(int d, double epsilon) {
    if (d < 1) throw std::invalid_argument("dproc::model: d must be >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("dproc::model: epsilon must be positive");
    ProcessModel m;
    m.q = d + 1;
    m.label = "dproc";
    // The domain box already stops the solve at z_d = 1 - epsilon; the
    // callable guard sits at half the margin so Runge-Kutta stages may
    // probe slightly past a grid point without tripping it.
    const double guard = 0.5 * epsilon;
    m.drift = [d, guard](const Vec& z) { return drift(z, d, guard); };
    m.diffusion = [d, guard](const Vec& z) { return diffusion(z, d, guard, true); };
    m.domain.lo.assign(d + 1, -epsilon);
    m.domain.hi.assign(d + 1, 1.0 + epsilon);
    m.domain.hi[d] = 1.0 - epsilon;
    m.domain.margin = epsilon;
    m.initial_state.assign(d + 1, 0.0);
    m.initial_state[0] = 1.0;
    return m;
}

// ---------------------------------------------------------------------------
// GraphSimulator

GraphSimulator::GraphSimulator(Count n, int d)
    : n_(n), d_(d), adjacency_(static_cast<std::size_t>(n)),
      eligible_(static_cast<std::size_t>(n)),
      eligible_pos_(static_cast<std::size_t>(n)),
      counts_(static_cast<std::size_t>(d) + 1, 0) {
    if (n < 2) throw std::invalid_argument("dproc::GraphSimulator: n must be >= 2");
    if (d < 1) throw std::invalid_argument("dproc::GraphSimulator: d must be >= 1");
    for (std::uint32_t v = 0; v < static_cast<std::uint32_t>(n); ++v) {
        eligible_[v] = v;
        eligible_pos_[v] = v;
        adjacency_[v].reserve(d);
    }
    counts_[0] = n;
}

bool GraphSimulator::adjacent(std::uint32_t u, std::uint32_t v) const {
    const auto& nbrs = adjacency_[u];
    return std::find(nbrs.begin(), nbrs.end(), v) != nbrs.end();
}

void GraphSimulator::remove_eligible(std::uint32_t v) {
    const std::uint32_t pos = eligible_pos_[v];
    const std::uint32_t last = eligible_.back();
    eligible_.pop_back();
    if (last != v) {
        eligible_[pos] = last;
        eligible_pos_[last] = pos;
    }
    eligible_pos_[v] = kNoPos;
}

void GraphSimulator::add_edge(std::uint32_t u, std::uint32_t v) {
    if (u == v) throw std::invalid_argument("dproc::add_edge: loop");
    if (adjacent(u, v)) throw std::invalid_argument("dproc::add_edge: multi-edge");
    if (degree(u) >= d_ || degree(v) >= d_) {
        throw std::invalid_argument("dproc::add_edge: endpoint already at degree cap");
    }
    for (const std::uint32_t x : {u, v}) {
        const int deg = degree(x);
        counts_[deg] -= 1;
        counts_[deg + 1] += 1;
    }
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
    for (const std::uint32_t x : {u, v}) {
        if (degree(x) == d_) remove_eligible(x);
    }
    terminal_ = false;  // revalidated lazily
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> GraphSimulator::valid_pairs() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::size_t a = 0; a < eligible_.size(); ++a) {
        for (std::size_t b = a + 1; b < eligible_.size(); ++b) {
            const std::uint32_t u = eligible_[a], v = eligible_[b];
            if (!adjacent(u, v)) pairs.emplace_back(std::min(u, v), std::max(u, v));
        }
    }
    return pairs;
}

bool GraphSimulator::sample_pair(Rng& rng, std::uint32_t& u, std::uint32_t& v) {
    const std::size_t m = eligible_.size();
    if (m < 2) return false;
    if (m > 40) {
        // Sparse regime: adjacent pairs are rare, rejection is O(1).
        for (int attempt = 0; attempt < 10000; ++attempt) {
            const std::uint64_t i = rng.below(m);
            const std::uint64_t j = rng.below(m);
            if (i == j) continue;
            const std::uint32_t a = eligible_[i], b = eligible_[j];
            if (adjacent(a, b)) continue;
            u = a;
            v = b;
            return true;
        }
    }
    const auto pairs = valid_pairs();
    if (pairs.empty()) return false;
    const auto& chosen = pairs[rng.below(pairs.size())];
    u = chosen.first;
    v = chosen.second;
    return true;
}

bool GraphSimulator::terminal() {
    if (terminal_) return true;
    if (eligible_.size() < 2) {
        terminal_ = true;
        return true;
    }
    // Definite answer requires a scan; only reached near the very end
    // of the process.
    for (std::size_t a = 0; a < eligible_.size(); ++a)
        for (std::size_t b = a + 1; b < eligible_.size(); ++b)
            if (!adjacent(eligible_[a], eligible_[b])) return false;
    terminal_ = true;
    return true;
}

bool GraphSimulator::step(Rng& rng) {
    std::uint32_t u = 0, v = 0;
    if (!sample_pair(rng, u, v)) {
        terminal_ = true;
        return false;
    }
    add_edge(u, v);
    ++steps_;
    return true;
}

StepDistribution step_distribution(const GraphSimulator& g) {
    const auto pairs = g.valid_pairs();
    if (pairs.empty()) throw std::invalid_argument("dproc::step_distribution: terminal state");
    const int q = g.dim();
    std::map<std::vector<Count>, Count> tally;
    for (const auto& [u, v] : pairs) {
        std::vector<Count> delta(q, 0);
        for (const int deg : {g.degree(u), g.degree(v)}) {
            delta[deg] -= 1;
            delta[deg + 1] += 1;
        }
        tally[delta] += 1;
    }
    StepDistribution dist;
    dist.q = q;
    for (const auto& [delta, count] : tally) {
        dist.outcomes.push_back({static_cast<double>(count) / static_cast<double>(pairs.size()), delta});
    }
    return dist;
}

Matrix pair_law(const GraphSimulator& g) {
    const auto pairs = g.valid_pairs();
    if (pairs.empty()) throw std::invalid_argument("dproc::pair_law: terminal state");
    const int d = g.dim() - 1;
    Matrix joint(d, d);
    const double w = 0.5 / static_cast<double>(pairs.size());
    for (const auto& [u, v] : pairs) {
        joint(g.degree(u), g.degree(v)) += w;
        joint(g.degree(v), g.degree(u)) += w;
    }
    return joint;
}

}  // namespace graphclt::dproc
