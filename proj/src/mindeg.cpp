#include "graphclt/mindeg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace graphclt::mindeg {

namespace {

constexpr std::uint32_t kNoPos = std::numeric_limits<std::uint32_t>::max();

/// Effect of merging the isolated vertex into a component of order k on
/// coordinate i (both 1-based): -[i=1] - [k=i] + [k=i-1]. Orders above q
/// only remove one isolated vertex.
double pattern(Count k, int i) {
    double v = 0.0;
    if (i == 1) v -= 1.0;
    if (k == i) v -= 1.0;
    if (k == i - 1) v += 1.0;
    return v;
}

}  // namespace

double beta(double t, int k) {
    if (k < 1) throw std::invalid_argument("beta: k must be >= 1");
    if (t < 0.0) throw std::invalid_argument("beta: t must be >= 0");
    const double e = std::exp(-t);
    return std::pow(1.0 - e, k - 1) * ((k + 1) * e - 1.0) / k;
}

double mu(int k) {
    if (k < 1) throw std::invalid_argument("mu: k must be >= 1");
    return (k - 1.0) / (k * std::pow(2.0, k));
}

Vec drift(const Vec& z) {
    const int q = static_cast<int>(z.size());
    Vec f(q);
    for (int k = 1; k <= q; ++k) {
        const double prev = k >= 2 ? z[k - 2] : 0.0;
        f[k - 1] = (k == 1 ? -1.0 : 0.0) - k * z[k - 1] + (k - 1) * prev;
    }
    return f;
}

Matrix diffusion(const Vec& z) {
    const int q = static_cast<int>(z.size());
    Matrix g(q, q);
    double mass = 0.0;
    for (int k = 1; k <= q; ++k) {
        const double w = k * z[k - 1];
        mass += w;
        for (int i = 1; i <= q; ++i) {
            const double pi = pattern(k, i);
            if (pi == 0.0) continue;
            for (int j = 1; j <= q; ++j) g(i - 1, j - 1) += w * pi * pattern(k, j);
        }
    }
    // Components of order above q: each choice removes one isolated
    // vertex; their weight is the leftover of sum_k k z_k = 1.
    g(0, 0) += std::max(0.0, 1.0 - mass);
    return g;
}

Matrix diffusion_truncated(const Vec& z) {
    const int q = static_cast<int>(z.size());
    Matrix g(q, q);
    for (int k = 1; k <= q; ++k) {
        const double w = k * z[k - 1];
        for (int i = 1; i <= q; ++i) {
            const double pi = pattern(k, i);
            if (pi == 0.0) continue;
            for (int j = 1; j <= q; ++j) g(i - 1, j - 1) += w * pi * pattern(k, j);
        }
    }
    return g;
}

Matrix jacobian(int q) {
    Matrix j(q, q);
    for (int i = 1; i <= q; ++i) {
        j(i - 1, i - 1) = -static_cast<double>(i);
        if (i >= 2) j(i - 1, i - 2) = static_cast<double>(i - 1);
    }
    return j;
}

Matrix fundamental_closed(double t, int q) {
    Matrix m(q, q);
    const double et = std::exp(t);
    for (int i = 1; i <= q; ++i) {
        double binom = 1.0;  // C(i-1, j-1), updated along the row
        for (int j = 1; j <= i; ++j) {
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            m(i - 1, j - 1) = sign * binom * std::exp(j * t) * std::pow(et - 1.0, i - j);
            binom = binom * (i - j) / j;
        }
    }
    return m;
}

Matrix final_covariance(const Matrix& sigma_h, bool corrected) {
    const int q = sigma_h.rows();
    if (sigma_h.cols() != q) throw std::invalid_argument("final_covariance: matrix not square");
    Matrix l = Matrix::identity(q);
    if (corrected) {
        // The k=1 fluctuation is degenerate at the stopping time: the
        // count of isolated vertices is exactly zero there.
        l(0, 0) = 0.0;
        for (int k = 2; k <= q; ++k) l(k - 1, 0) = (k - 3.0) / std::pow(2.0, k);
    } else {
        for (int k = 2; k <= q; ++k) l(k - 1, 0) += (k - 1.0) / std::pow(2.0, k - 1);
    }
    return symmetrize(l * sigma_h * transpose(l));
}

OneStepMoments moments_at_probabilities(const Vec& p) {
    const int q = static_cast<int>(p.size()) - 1;
    if (q < 1) throw std::invalid_argument("moments_at_probabilities: need q >= 1 plus tail entry");
    OneStepMoments m;
    m.mean.assign(q, 0.0);
    m.second = Matrix(q, q);
    for (int k = 1; k <= q + 1; ++k) {  // k = q+1 stands for any order above q
        const double w = p[k - 1];
        if (w == 0.0) continue;
        const Count order = (k <= q) ? k : static_cast<Count>(q) + 1;
        for (int i = 1; i <= q; ++i) {
            const double pi = pattern(order, i);
            if (pi == 0.0) continue;
            m.mean[i - 1] += w * pi;
            for (int j = 1; j <= q; ++j) m.second(i - 1, j - 1) += w * pi * pattern(order, j);
        }
    }
    return m;
}

StepDistribution step_distribution(const std::vector<Count>& counts, Count n) {
    const int q = static_cast<int>(counts.size());
    if (q < 1 || counts[0] < 1) {
        throw std::invalid_argument("step_distribution: needs at least one isolated vertex");
    }
    Count tracked = 0;
    for (int k = 1; k <= q; ++k) tracked += k * counts[k - 1];
    if (tracked > n) throw std::invalid_argument("step_distribution: counts exceed n vertices");

    StepDistribution dist;
    dist.q = q;
    auto add_outcome = [&](Count weight, Count order) {
        if (weight <= 0) return;
        StepOutcome o;
        o.probability = static_cast<double>(weight) / static_cast<double>(n - 1);
        o.delta.assign(q, 0);
        for (int i = 1; i <= q; ++i) o.delta[i - 1] = static_cast<Count>(pattern(order, i));
        dist.outcomes.push_back(std::move(o));
    };
    for (int k = 1; k <= q; ++k) {
        add_outcome(k * counts[k - 1] - (k == 1 ? 1 : 0), k);
    }
    add_outcome(n - tracked, static_cast<Count>(q) + 1);
    return dist;
}

ProcessModel model(int q, double epsilon) {
    if (q < 1) throw std::invalid_argument("mindeg::model: q must be >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("mindeg::model: epsilon must be positive");
    ProcessModel m;
    m.q = q;
    m.label = "mindeg";
    m.drift = [](const Vec& z) { return drift(z); };
    m.diffusion = [](const Vec& z) { return diffusion(z); };
    const Matrix j = jacobian(q);
    m.jacobian = [j](const Vec&) { return j; };
    m.domain.lo.assign(q, -epsilon);
    m.domain.hi.assign(q, 1.0 + epsilon);
    m.domain.margin = epsilon;
    m.initial_state.assign(q, 0.0);
    m.initial_state[0] = 1.0;
    return m;
}

// ---------------------------------------------------------------------------
// GraphSimulator

GraphSimulator::GraphSimulator(Count n, int q)
    : n_(n), q_(q), components_(static_cast<std::uint32_t>(n)),
      isolated_(static_cast<std::size_t>(n)),
      isolated_pos_(static_cast<std::size_t>(n)),
      counts_(static_cast<std::size_t>(q), 0) {
    if (n < 2) throw std::invalid_argument("mindeg::GraphSimulator: n must be >= 2");
    if (q < 1) throw std::invalid_argument("mindeg::GraphSimulator: q must be >= 1");
    for (std::uint32_t v = 0; v < static_cast<std::uint32_t>(n); ++v) {
        isolated_[v] = v;
        isolated_pos_[v] = v;
    }
    counts_[0] = n;
}

GraphSimulator::GraphSimulator(Count n, int q,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges)
    : GraphSimulator(n, q) {
    for (const auto& [a, b] : edges) {
        if (components_.find(a) == components_.find(b)) {
            throw std::invalid_argument("mindeg::GraphSimulator: initial edges must form a forest");
        }
        const Count size_a = components_.component_size(a);
        const Count size_b = components_.component_size(b);
        if (size_a <= static_cast<Count>(q_)) counts_[size_a - 1] -= 1;
        if (size_b <= static_cast<Count>(q_)) counts_[size_b - 1] -= 1;
        if (size_a == 1) remove_isolated(components_.find(a));
        if (size_b == 1) remove_isolated(components_.find(b));
        components_.unite(a, b);
        const Count merged = size_a + size_b;
        if (merged <= static_cast<Count>(q_)) counts_[merged - 1] += 1;
        ++steps_;
    }
    if (isolated_.empty()) stopped_at_ = steps_;
}

Count GraphSimulator::untracked_vertices() const {
    Count tracked = 0;
    for (int k = 1; k <= q_; ++k) tracked += k * counts_[k - 1];
    return n_ - tracked;
}

void GraphSimulator::remove_isolated(std::uint32_t v) {
    const std::uint32_t pos = isolated_pos_[v];
    const std::uint32_t last = isolated_.back();
    isolated_.pop_back();
    if (last != v) {
        isolated_[pos] = last;
        isolated_pos_[last] = pos;
    }
    isolated_pos_[v] = kNoPos;
}

void GraphSimulator::advance(Rng& rng) {
    if (stopped()) {
        throw std::logic_error("mindeg::GraphSimulator: stepped at or after the stopping time");
    }
    const auto v = isolated_[rng.below(isolated_.size())];
    // w uniform over the other n-1 vertices.
    const auto r = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(n_) - 1));
    const std::uint32_t w = r + (r >= v ? 1 : 0);

    const std::uint32_t w_root = components_.find(w);
    const Count order = components_.component_size(w_root);
    last_order_ = order;

    remove_isolated(v);
    if (order == 1) remove_isolated(w_root);
    components_.unite(v, w_root);

    counts_[0] -= 1;
    if (order <= static_cast<Count>(q_)) counts_[order - 1] -= 1;
    if (order + 1 <= static_cast<Count>(q_)) counts_[order] += 1;
    ++steps_;
    if (isolated_.empty()) stopped_at_ = steps_;
}

bool GraphSimulator::step(Rng& rng) {
    if (stopped()) return false;
    advance(rng);
    return true;
}

// ---------------------------------------------------------------------------
// ExtendedChain

ExtendedChain::ExtendedChain(Count n, int q)
    : n_(n), q_(q), counts_(static_cast<std::size_t>(q), 0) {
    if (n < 2) throw std::invalid_argument("mindeg::ExtendedChain: n must be >= 2");
    counts_[0] = n;
}

void ExtendedChain::apply(Count order) {
    counts_[0] -= 1;
    if (order >= 1 && order <= static_cast<Count>(q_)) counts_[order - 1] -= 1;
    if (order + 1 <= static_cast<Count>(q_)) counts_[order] += 1;
    ++steps_;
}

void ExtendedChain::step(Rng& rng) {
    const double u = rng.uniform();
    if (counts_[0] > 0) {
        // Same law as the graph process, determined by the counts alone.
        double acc = 0.0;
        Count order = static_cast<Count>(q_) + 1;
        for (int k = 1; k <= q_; ++k) {
            const double w = (static_cast<double>(k) * counts_[k - 1] - (k == 1 ? 1.0 : 0.0)) /
                             static_cast<double>(n_ - 1);
            acc += w;
            if (u < acc) {
                order = k;
                break;
            }
        }
        apply(order);
        return;
    }
    // Past the stopping time: orders 2..q are drawn with weight
    // max(0, k C_k)/n; the leftover mass stands for larger orders and
    // only costs one (now virtual) isolated vertex.
    double acc = 0.0;
    Count order = static_cast<Count>(q_) + 1;
    double total = 0.0;
    for (int k = 2; k <= q_; ++k) {
        total += std::max(0.0, static_cast<double>(k) * counts_[k - 1]) / static_cast<double>(n_);
    }
    if (total > 1.0) {
        throw std::runtime_error("mindeg::ExtendedChain: step weights exceed 1 (outside the chain's validity window)");
    }
    for (int k = 2; k <= q_; ++k) {
        acc += std::max(0.0, static_cast<double>(k) * counts_[k - 1]) / static_cast<double>(n_);
        if (u < acc) {
            order = k;
            break;
        }
    }
    apply(order);
}

}  // namespace graphclt::mindeg
