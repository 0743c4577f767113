#include "graphclt/ode.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace graphclt {

namespace {

struct AugmentedState {
    Vec z;
    Matrix t;
    Matrix xi;
};

AugmentedState axpy(const AugmentedState& base, double h, const AugmentedState& slope) {
    AugmentedState out = base;
    for (size_t i = 0; i < out.z.size(); ++i) out.z[i] += h * slope.z[i];
    for (size_t i = 0; i < out.t.data().size(); ++i) out.t.data()[i] += h * slope.t.data()[i];
    for (size_t i = 0; i < out.xi.data().size(); ++i) out.xi.data()[i] += h * slope.xi.data()[i];
    return out;
}

class AugmentedSystem {
public:
    explicit AugmentedSystem(const ProcessModel& model) : model_(model) {}

    AugmentedState derivative(const AugmentedState& s) const {
        AugmentedState d;
        d.z = model_.drift(s.z);
        const Matrix j = model_.jacobian ? model_.jacobian(s.z) : jacobian_fd(model_.drift, s.z);
        d.t = (s.t * j) * -1.0;
        const Matrix noise = model_.diffusion(s.z) - outer(d.z, d.z);
        d.xi = s.t * noise * transpose(s.t);
        return d;
    }

    AugmentedState rk4_step(const AugmentedState& s, double h) const {
        const AugmentedState k1 = derivative(s);
        const AugmentedState k2 = derivative(axpy(s, 0.5 * h, k1));
        const AugmentedState k3 = derivative(axpy(s, 0.5 * h, k2));
        const AugmentedState k4 = derivative(axpy(s, h, k3));
        AugmentedState out = s;
        for (size_t i = 0; i < out.z.size(); ++i)
            out.z[i] += h / 6.0 * (k1.z[i] + 2.0 * (k2.z[i] + k3.z[i]) + k4.z[i]);
        for (size_t i = 0; i < out.t.data().size(); ++i)
            out.t.data()[i] += h / 6.0 * (k1.t.data()[i] + 2.0 * (k2.t.data()[i] + k3.t.data()[i]) + k4.t.data()[i]);
        for (size_t i = 0; i < out.xi.data().size(); ++i)
            out.xi.data()[i] += h / 6.0 * (k1.xi.data()[i] + 2.0 * (k2.xi.data()[i] + k3.xi.data()[i]) + k4.xi.data()[i]);
        return out;
    }

private:
    const ProcessModel& model_;
};

Matrix covariance_at(const Matrix& t_mat, const Matrix& xi, double time) {
    Matrix inv;
    try {
        inv = mat_inverse(t_mat);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("solve_augmented: fundamental matrix singular at t=" + std::to_string(time));
    }
    const double cond = condition_inf(t_mat, inv);
    if (cond > 1e12) {
        throw std::runtime_error(
            "solve_augmented: fundamental matrix numerically singular at t=" + std::to_string(time) +
            " (condition estimate " + std::to_string(cond) +
            " exceeds 1e12; invertible in exact arithmetic but not at this precision)");
    }
    return symmetrize(inv * xi * transpose(inv));
}

}  // namespace

std::size_t TrajectoryTable::nearest_index(double s) const {
    if (t.empty()) throw std::logic_error("TrajectoryTable: empty");
    if (dt <= 0.0 || t.size() == 1) return 0;
    const double guess = s / dt;
    std::size_t idx = guess <= 0.0 ? 0 : static_cast<std::size_t>(std::llround(guess));
    if (idx >= t.size()) idx = t.size() - 1;
    // The last grid point may be a fractional step; check neighbours.
    std::size_t best = idx;
    double best_err = std::fabs(t[idx] - s);
    for (std::size_t cand = (idx == 0 ? 0 : idx - 1); cand <= idx + 1 && cand < t.size(); ++cand) {
        const double err = std::fabs(t[cand] - s);
        if (err < best_err) {
            best_err = err;
            best = cand;
        }
    }
    return best;
}

Matrix jacobian_fd(const std::function<Vec(const Vec&)>& f, const Vec& z) {
    const int q = static_cast<int>(z.size());
    Matrix j(q, q);
    for (int col = 0; col < q; ++col) {
        const double h = 1e-6 * std::max(1.0, std::fabs(z[col]));
        Vec zp = z, zm = z;
        zp[col] += h;
        zm[col] -= h;
        const Vec fp = f(zp);
        const Vec fm = f(zm);
        for (int row = 0; row < q; ++row) j(row, col) = (fp[row] - fm[row]) / (2.0 * h);
    }
    return j;
}

TrajectoryTable solve_augmented(const ProcessModel& model, double t_end, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("solve_augmented: dt must be positive");
    if (t_end < 0.0) throw std::invalid_argument("solve_augmented: t_end must be nonnegative");
    if (static_cast<int>(model.initial_state.size()) != model.q) {
        throw std::invalid_argument("solve_augmented: initial state has wrong dimension");
    }
    if (!in_domain(model.initial_state, model.domain)) {
        throw std::invalid_argument("solve_augmented: initial state outside domain");
    }

    TrajectoryTable table;
    table.q = model.q;
    table.dt = dt;

    AugmentedSystem system(model);
    AugmentedState s{model.initial_state, Matrix::identity(model.q), Matrix::zero(model.q)};

    table.t.push_back(0.0);
    table.z.push_back(s.z);
    table.fundamental.push_back(s.t);
    table.fluctuation.push_back(s.xi);
    table.covariance.push_back(Matrix::zero(model.q));

    const auto full_steps = static_cast<std::int64_t>(std::floor(t_end / dt + 1e-9));
    const double remainder = t_end - static_cast<double>(full_steps) * dt;
    const bool has_partial = remainder > 1e-12 * std::max(1.0, t_end);
    const std::int64_t total = full_steps + (has_partial ? 1 : 0);

    for (std::int64_t i = 0; i < total; ++i) {
        const bool partial = has_partial && i == full_steps;
        const double h = partial ? remainder : dt;
        const double t_next = partial ? t_end : static_cast<double>(i + 1) * dt;
        s = system.rk4_step(s, h);
        if (!all_finite(s.z) || !all_finite(s.t) || !all_finite(s.xi)) {
            throw std::runtime_error("solve_augmented: non-finite state at t=" + std::to_string(t_next));
        }
        if (!in_domain(s.z, model.domain)) {
            table.domain_exit = true;
            table.exit_time = t_next;
            break;
        }
        s.xi = symmetrize(s.xi);
        table.t.push_back(t_next);
        table.z.push_back(s.z);
        table.fundamental.push_back(s.t);
        table.fluctuation.push_back(s.xi);
        table.covariance.push_back(covariance_at(s.t, s.xi, t_next));
    }
    return table;
}

Matrix sigma_linear_closed_form(const Matrix& a, const ProcessModel& model, double t_end, double dt) {
    if (a.rows() != model.q || a.cols() != model.q) {
        throw std::invalid_argument("sigma_linear_closed_form: A has wrong shape");
    }
    if (dt <= 0.0 || t_end < 0.0) throw std::invalid_argument("sigma_linear_closed_form: bad grid");

    // Drift-only RK4 solve; this route never touches the T / Xi equations.
    std::vector<Vec> zs;
    Vec z = model.initial_state;
    zs.push_back(z);
    const auto full_steps = static_cast<std::int64_t>(std::floor(t_end / dt + 1e-9));
    const double remainder = t_end - static_cast<double>(full_steps) * dt;
    const bool has_partial = remainder > 1e-12 * std::max(1.0, t_end);
    const std::int64_t total = full_steps + (has_partial ? 1 : 0);
    std::vector<double> hs;
    for (std::int64_t i = 0; i < total; ++i) {
        const double h = (has_partial && i == full_steps) ? remainder : dt;
        const Vec k1 = model.drift(z);
        Vec z2(z.size()), z3(z.size()), z4(z.size());
        for (size_t k = 0; k < z.size(); ++k) z2[k] = z[k] + 0.5 * h * k1[k];
        const Vec k2 = model.drift(z2);
        for (size_t k = 0; k < z.size(); ++k) z3[k] = z[k] + 0.5 * h * k2[k];
        const Vec k3 = model.drift(z3);
        for (size_t k = 0; k < z.size(); ++k) z4[k] = z[k] + h * k3[k];
        const Vec k4 = model.drift(z4);
        for (size_t k = 0; k < z.size(); ++k) z[k] += h / 6.0 * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k]);
        zs.push_back(z);
        hs.push_back(h);
    }

    // Affine-drift guard: the constant Jacobian must match finite
    // differences at both ends of the trajectory.
    for (const Vec& sample : {zs.front(), zs.back()}) {
        if (max_abs_diff(jacobian_fd(model.drift, sample), a) > 1e-6) {
            throw std::invalid_argument("model not linear");
        }
    }

    const std::size_t points = zs.size();
    if (points < 2) return Matrix::zero(model.q);

    // Integrand samples e^{-sA} (G - FF') e^{-sA'} with the exponential
    // advanced incrementally: E_{i+1} = E_i e^{-hA}.
    std::vector<Matrix> samples;
    samples.reserve(points);
    Matrix e_minus = Matrix::identity(model.q);
    Matrix step_exp;
    double step_exp_h = -1.0;
    for (std::size_t i = 0; i < points; ++i) {
        if (i > 0) {
            if (hs[i - 1] != step_exp_h) {
                step_exp = mat_exp(a * -hs[i - 1]);
                step_exp_h = hs[i - 1];
            }
            e_minus = e_minus * step_exp;
        }
        const Vec f = model.drift(zs[i]);
        const Matrix noise = model.diffusion(zs[i]) - outer(f, f);
        samples.push_back(e_minus * noise * transpose(e_minus));
    }

    // Composite Simpson; a trailing odd segment gets the 3/8 rule.
    const std::size_t intervals = points - 1;
    Matrix integral = Matrix::zero(model.q);
    std::size_t simpson_end = intervals;  // simpson covers [0, simpson_end]
    if (intervals % 2 == 1) {
        if (intervals < 3) {
            // Single interval: trapezoid is all we have.
            integral += (samples[0] + samples[1]) * (0.5 * hs[0]);
            simpson_end = 0;
        } else {
            simpson_end = intervals - 3;
        }
    }
    if (simpson_end >= 2) {
        Matrix acc = samples[0] + samples[simpson_end];
        for (std::size_t i = 1; i < simpson_end; ++i) acc += samples[i] * (i % 2 == 1 ? 4.0 : 2.0);
        integral += acc * (hs[0] / 3.0);
    }
    if (intervals % 2 == 1 && intervals >= 3) {
        const std::size_t b = simpson_end;
        const Matrix acc = samples[b] + samples[b + 1] * 3.0 + samples[b + 2] * 3.0 + samples[b + 3];
        integral += acc * (3.0 * hs[b] / 8.0);
    }

    const Matrix e_plus = mat_exp(a * t_end);
    return symmetrize(e_plus * integral * transpose(e_plus));
}

void write_trajectory_csv(std::ostream& out, const TrajectoryTable& table) {
    out << "t";
    for (int k = 1; k <= table.q; ++k) out << ",z_" << k;
    for (int i = 1; i <= table.q; ++i)
        for (int j = 1; j <= table.q; ++j) out << ",Sigma_" << i << j;
    out << "\n";
    char buf[40];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        out << buf;
    };
    for (std::size_t row = 0; row < table.size(); ++row) {
        put(table.t[row]);
        for (int k = 0; k < table.q; ++k) {
            out << ",";
            put(table.z[row][k]);
        }
        for (int i = 0; i < table.q; ++i)
            for (int j = 0; j < table.q; ++j) {
                out << ",";
                put(table.covariance[row](i, j));
            }
        out << "\n";
    }
}

TrajectoryCsv read_trajectory_csv(std::istream& in) {
    TrajectoryCsv csv;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_trajectory_csv: empty input");
    // Infer q from the header: 1 + q + q^2 columns.
    std::size_t columns = 1;
    for (char c : line)
        if (c == ',') ++columns;
    int q = 0;
    while (static_cast<std::size_t>(1 + q + q * q) < columns) ++q;
    if (static_cast<std::size_t>(1 + q + q * q) != columns) {
        throw std::runtime_error("read_trajectory_csv: unexpected column count " + std::to_string(columns));
    }
    csv.q = q;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(columns);
        const char* p = line.c_str();
        char* end = nullptr;
        for (std::size_t c = 0; c < columns; ++c) {
            vals.push_back(std::strtod(p, &end));
            if (p == end) throw std::runtime_error("read_trajectory_csv: malformed row");
            p = (*end == ',') ? end + 1 : end;
        }
        csv.t.push_back(vals[0]);
        csv.z.emplace_back(vals.begin() + 1, vals.begin() + 1 + q);
        Matrix sigma(q, q);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) sigma(i, j) = vals[1 + q + i * q + j];
        csv.covariance.push_back(std::move(sigma));
    }
    return csv;
}

}  // namespace graphclt
