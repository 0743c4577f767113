#include "graphclt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphclt {

Moments empirical_moments(const std::vector<Vec>& samples) {
    const int n = static_cast<int>(samples.size());
    if (n < 2) throw std::invalid_argument("empirical_moments: need at least 2 samples");
    const int q = static_cast<int>(samples.front().size());
    Moments m;
    m.samples = n;
    m.mean.assign(q, 0.0);
    for (const Vec& s : samples) {
        if (static_cast<int>(s.size()) != q) {
            throw std::invalid_argument("empirical_moments: inconsistent sample dimension");
        }
        for (int i = 0; i < q; ++i) m.mean[i] += s[i];
    }
    for (int i = 0; i < q; ++i) m.mean[i] /= n;
    m.cov = Matrix(q, q);
    for (const Vec& s : samples) {
        for (int i = 0; i < q; ++i) {
            const double di = s[i] - m.mean[i];
            for (int j = i; j < q; ++j) m.cov(i, j) += di * (s[j] - m.mean[j]);
        }
    }
    for (int i = 0; i < q; ++i)
        for (int j = i; j < q; ++j) {
            m.cov(i, j) /= (n - 1);
            m.cov(j, i) = m.cov(i, j);
        }
    return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double lower_regularized_gamma(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("lower_regularized_gamma: a must be positive");
    if (x < 0.0) throw std::invalid_argument("lower_regularized_gamma: x must be nonnegative");
    if (x == 0.0) return 0.0;
    const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        // Series: P(a,x) = x^a e^{-x} / Gamma(a) * sum x^n / (a (a+1) ... (a+n))
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return std::exp(log_prefactor) * sum;
    }
    // Continued fraction for Q(a,x) (modified Lentz).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(log_prefactor) * h;
}

double chi_square_cdf(double x, int k) {
    if (k < 1) throw std::invalid_argument("chi_square_cdf: k must be >= 1");
    if (x <= 0.0) return 0.0;
    return lower_regularized_gamma(0.5 * k, 0.5 * x);
}

double chi_square_quantile(double p, int k) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chi_square_quantile: p must be in (0,1)");
    double lo = 0.0;
    double hi = std::max(8.0 * k, 64.0);
    while (chi_square_cdf(hi, k) < p) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi_square_cdf(mid, k) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-10 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

double ks_statistic_standard_normal(std::vector<double> sample) {
    const std::size_t n = sample.size();
    if (n == 0) throw std::invalid_argument("ks_statistic_standard_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = normal_cdf(sample[i]);
        const double lower = static_cast<double>(i) / n;
        const double upper = static_cast<double>(i + 1) / n;
        ks = std::max(ks, std::max(cdf - lower, upper - cdf));
    }
    return ks;
}

namespace {

MahalanobisResult select_coordinates(const Matrix& sigma, double degenerate_tol) {
    MahalanobisResult r;
    const int q = sigma.rows();
    std::vector<int> candidates;
    for (int i = 0; i < q; ++i) {
        if (sigma(i, i) >= degenerate_tol) candidates.push_back(i);
    }
    // Pivoted Cholesky on the candidate block; drop coordinates whose
    // Schur complement falls below a relative floor (exact linear
    // dependence between counts shows up here).
    const int m = static_cast<int>(candidates.size());
    Matrix s(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s(i, j) = sigma(candidates[i], candidates[j]);
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    double floor = 0.0;
    for (int i = 0; i < m; ++i) floor = std::max(floor, s(i, i));
    floor *= 1e-10;
    int rank = 0;
    for (; rank < m; ++rank) {
        int best = rank;
        for (int i = rank + 1; i < m; ++i)
            if (s(order[i], order[i]) > s(order[best], order[best])) best = i;
        std::swap(order[rank], order[best]);
        const int p = order[rank];
        if (s(p, p) <= floor) break;
        for (int r2 = rank + 1; r2 < m; ++r2) {
            const int i = order[r2];
            const double f = s(i, p) / s(p, p);
            for (int c2 = rank + 1; c2 < m; ++c2) {
                const int j = order[c2];
                s(i, j) -= f * s(p, j);
            }
        }
    }
    for (int i = 0; i < rank; ++i) r.kept.push_back(candidates[order[i]]);
    std::sort(r.kept.begin(), r.kept.end());
    r.dim = rank;
    return r;
}

}  // namespace

MahalanobisResult mahalanobis_check(const std::vector<Vec>& w_samples, const Matrix& sigma_pred,
                                    double band_sigmas, double degenerate_tol) {
    if (w_samples.empty()) throw std::invalid_argument("mahalanobis_check: no samples");
    MahalanobisResult r = select_coordinates(sigma_pred, degenerate_tol);
    if (r.dim == 0) {
        r.pass = true;  // nothing testable; degenerate coordinates are checked separately
        return r;
    }
    Matrix sub(r.dim, r.dim);
    for (int i = 0; i < r.dim; ++i)
        for (int j = 0; j < r.dim; ++j) sub(i, j) = sigma_pred(r.kept[i], r.kept[j]);
    const Matrix inv = mat_inverse(sub);
    const auto n = static_cast<double>(w_samples.size());
    double sum_d2 = 0.0;
    r.exceed_threshold = chi_square_quantile(0.99, r.dim);
    int exceed = 0;
    Vec wi(r.dim);
    for (const Vec& w : w_samples) {
        for (int i = 0; i < r.dim; ++i) wi[i] = w[r.kept[i]];
        double d2 = 0.0;
        for (int i = 0; i < r.dim; ++i)
            for (int j = 0; j < r.dim; ++j) d2 += wi[i] * inv(i, j) * wi[j];
        sum_d2 += d2;
        if (d2 > r.exceed_threshold) ++exceed;
    }
    r.mean_d2 = sum_d2 / n;
    r.exceed_fraction = exceed / n;
    r.band = band_sigmas * std::sqrt(2.0 * r.dim / n);
    r.pass = std::fabs(r.mean_d2 - r.dim) <= r.band;
    return r;
}

}  // namespace graphclt
