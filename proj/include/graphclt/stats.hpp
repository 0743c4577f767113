#pragma once

#include <vector>

#include "graphclt/matrix.hpp"

namespace graphclt {

struct Moments {
    Vec mean;
    Matrix cov;  // unbiased, denominator N-1
    int samples = 0;
};

/// Two-pass mean/covariance; needs at least 2 samples.
Moments empirical_moments(const std::vector<Vec>& samples);

double normal_cdf(double x);

/// Regularized lower incomplete gamma P(a, x); series for x < a+1,
/// continued fraction otherwise. Absolute accuracy ~1e-14.
double lower_regularized_gamma(double a, double x);

/// Chi-square CDF with k degrees of freedom.
double chi_square_cdf(double x, int k);

/// Quantile of the chi-square distribution, by bisection on the CDF to
/// 1e-10.
double chi_square_quantile(double p, int k);

/// Kolmogorov-Smirnov distance of a sample to the standard normal.
double ks_statistic_standard_normal(std::vector<double> sample);

struct MahalanobisResult {
    double mean_d2 = 0.0;          // sample mean of W' Sigma^{-1} W
    bool pass = false;             // mean within dim +- band_sigmas sqrt(2 dim / N)
    double band = 0.0;
    double exceed_fraction = 0.0;  // share of d^2 above the 0.99 quantile
    double exceed_threshold = 0.0;
    std::vector<int> kept;         // coordinates of the tested sub-block
    int dim = 0;                   // size of the sub-block
};

/// Mahalanobis diagnostic for W ~ N(0, Sigma). Coordinates with predicted
/// variance below degenerate_tol are dropped; the rest are reduced by
/// pivoted Cholesky so that the tested sub-block is invertible (exact
/// linear constraints between counts otherwise make Sigma singular).
MahalanobisResult mahalanobis_check(const std::vector<Vec>& w_samples, const Matrix& sigma_pred,
                                    double band_sigmas = 5.0, double degenerate_tol = 1e-8);

}  // namespace graphclt
