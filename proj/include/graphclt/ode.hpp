#pragma once

#include <iosfwd>
#include <optional>

#include "graphclt/matrix.hpp"
#include "graphclt/process.hpp"

namespace graphclt {

/// Grid of the coupled solve: per grid point the scaled state z(t), the
/// fundamental matrix T(t) of the linearized flow, the accumulated
/// fluctuation integral Xi(t) and the asymptotic covariance
/// Sigma(t) = T^{-1} Xi T^{-T}.
struct TrajectoryTable {
    int q = 0;
    double dt = 0.0;
    std::vector<double> t;
    std::vector<Vec> z;
    std::vector<Matrix> fundamental;  // T(t), T(0) = I
    std::vector<Matrix> fluctuation;  // Xi(t), Xi(0) = 0
    std::vector<Matrix> covariance;   // Sigma(t)

    bool domain_exit = false;   // solve stopped before t_end
    double exit_time = 0.0;     // first grid time outside the domain

    std::size_t size() const { return t.size(); }
    /// Index of the grid point nearest to time s.
    std::size_t nearest_index(double s) const;
};

/// Classical fixed-step RK4 on the coupled system
///   z'  = F(z)
///   T'  = -T J(z)
///   Xi' = T (G(z) - F(z)F(z)') T'
/// starting from z(0) = model.initial_state, T(0) = I, Xi(0) = 0.
/// Sigma is formed at every grid point. Stops early (with the
/// domain_exit flag) at the first grid point whose state leaves the
/// model domain. Throws on non-finite state or when T becomes
/// numerically singular (condition estimate above 1e12; T is invertible
/// in exact arithmetic, but conditioning can fail near the domain
/// boundary).
TrajectoryTable solve_augmented(const ProcessModel& model, double t_end, double dt);

/// Central-difference Jacobian of f at z, step 1e-6 * max(1, |z_k|).
Matrix jacobian_fd(const std::function<Vec(const Vec&)>& f, const Vec& z);

/// Independent route to Sigma(t) for models with affine drift:
///   Sigma(t) = e^{tA} [ integral_0^t e^{-sA} (G(z(s)) - F(z(s))F(z(s))') e^{-sA'} ds ] e^{tA'}
/// evaluated by composite Simpson quadrature on the solve grid, with the
/// matrix exponentials from mat_exp. Shares nothing with
/// solve_augmented's T / Xi path except the drift solve itself.
/// Throws std::invalid_argument("model not linear") when A disagrees
/// with a finite-difference Jacobian sample by more than 1e-6.
Matrix sigma_linear_closed_form(const Matrix& a, const ProcessModel& model, double t_end, double dt);

/// CSV with header t,z_1..z_q,Sigma_11,...,Sigma_qq (row-major full
/// matrix); 17 significant digits so values round-trip exactly.
void write_trajectory_csv(std::ostream& out, const TrajectoryTable& table);

struct TrajectoryCsv {
    int q = 0;
    std::vector<double> t;
    std::vector<Vec> z;
    std::vector<Matrix> covariance;
};

TrajectoryCsv read_trajectory_csv(std::istream& in);

}  // namespace graphclt
