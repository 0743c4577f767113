#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>

#include "graphclt/dprocess.hpp"
#include "graphclt/ensemble.hpp"
#include "graphclt/mindeg.hpp"
#include "graphclt/report.hpp"
#include "graphclt/version.hpp"

namespace py = pybind11;
using namespace graphclt;

namespace {

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
    return rows;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    const int m = n > 0 ? static_cast<int>(rows[0].size()) : 0;
    Matrix out(n, m);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != m) throw std::invalid_argument("ragged matrix");
        for (int j = 0; j < m; ++j) out(i, j) = rows[i][j];
    }
    return out;
}

ModelParams make_params(int q, int d, double epsilon, double delta, bool corrected_diffusion) {
    ModelParams p;
    p.q = q;
    p.d = d;
    p.epsilon = epsilon;
    p.delta = delta;
    p.corrected_diffusion = corrected_diffusion;
    return p;
}

py::dict table_to_dict(const TrajectoryTable& table) {
    py::dict out;
    out["q"] = table.q;
    out["dt"] = table.dt;
    out["t"] = table.t;
    out["z"] = table.z;
    py::list sigma;
    for (const Matrix& s : table.covariance) sigma.append(matrix_to_rows(s));
    out["sigma"] = sigma;
    out["domain_exit"] = table.domain_exit;
    if (table.domain_exit) out["exit_time"] = table.exit_time;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fluid limits and asymptotic covariances of random graph processes";
    m.attr("__version__") = kVersion;
    m.attr("LN2") = std::numbers::ln2;

    m.def(
        "solve",
        [](const std::string& model, int q, int d, double t_end, double dt, double epsilon,
           double delta, bool corrected_diffusion) {
            const ModelSpec spec =
                make_model_spec(model, make_params(q, d, epsilon, delta, corrected_diffusion));
            return table_to_dict(solve_augmented(spec.model, t_end, dt));
        },
        py::arg("model") = "mindeg", py::arg("q") = 6, py::arg("d") = 2,
        py::arg("t_end") = std::numbers::ln2, py::arg("dt") = 1e-4, py::arg("epsilon") = 0.1,
        py::arg("delta") = 0.1, py::arg("corrected_diffusion") = true,
        "Integrate the model ODEs; returns the grid with z(t) and Sigma(t).");

    m.def(
        "ensemble_report",
        [](const std::string& model, int q, int d, std::int64_t n, int trials,
           const std::vector<double>& checkpoints, bool stop_at_h, std::uint64_t seed, double dt,
           double epsilon, double delta, bool corrected_diffusion, int workers) {
            EnsembleConfig config;
            config.model = model;
            config.params = make_params(q, d, epsilon, delta, corrected_diffusion);
            config.n = n;
            config.trials = trials;
            config.checkpoints = checkpoints;
            config.stop_at_terminal = stop_at_h;
            config.seed = seed;
            config.dt = dt;
            config.workers = workers;
            const TrajectoryTable table = solve_for_config(config);
            const EnsembleStats stats = run_ensemble(config, table);
            const Report report = compare_report(stats, table);
            return py::make_tuple(report.pass, report.json);
        },
        py::arg("model") = "mindeg", py::arg("q") = 6, py::arg("d") = 2, py::arg("n") = 10000,
        py::arg("trials") = 1000, py::arg("checkpoints") = std::vector<double>{},
        py::arg("stop_at_h") = false, py::arg("seed") = 0, py::arg("dt") = 1e-4,
        py::arg("epsilon") = 0.1, py::arg("delta") = 0.1, py::arg("corrected_diffusion") = true,
        py::arg("workers") = 0,
        "Monte Carlo trials compared against the ODE predictions; returns (pass, report_json).");

    m.def("beta", &mindeg::beta, py::arg("t"), py::arg("k"),
          "Scaled count of order-k components at time t (minimum-degree process).");
    m.def("mu", &mindeg::mu, py::arg("k"), "Limit of the scaled counts at the stopping time.");
    m.def(
        "fundamental_closed",
        [](double t, int q) { return matrix_to_rows(mindeg::fundamental_closed(t, q)); },
        py::arg("t"), py::arg("q"), "Closed-form fundamental matrix of the minimum-degree system.");
    m.def(
        "final_covariance",
        [](const std::vector<std::vector<double>>& sigma_h, bool corrected) {
            return matrix_to_rows(mindeg::final_covariance(rows_to_matrix(sigma_h), corrected));
        },
        py::arg("sigma_h"), py::arg("corrected") = true,
        "Covariance of the standardized final counts, from Sigma at t = ln 2.");
    m.def(
        "mindeg_drift", [](const Vec& z) { return mindeg::drift(z); }, py::arg("z"));
    m.def(
        "mindeg_diffusion",
        [](const Vec& z) { return matrix_to_rows(mindeg::diffusion(z)); }, py::arg("z"));
    m.def(
        "dproc_drift",
        [](const Vec& z, int d, double eps) { return dproc::drift(z, d, eps); }, py::arg("z"),
        py::arg("d") = 2, py::arg("eps") = 0.0);
    m.def(
        "dproc_diffusion",
        [](const Vec& z, int d, double eps, bool corrected) {
            return matrix_to_rows(dproc::diffusion(z, d, eps, corrected));
        },
        py::arg("z"), py::arg("d") = 2, py::arg("eps") = 0.0, py::arg("corrected") = true);
}
