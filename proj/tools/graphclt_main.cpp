// graphclt: fluid limits, asymptotic covariances and Monte Carlo
// validation for random graph processes.
//
// Subcommands:
//   solve     integrate the model ODEs and emit the trajectory table
//   simulate  run one exact trial and emit its count trajectory
//   ensemble  Monte Carlo over trials, compared against the ODE predictions
//   verify    run the built-in verification criteria
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 statistical
// verdict failure.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <sstream>

#include "graphclt/acceptance.hpp"
#include "graphclt/ensemble.hpp"
#include "graphclt/report.hpp"
#include "graphclt/version.hpp"

namespace {

using graphclt::Count;
using graphclt::EnsembleConfig;
using graphclt::ModelParams;

struct CliValues {
    std::string model = "mindeg";
    int q = 6;
    int d = 2;
    Count n = 10000;
    int trials = 1000;
    std::string checkpoints;  // comma-separated times
    bool stop_at_h = false;
    double t_end = -1.0;  // <0 = per-model default
    double dt = 1e-4;
    std::uint64_t seed = 0;
    double epsilon = 0.1;
    double delta = 0.1;
    bool corrected_diffusion = true;
    bool cross_check = false;
    int workers = 0;
    double sample_every = 0.01;
    std::string format = "csv";
    std::string output;
    std::string only = "all";
    bool verbose = false;
};

/// JSON config file with the same field names as the long flags;
/// explicit flags override it.
void load_config_file(const std::string& path, CliValues& v) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
    }
    auto get = [&doc](const char* key, auto& slot) {
        if (doc.contains(key)) slot = doc[key].get<std::decay_t<decltype(slot)>>();
    };
    get("model", v.model);
    get("q", v.q);
    get("d", v.d);
    get("n", v.n);
    get("trials", v.trials);
    if (doc.contains("checkpoints")) {
        std::string list;
        for (const auto& t : doc["checkpoints"]) {
            if (!list.empty()) list += ",";
            list += t.dump();
        }
        v.checkpoints = list;
    }
    get("stop_at_H", v.stop_at_h);
    get("t_end", v.t_end);
    get("dt", v.dt);
    get("seed", v.seed);
    get("epsilon", v.epsilon);
    get("delta", v.delta);
    get("corrected_diffusion", v.corrected_diffusion);
    get("cross_check", v.cross_check);
    get("workers", v.workers);
    get("sample_every", v.sample_every);
    get("format", v.format);
    get("output", v.output);
}

std::vector<double> parse_checkpoints(const std::string& list) {
    std::vector<double> out;
    std::stringstream stream(list);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (token.empty()) continue;
        out.push_back(std::stod(token));
    }
    return out;
}

ModelParams params_of(const CliValues& v) {
    ModelParams p;
    p.q = v.q;
    p.d = v.d;
    p.epsilon = v.epsilon;
    p.delta = v.delta;
    p.corrected_diffusion = v.corrected_diffusion;
    return p;
}

double default_t_end(const std::string& model) {
    if (model == "mindeg") return std::numbers::ln2;
    if (model == "dproc") return 4.0;  // domain exit stops the solve first
    return 1.0;
}

std::ostream& open_output(const CliValues& v, std::ofstream& file) {
    if (v.output.empty()) return std::cout;
    file.open(v.output);
    if (!file) throw std::runtime_error("cannot open output file " + v.output);
    return file;
}

int cmd_solve(const CliValues& v) {
    const graphclt::ModelSpec spec = graphclt::make_model_spec(v.model, params_of(v));
    const double t_end = v.t_end >= 0.0 ? v.t_end : default_t_end(v.model);
    const graphclt::TrajectoryTable table = graphclt::solve_augmented(spec.model, t_end, v.dt);

    if (v.cross_check) {
        const graphclt::Matrix a = graphclt::jacobian_fd(spec.model.drift, spec.model.initial_state);
        const graphclt::Matrix quadrature =
            graphclt::sigma_linear_closed_form(a, spec.model, table.t.back(), v.dt);
        const graphclt::Matrix& direct = table.covariance.back();
        double worst = 0.0;
        for (int i = 0; i < table.q; ++i)
            for (int j = 0; j < table.q; ++j) {
                const double scale = std::max({std::fabs(direct(i, j)), std::fabs(quadrature(i, j)), 1e-12});
                worst = std::max(worst, std::fabs(direct(i, j) - quadrature(i, j)) / scale);
            }
        std::cerr << "cross-check: max entrywise relative gap between the coupled solve and the\n"
                     "variation-of-parameters quadrature at t="
                  << table.t.back() << " is " << worst << "\n";
        if (worst > 1e-6) throw std::runtime_error("cross-check failed: independent covariance routes disagree");
    }

    std::ofstream file;
    std::ostream& out = open_output(v, file);
    if (v.format == "csv") {
        graphclt::write_trajectory_csv(out, table);
    } else if (v.format == "json") {
        nlohmann::ordered_json doc;
        doc["model"] = v.model;
        doc["q"] = table.q;
        doc["dt"] = table.dt;
        doc["domain_exit"] = table.domain_exit;
        if (table.domain_exit) doc["exit_time"] = table.exit_time;
        doc["t"] = table.t;
        auto rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < table.size(); ++i) {
            nlohmann::ordered_json row;
            row["t"] = table.t[i];
            row["z"] = table.z[i];
            auto sigma = nlohmann::ordered_json::array();
            for (int a2 = 0; a2 < table.q; ++a2) {
                auto line = nlohmann::ordered_json::array();
                for (int b = 0; b < table.q; ++b) line.push_back(table.covariance[i](a2, b));
                sigma.push_back(std::move(line));
            }
            row["sigma"] = std::move(sigma);
            rows.push_back(std::move(row));
        }
        doc["rows"] = std::move(rows);
        out << doc.dump(2) << "\n";
    } else {
        throw CLI::ValidationError("--format", "must be csv or json");
    }
    if (table.domain_exit) {
        std::cerr << "solve stopped at t=" << table.t.back() << " (state leaves the domain at t="
                  << table.exit_time << ")\n";
    }
    return 0;
}

int cmd_simulate(const CliValues& v) {
    const graphclt::ModelSpec spec = graphclt::make_model_spec(v.model, params_of(v));
    auto sim = spec.make_simulator(v.n);
    graphclt::Rng rng(graphclt::mix_seed(v.seed, 0));

    std::ofstream file;
    std::ostream& out = open_output(v, file);
    out << "t,m";
    for (int k = 0; k < sim->dim(); ++k) out << ",c_" << k + 1;
    out << "\n";
    auto emit = [&] {
        out << static_cast<double>(sim->steps_taken()) / static_cast<double>(v.n) << ","
            << sim->steps_taken();
        for (const Count c : sim->counts()) out << "," << c;
        out << "\n";
    };
    const double t_end = v.t_end >= 0.0 ? v.t_end : default_t_end(v.model);
    const auto max_steps = v.stop_at_h ? std::numeric_limits<std::int64_t>::max()
                                       : static_cast<std::int64_t>(std::llround(t_end * static_cast<double>(v.n)));
    const auto sample_steps =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(v.sample_every * static_cast<double>(v.n))));
    emit();
    while (sim->steps_taken() < max_steps) {
        if (!sim->step(rng)) break;
        if (sim->steps_taken() % sample_steps == 0) emit();
    }
    if (sim->steps_taken() % sample_steps != 0) emit();
    return 0;
}

int cmd_ensemble(const CliValues& v) {
    EnsembleConfig config;
    config.model = v.model;
    config.params = params_of(v);
    config.n = v.n;
    config.trials = v.trials;
    config.checkpoints = parse_checkpoints(v.checkpoints);
    config.stop_at_terminal = v.stop_at_h;
    config.seed = v.seed;
    config.dt = v.dt;
    config.workers = v.workers;

    const graphclt::TrajectoryTable table = graphclt::solve_for_config(config);
    const graphclt::EnsembleStats stats = graphclt::run_ensemble(config, table);
    const graphclt::Report report = graphclt::compare_report(stats, table);

    std::ofstream file;
    std::ostream& out = open_output(v, file);
    out << report.json;
    return report.pass ? 0 : 3;
}

int cmd_verify(const CliValues& v) {
    const std::vector<int> ids = graphclt::criteria_for_selection(v.only);
    const bool ok = graphclt::run_acceptance(ids, std::cout, v.verbose);
    return ok ? 0 : 3;
}

void add_model_options(CLI::App* cmd, CliValues& v) {
    cmd->add_option("--model", v.model, "Process model: mindeg, dproc or gauss")
        ->check(CLI::IsMember({"mindeg", "dproc", "gauss"}));
    cmd->add_option("--q", v.q, "Tracked component orders (mindeg)");
    cmd->add_option("--d", v.d, "Degree cap (dproc)");
    cmd->add_option("--epsilon", v.epsilon, "Domain margin");
    cmd->add_option("--delta", v.delta, "dproc window: solve stops once z_d >= 1 - delta");
    cmd->add_flag("--corrected-diffusion,!--uncorrected-diffusion", v.corrected_diffusion,
                  "Use the two-endpoint second moment (default) or the cross term only");
    cmd->add_option("--dt", v.dt, "ODE grid step");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluid limits and Monte Carlo validation of random graph processes"};
    app.set_version_flag("--version", graphclt::kVersion);
    app.require_subcommand(1);

    CliValues v;
    // Config file first, so explicit flags override it.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                load_config_file(argv[i + 1], v);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    }
    std::string config_path;

    auto* solve = app.add_subcommand("solve", "Integrate the model ODEs; emits t, z(t), Sigma(t)");
    add_model_options(solve, v);
    solve->add_option("--t-end", v.t_end, "Final time (default: ln 2 for mindeg, window exit for dproc)");
    solve->add_option("--format", v.format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    solve->add_option("--output,-o", v.output, "Output file (default stdout)");
    solve->add_flag("--cross-check", v.cross_check,
                    "Also evaluate the variation-of-parameters quadrature and compare");
    solve->add_option("--config", config_path, "JSON config file (same field names as flags)");

    auto* simulate = app.add_subcommand("simulate", "Run one exact trial; emits the count trajectory");
    add_model_options(simulate, v);
    simulate->add_option("--n", v.n, "Process scale (vertices)");
    simulate->add_option("--seed", v.seed, "Master seed");
    simulate->add_option("--t-end", v.t_end, "Stop time");
    simulate->add_flag("--stop-at-H", v.stop_at_h, "Run until the stopping time (mindeg)");
    simulate->add_option("--sample-every", v.sample_every, "Output sampling interval in t");
    simulate->add_option("--output,-o", v.output, "Output file (default stdout)");
    simulate->add_option("--config", config_path, "JSON config file");

    auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo trials compared against the ODE predictions");
    add_model_options(ensemble, v);
    ensemble->add_option("--n", v.n, "Process scale (vertices)");
    ensemble->add_option("--trials", v.trials, "Number of independent trials");
    ensemble->add_option("--checkpoints", v.checkpoints, "Comma-separated times, e.g. 0.25,0.5");
    ensemble->add_flag("--stop-at-H", v.stop_at_h, "Compare final counts at the stopping time (mindeg)");
    ensemble->add_option("--seed", v.seed, "Master seed");
    ensemble->add_option("--workers", v.workers, "Worker threads (0 = hardware)");
    ensemble->add_option("--output,-o", v.output, "Report file (default stdout)");
    ensemble->add_option("--config", config_path, "JSON config file");

    auto* verify = app.add_subcommand("verify", "Run the built-in verification criteria");
    verify->add_option("--only", v.only,
                       "Criteria: all, numerics, oracle, clt, stopping, harness, determinism, or ids like 1,4");
    verify->add_flag("--verbose", v.verbose, "Print every check, not only failures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion") {
            return app.exit(e);
        }
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(v);
        if (simulate->parsed()) return cmd_simulate(v);
        if (ensemble->parsed()) return cmd_ensemble(v);
        if (verify->parsed()) return cmd_verify(v);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
