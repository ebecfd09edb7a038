#include "cssmpc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cssmpc/svg.hpp"

namespace cssmpc::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
    }
}

MatrixXd parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw std::invalid_argument(where + " must be a 2-D array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols)
            throw std::invalid_argument(where + " has ragged rows");
        for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

VectorXd parse_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw std::invalid_argument(where + " must be an array");
    VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

SystemRealization parse_realization(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"A", "B", "D", "r"}, where);
    SystemRealization sys;
    sys.A = parse_matrix(j.at("A"), where + ".A");
    sys.B = parse_matrix(j.at("B"), where + ".B");
    sys.D = parse_matrix(j.at("D"), where + ".D");
    sys.r = parse_vector(j.at("r"), where + ".r");
    sys.check_shapes();
    return sys;
}

std::vector<ChanceRow> parse_chance_rows(const json& j, const std::string& where) {
    std::vector<ChanceRow> rows;
    for (size_t i = 0; i < j.size(); ++i) {
        const auto& entry = j[i];
        reject_unknown_keys(entry, {"a", "b", "p"}, where);
        ChanceRow row;
        row.normal = parse_vector(entry.at("a"), where + ".a");
        row.offset = entry.at("b").get<double>();
        row.risk = entry.at("p").get<double>();
        rows.push_back(std::move(row));
    }
    return rows;
}

Polytope polytope_from_rows(const std::vector<ChanceRow>& rows, int dim) {
    MatrixXd normals(rows.size(), dim);
    VectorXd offsets(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        normals.row(static_cast<int>(i)) = rows[i].normal.transpose();
        offsets[static_cast<int>(i)] = rows[i].offset;
    }
    return Polytope(normals, offsets);
}

}  // namespace

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json root = json::parse(in);

    reject_unknown_keys(root,
                        {"system", "horizon", "trial_length", "constraints", "cost", "x0",
                         "init_mode", "gain_mode", "base_seed", "trials", "variants", "solver",
                         "synthesis", "output_dir"},
                        "config");

    LoadedConfig config;
    config.scenario.horizon = root.value("horizon", 4);
    config.scenario.trial_length = root.value("trial_length", 60);

    const json& system = root.at("system");
    const std::string type = system.at("type").get<std::string>();
    if (type == "vehicle") {
        config.is_vehicle = true;
        reject_unknown_keys(system, {"type", "params", "nu_bounds", "rho_bounds", "profile"},
                            "system");
        bench_vehicle::VehicleParams params;
        if (system.contains("params")) {
            const json& p = system.at("params");
            reject_unknown_keys(p, {"lf", "lr", "dt", "theta_delta", "theta_psi", "theta_y"},
                                "system.params");
            params.lf = p.value("lf", params.lf);
            params.lr = p.value("lr", params.lr);
            params.dt = p.value("dt", params.dt);
            params.theta_delta = p.value("theta_delta", params.theta_delta);
            params.theta_psi = p.value("theta_psi", params.theta_psi);
            params.theta_y = p.value("theta_y", params.theta_y);
        }
        bench_vehicle::ScenarioDefaults defaults;
        defaults.horizon = config.scenario.horizon;
        if (system.contains("nu_bounds")) {
            const auto b = parse_vector(system.at("nu_bounds"), "nu_bounds");
            defaults.nu_bounds = {b[0], b[1]};
        }
        if (system.contains("rho_bounds")) {
            const auto b = parse_vector(system.at("rho_bounds"), "rho_bounds");
            defaults.rho_bounds = {b[0], b[1]};
        }

        bench_vehicle::ReferenceProfile profile;
        if (!system.contains("profile") ||
            system.at("profile").at("type").get<std::string>() == "default") {
            profile = bench_vehicle::default_profile(config.scenario.trial_length,
                                                     config.scenario.horizon);
        } else {
            const json& p = system.at("profile");
            reject_unknown_keys(p, {"type", "nu", "rho"}, "profile");
            if (p.at("type").get<std::string>() != "explicit")
                throw std::invalid_argument("profile.type must be default or explicit");
            for (double v : p.at("nu")) profile.nu.push_back(v);
            for (double v : p.at("rho")) profile.rho.push_back(v);
        }
        config.scenario = bench_vehicle::build_scenario(params, profile,
                                                        config.scenario.trial_length, defaults);
        config.hull = bench_vehicle::build_hull(params, defaults.nu_bounds, defaults.rho_bounds);
        config.nominal = bench_vehicle::nominal_hull(params, profile);
    } else if (type == "explicit") {
        reject_unknown_keys(system, {"type", "hull", "schedule"}, "system");
        for (size_t i = 0; i < system.at("hull").size(); ++i)
            config.hull.vertices.push_back(
                parse_realization(system.at("hull")[i], "hull vertex"));
        config.hull.check_shapes();
        for (size_t i = 0; i < system.at("schedule").size(); ++i)
            config.scenario.schedule.push_back(
                parse_realization(system.at("schedule")[i], "schedule entry"));

        const json& constraints = root.at("constraints");
        reject_unknown_keys(constraints, {"state_rows", "control_rows"}, "constraints");
        config.scenario.chance.state_rows =
            parse_chance_rows(constraints.at("state_rows"), "state row");
        config.scenario.chance.control_rows =
            parse_chance_rows(constraints.at("control_rows"), "control row");
        const int nx = config.hull.nx();
        const int nu = config.hull.nu();
        config.scenario.chance.check(nx, nu);
        config.scenario.state_set = polytope_from_rows(config.scenario.chance.state_rows, nx);
        config.scenario.control_set =
            polytope_from_rows(config.scenario.chance.control_rows, nu);

        const json& cost = root.at("cost");
        reject_unknown_keys(cost, {"Q", "R", "goal"}, "cost");
        config.scenario.cost.Q = parse_matrix(cost.at("Q"), "cost.Q");
        config.scenario.cost.R = parse_matrix(cost.at("R"), "cost.R");
        config.scenario.cost.goal = parse_vector(cost.at("goal"), "cost.goal");
        config.scenario.x0 = parse_vector(root.at("x0"), "x0");
        config.nominal = config.hull;
        config.scenario.check();
    } else {
        throw std::invalid_argument("system.type must be vehicle or explicit");
    }

    const std::string init = root.value("init_mode", "static");
    if (init == "static")
        config.init_mode = smpc::InitializationMode::Static;
    else if (init == "dynamic")
        config.init_mode = smpc::InitializationMode::Dynamic;
    else
        throw std::invalid_argument("init_mode must be static or dynamic");

    const std::string gain = root.value("gain_mode", "diagonal");
    if (gain == "diagonal")
        config.smpc_options.gain_mode = smpc::GainMode::Diagonal;
    else if (gain == "lower_triangular")
        config.smpc_options.gain_mode = smpc::GainMode::LowerTriangular;
    else
        throw std::invalid_argument("gain_mode must be diagonal or lower_triangular");

    if (root.contains("solver")) {
        const json& solver = root.at("solver");
        reject_unknown_keys(solver, {"feas_tol", "rel_gap_tol", "max_iter"}, "solver");
        config.smpc_options.solver.feas_tol =
            solver.value("feas_tol", config.smpc_options.solver.feas_tol);
        config.smpc_options.solver.rel_gap_tol =
            solver.value("rel_gap_tol", config.smpc_options.solver.rel_gap_tol);
        config.smpc_options.solver.max_iter =
            solver.value("max_iter", config.smpc_options.solver.max_iter);
    }
    if (root.contains("synthesis")) {
        const json& synth = root.at("synthesis");
        reject_unknown_keys(synth, {"ridge", "eps", "max_iterations"}, "synthesis");
        config.synthesis.ridge = synth.value("ridge", config.synthesis.ridge);
        config.synthesis.eps = synth.value("eps", config.synthesis.eps);
        config.synthesis.max_iterations =
            synth.value("max_iterations", config.synthesis.max_iterations);
    }
    config.synthesis.solver = config.smpc_options.solver;

    config.base_seed = root.value("base_seed", 1ULL);
    config.trials = root.value("trials", 20);
    config.output_dir = root.value("output_dir", "out");
    if (root.contains("variants")) {
        for (const auto& v : root.at("variants")) {
            const std::string name = v.get<std::string>();
            if (name != "robust" && name != "nominal" && name != "none")
                throw std::invalid_argument("variant must be robust, nominal, or none");
            config.variants.push_back(name);
        }
    } else {
        config.variants = {"robust"};
    }
    return config;
}

namespace {

const ParameterHull& variant_hull(const LoadedConfig& config, const std::string& variant) {
    if (variant == "robust") return config.hull;
    if (variant == "nominal") return config.nominal;
    throw std::invalid_argument("variant '" + variant + "' carries no hull");
}

std::optional<terminal::TerminalIngredients> load_cached(const LoadedConfig& config,
                                                         const std::string& variant) {
    const std::string path = cache_path(config, variant);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return terminal::ingredients_from_json(buffer.str());
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

smpc::InitializationMode variant_init_mode(const LoadedConfig& config) { return config.init_mode; }

}  // namespace

std::string cache_path(const LoadedConfig& config, const std::string& variant) {
    const auto& hull = variant_hull(config, variant);
    const std::string hash =
        terminal::content_hash(hull, config.scenario.chance, config.synthesis);
    return config.output_dir + "/ingredients_" + variant + "_" + hash + ".json";
}

int cmd_terminal(const std::string& config_path, const std::string& variant,
                 const std::optional<std::string>& out_dir) {
    try {
        LoadedConfig config = load_config(config_path);
        if (out_dir) config.output_dir = *out_dir;
        if (variant == "none") {
            std::cerr << "variant 'none' needs no terminal ingredients\n";
            return 2;
        }
        const std::string path = cache_path(config, variant);
        if (fs::exists(path)) {
            std::cout << "cache hit: " << path << "\n";
            return 0;
        }
        const auto& hull = variant_hull(config, variant);
        auto ingredients = terminal::synthesize(hull, config.scenario.chance, config.synthesis);
        write_file(path, terminal::to_json(ingredients));

        Eigen::SelfAdjointEigenSolver<MatrixXd> es(ingredients.cov_bound);
        std::cout << "terminal ingredients (" << variant << ") cached at " << path << "\n";
        std::cout << "cov_bound eigenvalues:";
        for (int i = 0; i < es.eigenvalues().size(); ++i) std::cout << " " << es.eigenvalues()[i];
        std::cout << "\nstate_safe facets: " << ingredients.state_safe.num_rows()
                  << ", control_safe facets: " << ingredients.control_safe.num_rows()
                  << ", mean_set facets: " << ingredients.mean_set.num_rows() << "\n";
        std::cout << "invariant-set iterations: " << ingredients.iterations
                  << ", converged: " << (ingredients.converged ? "yes" : "no") << "\n";
        for (const auto& vert : hull.vertices) {
            const MatrixXd closed = vert.A + vert.B * ingredients.gain;
            const double residual = min_eigenvalue(
                ingredients.cov_bound - closed * ingredients.cov_bound * closed.transpose() -
                vert.D * vert.D.transpose());
            std::cout << "vertex certificate min-eig: " << residual << "\n";
        }
        return 0;
    } catch (const terminal::SynthesisError& err) {
        std::cerr << "synthesis failure: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& variant, bool no_plot,
                 const std::optional<std::string>& out_dir) {
    try {
        LoadedConfig config = load_config(config_path);
        if (out_dir) config.output_dir = *out_dir;

        std::optional<terminal::TerminalIngredients> ingredients;
        if (variant != "none") {
            ingredients = load_cached(config, variant);
            if (!ingredients) {
                std::cerr << "no cached ingredients for variant '" << variant
                          << "'; run the terminal command first\n";
                return 2;
            }
        }

        const std::uint64_t used_seed = seed.value_or(config.base_seed);
        auto record =
            sim::run_trial(config.scenario, ingredients ? &*ingredients : nullptr,
                           variant_init_mode(config), used_seed, config.smpc_options);

        std::ostringstream name;
        name << config.output_dir << "/trial_" << variant << "_seed" << used_seed;
        write_file(name.str() + ".csv", sim::trial_to_csv(config.scenario, record));
        std::cout << "trial written: " << name.str() << ".csv";
        if (record.infeasible_at)
            std::cout << " (infeasible at step " << *record.infeasible_at << ")";
        std::cout << "\n";

        if (!no_plot && config.is_vehicle) {
            std::vector<svg::Series> series(3);
            series[0] = {"lateral error", "#1f77b4", {}};
            series[1] = {"steering angle", "#d62728", {}};
            series[2] = {"steering rate", "#2ca02c", {}};
            for (const auto& step : record.steps) {
                series[0].values.push_back(step.x[2]);
                series[1].values.push_back(step.x[0]);
                series[2].values.push_back(step.feasible ? step.u[0] : 0.0);
            }
            write_file(name.str() + ".svg",
                       svg::line_chart("closed-loop trial (" + variant + ")", series));
        }
        return 0;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

namespace {

json rates_to_json(const std::vector<sim::RowRate>& rates) {
    json out = json::array();
    for (const auto& r : rates) {
        json row;
        row["violations"] = r.violations;
        row["exposure"] = r.exposure;
        row["rate"] = r.rate;
        row["wilson_low"] = r.wilson_low;
        row["wilson_high"] = r.wilson_high;
        out.push_back(row);
    }
    return out;
}

}  // namespace

int cmd_montecarlo(const std::string& config_path, std::optional<int> trials,
                   const std::optional<std::string>& out_dir) {
    try {
        LoadedConfig config = load_config(config_path);
        if (out_dir) config.output_dir = *out_dir;
        const int n_trials = trials.value_or(config.trials);

        json summary_json;
        json table2;
        for (const auto& variant : config.variants) {
            std::optional<terminal::TerminalIngredients> ingredients;
            if (variant != "none") {
                ingredients = load_cached(config, variant);
                if (!ingredients) {
                    std::cerr << "no cached ingredients for variant '" << variant
                              << "'; run the terminal command first\n";
                    return 2;
                }
            }
            auto records = sim::run_trials(
                config.scenario, ingredients ? &*ingredients : nullptr,
                variant_init_mode(config), n_trials, config.base_seed, config.smpc_options,
                sim::ExecutionMode::OpenMP);
            auto summary = sim::summarize(config.scenario, records);

            for (size_t i = 0; i < records.size(); ++i) {
                std::ostringstream name;
                name << config.output_dir << "/mc_" << variant << "_trial" << i << ".csv";
                write_file(name.str(), sim::trial_to_csv(config.scenario, records[i]));
            }

            json v;
            v["n_trials"] = summary.n_trials;
            v["infeasibility_count"] = summary.infeasibility_count;
            v["numerical_failures"] = summary.numerical_failures;
            v["total_solver_calls"] = summary.total_solver_calls;
            v["mean_trajectory_cost"] = summary.mean_cost;
            v["max_trajectory_cost"] = summary.max_cost;
            v["state_rows"] = rates_to_json(summary.state_rates);
            v["control_rows"] = rates_to_json(summary.control_rates);
            summary_json["variants"][variant] = v;
            table2[variant] = summary.infeasibility_count;
            std::cout << "variant " << variant << ": " << summary.infeasibility_count << "/"
                      << summary.n_trials << " trials hit infeasibility ("
                      << summary.wall_seconds << " s)\n";
        }
        summary_json["infeasibility_table"] = table2;
        summary_json["base_seed"] = config.base_seed;
        write_file(config.output_dir + "/montecarlo_summary.json", summary_json.dump(2) + "\n");
        std::cout << "summary written: " << config.output_dir << "/montecarlo_summary.json\n";
        return 0;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

int cmd_validate(const std::string& config_path) {
    try {
        LoadedConfig config = load_config(config_path);
        config.scenario.check();
        std::cout << "schema: ok\n";
        std::cout << "dimensions: nx=" << config.scenario.schedule.front().nx()
                  << " nu=" << config.scenario.schedule.front().nu()
                  << " horizon=" << config.scenario.horizon
                  << " trial_length=" << config.scenario.trial_length << "\n";

        int members = 0;
        for (const auto& sys : config.scenario.schedule)
            if (bench_vehicle::hull_membership(config.hull, sys)) ++members;
        std::cout << "hull membership (diagnostic): " << members << "/"
                  << config.scenario.schedule.size()
                  << " scheduled realizations are exact hull members\n";
        std::cout << "(interior speed/curvature pairs may fail exact membership because the"
                     " offset term is bilinear; bounds are enforced separately)\n";
        return 0;
    } catch (const std::exception& err) {
        std::cerr << "validation failure: " << err.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"covariance-steering stochastic MPC toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string variant = "robust";
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    bool no_plot = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario config JSON")->required();
    };

    CLI::App* terminal_cmd = app.add_subcommand("terminal", "synthesize terminal ingredients");
    add_common(terminal_cmd);
    terminal_cmd->add_option("--variant", variant, "robust|nominal");
    terminal_cmd->add_option("--out", out_dir, "output directory override");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one closed-loop trial");
    add_common(simulate_cmd);
    simulate_cmd->add_option("--variant", variant, "robust|nominal|none");
    simulate_cmd->add_option("--seed", seed, "trial seed");
    simulate_cmd->add_option("--out", out_dir, "output directory override");
    simulate_cmd->add_flag("--no-plot", no_plot, "skip the SVG plot");

    CLI::App* mc_cmd = app.add_subcommand("montecarlo", "run the Monte Carlo study");
    add_common(mc_cmd);
    mc_cmd->add_option("--trials", trials, "number of trials");
    mc_cmd->add_option("--out", out_dir, "output directory override");

    CLI::App* validate_cmd = app.add_subcommand("validate", "check a config file");
    add_common(validate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (terminal_cmd->parsed()) return cmd_terminal(config_path, variant, out_dir);
    if (simulate_cmd->parsed()) return cmd_simulate(config_path, seed, variant, no_plot, out_dir);
    if (mc_cmd->parsed()) return cmd_montecarlo(config_path, trials, out_dir);
    if (validate_cmd->parsed()) return cmd_validate(config_path);
    return 1;
}

}  // namespace cssmpc::cli
