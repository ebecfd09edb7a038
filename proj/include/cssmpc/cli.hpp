#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cssmpc/bench_vehicle.hpp"
#include "cssmpc/sim.hpp"
#include "cssmpc/smpc.hpp"
#include "cssmpc/terminal.hpp"

namespace cssmpc::cli {

/// Fully resolved experiment configuration (schema-validated JSON file;
/// unknown keys are rejected).
struct LoadedConfig {
    sim::Scenario scenario;
    ParameterHull hull;          // robust hull
    ParameterHull nominal;       // single-vertex ablation hull
    terminal::SynthesisOptions synthesis;
    smpc::SmpcOptions smpc_options;
    smpc::InitializationMode init_mode = smpc::InitializationMode::Static;
    std::uint64_t base_seed = 1;
    int trials = 20;
    std::vector<std::string> variants;  // subset of robust|nominal|none
    std::string output_dir = "out";
    bool is_vehicle = false;
};

LoadedConfig load_config(const std::string& path);

/// Ingredient cache path for a variant under the config's output dir.
std::string cache_path(const LoadedConfig& config, const std::string& variant);

int cmd_terminal(const std::string& config_path, const std::string& variant,
                 const std::optional<std::string>& out_dir);
int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& variant, bool no_plot,
                 const std::optional<std::string>& out_dir);
int cmd_montecarlo(const std::string& config_path, std::optional<int> trials,
                   const std::optional<std::string>& out_dir);
int cmd_validate(const std::string& config_path);

/// Argument parsing + dispatch for the cssmpc binary.
int run_cli(int argc, const char* const* argv);

}  // namespace cssmpc::cli
