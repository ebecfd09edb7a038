#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cssmpc/polytope.hpp"
#include "cssmpc/smpc.hpp"
#include "cssmpc/sysmodel.hpp"
#include "cssmpc/terminal.hpp"

namespace cssmpc::sim {

/// Closed-loop experiment description. The schedule must cover every
/// prediction window: length >= trial_length + horizon - 1.
struct Scenario {
    std::vector<SystemRealization> schedule;
    Polytope state_set;    // original constraint polytope
    Polytope control_set;  // original control polytope
    ChanceSpec chance;
    StageCost cost;
    int horizon = 0;       // N
    int trial_length = 0;  // T
    VectorXd x0;

    void check() const;
    std::vector<SystemRealization> window_at(int k) const;
    std::vector<StageCost> cost_window() const;
};

struct StepRecord {
    int k = 0;
    VectorXd x;
    VectorXd u;
    std::string init_tag;
    bool feasible = true;
    double stage_cost = 0.0;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    std::optional<int> infeasible_at;
    bool numerical_failure = false;
    std::vector<std::vector<bool>> state_violations;    // [step][row]
    std::vector<std::vector<bool>> control_violations;  // [step][row], applied steps only
    std::vector<int> tau_history;                       // reconditioning times
    int solver_calls = 0;
    int infeasible_solver_calls = 0;
    double trajectory_cost = 0.0;
};

/// One closed-loop rollout. Passing null ingredients runs the
/// no-terminal-constraints ablation. Infeasibility ends the trial and is
/// recorded as data; only solver breakdown is flagged as numerical failure.
TrialRecord run_trial(const Scenario& scenario,
                      const terminal::TerminalIngredients* ingredients,
                      smpc::InitializationMode init_mode, std::uint64_t seed,
                      const smpc::SmpcOptions& options = {});

struct RowRate {
    long violations = 0;
    long exposure = 0;
    double rate = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 0.0;
};

struct MonteCarloSummary {
    int n_trials = 0;
    int infeasibility_count = 0;  // trials hitting at least one infeasible solve
    int numerical_failures = 0;
    std::vector<RowRate> state_rates;
    std::vector<RowRate> control_rates;
    double mean_cost = 0.0;
    double max_cost = 0.0;
    double wall_seconds = 0.0;
    int total_solver_calls = 0;
};

enum class ExecutionMode { Serial, OpenMP };

/// Independent trials with seeds base_seed + index. The OpenMP path runs
/// trials across threads and must produce records identical to the serial
/// reference.
std::vector<TrialRecord> run_trials(const Scenario& scenario,
                                    const terminal::TerminalIngredients* ingredients,
                                    smpc::InitializationMode init_mode, int n_trials,
                                    std::uint64_t base_seed, const smpc::SmpcOptions& options,
                                    ExecutionMode mode);

MonteCarloSummary summarize(const Scenario& scenario, const std::vector<TrialRecord>& records,
                            double wall_seconds = 0.0);

MonteCarloSummary run_monte_carlo(const Scenario& scenario,
                                  const terminal::TerminalIngredients* ingredients,
                                  smpc::InitializationMode init_mode, int n_trials,
                                  std::uint64_t base_seed, const smpc::SmpcOptions& options = {},
                                  ExecutionMode mode = ExecutionMode::OpenMP);

/// Per-row empirical violation rates with Wilson 95% intervals.
std::vector<RowRate> estimate_violation_rates(const std::vector<std::vector<std::vector<bool>>>&
                                                  flags_per_record);

/// CSV for one trial: k, x components, u components, init_tag, feasible,
/// cost. 17 significant digits for replay fidelity.
std::string trial_to_csv(const Scenario& scenario, const TrialRecord& record);

}  // namespace cssmpc::sim
