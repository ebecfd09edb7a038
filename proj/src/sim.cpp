#include "cssmpc/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <omp.h>

namespace cssmpc::sim {

void Scenario::check() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (trial_length < horizon) throw std::invalid_argument("trial length must cover horizon");
    if (static_cast<int>(schedule.size()) < trial_length + horizon - 1)
        throw std::invalid_argument("schedule too short for the trial length");
    for (const auto& sys : schedule) sys.check_shapes();
    const int nx = schedule.front().nx();
    const int nu = schedule.front().nu();
    if (state_set.dim() != nx || control_set.dim() != nu || x0.size() != nx)
        throw std::invalid_argument("scenario dimension mismatch");
    chance.check(nx, nu);
    cost.check();
}

std::vector<SystemRealization> Scenario::window_at(int k) const {
    return {schedule.begin() + k, schedule.begin() + k + horizon};
}

std::vector<StageCost> Scenario::cost_window() const {
    return std::vector<StageCost>(static_cast<size_t>(horizon), cost);
}

namespace {

std::vector<bool> violation_flags(const Polytope& set, const VectorXd& point) {
    std::vector<bool> flags(set.num_rows());
    for (int i = 0; i < set.num_rows(); ++i)
        flags[static_cast<size_t>(i)] =
            set.normals().row(i).dot(point) > set.offsets()[i] + 1e-9;
    return flags;
}

}  // namespace

TrialRecord run_trial(const Scenario& scenario,
                      const terminal::TerminalIngredients* ingredients,
                      smpc::InitializationMode init_mode, std::uint64_t seed,
                      const smpc::SmpcOptions& options) {
    scenario.check();
    TrialRecord record;
    record.seed = seed;
    RngStream rng(seed);

    const auto cost_window = scenario.cost_window();
    VectorXd x = scenario.x0;
    smpc::SMPCSolution previous;
    bool have_previous = false;

    for (int k = 0; k < scenario.trial_length; ++k) {
        const auto window = scenario.window_at(k);
        smpc::ProbeSolver probe = [&](const GaussianBelief& belief) {
            ++record.solver_calls;
            auto sol = smpc::solve_smpc(belief, window, cost_window, scenario.chance,
                                        ingredients, options);
            if (sol.status == conic::SolveStatus::Infeasible) ++record.infeasible_solver_calls;
            if (sol.optimal()) return std::optional<smpc::SMPCSolution>(std::move(sol));
            return std::optional<smpc::SMPCSolution>();
        };

        auto init = smpc::initialize(have_previous ? &previous : nullptr, x, init_mode, probe);
        smpc::SMPCSolution solution;
        if (init.probe.has_value()) {
            solution = std::move(*init.probe);
            record.tau_history.push_back(k);
        } else {
            ++record.solver_calls;
            solution = smpc::solve_smpc(init.belief, window, cost_window, scenario.chance,
                                        ingredients, options);
        }

        StepRecord step;
        step.k = k;
        step.x = x;
        step.init_tag = init.tag;
        record.state_violations.push_back(violation_flags(scenario.state_set, x));

        if (!solution.optimal()) {
            if (solution.status == conic::SolveStatus::Infeasible) {
                ++record.infeasible_solver_calls;
                record.infeasible_at = k;
            } else {
                record.numerical_failure = true;
            }
            step.feasible = false;
            step.u = VectorXd::Zero(scenario.schedule.front().nu());
            step.stage_cost = 0.0;
            record.steps.push_back(std::move(step));
            return record;
        }

        const VectorXd v0 = solution.feedforward(0);
        const MatrixXd k00 = solution.gains.block(0, 0);
        const VectorXd u = v0 + k00 * (x - init.belief.mean);
        step.u = u;
        step.feasible = true;
        step.stage_cost = (x - scenario.cost.goal).dot(scenario.cost.Q * (x - scenario.cost.goal)) +
                          u.dot(scenario.cost.R * u);
        record.trajectory_cost += step.stage_cost;
        record.control_violations.push_back(violation_flags(scenario.control_set, u));
        record.steps.push_back(std::move(step));

        x = sample_step(x, u, scenario.schedule[k], rng);
        previous = std::move(solution);
        have_previous = true;
    }
    return record;
}

std::vector<TrialRecord> run_trials(const Scenario& scenario,
                                    const terminal::TerminalIngredients* ingredients,
                                    smpc::InitializationMode init_mode, int n_trials,
                                    std::uint64_t base_seed, const smpc::SmpcOptions& options,
                                    ExecutionMode mode) {
    std::vector<TrialRecord> records(static_cast<size_t>(n_trials));
    if (mode == ExecutionMode::Serial) {
        for (int i = 0; i < n_trials; ++i)
            records[static_cast<size_t>(i)] =
                run_trial(scenario, ingredients, init_mode, base_seed + i, options);
        return records;
    }
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_trials; ++i)
        records[static_cast<size_t>(i)] =
            run_trial(scenario, ingredients, init_mode, base_seed + i, options);
    return records;
}

std::vector<RowRate> estimate_violation_rates(
    const std::vector<std::vector<std::vector<bool>>>& flags_per_record) {
    size_t n_rows = 0;
    for (const auto& rec : flags_per_record)
        for (const auto& step : rec) n_rows = std::max(n_rows, step.size());

    std::vector<RowRate> rates(n_rows);
    for (const auto& rec : flags_per_record) {
        for (const auto& step : rec) {
            for (size_t r = 0; r < step.size(); ++r) {
                ++rates[r].exposure;
                if (step[r]) ++rates[r].violations;
            }
        }
    }
    const double z = 1.959963985;
    for (auto& rate : rates) {
        if (rate.exposure == 0) continue;
        const double n = static_cast<double>(rate.exposure);
        const double p = static_cast<double>(rate.violations) / n;
        rate.rate = p;
        const double denom = 1.0 + z * z / n;
        const double center = (p + z * z / (2.0 * n)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
        rate.wilson_low = std::max(0.0, center - half);
        rate.wilson_high = std::min(1.0, center + half);
    }
    return rates;
}

MonteCarloSummary summarize(const Scenario& scenario, const std::vector<TrialRecord>& records,
                            double wall_seconds) {
    MonteCarloSummary summary;
    summary.n_trials = static_cast<int>(records.size());
    summary.wall_seconds = wall_seconds;

    std::vector<std::vector<std::vector<bool>>> state_flags, control_flags;
    double cost_sum = 0.0;
    for (const auto& rec : records) {
        if (rec.infeasible_at.has_value()) ++summary.infeasibility_count;
        if (rec.numerical_failure) ++summary.numerical_failures;
        summary.total_solver_calls += rec.solver_calls;
        cost_sum += rec.trajectory_cost;
        summary.max_cost = std::max(summary.max_cost, rec.trajectory_cost);
        state_flags.push_back(rec.state_violations);
        control_flags.push_back(rec.control_violations);
    }
    if (!records.empty()) summary.mean_cost = cost_sum / static_cast<double>(records.size());
    summary.state_rates = estimate_violation_rates(state_flags);
    summary.control_rates = estimate_violation_rates(control_flags);
    // Pad the rate tables to the scenario row counts even if nothing ran.
    summary.state_rates.resize(static_cast<size_t>(scenario.state_set.num_rows()));
    summary.control_rates.resize(static_cast<size_t>(scenario.control_set.num_rows()));
    return summary;
}

MonteCarloSummary run_monte_carlo(const Scenario& scenario,
                                  const terminal::TerminalIngredients* ingredients,
                                  smpc::InitializationMode init_mode, int n_trials,
                                  std::uint64_t base_seed, const smpc::SmpcOptions& options,
                                  ExecutionMode mode) {
    const auto start = std::chrono::steady_clock::now();
    auto records = run_trials(scenario, ingredients, init_mode, n_trials, base_seed, options, mode);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summarize(scenario, records, wall);
}

std::string trial_to_csv(const Scenario& scenario, const TrialRecord& record) {
    const int nx = scenario.schedule.front().nx();
    const int nu = scenario.schedule.front().nu();
    std::ostringstream out;
    out << "k";
    for (int i = 0; i < nx; ++i) out << ",x" << i;
    for (int i = 0; i < nu; ++i) out << ",u" << i;
    out << ",init_tag,feasible,stage_cost\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << "," << buf;
    };
    for (const auto& step : record.steps) {
        out << step.k;
        for (int i = 0; i < nx; ++i) put(step.x[i]);
        for (int i = 0; i < nu; ++i) put(step.u[i]);
        out << "," << step.init_tag << "," << (step.feasible ? 1 : 0);
        put(step.stage_cost);
        out << "\n";
    }
    return out.str();
}

}  // namespace cssmpc::sim
