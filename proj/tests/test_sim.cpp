#include <doctest.h>

#include <random>

#include "cssmpc/sim.hpp"

using namespace cssmpc;
using namespace cssmpc::sim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SystemRealization scalar_system(double a, double b, double d) {
    SystemRealization sys;
    sys.A = MatrixXd::Constant(1, 1, a);
    sys.B = MatrixXd::Constant(1, 1, b);
    sys.D = MatrixXd::Constant(1, 1, d);
    sys.r = VectorXd::Zero(1);
    return sys;
}

ChanceSpec box_spec(double sb, double cb, double p) {
    ChanceSpec spec;
    for (double s : {1.0, -1.0}) {
        spec.state_rows.push_back({VectorXd::Constant(1, s), sb, p});
        spec.control_rows.push_back({VectorXd::Constant(1, s), cb, p});
    }
    return spec;
}

struct Fixture {
    Scenario scenario;
    ParameterHull hull;
    terminal::TerminalIngredients ingredients;
};

Fixture make_fixture(double noise, int trial_length, double x0 = 0.4) {
    Fixture f;
    f.hull.vertices = {scalar_system(0.85, 1.0, noise), scalar_system(0.95, 1.0, noise)};
    f.scenario.chance = box_spec(2.0, 1.0, 0.1);
    f.ingredients = terminal::synthesize(f.hull, f.scenario.chance);

    f.scenario.horizon = 3;
    f.scenario.trial_length = trial_length;
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int k = 0; k < trial_length + 3; ++k) {
        const double lam = uni(gen);
        f.scenario.schedule.push_back(scalar_system(0.85 * lam + 0.95 * (1 - lam), 1.0, noise));
    }
    f.scenario.state_set = Polytope::interval(-2.0, 2.0);
    f.scenario.control_set = Polytope::interval(-1.0, 1.0);
    f.scenario.cost.Q = MatrixXd::Identity(1, 1);
    f.scenario.cost.R = MatrixXd::Constant(1, 1, 0.5);
    f.scenario.cost.goal = VectorXd::Zero(1);
    f.scenario.x0 = VectorXd::Constant(1, x0);
    f.scenario.check();
    return f;
}

bool records_equal(const TrialRecord& a, const TrialRecord& b) {
    if (a.steps.size() != b.steps.size()) return false;
    for (size_t i = 0; i < a.steps.size(); ++i) {
        if (a.steps[i].x != b.steps[i].x) return false;
        if (a.steps[i].u != b.steps[i].u) return false;
        if (a.steps[i].init_tag != b.steps[i].init_tag) return false;
        if (a.steps[i].stage_cost != b.steps[i].stage_cost) return false;
    }
    return a.infeasible_at == b.infeasible_at && a.seed == b.seed;
}

}  // namespace

TEST_CASE("deterministic tracking has no violations and decaying cost") {
    auto f = make_fixture(0.0, 12);
    auto record = run_trial(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 3);
    REQUIRE(!record.infeasible_at.has_value());
    REQUIRE(!record.numerical_failure);
    REQUIRE(record.steps.size() == 12);
    for (const auto& flags : record.state_violations)
        for (bool v : flags) CHECK(!v);
    for (const auto& flags : record.control_violations)
        for (bool v : flags) CHECK(!v);
    for (size_t k = 1; k + 1 < record.steps.size(); ++k)
        CHECK(record.steps[k + 1].stage_cost <= record.steps[k].stage_cost + 1e-9);
}

TEST_CASE("same seed replays bit-identically") {
    auto f = make_fixture(0.05, 8);
    auto a = run_trial(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 11);
    auto b = run_trial(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 11);
    CHECK(records_equal(a, b));
    auto c = run_trial(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 12);
    CHECK(!records_equal(a, c));
}

TEST_CASE("openmp runner reproduces the serial reference") {
    auto f = make_fixture(0.05, 6);
    auto serial = run_trials(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 6, 40,
                             {}, ExecutionMode::Serial);
    auto parallel = run_trials(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 6,
                               40, {}, ExecutionMode::OpenMP);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) CHECK(records_equal(serial[i], parallel[i]));
}

TEST_CASE("violation rate estimator") {
    SUBCASE("no violations gives a tight upper bound") {
        std::vector<std::vector<std::vector<bool>>> flags(1);
        flags[0].assign(1000, std::vector<bool>(1, false));
        auto rates = estimate_violation_rates(flags);
        REQUIRE(rates.size() == 1);
        CHECK(rates[0].rate == 0.0);
        CHECK(rates[0].wilson_high < 0.004);
    }
    SUBCASE("all violating gives rate one") {
        std::vector<std::vector<std::vector<bool>>> flags(1);
        flags[0].assign(50, std::vector<bool>(1, true));
        auto rates = estimate_violation_rates(flags);
        CHECK(rates[0].rate == 1.0);
        CHECK(rates[0].wilson_low > 0.9);
    }
}

TEST_CASE("single-trial summary equals the trial") {
    auto f = make_fixture(0.05, 6);
    auto record = run_trial(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 9);
    auto summary = run_monte_carlo(f.scenario, &f.ingredients, smpc::InitializationMode::Static,
                                   1, 9, {}, ExecutionMode::Serial);
    CHECK(summary.n_trials == 1);
    CHECK(summary.infeasibility_count == (record.infeasible_at ? 1 : 0));
    CHECK(summary.mean_cost == doctest::Approx(record.trajectory_cost));
    CHECK(summary.max_cost == doctest::Approx(record.trajectory_cost));
    CHECK(summary.total_solver_calls == record.solver_calls);
}

TEST_CASE("ensemble moments track the deterministic recursion") {
    // Static initialization: the solver sequence does not depend on the
    // noise, so the closed loop is an affine time-varying policy and the
    // state ensemble must match the propagated moments.
    auto f = make_fixture(0.08, 10);
    const int n_trials = 60;
    auto records = run_trials(f.scenario, &f.ingredients, smpc::InitializationMode::Static,
                              n_trials, 100, {}, ExecutionMode::OpenMP);

    // Deterministic moment recursion alongside a reference solve sequence.
    auto cost_window = f.scenario.cost_window();
    GaussianBelief belief = make_belief(f.scenario.x0, MatrixXd::Zero(1, 1));
    for (int k = 0; k < f.scenario.trial_length; ++k) {
        // Ensemble statistics at step k.
        double mean_acc = 0.0, sq_acc = 0.0;
        for (const auto& rec : records) {
            REQUIRE(!rec.infeasible_at.has_value());
            mean_acc += rec.steps[k].x[0];
            sq_acc += rec.steps[k].x[0] * rec.steps[k].x[0];
        }
        const double mean = mean_acc / n_trials;
        const double var = sq_acc / n_trials - mean * mean;
        const double sd = std::sqrt(belief.cov(0, 0) / n_trials + 1e-12);
        CHECK(std::abs(mean - belief.mean[0]) < 5.0 * sd + 1e-9);
        if (belief.cov(0, 0) > 1e-12) {
            const double var_sd = belief.cov(0, 0) * std::sqrt(2.0 / n_trials);
            CHECK(std::abs(var - belief.cov(0, 0)) < 5.0 * var_sd);
        }

        auto window = f.scenario.window_at(k);
        auto sol = smpc::solve_smpc(belief, window, cost_window, f.scenario.chance,
                                    &f.ingredients, {});
        REQUIRE(sol.optimal());
        auto pm = policy_moments(belief, sol.feedforward(0), sol.gains.block(0, 0));
        belief = step_moments(belief, pm, f.scenario.schedule[k]);
    }
}

TEST_CASE("trial csv schema") {
    auto f = make_fixture(0.02, 5);
    auto record = run_trial(f.scenario, &f.ingredients, smpc::InitializationMode::Static, 2);
    auto csv = trial_to_csv(f.scenario, record);
    CHECK(csv.rfind("k,x0,u0,init_tag,feasible,stage_cost\n", 0) == 0);
    // One header plus one line per step.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(record.steps.size()));
    CHECK(csv.find("start") != std::string::npos);
    CHECK(csv.find("static") != std::string::npos);
}

TEST_CASE("robust ingredients keep every trial feasible") {
    auto f = make_fixture(0.05, 10);
    auto summary = run_monte_carlo(f.scenario, &f.ingredients, smpc::InitializationMode::Static,
                                   20, 500, {}, ExecutionMode::OpenMP);
    CHECK(summary.infeasibility_count == 0);
    CHECK(summary.numerical_failures == 0);
}
