#include <benchmark/benchmark.h>

#include "cssmpc/bench_vehicle.hpp"
#include "cssmpc/sim.hpp"

// Serial reference vs OpenMP trial runner on a reduced closed-loop study.
// The scalar fixture keeps per-solve cost small so the benchmark isolates
// the trial-level parallelism.

namespace {

using namespace cssmpc;

struct Fixture {
    sim::Scenario scenario;
    terminal::TerminalIngredients ingredients;
};

SystemRealization scalar_system(double a, double d) {
    SystemRealization sys;
    sys.A = MatrixXd::Constant(1, 1, a);
    sys.B = MatrixXd::Constant(1, 1, 1.0);
    sys.D = MatrixXd::Constant(1, 1, d);
    sys.r = VectorXd::Zero(1);
    return sys;
}

const Fixture& fixture() {
    static const Fixture value = [] {
        Fixture f;
        ParameterHull hull{{scalar_system(0.85, 0.05), scalar_system(0.95, 0.05)}};
        for (double s : {1.0, -1.0}) {
            f.scenario.chance.state_rows.push_back({VectorXd::Constant(1, s), 2.0, 0.1});
            f.scenario.chance.control_rows.push_back({VectorXd::Constant(1, s), 1.0, 0.1});
        }
        f.ingredients = terminal::synthesize(hull, f.scenario.chance);
        f.scenario.horizon = 3;
        f.scenario.trial_length = 30;
        for (int k = 0; k < 33; ++k)
            f.scenario.schedule.push_back(scalar_system(0.85 + 0.1 * ((k * 7) % 11) / 10.0, 0.05));
        f.scenario.state_set = Polytope::interval(-2.0, 2.0);
        f.scenario.control_set = Polytope::interval(-1.0, 1.0);
        f.scenario.cost.Q = MatrixXd::Identity(1, 1);
        f.scenario.cost.R = MatrixXd::Constant(1, 1, 0.5);
        f.scenario.cost.goal = VectorXd::Zero(1);
        f.scenario.x0 = VectorXd::Constant(1, 0.4);
        return f;
    }();
    return value;
}

void run_mode(benchmark::State& state, sim::ExecutionMode mode) {
    const auto& f = fixture();
    const int trials = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto records = sim::run_trials(f.scenario, &f.ingredients,
                                       smpc::InitializationMode::Static, trials, 1234, {}, mode);
        benchmark::DoNotOptimize(records);
    }
    state.SetItemsProcessed(state.iterations() * trials);
}

void BM_montecarlo_serial(benchmark::State& state) {
    run_mode(state, sim::ExecutionMode::Serial);
}

void BM_montecarlo_openmp(benchmark::State& state) {
    run_mode(state, sim::ExecutionMode::OpenMP);
}

}  // namespace

BENCHMARK(BM_montecarlo_serial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_montecarlo_openmp)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
