#pragma once

#include <utility>
#include <vector>

#include "cssmpc/sim.hpp"
#include "cssmpc/sysmodel.hpp"

namespace cssmpc::bench_vehicle {

/// Kinematic-bicycle lateral model parameters (Euler discretization).
/// State x = [steering angle, heading error, lateral error], control is the
/// steering rate.
struct VehicleParams {
    double lf = 2.4;
    double lr = 2.4;
    double dt = 0.1;
    double theta_delta = 0.1;
    double theta_psi = 0.1;
    double theta_y = 0.1;

    void check() const;
};

/// Speed/curvature reference along the trial.
struct ReferenceProfile {
    std::vector<double> nu;
    std::vector<double> rho;

    int length() const { return static_cast<int>(nu.size()); }
    void check_bounds(std::pair<double, double> nu_bounds,
                      std::pair<double, double> rho_bounds) const;
};

/// Linearized lateral dynamics at one (speed, curvature) point.
SystemRealization linearize(const VehicleParams& params, double nu, double rho);

/// Four-corner hull over the speed/curvature box.
ParameterHull build_hull(const VehicleParams& params, std::pair<double, double> nu_bounds,
                         std::pair<double, double> rho_bounds);

struct ScenarioDefaults {
    std::pair<double, double> nu_bounds{1.0, 20.0};
    std::pair<double, double> rho_bounds{-0.025, 0.025};
    double state_risk = 0.025;
    double control_risk = 0.05;
    double control_weight = 100.0;
    int horizon = 4;
};

/// Speed ramp 5 -> 15 with a +-0.02 curvature pulse, long enough to cover
/// trial_length + horizon - 1 stages.
ReferenceProfile default_profile(int trial_length, int horizon);

/// Scenario with the benchmark constraint boxes, risks, and cost.
sim::Scenario build_scenario(const VehicleParams& params, const ReferenceProfile& profile,
                             int trial_length, const ScenarioDefaults& defaults = {});

/// Single-vertex hull at the schedule-mean speed and curvature, for the
/// nominal-ingredients ablation.
ParameterHull nominal_hull(const VehicleParams& params, const ReferenceProfile& profile);

/// Convex-combination membership of a realization in the hull, as an LP
/// over the vertex weights (tolerance on entry mismatch).
bool hull_membership(const ParameterHull& hull, const SystemRealization& sys, double tol = 1e-7);

}  // namespace cssmpc::bench_vehicle
