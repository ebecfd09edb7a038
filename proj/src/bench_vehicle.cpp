#include "cssmpc/bench_vehicle.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cssmpc/lp.hpp"

namespace cssmpc::bench_vehicle {

void VehicleParams::check() const {
    if (lf + lr <= 0.0) throw std::invalid_argument("wheelbase must be positive");
    if (dt <= 0.0) throw std::invalid_argument("time step must be positive");
}

void ReferenceProfile::check_bounds(std::pair<double, double> nu_bounds,
                                    std::pair<double, double> rho_bounds) const {
    if (nu.size() != rho.size()) throw std::invalid_argument("profile length mismatch");
    for (double v : nu)
        if (v < nu_bounds.first - 1e-12 || v > nu_bounds.second + 1e-12)
            throw std::invalid_argument("profile speed outside hull bounds");
    for (double r : rho)
        if (r < rho_bounds.first - 1e-12 || r > rho_bounds.second + 1e-12)
            throw std::invalid_argument("profile curvature outside hull bounds");
}

SystemRealization linearize(const VehicleParams& params, double nu, double rho) {
    params.check();
    if (nu <= 0.0) throw std::invalid_argument("speed must be positive");
    const double wheelbase = params.lf + params.lr;
    const double dt = params.dt;

    SystemRealization sys;
    sys.A = MatrixXd::Identity(3, 3);
    sys.A(1, 0) = nu * dt / wheelbase;
    sys.A(2, 0) = params.lr * nu * dt / wheelbase;
    sys.A(2, 1) = nu * dt;
    sys.B = MatrixXd::Zero(3, 1);
    sys.B << dt, params.lr * dt / wheelbase, 0.0;
    sys.D = MatrixXd::Zero(3, 3);
    sys.D.diagonal() << params.theta_delta * dt, params.theta_psi * dt, params.theta_y * dt;
    sys.r = VectorXd::Zero(3);
    sys.r[1] = -rho * nu * dt;
    return sys;
}

ParameterHull build_hull(const VehicleParams& params, std::pair<double, double> nu_bounds,
                         std::pair<double, double> rho_bounds) {
    if (nu_bounds.first > nu_bounds.second || rho_bounds.first > rho_bounds.second)
        throw std::invalid_argument("hull bounds must be ordered");
    ParameterHull hull;
    hull.vertices = {linearize(params, nu_bounds.first, rho_bounds.first),
                     linearize(params, nu_bounds.second, rho_bounds.first),
                     linearize(params, nu_bounds.first, rho_bounds.second),
                     linearize(params, nu_bounds.second, rho_bounds.second)};
    return hull;
}

ReferenceProfile default_profile(int trial_length, int horizon) {
    const int length = trial_length + horizon;
    ReferenceProfile profile;
    profile.nu.resize(length);
    profile.rho.resize(length);
    for (int k = 0; k < length; ++k) {
        const double ramp = std::min(1.0, static_cast<double>(k) /
                                              std::max(1, trial_length - 1));
        profile.nu[static_cast<size_t>(k)] = 5.0 + 10.0 * ramp;
        double rho = 0.0;
        if (k >= 15 && k < 25) rho = 0.02;
        if (k >= 35 && k < 45) rho = -0.02;
        profile.rho[static_cast<size_t>(k)] = rho;
    }
    return profile;
}

sim::Scenario build_scenario(const VehicleParams& params, const ReferenceProfile& profile,
                             int trial_length, const ScenarioDefaults& defaults) {
    params.check();
    profile.check_bounds(defaults.nu_bounds, defaults.rho_bounds);
    if (profile.length() < trial_length + defaults.horizon - 1)
        throw std::invalid_argument("profile too short for the trial");

    sim::Scenario scenario;
    scenario.horizon = defaults.horizon;
    scenario.trial_length = trial_length;
    scenario.schedule.reserve(profile.length());
    for (int k = 0; k < profile.length(); ++k)
        scenario.schedule.push_back(
            linearize(params, profile.nu[static_cast<size_t>(k)],
                      profile.rho[static_cast<size_t>(k)]));

    const double angle = M_PI / 4.0;
    VectorXd lo(3), hi(3);
    lo << -angle, -angle, -2.0;
    hi << angle, angle, 2.0;
    scenario.state_set = Polytope::box(lo, hi);
    scenario.control_set = Polytope::interval(-1.0, 1.0);

    for (int i = 0; i < scenario.state_set.num_rows(); ++i) {
        ChanceRow row;
        row.normal = scenario.state_set.normals().row(i).transpose();
        row.offset = scenario.state_set.offsets()[i];
        row.risk = defaults.state_risk;
        scenario.chance.state_rows.push_back(std::move(row));
    }
    for (int i = 0; i < scenario.control_set.num_rows(); ++i) {
        ChanceRow row;
        row.normal = scenario.control_set.normals().row(i).transpose();
        row.offset = scenario.control_set.offsets()[i];
        row.risk = defaults.control_risk;
        scenario.chance.control_rows.push_back(std::move(row));
    }

    scenario.cost.Q = MatrixXd::Identity(3, 3);
    scenario.cost.R = MatrixXd::Constant(1, 1, defaults.control_weight);
    scenario.cost.goal = VectorXd::Zero(3);
    scenario.x0 = VectorXd::Zero(3);
    scenario.check();
    return scenario;
}

ParameterHull nominal_hull(const VehicleParams& params, const ReferenceProfile& profile) {
    const double mean_nu =
        std::accumulate(profile.nu.begin(), profile.nu.end(), 0.0) / profile.nu.size();
    const double mean_rho =
        std::accumulate(profile.rho.begin(), profile.rho.end(), 0.0) / profile.rho.size();
    ParameterHull hull;
    hull.vertices = {linearize(params, mean_nu, mean_rho)};
    return hull;
}

bool hull_membership(const ParameterHull& hull, const SystemRealization& sys, double tol) {
    hull.check_shapes();
    const int nv = static_cast<int>(hull.vertices.size());
    auto flatten = [](const SystemRealization& s) {
        VectorXd out(s.A.size() + s.B.size() + s.D.size() + s.r.size());
        int at = 0;
        auto put = [&](const MatrixXd& m) {
            for (int i = 0; i < m.rows(); ++i)
                for (int j = 0; j < m.cols(); ++j) out[at++] = m(i, j);
        };
        put(s.A);
        put(s.B);
        put(s.D);
        put(MatrixXd(s.r));
        return out;
    };

    const VectorXd target = flatten(sys);
    MatrixXd vertex_mat(target.size(), nv);
    for (int v = 0; v < nv; ++v) vertex_mat.col(v) = flatten(hull.vertices[static_cast<size_t>(v)]);

    // lambda >= 0, sum lambda = 1, |vertex_mat lambda - target| <= tol.
    const int entries = static_cast<int>(target.size());
    MatrixXd rows(2 * entries + 2 + nv, nv);
    VectorXd offsets(rows.rows());
    int w = 0;
    for (int e = 0; e < entries; ++e) {
        rows.row(w) = vertex_mat.row(e);
        offsets[w++] = target[e] + tol;
        rows.row(w) = -vertex_mat.row(e);
        offsets[w++] = -(target[e] - tol);
    }
    rows.row(w).setOnes();
    offsets[w++] = 1.0 + 1e-9;
    rows.row(w).setConstant(-1.0);
    offsets[w++] = -(1.0 - 1e-9);
    for (int v = 0; v < nv; ++v) {
        rows.row(w).setZero();
        rows(w, v) = -1.0;
        offsets[w++] = 0.0;
    }
    return lp::find_point(rows, offsets).has_value();
}

}  // namespace cssmpc::bench_vehicle
