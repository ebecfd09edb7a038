#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cssmpc/linalg.hpp"

namespace cssmpc {

/// One realization [A B D r] of the time-varying system
/// x+ = A x + B u + D w + r with w ~ N(0, I).
struct SystemRealization {
    MatrixXd A;
    MatrixXd B;
    MatrixXd D;
    VectorXd r;

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
    int nw() const { return static_cast<int>(D.cols()); }

    void check_shapes() const;
};

/// Vertex representation of the polytopic parameter set
/// co{S^1, ..., S^Np}.
struct ParameterHull {
    std::vector<SystemRealization> vertices;

    int nx() const { return vertices.front().nx(); }
    int nu() const { return vertices.front().nu(); }
    int nw() const { return vertices.front().nw(); }

    void check_shapes() const;
};

/// First two moments of the state distribution.
struct GaussianBelief {
    VectorXd mean;
    MatrixXd cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Validates symmetry (1e-10) and clamps eigenvalues in [-1e-8, 0) to zero.
/// Throws std::domain_error when the covariance is asymmetric or indefinite
/// beyond tolerance.
GaussianBelief make_belief(const VectorXd& mean, const MatrixXd& cov);

struct StageCost {
    MatrixXd Q;     // state weight, PSD
    MatrixXd R;     // control weight, PD
    VectorXd goal;  // tracking target

    void check() const;  // throws if Q not PSD or R not PD
};

struct ChanceRow {
    VectorXd normal;
    double offset = 0.0;
    double risk = 0.0;  // max violation probability, in (0, 0.5]
};

struct ChanceSpec {
    std::vector<ChanceRow> state_rows;
    std::vector<ChanceRow> control_rows;

    void check(int nx, int nu) const;
};

/// Moments of the control under u = v + L (x - mean):
/// u_mean = v, cross_cov = cov L', u_cov = L cov L'.
struct PolicyMoments {
    VectorXd u_mean;
    MatrixXd cross_cov;  // Cov(x, u)
    MatrixXd u_cov;      // Cov(u)
};

PolicyMoments policy_moments(const GaussianBelief& belief, const VectorXd& v,
                             const MatrixXd& L);

/// One-step moment propagation:
///   mean+ = A mean + B u_mean + r
///   cov+  = A cov A' + A cross B' + B cross' A' + B u_cov B' + D D'
/// The result is symmetrized; eigenvalues in [-1e-8, 0) are clamped and
/// anything below -1e-8 throws.
GaussianBelief step_moments(const GaussianBelief& belief, const PolicyMoments& policy,
                            const SystemRealization& sys);

/// Deterministic per-trial random stream: splitmix64-mixed mt19937_64 with
/// an explicit Box-Muller transform, so replay is stable across platforms.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    double normal();
    VectorXd normal_vector(int n);
    double uniform();  // in [0, 1)

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Draws x+ = A x + B u + D w + r with w ~ N(0, I).
VectorXd sample_step(const VectorXd& x, const VectorXd& u, const SystemRealization& sys,
                     RngStream& rng);

/// Standard normal quantile, |error| < 1e-9 on (0, 1).
double normal_quantile(double q);

}  // namespace cssmpc
