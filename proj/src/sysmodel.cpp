#include "cssmpc/sysmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace cssmpc {

void SystemRealization::check_shapes() const {
    const int n = nx();
    if (A.cols() != n || B.rows() != n || D.rows() != n || r.size() != n)
        throw std::invalid_argument("system realization blocks have inconsistent shapes");
}

void ParameterHull::check_shapes() const {
    if (vertices.empty()) throw std::invalid_argument("parameter hull needs at least one vertex");
    for (const auto& v : vertices) {
        v.check_shapes();
        if (v.nx() != nx() || v.nu() != nu() || v.nw() != nw())
            throw std::invalid_argument("parameter hull vertices have mismatched shapes");
    }
}

GaussianBelief make_belief(const VectorXd& mean, const MatrixXd& cov) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("belief covariance shape mismatch");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::domain_error("belief covariance is not symmetric");
    MatrixXd sym = symmetrize(cov);
    const double lo = min_eigenvalue(sym);
    if (lo < -1e-8) throw std::domain_error("belief covariance is indefinite");
    if (lo < 0.0) sym = clamp_psd(sym);
    return GaussianBelief{mean, sym};
}

void StageCost::check() const {
    if (Q.rows() != Q.cols() || R.rows() != R.cols() || goal.size() != Q.rows())
        throw std::invalid_argument("stage cost shape mismatch");
    if (min_eigenvalue(Q) < -1e-10) throw std::invalid_argument("Q must be PSD");
    Eigen::LLT<MatrixXd> llt(symmetrize(R));
    if (llt.info() != Eigen::Success) throw std::invalid_argument("R must be PD");
}

void ChanceSpec::check(int nx, int nu) const {
    for (const auto& row : state_rows) {
        if (row.normal.size() != nx) throw std::invalid_argument("state chance row dimension");
        if (!(row.risk > 0.0 && row.risk <= 0.5))
            throw std::invalid_argument("state chance risk must lie in (0, 0.5]");
    }
    for (const auto& row : control_rows) {
        if (row.normal.size() != nu) throw std::invalid_argument("control chance row dimension");
        if (!(row.risk > 0.0 && row.risk <= 0.5))
            throw std::invalid_argument("control chance risk must lie in (0, 0.5]");
    }
}

PolicyMoments policy_moments(const GaussianBelief& belief, const VectorXd& v,
                             const MatrixXd& L) {
    if (L.cols() != belief.dim() || L.rows() != v.size())
        throw std::invalid_argument("policy gain shape mismatch");
    PolicyMoments out;
    out.u_mean = v;
    out.cross_cov = belief.cov * L.transpose();
    out.u_cov = L * belief.cov * L.transpose();
    return out;
}

GaussianBelief step_moments(const GaussianBelief& belief, const PolicyMoments& policy,
                            const SystemRealization& sys) {
    const MatrixXd& A = sys.A;
    const MatrixXd& B = sys.B;
    VectorXd mean = A * belief.mean + B * policy.u_mean + sys.r;
    MatrixXd cov = A * belief.cov * A.transpose() + A * policy.cross_cov * B.transpose() +
                   B * policy.cross_cov.transpose() * A.transpose() +
                   B * policy.u_cov * B.transpose() + sys.D * sys.D.transpose();
    cov = symmetrize(cov);
    const double lo = min_eigenvalue(cov);
    if (lo < -1e-8) throw std::domain_error("propagated covariance is indefinite");
    if (lo < 0.0) cov = clamp_psd(cov);
    return GaussianBelief{std::move(mean), std::move(cov)};
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    // Decorrelate nearby seeds before feeding the engine.
    const std::uint64_t mixed = splitmix64(s);
    engine_.seed(mixed);
}

double RngStream::uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

VectorXd RngStream::normal_vector(int n) {
    VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = normal();
    return out;
}

VectorXd sample_step(const VectorXd& x, const VectorXd& u, const SystemRealization& sys,
                     RngStream& rng) {
    return sys.A * x + sys.B * u + sys.D * rng.normal_vector(sys.nw()) + sys.r;
}

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("normal_quantile requires q in (0, 1)");

    // Acklam rational approximation, then two Newton refinements on Phi.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (q < p_low) {
        const double u = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    } else if (q <= 1.0 - p_low) {
        const double u = q - 0.5;
        const double t = u * u;
        x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
            (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - q));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }

    const double inv_sqrt_2pi = 0.3989422804014327;
    for (int i = 0; i < 2; ++i) {
        const double cdf = 0.5 * std::erfc(-x * M_SQRT1_2);
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
        if (pdf > 1e-300) x -= (cdf - q) / pdf;
    }
    return x;
}

}  // namespace cssmpc
