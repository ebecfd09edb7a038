#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "cssmpc/conic.hpp"

namespace cssmpc::conic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nesterov-Todd scaling and Jordan-algebra operations for one cone block.
struct ConeWork {
    ConeKind kind;
    int order = 0;   // PSD matrix order
    int offset = 0;  // start row in the stacked s/z vectors
    int rows = 0;

    // Scaling state.
    VectorXd w;            // nonnegative: w = sqrt(s/z)
    double eta = 1.0;      // second order
    VectorXd wbar;         // second order
    MatrixXd R, Rinv;      // psd
    VectorXd sigma;        // psd: diagonal of the scaled point
    VectorXd lam;          // scaled point lambda = W z = W^{-T} s

    void identity_scaling() {
        switch (kind) {
            case ConeKind::Nonnegative:
                w = VectorXd::Ones(rows);
                break;
            case ConeKind::SecondOrder:
                eta = 1.0;
                wbar = VectorXd::Zero(rows);
                wbar[0] = 1.0;
                break;
            case ConeKind::Psd:
                R = MatrixXd::Identity(order, order);
                Rinv = R;
                sigma = VectorXd::Ones(order);
                break;
            default:
                break;
        }
        lam = identity_vec();
    }

    bool compute(const VectorXd& s, const VectorXd& z) {
        switch (kind) {
            case ConeKind::Nonnegative: {
                if ((s.array() <= 0.0).any() || (z.array() <= 0.0).any()) return false;
                w = (s.array() / z.array()).sqrt();
                lam = (s.array() * z.array()).sqrt();
                return true;
            }
            case ConeKind::SecondOrder: {
                const double js = s[0] * s[0] - s.tail(rows - 1).squaredNorm();
                const double jz = z[0] * z[0] - z.tail(rows - 1).squaredNorm();
                if (js <= 0.0 || jz <= 0.0 || s[0] <= 0.0 || z[0] <= 0.0) return false;
                VectorXd sb = s / std::sqrt(js);
                VectorXd zb = z / std::sqrt(jz);
                const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
                if (!(gamma > 0.0)) return false;
                VectorXd w(rows);
                w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                w.tail(rows - 1) = (sb.tail(rows - 1) - zb.tail(rows - 1)) / (2.0 * gamma);
                // Hyperbolic Householder vector: W = eta (2 v v' - J).
                wbar = w;
                wbar[0] += 1.0;
                wbar /= std::sqrt(2.0 * (1.0 + w[0]));
                eta = std::pow(js / jz, 0.25);
                lam = apply_w(z);
                return true;
            }
            case ConeKind::Psd: {
                const MatrixXd S = smat(s, order);
                const MatrixXd Z = smat(z, order);
                Eigen::LLT<MatrixXd> llt_s(S);
                Eigen::LLT<MatrixXd> llt_z(Z);
                if (llt_s.info() != Eigen::Success || llt_z.info() != Eigen::Success)
                    return false;
                const MatrixXd Ls = llt_s.matrixL();
                const MatrixXd Lz = llt_z.matrixL();
                Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls,
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
                sigma = svd.singularValues();
                if ((sigma.array() <= 0.0).any()) return false;
                const VectorXd inv_sqrt = sigma.cwiseSqrt().cwiseInverse();
                R = Ls * svd.matrixV() * inv_sqrt.asDiagonal();
                Rinv = inv_sqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
                lam = svec(MatrixXd(sigma.asDiagonal()));
                return true;
            }
            default:
                return false;
        }
    }

    // W u (symmetric for nonneg/soc; psd uses R' mat(u) R).
    VectorXd apply_w(const VectorXd& u) const {
        switch (kind) {
            case ConeKind::Nonnegative:
                return w.cwiseProduct(u);
            case ConeKind::SecondOrder: {
                const double alpha = wbar[0] * u[0] + wbar.tail(rows - 1).dot(u.tail(rows - 1));
                VectorXd out(rows);
                out[0] = eta * (2.0 * wbar[0] * alpha - u[0]);
                out.tail(rows - 1) = eta * (2.0 * alpha * wbar.tail(rows - 1) + u.tail(rows - 1));
                return out;
            }
            case ConeKind::Psd:
                return svec(R.transpose() * smat(u, order) * R);
            default:
                return u;
        }
    }

    VectorXd apply_wt(const VectorXd& u) const {
        if (kind == ConeKind::Psd) return svec(R * smat(u, order) * R.transpose());
        return apply_w(u);
    }

    VectorXd apply_winv(const VectorXd& u) const {
        switch (kind) {
            case ConeKind::Nonnegative:
                return u.cwiseQuotient(w);
            case ConeKind::SecondOrder: {
                const double beta = wbar[0] * u[0] - wbar.tail(rows - 1).dot(u.tail(rows - 1));
                VectorXd out(rows);
                out[0] = (2.0 * wbar[0] * beta - u[0]) / eta;
                out.tail(rows - 1) = (-2.0 * beta * wbar.tail(rows - 1) + u.tail(rows - 1)) / eta;
                return out;
            }
            case ConeKind::Psd:
                return svec(Rinv.transpose() * smat(u, order) * Rinv);
            default:
                return u;
        }
    }

    VectorXd apply_winvt(const VectorXd& u) const {
        if (kind == ConeKind::Psd) return svec(Rinv * smat(u, order) * Rinv.transpose());
        return apply_winv(u);
    }

    VectorXd jordan(const VectorXd& u, const VectorXd& v) const {
        switch (kind) {
            case ConeKind::Nonnegative:
                return u.cwiseProduct(v);
            case ConeKind::SecondOrder: {
                VectorXd out(rows);
                out[0] = u.dot(v);
                out.tail(rows - 1) = u[0] * v.tail(rows - 1) + v[0] * u.tail(rows - 1);
                return out;
            }
            case ConeKind::Psd: {
                const MatrixXd U = smat(u, order);
                const MatrixXd V = smat(v, order);
                return svec(0.5 * (U * V + V * U));
            }
            default:
                return u;
        }
    }

    // Solve lam o x = d.
    VectorXd lam_solve(const VectorXd& d) const {
        switch (kind) {
            case ConeKind::Nonnegative:
                return d.cwiseQuotient(lam);
            case ConeKind::SecondOrder: {
                const double det = lam[0] * lam[0] - lam.tail(rows - 1).squaredNorm();
                VectorXd out(rows);
                out[0] = (lam[0] * d[0] - lam.tail(rows - 1).dot(d.tail(rows - 1))) / det;
                out.tail(rows - 1) = (d.tail(rows - 1) - out[0] * lam.tail(rows - 1)) / lam[0];
                return out;
            }
            case ConeKind::Psd: {
                const MatrixXd D = smat(d, order);
                MatrixXd X(order, order);
                for (int i = 0; i < order; ++i)
                    for (int j = 0; j < order; ++j) X(i, j) = 2.0 * D(i, j) / (sigma[i] + sigma[j]);
                return svec(X);
            }
            default:
                return d;
        }
    }

    VectorXd identity_vec() const {
        switch (kind) {
            case ConeKind::Nonnegative:
                return VectorXd::Ones(rows);
            case ConeKind::SecondOrder: {
                VectorXd e = VectorXd::Zero(rows);
                e[0] = 1.0;
                return e;
            }
            case ConeKind::Psd:
                return svec(MatrixXd::Identity(order, order));
            default:
                return VectorXd::Zero(rows);
        }
    }

    double degree() const {
        switch (kind) {
            case ConeKind::Nonnegative: return rows;
            case ConeKind::SecondOrder: return 1.0;
            case ConeKind::Psd: return order;
            default: return 0.0;
        }
    }

    double eig_min(const VectorXd& u) const {
        switch (kind) {
            case ConeKind::Nonnegative:
                return u.minCoeff();
            case ConeKind::SecondOrder:
                return u[0] - u.tail(rows - 1).norm();
            case ConeKind::Psd:
                return min_eigenvalue(smat(u, order));
            default:
                return 0.0;
        }
    }

    // sup {alpha >= 0 : lam + alpha * du in cone}.
    double step_bound(const VectorXd& du) const {
        switch (kind) {
            case ConeKind::Nonnegative: {
                double bound = kInf;
                for (int i = 0; i < rows; ++i)
                    if (du[i] < 0.0) bound = std::min(bound, -lam[i] / du[i]);
                return bound;
            }
            case ConeKind::SecondOrder: {
                const double a = du[0] * du[0] - du.tail(rows - 1).squaredNorm();
                const double b =
                    2.0 * (lam[0] * du[0] - lam.tail(rows - 1).dot(du.tail(rows - 1)));
                const double c = lam[0] * lam[0] - lam.tail(rows - 1).squaredNorm();
                double bound = kInf;
                if (du[0] < 0.0) bound = std::min(bound, -lam[0] / du[0]);
                if (std::abs(a) < 1e-300) {
                    if (b < 0.0) bound = std::min(bound, -c / b);
                    return bound;
                }
                const double disc = b * b - 4.0 * a * c;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
                    double r1 = q / a;
                    double r2 = (std::abs(q) > 1e-300) ? c / q : kInf;
                    if (r1 > r2) std::swap(r1, r2);
                    if (r1 > 0.0)
                        bound = std::min(bound, r1);
                    else if (r2 > 0.0)
                        bound = std::min(bound, r2);
                }
                return bound;
            }
            case ConeKind::Psd: {
                const VectorXd inv_sqrt = sigma.cwiseSqrt().cwiseInverse();
                const MatrixXd B =
                    inv_sqrt.asDiagonal() * smat(du, order) * inv_sqrt.asDiagonal();
                const double m = min_eigenvalue(B);
                return m >= -1e-300 ? kInf : -1.0 / m;
            }
            default:
                return kInf;
        }
    }
};

struct StackedCones {
    std::vector<ConeWork> blocks;
    int total_rows = 0;
    double total_degree = 0.0;

    template <typename F>
    VectorXd map1(const VectorXd& u, F&& f) const {
        VectorXd out(total_rows);
        for (const auto& b : blocks)
            out.segment(b.offset, b.rows) = f(b, u.segment(b.offset, b.rows));
        return out;
    }

    VectorXd W(const VectorXd& u) const {
        return map1(u, [](const ConeWork& b, const VectorXd& v) { return b.apply_w(v); });
    }
    VectorXd Wt(const VectorXd& u) const {
        return map1(u, [](const ConeWork& b, const VectorXd& v) { return b.apply_wt(v); });
    }
    VectorXd Winv(const VectorXd& u) const {
        return map1(u, [](const ConeWork& b, const VectorXd& v) { return b.apply_winv(v); });
    }
    VectorXd Winvt(const VectorXd& u) const {
        return map1(u, [](const ConeWork& b, const VectorXd& v) { return b.apply_winvt(v); });
    }
    VectorXd lam_solve(const VectorXd& u) const {
        return map1(u, [](const ConeWork& b, const VectorXd& v) { return b.lam_solve(v); });
    }
    VectorXd lambda() const {
        VectorXd out(total_rows);
        for (const auto& b : blocks) out.segment(b.offset, b.rows) = b.lam;
        return out;
    }
    VectorXd identity_vec() const {
        VectorXd out(total_rows);
        for (const auto& b : blocks) out.segment(b.offset, b.rows) = b.identity_vec();
        return out;
    }
    VectorXd jordan(const VectorXd& u, const VectorXd& v) const {
        VectorXd out(total_rows);
        for (const auto& b : blocks)
            out.segment(b.offset, b.rows) =
                b.jordan(u.segment(b.offset, b.rows), v.segment(b.offset, b.rows));
        return out;
    }
    double step_bound(const VectorXd& du) const {
        double bound = kInf;
        for (const auto& b : blocks)
            bound = std::min(bound, b.step_bound(du.segment(b.offset, b.rows)));
        return bound;
    }
    double eig_min(const VectorXd& u) const {
        double m = kInf;
        for (const auto& b : blocks) m = std::min(m, b.eig_min(u.segment(b.offset, b.rows)));
        return m;
    }
    bool compute(const VectorXd& s, const VectorXd& z) {
        for (auto& b : blocks)
            if (!b.compute(s.segment(b.offset, b.rows), z.segment(b.offset, b.rows)))
                return false;
        return true;
    }
    void identity_scaling() {
        for (auto& b : blocks) b.identity_scaling();
    }
};

// Reduced KKT solve for
//   A' uy + G' uz = bx,   A ux = by,   G ux - W'W uz = bz.
class KktSolver {
public:
    KktSolver(const MatrixXd& A, const MatrixXd& G, const StackedCones& cones)
        : A_(A), G_(G), cones_(cones), n_(static_cast<int>(G.cols())),
          p_(static_cast<int>(A.rows())) {}

    bool factor() {
        ghat_.resize(G_.rows(), n_);
        for (int j = 0; j < n_; ++j) ghat_.col(j) = cones_.Winvt(G_.col(j));
        MatrixXd H = ghat_.transpose() * ghat_;
        const double delta = 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
        MatrixXd kkt(n_ + p_, n_ + p_);
        kkt.topLeftCorner(n_, n_) = H + delta * MatrixXd::Identity(n_, n_);
        if (p_ > 0) {
            kkt.topRightCorner(n_, p_) = A_.transpose();
            kkt.bottomLeftCorner(p_, n_) = A_;
            kkt.bottomRightCorner(p_, p_) = -delta * MatrixXd::Identity(p_, p_);
        }
        lu_.compute(kkt);
        return kkt.allFinite();
    }

    void set_refine_rounds(int rounds) { refine_rounds_ = rounds; }

    void solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz, VectorXd& ux,
               VectorXd& uy, VectorXd& uz) const {
        const int refine = refine_rounds_;
        raw_solve(bx, by, bz, ux, uy, uz);
        for (int round = 0; round < refine; ++round) {
            VectorXd r1 = bx - (A_.transpose() * uy + G_.transpose() * uz);
            VectorXd r2 = by - A_ * ux;
            VectorXd r3 = bz - (G_ * ux - cones_.Wt(cones_.W(uz)));
            VectorXd cx, cy, cz;
            raw_solve(r1, r2, r3, cx, cy, cz);
            ux += cx;
            uy += cy;
            uz += cz;
        }
    }

private:
    void raw_solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz, VectorXd& ux,
                   VectorXd& uy, VectorXd& uz) const {
        const VectorXd bz_hat = cones_.Winvt(bz);
        VectorXd rhs(n_ + p_);
        rhs.head(n_) = bx + ghat_.transpose() * bz_hat;
        rhs.tail(p_) = by;
        VectorXd sol = lu_.solve(rhs);
        ux = sol.head(n_);
        uy = sol.tail(p_);
        uz = cones_.Winv(ghat_ * ux - bz_hat);
    }

    const MatrixXd& A_;
    const MatrixXd& G_;
    const StackedCones& cones_;
    int n_, p_;
    int refine_rounds_ = 2;
    MatrixXd ghat_;
    Eigen::PartialPivLU<MatrixXd> lu_;
};

// Pure equality-constrained linear objective (no inequality cones).
SolveOutcome solve_equality_only(const VectorXd& c, const MatrixXd& A, const VectorXd& b) {
    SolveOutcome out;
    if (A.rows() == 0) {
        if (c.norm() < 1e-14) {
            out.status = SolveStatus::Optimal;
            out.primal = VectorXd::Zero(c.size());
            out.objective = 0.0;
        } else {
            out.status = SolveStatus::Unbounded;
        }
        return out;
    }
    const auto qr = A.completeOrthogonalDecomposition();
    VectorXd x0 = qr.solve(b);
    if ((A * x0 - b).norm() > 1e-8 * (1.0 + b.norm())) {
        out.status = SolveStatus::Infeasible;
        return out;
    }
    // Bounded iff the objective has no component in the nullspace of A.
    const MatrixXd At = A.transpose();
    VectorXd residual = c - At * At.completeOrthogonalDecomposition().solve(c);
    if (residual.norm() > 1e-10 * (1.0 + c.norm())) {
        out.status = SolveStatus::Unbounded;
        return out;
    }
    out.status = SolveStatus::Optimal;
    out.primal = x0;
    out.objective = c.dot(x0);
    return out;
}

}  // namespace

SolveOutcome solve(const ConicProgram& program, const SolveSettings& settings) {
    SolveOutcome out;
    const int n = program.n_vars();
    const VectorXd& c = program.objective();

    // Split zero blocks into equalities, everything else into cone rows.
    int eq_rows = 0, cone_rows = 0;
    for (const auto& blk : program.blocks())
        (blk.kind == ConeKind::Zero ? eq_rows : cone_rows) += blk.rows();

    MatrixXd A(eq_rows, n);
    VectorXd b(eq_rows);
    MatrixXd G(cone_rows, n);
    VectorXd h(cone_rows);
    StackedCones cones;
    int at = 0, gt = 0;
    for (const auto& blk : program.blocks()) {
        if (blk.kind == ConeKind::Zero) {
            A.middleRows(at, blk.rows()) = blk.coeffs;
            b.segment(at, blk.rows()) = -blk.constants;
            at += blk.rows();
        } else {
            G.middleRows(gt, blk.rows()) = -blk.coeffs;
            h.segment(gt, blk.rows()) = blk.constants;
            ConeWork work;
            work.kind = blk.kind;
            work.order = blk.order;
            work.offset = gt;
            work.rows = blk.rows();
            cones.blocks.push_back(std::move(work));
            gt += blk.rows();
        }
    }
    cones.total_rows = cone_rows;
    for (const auto& blk : cones.blocks) cones.total_degree += blk.degree();

    if (cone_rows == 0) return solve_equality_only(c, A, b);

    // Block-level equilibration: per-row scaling on nonnegative/zero rows,
    // one uniform factor per second-order or PSD block, and a uniform
    // objective scale. Row scaling keeps cones invariant and reins in the
    // rounding-noise floor of badly scaled inputs.
    for (const auto& blk : cones.blocks) {
        if (blk.kind == ConeKind::Nonnegative) {
            for (int r = blk.offset; r < blk.offset + blk.rows; ++r) {
                const double mag =
                    std::max(G.row(r).cwiseAbs().maxCoeff(), std::abs(h[r]));
                const double phi = 1.0 / std::max(1.0, mag);
                G.row(r) *= phi;
                h[r] *= phi;
            }
        } else {
            double mag = 0.0;
            for (int r = blk.offset; r < blk.offset + blk.rows; ++r)
                mag = std::max({mag, G.row(r).cwiseAbs().maxCoeff(), std::abs(h[r])});
            const double phi = 1.0 / std::max(1.0, mag);
            G.middleRows(blk.offset, blk.rows) *= phi;
            h.segment(blk.offset, blk.rows) *= phi;
        }
    }
    for (int r = 0; r < eq_rows; ++r) {
        const double mag = std::max(A.row(r).cwiseAbs().maxCoeff(), std::abs(b[r]));
        const double phi = 1.0 / std::max(1.0, mag);
        A.row(r) *= phi;
        b[r] *= phi;
    }
    const double c_scale =
        1.0 / std::max(1.0, c.size() > 0 ? c.cwiseAbs().maxCoeff() : 1.0);
    const VectorXd c_work = c * c_scale;

    const double resx0 = std::max(1.0, c_work.norm());
    const double resy0 = std::max(1.0, b.norm());
    const double resz0 = std::max(1.0, h.norm());

    KktSolver kkt(A, G, cones);
    cones.identity_scaling();
    if (!kkt.factor()) {
        out.status = SolveStatus::NumericalFailure;
        return out;
    }

    // Initial point: least-norm primal/dual shifts into the cone interior.
    VectorXd x, y, z, s;
    {
        VectorXd ux, uy, uz;
        kkt.solve(VectorXd::Zero(n), b, h, ux, uy, uz);
        x = ux;
        s = -uz;
        const double shift = -cones.eig_min(s);
        if (shift >= 0.0) s += (1.0 + shift) * cones.identity_vec();

        kkt.solve(-c_work, VectorXd::Zero(eq_rows), VectorXd::Zero(cone_rows), ux, uy, uz);
        y = uy;
        z = uz;
        const double dshift = -cones.eig_min(z);
        if (dshift >= 0.0) z += (1.0 + dshift) * cones.identity_vec();
    }
    double tau = 1.0, kappa = 1.0;

    // Best iterate seen, for honest classification when the scalings break
    // down before the convergence test fires.
    double best_merit = kInf;
    VectorXd best_x;
    double best_pcost = 0.0;
    SolverStats best_stats;

    const int max_iter = settings.max_iter;
    for (int iter = 0;; ++iter) {
        const VectorXd rx = A.transpose() * y + G.transpose() * z + c_work * tau;
        const VectorXd ry = A * x - b * tau;
        const VectorXd rz = G * x + s - h * tau;
        const double rt = kappa + c_work.dot(x) + b.dot(y) + h.dot(z);

        const double pcost = c_work.dot(x) / tau;
        const double dcost = -(b.dot(y) + h.dot(z)) / tau;
        const double gap = s.dot(z) / (tau * tau);
        const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
        const double dres = rx.norm() / resx0 / tau;
        const double relgap = gap / std::max(1.0, std::abs(pcost));

        out.stats.iterations = iter;
        out.stats.primal_residual = pres;
        out.stats.dual_residual = dres;
        out.stats.gap = relgap;

        if (pres <= settings.feas_tol && dres <= settings.feas_tol &&
            (relgap <= settings.rel_gap_tol || gap <= settings.rel_gap_tol)) {
            out.status = SolveStatus::Optimal;
            out.primal = x / tau;
            out.objective = pcost / c_scale;
            return out;
        }
        const double merit = std::max({pres, dres, std::min(relgap, gap)});
        if (merit < best_merit) {
            best_merit = merit;
            best_x = x / tau;
            best_pcost = pcost;
            best_stats = out.stats;
        }

        const double hz_by = h.dot(z) + b.dot(y);
        if (hz_by < 0.0) {
            const double pinfres = (A.transpose() * y + G.transpose() * z).norm() / resx0 / (-hz_by);
            if (pinfres <= settings.feas_tol) {
                out.status = SolveStatus::Infeasible;
                return out;
            }
        }
        if (c_work.dot(x) < 0.0) {
            const double dinfres =
                std::max((A * x).norm() / resy0, (G * x + s).norm() / resz0) / (-c_work.dot(x));
            if (dinfres <= settings.feas_tol) {
                out.status = SolveStatus::Unbounded;
                return out;
            }
        }
        // Extra KKT refinement once complementarity gets small; the scaled
        // systems grow ill-conditioned exactly there.
        const double mu_hint = (s.dot(z) + tau * kappa) / (cones.total_degree + 1.0);
        kkt.set_refine_rounds(mu_hint < 1e-7 ? 4 : 2);
        auto fail_with_best = [&]() {
            SolveOutcome failed;
            failed.status = SolveStatus::NumericalFailure;
            failed.stats = best_merit < kInf ? best_stats : out.stats;
            if (best_merit < kInf) {
                failed.primal = best_x;
                failed.objective = best_pcost / c_scale;
            }
            return failed;
        };
        if (iter >= max_iter) return fail_with_best();
        if (!cones.compute(s, z)) return fail_with_best();
        if (!kkt.factor()) return fail_with_best();
        const VectorXd lambda = cones.lambda();
        const double mu = (lambda.squaredNorm() + tau * kappa) / (cones.total_degree + 1.0);

        VectorXd x2, y2, z2;
        kkt.solve(-c_work, b, h, x2, y2, z2);
        const double denom = c_work.dot(x2) + b.dot(y2) + h.dot(z2) - kappa / tau;

        auto direction = [&](const VectorXd& bx, const VectorXd& by_, const VectorXd& bz_,
                             double btau, const VectorXd& d_s, double d_kt, VectorXd& dx,
                             VectorXd& dy, VectorXd& dz, VectorXd& ds, double& dtau,
                             double& dkappa) {
            const VectorXd dtilde = cones.lam_solve(d_s);
            const VectorXd bz_adj = bz_ - cones.Wt(dtilde);
            VectorXd u1x, u1y, u1z;
            kkt.solve(bx, by_, bz_adj, u1x, u1y, u1z);
            dtau = (btau - d_kt / tau - (c_work.dot(u1x) + b.dot(u1y) + h.dot(u1z))) / denom;
            dx = u1x + dtau * x2;
            dy = u1y + dtau * y2;
            dz = u1z + dtau * z2;
            ds = cones.Wt(dtilde - cones.W(dz));
            dkappa = (d_kt - kappa * dtau) / tau;
        };

        // Affine direction.
        VectorXd dx_a, dy_a, dz_a, ds_a;
        double dtau_a, dkappa_a;
        direction(-rx, -ry, -rz, -rt, -cones.jordan(lambda, lambda), -tau * kappa, dx_a, dy_a,
                  dz_a, ds_a, dtau_a, dkappa_a);

        auto boundary = [&](const VectorXd& dz_, const VectorXd& ds_, double dtau_,
                            double dkappa_) {
            double bound = std::min(cones.step_bound(cones.W(dz_)),
                                    cones.step_bound(cones.Winvt(ds_)));
            if (dtau_ < 0.0) bound = std::min(bound, -tau / dtau_);
            if (dkappa_ < 0.0) bound = std::min(bound, -kappa / dkappa_);
            return bound;
        };

        const double alpha_aff = std::min(1.0, boundary(dz_a, ds_a, dtau_a, dkappa_a));
        const double sigma_c = std::pow(1.0 - alpha_aff, 3);

        // Combined direction with Mehrotra correction.
        const VectorXd corr = cones.jordan(cones.Winvt(ds_a), cones.W(dz_a));
        VectorXd d_s = -cones.jordan(lambda, lambda) - corr +
                       sigma_c * mu * cones.identity_vec();
        const double d_kt = -tau * kappa - dtau_a * dkappa_a + sigma_c * mu;
        const double eta = 1.0 - sigma_c;

        VectorXd dx, dy, dz, ds;
        double dtau, dkappa;
        direction(-eta * rx, -eta * ry, -eta * rz, -eta * rt, d_s, d_kt, dx, dy, dz, ds, dtau,
                  dkappa);

        const double alpha = std::min(1.0, 0.99 * boundary(dz, ds, dtau, dkappa));
        if (!(alpha > 1e-12)) return fail_with_best();

        if (std::getenv("CSSMPC_IPM_DEBUG")) {
            std::fprintf(stderr,
                         "it=%d pres=%.2e dres=%.2e gap=%.2e tau=%.2e kappa=%.2e aff=%.2e "
                         "sigma=%.2e alpha=%.2e mu=%.2e |z|=%.2e |s|=%.2e |x|=%.2e |y|=%.2e\n",
                         iter, pres, dres, gap, tau, kappa, alpha_aff, sigma_c, alpha, mu,
                         z.norm(), s.norm(), x.norm(), y.norm());
        }
        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if (!(tau > 0.0) || !(kappa > 0.0) || !x.allFinite()) return fail_with_best();
        // The embedding is homogeneous: renormalize so the scale parameter
        // stays at one, keeping absolute rounding noise commensurate with
        // the scaled convergence metrics.
        const double inv_tau = 1.0 / tau;
        x *= inv_tau;
        y *= inv_tau;
        z *= inv_tau;
        s *= inv_tau;
        kappa *= inv_tau;
        tau = 1.0;
    }
}

}  // namespace cssmpc::conic
