#include "cssmpc/terminal.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "cssmpc/lp.hpp"

namespace cssmpc::terminal {
namespace {

// Symmetric basis matrix for svec component k of an n x n matrix.
MatrixXd svec_basis(int k, int n) {
    MatrixXd e = MatrixXd::Zero(n, n);
    int idx = 0;
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < n; ++j) {
        if (idx == k) {
            e(j, j) = 1.0;
            return e;
        }
        ++idx;
        for (int i = j + 1; i < n; ++i) {
            if (idx == k) {
                e(i, j) = inv_rt2;
                e(j, i) = inv_rt2;
                return e;
            }
            ++idx;
        }
    }
    throw std::logic_error("svec basis index out of range");
}

Polytope polytope_from_chance_rows(const std::vector<ChanceRow>& rows, int dim) {
    MatrixXd normals(rows.size(), dim);
    VectorXd offsets(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        normals.row(static_cast<int>(i)) = rows[i].normal.transpose();
        offsets[static_cast<int>(i)] = rows[i].offset;
    }
    return Polytope(normals, offsets);
}

}  // namespace

CovarianceDesign solve_terminal_covariance(const ParameterHull& hull,
                                           const SynthesisOptions& options) {
    hull.check_shapes();
    const int nx = hull.nx();
    const int nu = hull.nu();
    const int n_sigma = svec_size(nx);
    const int n_w = svec_size(nu);
    // Variables: svec(Sigma), Z row-major, svec(W) with W an epigraph bound
    // on Z Sigma^{-1} Z' = gain covariance. The trace objective alone leaves
    // Z wildly non-unique; the small gain term picks a usable gain among
    // near-trace-optimal solutions.
    const int n_vars = n_sigma + nu * nx + n_w;
    const int w0 = n_sigma + nu * nx;

    conic::ConicProgram program(n_vars);
    VectorXd objective = VectorXd::Zero(n_vars);
    objective.head(n_sigma) = svec(MatrixXd::Identity(nx, nx));  // trace
    objective.segment(w0, n_w) = options.gain_weight * svec(MatrixXd::Identity(nu, nu));
    program.set_objective(objective);

    // Per-vertex block LMI in (Sigma, Z).
    for (const auto& vert : hull.vertices) {
        const int order = 2 * nx;
        MatrixXd coeffs(svec_size(order), n_vars);
        for (int k = 0; k < n_sigma; ++k) {
            const MatrixXd basis = svec_basis(k, nx);
            MatrixXd m = MatrixXd::Zero(order, order);
            m.topLeftCorner(nx, nx) = basis;
            m.topRightCorner(nx, nx) = vert.A * basis;
            m.bottomLeftCorner(nx, nx) = basis * vert.A.transpose();
            m.bottomRightCorner(nx, nx) = basis;
            coeffs.col(k) = svec(m);
        }
        for (int r = 0; r < nu; ++r) {
            for (int c = 0; c < nx; ++c) {
                MatrixXd zb = MatrixXd::Zero(nu, nx);
                zb(r, c) = 1.0;
                MatrixXd m = MatrixXd::Zero(order, order);
                m.topRightCorner(nx, nx) = vert.B * zb;
                m.bottomLeftCorner(nx, nx) = (vert.B * zb).transpose();
                coeffs.col(n_sigma + r * nx + c) = svec(m);
            }
        }
        MatrixXd constant = MatrixXd::Zero(order, order);
        constant.topLeftCorner(nx, nx) = -vert.D * vert.D.transpose();
        program.add_psd(std::move(coeffs), svec(constant), order);
    }

    // Ridge: Sigma - ridge I PSD, keeps the gain recovery off the boundary.
    {
        MatrixXd coeffs = MatrixXd::Zero(n_sigma, n_vars);
        coeffs.topLeftCorner(n_sigma, n_sigma).setIdentity();
        program.add_psd(std::move(coeffs),
                        svec(MatrixXd(-options.ridge * MatrixXd::Identity(nx, nx))), nx);
    }

    // Gain epigraph: [[W, Z], [Z', Sigma]] PSD, i.e. W >= Z Sigma^{-1} Z'.
    {
        const int order = nu + nx;
        MatrixXd coeffs = MatrixXd::Zero(svec_size(order), n_vars);
        for (int k = 0; k < n_sigma; ++k) {
            MatrixXd m = MatrixXd::Zero(order, order);
            m.bottomRightCorner(nx, nx) = svec_basis(k, nx);
            coeffs.col(k) = svec(m);
        }
        for (int r = 0; r < nu; ++r) {
            for (int c = 0; c < nx; ++c) {
                MatrixXd m = MatrixXd::Zero(order, order);
                m(r, nu + c) = 1.0;
                m(nu + c, r) = 1.0;
                coeffs.col(n_sigma + r * nx + c) = svec(m);
            }
        }
        for (int k = 0; k < n_w; ++k) {
            MatrixXd m = MatrixXd::Zero(order, order);
            m.topLeftCorner(nu, nu) = svec_basis(k, nu);
            coeffs.col(w0 + k) = svec(m);
        }
        program.add_psd(std::move(coeffs), VectorXd::Zero(svec_size(order)), order);
    }

    auto outcome = conic::solve(program, options.solver);
    if (outcome.status == conic::SolveStatus::Infeasible)
        throw SynthesisError(SynthesisErrorKind::SdpInfeasible,
                             "terminal covariance SDP is infeasible for this hull");
    if (outcome.status != conic::SolveStatus::Optimal)
        throw SynthesisError(SynthesisErrorKind::SdpNumerical,
                             "terminal covariance SDP did not reach optimality");

    CovarianceDesign design;
    design.stats = outcome.stats;
    design.cov_bound = symmetrize(smat(outcome.primal.head(n_sigma), nx));
    design.z = MatrixXd(nu, nx);
    for (int r = 0; r < nu; ++r)
        for (int c = 0; c < nx; ++c) design.z(r, c) = outcome.primal[n_sigma + r * nx + c];

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(design.cov_bound);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo > 1e12)
        throw SynthesisError(SynthesisErrorKind::GainRecovery,
                             "terminal covariance is numerically singular");
    design.gain = design.z * design.cov_bound.inverse();
    return design;
}

std::pair<Polytope, Polytope> tighten(const Polytope& state_poly, const Polytope& control_poly,
                                      const MatrixXd& cov_bound, const MatrixXd& gain,
                                      const ChanceSpec& spec) {
    const int nx = state_poly.dim();
    const int nu = control_poly.dim();
    spec.check(nx, nu);

    MatrixXd sn(spec.state_rows.size(), nx);
    VectorXd so(spec.state_rows.size());
    for (size_t i = 0; i < spec.state_rows.size(); ++i) {
        const auto& row = spec.state_rows[i];
        const double radius = std::sqrt(
            std::max(0.0, row.normal.dot(cov_bound * row.normal)));
        sn.row(static_cast<int>(i)) = row.normal.transpose();
        so[static_cast<int>(i)] = row.offset - radius * normal_quantile(1.0 - row.risk);
    }

    const MatrixXd control_cov = gain * cov_bound * gain.transpose();
    MatrixXd cn(spec.control_rows.size(), nu);
    VectorXd co(spec.control_rows.size());
    for (size_t i = 0; i < spec.control_rows.size(); ++i) {
        const auto& row = spec.control_rows[i];
        const double radius = std::sqrt(
            std::max(0.0, row.normal.dot(control_cov * row.normal)));
        cn.row(static_cast<int>(i)) = row.normal.transpose();
        co[static_cast<int>(i)] = row.offset - radius * normal_quantile(1.0 - row.risk);
    }

    Polytope state_safe(std::move(sn), std::move(so));
    Polytope control_safe(std::move(cn), std::move(co));
    if (state_safe.flagged_empty() || !lp::find_point(state_safe.normals(), state_safe.offsets()))
        throw SynthesisError(SynthesisErrorKind::SafeSetEmpty, "tightened state set is empty");
    if (control_safe.flagged_empty() ||
        !lp::find_point(control_safe.normals(), control_safe.offsets()))
        throw SynthesisError(SynthesisErrorKind::SafeSetEmpty, "tightened control set is empty");
    return {std::move(state_safe), std::move(control_safe)};
}

bool verify_invariance(const Polytope& candidate, const Polytope& control_safe,
                       const ParameterHull& hull) {
    if (candidate.flagged_empty()) return false;
    return is_subset(candidate, pre_set(candidate, hull, control_safe));
}

InvariantSetResult robust_invariant_set(const Polytope& state_safe, const Polytope& control_safe,
                                        const ParameterHull& hull, int max_iter, double eps,
                                        double contraction, double simplify_slack) {
    InvariantSetResult result;
    Polytope current = remove_redundancy(state_safe);
    if (current.flagged_empty())
        throw SynthesisError(SynthesisErrorKind::NoInvariantSet,
                             "state safe set is already empty");

    bool reached_fixed_point = false;
    int iter = 0;
    const bool debug = std::getenv("CSSMPC_TERMINAL_DEBUG") != nullptr;
    while (iter < max_iter) {
        ++iter;
        // Successors are required to land `contraction` deep inside the
        // iterate (uniform offset tightening, not origin scaling), so the
        // stalled set keeps a certification margin over the facet wobble
        // introduced by simplification.
        const Polytope target =
            contraction > 0.0 ? current.inflated(-contraction) : current;
        Polytope next = intersect(current, pre_set(target, hull, control_safe));
        if (simplify_slack > 0.0 && !next.flagged_empty())
            next = simplify_rows(next, simplify_slack);
        if (debug)
            std::fprintf(stderr, "invariant-set iter %d: %d rows%s\n", iter, next.num_rows(),
                         next.flagged_empty() ? " (empty)" : "");
        if (next.flagged_empty())
            throw SynthesisError(SynthesisErrorKind::NoInvariantSet,
                                 "invariant-set iteration emptied out");
        // Facet simplification can wiggle the boundary by up to its slack,
        // so the fixed-point test must not look below that scale.
        const double settle = std::max(eps, 2.0 * simplify_slack);
        if (is_subset(current, next.inflated(settle))) {
            current = next;
            reached_fixed_point = true;
            break;
        }
        current = next;
    }
    result.iterations = iter;
    if (!reached_fixed_point)
        throw SynthesisError(SynthesisErrorKind::NotConverged,
                             "invariant-set iteration hit the iteration cap");

    // Certificate, with offset contraction as the fallback.
    Polytope candidate = current;
    for (int attempt = 0; attempt <= 5; ++attempt) {
        if (verify_invariance(candidate, control_safe, hull)) {
            result.set = remove_redundancy(candidate);
            result.converged = true;
            return result;
        }
        candidate = candidate.scaled_offsets(1.0 - eps);
    }
    throw SynthesisError(SynthesisErrorKind::NotConverged,
                         "invariance certificate failed after contraction retries");
}

TerminalIngredients synthesize(const ParameterHull& hull, const ChanceSpec& spec,
                               const SynthesisOptions& options) {
    hull.check_shapes();
    auto design = solve_terminal_covariance(hull, options);

    // Vertex Lyapunov certificate for the recovered gain.
    for (const auto& vert : hull.vertices) {
        const MatrixXd closed = vert.A + vert.B * design.gain;
        const MatrixXd residual = design.cov_bound -
                                  closed * design.cov_bound * closed.transpose() -
                                  vert.D * vert.D.transpose();
        if (min_eigenvalue(residual) < -options.certificate_tol)
            throw SynthesisError(SynthesisErrorKind::SdpNumerical,
                                 "vertex Lyapunov certificate failed after gain recovery");
    }

    const Polytope state_set = polytope_from_chance_rows(spec.state_rows, hull.nx());
    const Polytope control_set = polytope_from_chance_rows(spec.control_rows, hull.nu());
    auto [state_safe, control_safe] =
        tighten(state_set, control_set, design.cov_bound, design.gain, spec);

    auto invariant =
        robust_invariant_set(state_safe, control_safe, hull, options.max_iterations, options.eps,
                             options.set_contraction, options.set_simplify);

    TerminalIngredients out;
    out.cov_bound = design.cov_bound;
    out.gain = design.gain;
    out.gain_times_cov = design.z;
    out.state_safe = std::move(state_safe);
    out.control_safe = std::move(control_safe);
    out.mean_set = std::move(invariant.set);
    out.iterations = invariant.iterations;
    out.converged = invariant.converged;
    return out;
}

namespace {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
    json out;
    out["rows"] = m.rows();
    out["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(m.size());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    out["data"] = data;
    return out;
}

MatrixXd matrix_from_json(const json& j) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<int>(data.size()) != rows * cols)
        throw std::invalid_argument("matrix json size mismatch");
    MatrixXd m(rows, cols);
    int k = 0;
    for (int i = 0; i < rows; ++i)
        for (int j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++];
    return m;
}

json polytope_to_json(const Polytope& p) {
    json rows = json::array();
    for (int i = 0; i < p.num_rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < p.dim(); ++j) row.push_back(p.normals()(i, j));
        row.push_back(p.offsets()[i]);
        rows.push_back(row);
    }
    json out;
    out["dim"] = p.dim();
    out["rows"] = rows;
    out["empty"] = p.flagged_empty();
    return out;
}

Polytope polytope_from_json(const json& j) {
    const int dim = j.at("dim").get<int>();
    if (j.at("empty").get<bool>()) return Polytope::empty(dim);
    const auto& rows = j.at("rows");
    MatrixXd normals(rows.size(), dim);
    VectorXd offsets(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int c = 0; c < dim; ++c) normals(static_cast<int>(i), c) = rows[i][c].get<double>();
        offsets[static_cast<int>(i)] = rows[i][dim].get<double>();
    }
    return Polytope(normals, offsets);
}

}  // namespace

std::string to_json(const TerminalIngredients& ingredients) {
    json out;
    out["cov_bound"] = matrix_to_json(ingredients.cov_bound);
    out["gain"] = matrix_to_json(ingredients.gain);
    out["gain_times_cov"] = matrix_to_json(ingredients.gain_times_cov);
    out["state_safe"] = polytope_to_json(ingredients.state_safe);
    out["control_safe"] = polytope_to_json(ingredients.control_safe);
    out["mean_set"] = polytope_to_json(ingredients.mean_set);
    out["iterations"] = ingredients.iterations;
    out["converged"] = ingredients.converged;
    return out.dump(2);
}

TerminalIngredients ingredients_from_json(const std::string& text) {
    const json j = json::parse(text);
    TerminalIngredients out;
    out.cov_bound = matrix_from_json(j.at("cov_bound"));
    out.gain = matrix_from_json(j.at("gain"));
    out.gain_times_cov = matrix_from_json(j.at("gain_times_cov"));
    out.state_safe = polytope_from_json(j.at("state_safe"));
    out.control_safe = polytope_from_json(j.at("control_safe"));
    out.mean_set = polytope_from_json(j.at("mean_set"));
    out.iterations = j.at("iterations").get<int>();
    out.converged = j.at("converged").get<bool>();
    return out;
}

std::string content_hash(const ParameterHull& hull, const ChanceSpec& spec,
                         const SynthesisOptions& options) {
    std::ostringstream stream;
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g,", v);
        stream << buf;
    };
    auto put_matrix = [&](const MatrixXd& m) {
        stream << m.rows() << "x" << m.cols() << ":";
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) put(m(i, j));
    };
    stream << "hull:";
    for (const auto& v : hull.vertices) {
        put_matrix(v.A);
        put_matrix(v.B);
        put_matrix(v.D);
        put_matrix(v.r);
    }
    stream << "state:";
    for (const auto& row : spec.state_rows) {
        put_matrix(row.normal);
        put(row.offset);
        put(row.risk);
    }
    stream << "control:";
    for (const auto& row : spec.control_rows) {
        put_matrix(row.normal);
        put(row.offset);
        put(row.risk);
    }
    stream << "opts:";
    put(options.ridge);
    put(options.eps);
    stream << options.max_iterations;

    const std::string text = stream.str();
    std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace cssmpc::terminal
