#include "cssmpc/smpc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cssmpc/lp.hpp"

namespace cssmpc::smpc {
namespace {

void check_window(const std::vector<SystemRealization>& window) {
    if (window.empty()) throw std::invalid_argument("empty prediction window");
    for (const auto& sys : window) {
        sys.check_shapes();
        if (sys.nx() != window.front().nx() || sys.nu() != window.front().nu() ||
            sys.nw() != window.front().nw())
            throw std::invalid_argument("window realizations have mismatched shapes");
    }
}

MatrixXd block_sqrt_stack(const std::vector<MatrixXd>& blocks) {
    int total = 0;
    for (const auto& b : blocks) total += static_cast<int>(b.rows());
    MatrixXd out = MatrixXd::Zero(total, total);
    int at = 0;
    for (const auto& b : blocks) {
        out.block(at, at, b.rows(), b.cols()) = psd_sqrt(b);
        at += static_cast<int>(b.rows());
    }
    return out;
}

}  // namespace

BlockMatrices build_block_matrices(const std::vector<SystemRealization>& window) {
    check_window(window);
    BlockMatrices bm;
    bm.horizon = static_cast<int>(window.size());
    bm.nx = window.front().nx();
    bm.nu = window.front().nu();
    bm.nw = window.front().nw();
    const int N = bm.horizon;
    const int n = (N + 1) * bm.nx;

    bm.a_bar = MatrixXd::Zero(n, bm.nx);
    bm.a_bar.topRows(bm.nx).setIdentity();
    for (int t = 1; t <= N; ++t)
        bm.a_bar.middleRows(t * bm.nx, bm.nx) =
            window[t - 1].A * bm.a_bar.middleRows((t - 1) * bm.nx, bm.nx);

    bm.b_bar = MatrixXd::Zero(n, N * bm.nu);
    bm.d_bar = MatrixXd::Zero(n, N * bm.nw);
    for (int j = 0; j < N; ++j) {
        bm.b_bar.block((j + 1) * bm.nx, j * bm.nu, bm.nx, bm.nu) = window[j].B;
        bm.d_bar.block((j + 1) * bm.nx, j * bm.nw, bm.nx, bm.nw) = window[j].D;
        for (int t = j + 2; t <= N; ++t) {
            bm.b_bar.block(t * bm.nx, j * bm.nu, bm.nx, bm.nu) =
                window[t - 1].A * bm.b_bar.block((t - 1) * bm.nx, j * bm.nu, bm.nx, bm.nu);
            bm.d_bar.block(t * bm.nx, j * bm.nw, bm.nx, bm.nw) =
                window[t - 1].A * bm.d_bar.block((t - 1) * bm.nx, j * bm.nw, bm.nx, bm.nw);
        }
    }

    bm.r_bar = VectorXd::Zero(n);
    for (int t = 1; t <= N; ++t)
        bm.r_bar.segment(t * bm.nx, bm.nx) =
            window[t - 1].A * bm.r_bar.segment((t - 1) * bm.nx, bm.nx) + window[t - 1].r;
    return bm;
}

GainStack GainStack::zero(GainMode mode, int horizon, int nu, int nx) {
    GainStack g;
    g.mode = mode;
    g.horizon = horizon;
    g.nu = nu;
    g.nx = nx;
    g.rows.resize(horizon);
    for (int t = 0; t < horizon; ++t) {
        g.rows[t].resize(t + 1);
        for (int i = 0; i <= t; ++i) g.rows[t][i] = MatrixXd::Zero(nu, nx);
    }
    return g;
}

MatrixXd GainStack::assemble() const {
    MatrixXd k = MatrixXd::Zero(horizon * nu, (horizon + 1) * nx);
    for (int t = 0; t < horizon; ++t)
        for (int i = 0; i <= t; ++i) k.block(t * nu, i * nx, nu, nx) = rows[t][i];
    return k;
}

namespace {

struct CostStacks {
    MatrixXd q_sqrt;  // (N+1)nx
    MatrixXd r_sqrt;  // N nu
    VectorXd goal_stack;
};

CostStacks build_cost_stacks(const std::vector<StageCost>& cost, const BlockMatrices& bm,
                             bool include_terminal_cost) {
    const int N = bm.horizon;
    std::vector<MatrixXd> q_blocks;
    VectorXd goal_stack((N + 1) * bm.nx);
    std::vector<MatrixXd> r_blocks;
    for (int t = 0; t < N; ++t) {
        cost[t].check();
        q_blocks.push_back(cost[t].Q);
        r_blocks.push_back(cost[t].R);
        goal_stack.segment(t * bm.nx, bm.nx) = cost[t].goal;
    }
    q_blocks.push_back(include_terminal_cost ? cost.back().Q
                                             : MatrixXd::Zero(bm.nx, bm.nx).eval());
    goal_stack.tail(bm.nx) = cost.back().goal;
    CostStacks out;
    out.q_sqrt = block_sqrt_stack(q_blocks);
    out.r_sqrt = block_sqrt_stack(r_blocks);
    out.goal_stack = std::move(goal_stack);
    return out;
}

std::vector<BuiltProgram::KParam> gain_parameters(GainMode mode, int N, int nu, int nx) {
    std::vector<BuiltProgram::KParam> params;
    for (int t = 0; t < N; ++t) {
        const int i_lo = mode == GainMode::Diagonal ? t : 0;
        for (int i = i_lo; i <= t; ++i)
            for (int r = 0; r < nu; ++r)
                for (int c = 0; c < nx; ++c) params.push_back({t, i, r, c});
    }
    return params;
}

}  // namespace

BuiltProgram build_program(const GaussianBelief& belief,
                           const std::vector<SystemRealization>& window,
                           const std::vector<StageCost>& cost, const ChanceSpec& chance,
                           const terminal::TerminalIngredients* ingredients,
                           const SmpcOptions& options) {
    check_window(window);
    const int N = static_cast<int>(window.size());
    const int nx = window.front().nx();
    const int nu = window.front().nu();
    if (belief.dim() != nx) throw std::invalid_argument("belief dimension mismatch");
    if (static_cast<int>(cost.size()) != N)
        throw std::invalid_argument("cost sequence must cover the window");
    chance.check(nx, nu);

    BlockMatrices bm = build_block_matrices(window);
    const int n = bm.state_rows();
    const int m = bm.control_rows();

    MatrixXd cov_y = symmetrize(bm.a_bar * belief.cov * bm.a_bar.transpose() +
                                bm.d_bar * bm.d_bar.transpose());
    MatrixXd s_y = psd_sqrt(cov_y);
    VectorXd xbar_const = bm.a_bar * belief.mean + bm.r_bar;

    auto k_params = gain_parameters(options.gain_mode, N, nu, nx);
    const int nk = static_cast<int>(k_params.size());
    const int n_vars = m + nk + 4;
    const int ep0 = m + nk;  // first epigraph variable

    CostStacks stacks = build_cost_stacks(cost, bm, options.include_terminal_cost);
    const MatrixXd qb = stacks.q_sqrt * bm.b_bar;  // n x m

    conic::ConicProgram program(n_vars);
    {
        VectorXd c = VectorXd::Zero(n_vars);
        c.segment(ep0, 4).setOnes();
        program.set_objective(std::move(c));
    }

    // Epigraph t >= ||w||^2 as (t+1, 2w, t-1) in a second-order cone.
    auto add_square_epigraph = [&](int ep_index, const MatrixXd& w_coeffs,
                                   const VectorXd& w_const) {
        const int rows = static_cast<int>(w_const.size());
        MatrixXd coeffs = MatrixXd::Zero(rows + 2, n_vars);
        VectorXd constants(rows + 2);
        coeffs(0, ep_index) = 1.0;
        constants[0] = 1.0;
        coeffs.middleRows(1, rows) = 2.0 * w_coeffs;
        constants.segment(1, rows) = 2.0 * w_const;
        coeffs(rows + 1, ep_index) = 1.0;
        constants[rows + 1] = -1.0;
        program.add_second_order(std::move(coeffs), std::move(constants));
    };

    // Mean tracking cost: Qs (xbar_const + b_bar V - goal).
    {
        MatrixXd w = MatrixXd::Zero(n, n_vars);
        w.leftCols(m) = qb;
        add_square_epigraph(ep0 + 0, w, stacks.q_sqrt * (xbar_const - stacks.goal_stack));
    }
    // Feedforward effort: Rs V.
    {
        MatrixXd w = MatrixXd::Zero(m, n_vars);
        w.leftCols(m) = stacks.r_sqrt;
        add_square_epigraph(ep0 + 1, w, VectorXd::Zero(m));
    }
    // State dispersion cost: vec(Qs (I + b_bar K) s_y), column-major.
    {
        MatrixXd w = MatrixXd::Zero(n * n, n_vars);
        VectorXd w0(n * n);
        const MatrixXd base = stacks.q_sqrt * s_y;
        for (int col = 0; col < n; ++col) w0.segment(col * n, n) = base.col(col);
        for (int q = 0; q < nk; ++q) {
            const auto& p = k_params[q];
            const VectorXd qb_col = qb.col(p.t * nu + p.r);
            const int srow = p.i * nx + p.c;
            for (int col = 0; col < n; ++col)
                w.block(col * n, m + q, n, 1) = qb_col * s_y(srow, col);
        }
        add_square_epigraph(ep0 + 2, w, w0);
    }
    // Control dispersion cost: vec(Rs K s_y).
    {
        MatrixXd w = MatrixXd::Zero(m * n, n_vars);
        for (int q = 0; q < nk; ++q) {
            const auto& p = k_params[q];
            const VectorXd r_col = stacks.r_sqrt.col(p.t * nu + p.r);
            const int srow = p.i * nx + p.c;
            for (int col = 0; col < n; ++col)
                w.block(col * m, m + q, m, 1) = r_col * s_y(srow, col);
        }
        add_square_epigraph(ep0 + 3, w, VectorXd::Zero(m * n));
    }

    // State chance rows for interior stages (stage 0 is fixed by the
    // initialization; the final stage is covered by the terminal pair).
    for (int t = 1; t <= N - 1; ++t) {
        for (const auto& row : chance.state_rows) {
            const double quant = normal_quantile(1.0 - row.risk);
            VectorXd et_a = VectorXd::Zero(n);
            et_a.segment(t * nx, nx) = row.normal;
            const VectorXd bt_a = bm.b_bar.transpose() * et_a;  // m
            if (quant <= 0.0) {
                MatrixXd coeffs = MatrixXd::Zero(1, n_vars);
                coeffs.row(0).head(m) = -bt_a.transpose();
                VectorXd constants(1);
                constants[0] = row.offset - et_a.dot(xbar_const);
                program.add_nonnegative(std::move(coeffs), std::move(constants));
                continue;
            }
            MatrixXd coeffs = MatrixXd::Zero(1 + n, n_vars);
            VectorXd constants(1 + n);
            coeffs.row(0).head(m) = -bt_a.transpose();
            constants[0] = row.offset - et_a.dot(xbar_const);
            constants.segment(1, n) = quant * (s_y * et_a);
            for (int q = 0; q < nk; ++q) {
                const auto& p = k_params[q];
                const double g = bt_a[p.t * nu + p.r];
                if (g == 0.0) continue;
                coeffs.block(1, m + q, n, 1) = quant * g * s_y.col(p.i * nx + p.c);
            }
            program.add_second_order(std::move(coeffs), std::move(constants));
        }
    }

    // Control chance rows for every stage in the window.
    for (int t = 0; t < N; ++t) {
        for (const auto& row : chance.control_rows) {
            const double quant = normal_quantile(1.0 - row.risk);
            if (quant <= 0.0) {
                MatrixXd coeffs = MatrixXd::Zero(1, n_vars);
                coeffs.row(0).segment(t * nu, nu) = -row.normal.transpose();
                VectorXd constants = VectorXd::Constant(1, row.offset);
                program.add_nonnegative(std::move(coeffs), std::move(constants));
                continue;
            }
            MatrixXd coeffs = MatrixXd::Zero(1 + n, n_vars);
            VectorXd constants = VectorXd::Zero(1 + n);
            coeffs.row(0).segment(t * nu, nu) = -row.normal.transpose();
            constants[0] = row.offset;
            for (int q = 0; q < nk; ++q) {
                const auto& p = k_params[q];
                if (p.t != t) continue;
                coeffs.block(1, m + q, n, 1) = quant * row.normal[p.r] * s_y.col(p.i * nx + p.c);
            }
            program.add_second_order(std::move(coeffs), std::move(constants));
        }
    }

    if (ingredients != nullptr) {
        // Terminal mean rows.
        const Polytope& mean_set = ingredients->mean_set;
        if (mean_set.dim() != nx) throw std::invalid_argument("terminal set dimension");
        if (mean_set.num_rows() > 0) {
            MatrixXd en_b = bm.b_bar.bottomRows(nx);
            MatrixXd coeffs = MatrixXd::Zero(mean_set.num_rows(), n_vars);
            coeffs.leftCols(m) = -mean_set.normals() * en_b;
            VectorXd constants =
                mean_set.offsets() - mean_set.normals() * xbar_const.tail(nx);
            program.add_nonnegative(std::move(coeffs), std::move(constants));
        }

        // Terminal covariance LMI of order nx + n.
        const int order = nx + n;
        MatrixXd coeffs(svec_size(order), n_vars);
        coeffs.setZero();
        MatrixXd constant = MatrixXd::Zero(order, order);
        constant.topLeftCorner(nx, nx) = ingredients->cov_bound;
        constant.topRightCorner(nx, n) = s_y.bottomRows(nx);  // E_N s_y
        constant.bottomLeftCorner(n, nx) = constant.topRightCorner(nx, n).transpose();
        constant.bottomRightCorner(n, n).setIdentity();
        for (int q = 0; q < nk; ++q) {
            const auto& p = k_params[q];
            MatrixXd basis = MatrixXd::Zero(order, order);
            const VectorXd en_col = bm.b_bar.block(N * nx, p.t * nu + p.r, nx, 1);
            basis.topRightCorner(nx, n) = en_col * s_y.row(p.i * nx + p.c);
            basis.bottomLeftCorner(n, nx) = basis.topRightCorner(nx, n).transpose();
            coeffs.col(m + q) = svec(basis);
        }
        program.add_psd(std::move(coeffs), svec(constant), order);
    }

    BuiltProgram built{std::move(program), std::move(bm),         std::move(cov_y),
                       std::move(s_y),     std::move(xbar_const), m,
                       std::move(k_params)};
    return built;
}

SMPCSolution solve_smpc(const GaussianBelief& belief,
                        const std::vector<SystemRealization>& window,
                        const std::vector<StageCost>& cost, const ChanceSpec& chance,
                        const terminal::TerminalIngredients* ingredients,
                        const SmpcOptions& options) {
    BuiltProgram built = build_program(belief, window, cost, chance, ingredients, options);
    auto outcome = conic::solve(built.program, options.solver);

    SMPCSolution sol;
    sol.status = outcome.status;
    sol.stats = outcome.stats;
    const int N = built.bm.horizon;
    const int nx = built.bm.nx;
    const int nu = built.bm.nu;
    sol.gains = GainStack::zero(options.gain_mode, N, nu, nx);
    if (outcome.status != conic::SolveStatus::Optimal) return sol;

    sol.v_stack = outcome.primal.head(built.n_v);
    for (size_t q = 0; q < built.k_params.size(); ++q) {
        const auto& p = built.k_params[q];
        sol.gains.rows[p.t][p.i](p.r, p.c) = outcome.primal[built.n_v + static_cast<int>(q)];
    }
    sol.cost = outcome.objective;

    const VectorXd xbar = built.xbar_const + built.bm.b_bar * sol.v_stack;
    const MatrixXd f_sy = built.s_y + built.bm.b_bar * (sol.gains.assemble() * built.s_y);
    sol.predicted_means.resize(N + 1);
    sol.predicted_covs.resize(N + 1);
    for (int t = 0; t <= N; ++t) {
        sol.predicted_means[t] = xbar.segment(t * nx, nx);
        const MatrixXd ft = f_sy.middleRows(t * nx, nx);
        sol.predicted_covs[t] = symmetrize(ft * ft.transpose());
    }
    return sol;
}

Initialization initialize(const SMPCSolution* prev, const VectorXd& x_measured,
                          InitializationMode mode, const ProbeSolver& probe) {
    const int nx = static_cast<int>(x_measured.size());
    if (prev == nullptr) {
        return Initialization{make_belief(x_measured, MatrixXd::Zero(nx, nx)), "start", {}};
    }
    if (!prev->optimal()) throw std::invalid_argument("previous solution is not optimal");
    GaussianBelief carried = make_belief(prev->predicted_means[1], prev->predicted_covs[1]);
    if (mode == InitializationMode::Static)
        return Initialization{std::move(carried), "static", {}};

    auto probe_solution = probe(make_belief(x_measured, MatrixXd::Zero(nx, nx)));
    if (probe_solution.has_value() && probe_solution->optimal()) {
        return Initialization{make_belief(x_measured, MatrixXd::Zero(nx, nx)), "reconditioned",
                              std::move(probe_solution)};
    }
    return Initialization{std::move(carried), "open-loop", {}};
}

CandidatePolicy shift_candidate(const SMPCSolution& prev,
                                const terminal::TerminalIngredients& ingredients,
                                const ParameterHull& hull,
                                const std::vector<SystemRealization>& next_window) {
    if (!prev.optimal()) throw std::invalid_argument("shift_candidate needs an optimal solution");
    const int N = prev.gains.horizon;
    const int nx = prev.gains.nx;
    const int nu = prev.gains.nu;
    if (static_cast<int>(next_window.size()) != N)
        throw std::invalid_argument("next window length mismatch");

    // Terminal feedforward from the invariant-set certificate LP.
    const VectorXd mu_n = prev.predicted_means[N];
    const Polytope& target = ingredients.mean_set;
    const Polytope& controls = ingredients.control_safe;
    const int nv = static_cast<int>(hull.vertices.size());
    MatrixXd lp_rows(nv * target.num_rows() + controls.num_rows(), nu);
    VectorXd lp_offsets(lp_rows.rows());
    int w = 0;
    for (const auto& vert : hull.vertices) {
        for (int i = 0; i < target.num_rows(); ++i) {
            lp_rows.row(w) = target.normals().row(i) * vert.B;
            lp_offsets[w] =
                target.offsets()[i] - target.normals().row(i).dot(vert.A * mu_n + vert.r);
            ++w;
        }
    }
    for (int i = 0; i < controls.num_rows(); ++i) {
        lp_rows.row(w) = controls.normals().row(i);
        lp_offsets[w] = controls.offsets()[i];
        ++w;
    }
    auto v_terminal = lp::find_point(lp_rows, lp_offsets);
    if (!v_terminal)
        throw std::logic_error("terminal certificate LP infeasible: ingredients are broken");

    CandidatePolicy candidate;
    candidate.v_stack = VectorXd::Zero(N * nu);
    for (int t = 0; t + 1 < N; ++t)
        candidate.v_stack.segment(t * nu, nu) = prev.v_stack.segment((t + 1) * nu, nu);
    candidate.v_stack.tail(nu) = *v_terminal;

    candidate.gains = GainStack::zero(GainMode::LowerTriangular, N, nu, nx);
    for (int t = 0; t + 1 < N; ++t)
        for (int i = 0; i <= t; ++i) candidate.gains.rows[t][i] = prev.gains.block(t + 1, i + 1);

    // Appended terminal stage: state feedback through the error map.
    BlockMatrices bm = build_block_matrices(next_window);
    MatrixXd k_partial = candidate.gains.assemble();
    MatrixXd error_map = MatrixXd::Identity((N + 1) * nx, (N + 1) * nx) + bm.b_bar * k_partial;
    const MatrixXd row_n = error_map.middleRows((N - 1) * nx, nx);
    for (int i = 0; i <= N - 1; ++i)
        candidate.gains.rows[N - 1][i] = ingredients.gain * row_n.middleCols(i * nx, nx);
    return candidate;
}

PolicyEvaluation evaluate_policy(const GaussianBelief& belief,
                                 const std::vector<SystemRealization>& window,
                                 const std::vector<StageCost>& cost, const ChanceSpec& chance,
                                 const terminal::TerminalIngredients* ingredients,
                                 const VectorXd& v_stack, const GainStack& gains,
                                 const SmpcOptions& options) {
    check_window(window);
    const int N = static_cast<int>(window.size());
    const int nx = window.front().nx();
    const int nu = window.front().nu();
    BlockMatrices bm = build_block_matrices(window);
    const int n = bm.state_rows();
    (void)n;

    const MatrixXd cov_y = symmetrize(bm.a_bar * belief.cov * bm.a_bar.transpose() +
                                      bm.d_bar * bm.d_bar.transpose());
    const MatrixXd s_y = psd_sqrt(cov_y);
    const MatrixXd k = gains.assemble();
    const VectorXd xbar = bm.a_bar * belief.mean + bm.r_bar + bm.b_bar * v_stack;
    const MatrixXd f_sy = s_y + bm.b_bar * (k * s_y);
    const MatrixXd k_sy = k * s_y;

    PolicyEvaluation out;
    out.means.resize(N + 1);
    out.covs.resize(N + 1);
    for (int t = 0; t <= N; ++t) {
        out.means[t] = xbar.segment(t * nx, nx);
        const MatrixXd ft = f_sy.middleRows(t * nx, nx);
        out.covs[t] = symmetrize(ft * ft.transpose());
    }

    CostStacks stacks = build_cost_stacks(cost, bm, options.include_terminal_cost);
    out.cost = (stacks.q_sqrt * (xbar - stacks.goal_stack)).squaredNorm() +
               (stacks.r_sqrt * v_stack).squaredNorm() +
               (stacks.q_sqrt * f_sy).squaredNorm() + (stacks.r_sqrt * k_sy).squaredNorm();

    double violation = -std::numeric_limits<double>::infinity();
    for (int t = 1; t <= N - 1; ++t) {
        for (const auto& row : chance.state_rows) {
            const double quant = normal_quantile(1.0 - row.risk);
            const MatrixXd ft = f_sy.middleRows(t * nx, nx);
            const double radius = (ft.transpose() * row.normal).norm();
            violation = std::max(violation, row.normal.dot(out.means[t]) + quant * radius -
                                                row.offset);
        }
    }
    for (int t = 0; t < N; ++t) {
        for (const auto& row : chance.control_rows) {
            const double quant = normal_quantile(1.0 - row.risk);
            const MatrixXd kt = k_sy.middleRows(t * nu, nu);
            const double radius = (kt.transpose() * row.normal).norm();
            violation = std::max(violation,
                                 row.normal.dot(v_stack.segment(t * nu, nu)) + quant * radius -
                                     row.offset);
        }
    }
    if (ingredients != nullptr) {
        const Polytope& mean_set = ingredients->mean_set;
        for (int i = 0; i < mean_set.num_rows(); ++i)
            violation = std::max(violation, mean_set.normals().row(i).dot(out.means[N]) -
                                                mean_set.offsets()[i]);
        violation =
            std::max(violation, -min_eigenvalue(ingredients->cov_bound - out.covs[N]));
    }
    out.max_violation = violation;
    return out;
}

}  // namespace cssmpc::smpc
