#include "cssmpc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cssmpc/lp.hpp"

namespace cssmpc {
namespace {

constexpr double kDuplicateTol = 1e-9;
constexpr double kLpTol = 1e-8;

}  // namespace

Polytope::Polytope(MatrixXd normals, VectorXd offsets) {
    if (normals.rows() != offsets.size())
        throw std::invalid_argument("polytope rows/offsets mismatch");
    dim_ = static_cast<int>(normals.cols());

    std::vector<int> kept;
    kept.reserve(normals.rows());
    for (int i = 0; i < normals.rows(); ++i) {
        const double norm = normals.row(i).norm();
        if (norm <= 1e-12) {
            if (offsets[i] < -1e-12) {
                *this = Polytope::empty(dim_);
                return;
            }
            continue;  // trivially satisfied row
        }
        normals.row(i) /= norm;
        offsets[i] /= norm;
        kept.push_back(i);
    }

    // Duplicate merge: identical normals keep the tightest offset. Rows are
    // bucketed by their quantized normal so large row sets stay linear.
    std::vector<int> unique_rows;
    unique_rows.reserve(kept.size());
    std::unordered_map<std::uint64_t, std::vector<int>> buckets;
    auto quantized_key = [&](int row) {
        std::uint64_t hash = 1469598103934665603ULL;
        for (int c = 0; c < dim_; ++c) {
            const auto q =
                static_cast<std::int64_t>(std::llround(normals(row, c) / kDuplicateTol));
            hash ^= static_cast<std::uint64_t>(q) + 0x9e3779b97f4a7c15ULL + (hash << 6) +
                    (hash >> 2);
        }
        return hash;
    };
    for (int idx : kept) {
        bool merged = false;
        auto& bucket = buckets[quantized_key(idx)];
        for (int u : bucket) {
            if ((normals.row(idx) - normals.row(u)).cwiseAbs().maxCoeff() <= kDuplicateTol) {
                offsets[u] = std::min(offsets[u], offsets[idx]);
                merged = true;
                break;
            }
        }
        if (!merged) {
            bucket.push_back(idx);
            unique_rows.push_back(idx);
        }
    }

    normals_.resize(unique_rows.size(), dim_);
    offsets_.resize(unique_rows.size());
    for (size_t i = 0; i < unique_rows.size(); ++i) {
        normals_.row(static_cast<int>(i)) = normals.row(unique_rows[i]);
        offsets_[static_cast<int>(i)] = offsets[unique_rows[i]];
    }
}

Polytope Polytope::empty(int dim) {
    Polytope p;
    p.dim_ = dim;
    p.empty_ = true;
    p.normals_ = MatrixXd::Zero(1, dim);
    p.offsets_ = VectorXd::Constant(1, -1.0);
    return p;
}

Polytope Polytope::whole_space(int dim) {
    Polytope p;
    p.dim_ = dim;
    p.normals_ = MatrixXd::Zero(0, dim);
    p.offsets_ = VectorXd::Zero(0);
    return p;
}

Polytope Polytope::box(const VectorXd& lo, const VectorXd& hi) {
    const int n = static_cast<int>(lo.size());
    if (hi.size() != n) throw std::invalid_argument("box bounds mismatch");
    MatrixXd normals(2 * n, n);
    VectorXd offsets(2 * n);
    normals.setZero();
    for (int i = 0; i < n; ++i) {
        normals(2 * i, i) = 1.0;
        offsets[2 * i] = hi[i];
        normals(2 * i + 1, i) = -1.0;
        offsets[2 * i + 1] = -lo[i];
    }
    return Polytope(std::move(normals), std::move(offsets));
}

Polytope Polytope::interval(double lo, double hi) {
    VectorXd l(1), h(1);
    l[0] = lo;
    h[0] = hi;
    return box(l, h);
}

Polytope Polytope::inflated(double margin) const {
    if (empty_) return *this;
    Polytope p = *this;
    p.offsets_.array() += margin;
    return p;
}

Polytope Polytope::scaled_offsets(double factor) const {
    if (empty_) return *this;
    Polytope p = *this;
    p.offsets_ *= factor;
    return p;
}

namespace {

// Shared redundancy engine. A row is dropped when the maximum of its
// left-hand side over the other surviving rows stays at or below
// offset + margin; margin = -kLpTol reproduces the exact point set,
// positive margins trade a bounded enlargement for fewer facets.
Polytope reduce_rows(const Polytope& p, double margin) {
    if (p.flagged_empty()) return Polytope::empty(p.dim());
    if (p.num_rows() == 0) return p;

    if (!lp::find_point(p.normals(), p.offsets())) return Polytope::empty(p.dim());

    const int m = p.num_rows();
    const int dim = p.dim();
    std::vector<bool> kept(m, true);

    // Bounding-box prefilter: a row whose maximum over the box enclosing the
    // whole set stays strictly below its offset is redundant, no LP needed.
    // (Strict slackness on the full set implies redundancy by convexity.)
    VectorXd box_lo(dim), box_hi(dim);
    std::vector<bool> lo_finite(dim, false), hi_finite(dim, false);
    for (int c = 0; c < dim; ++c) {
        VectorXd dir = VectorXd::Zero(dim);
        dir[c] = 1.0;
        auto up = lp::maximize(p.normals(), p.offsets(), dir);
        if (up.status == lp::Status::Optimal) {
            box_hi[c] = up.value;
            hi_finite[c] = true;
        }
        auto down = lp::maximize(p.normals(), p.offsets(), VectorXd(-dir));
        if (down.status == lp::Status::Optimal) {
            box_lo[c] = -down.value;
            lo_finite[c] = true;
        }
    }
    for (int i = 0; i < m; ++i) {
        double bound = 0.0;
        bool finite = true;
        for (int c = 0; c < dim && finite; ++c) {
            const double a = p.normals()(i, c);
            if (a > 0.0) {
                if (hi_finite[c])
                    bound += a * box_hi[c];
                else
                    finite = false;
            } else if (a < 0.0) {
                if (lo_finite[c])
                    bound += a * box_lo[c];
                else
                    finite = false;
            }
        }
        if (finite && bound <= p.offsets()[i] + margin) kept[i] = false;
    }

    for (int i = 0; i < m; ++i) {
        if (!kept[i]) continue;
        // Assemble the other surviving rows.
        int count = 0;
        for (int j = 0; j < m; ++j)
            if (j != i && kept[j]) ++count;
        if (count == 0) continue;
        MatrixXd others(count, p.dim());
        VectorXd others_b(count);
        int w = 0;
        for (int j = 0; j < m; ++j) {
            if (j == i || !kept[j]) continue;
            others.row(w) = p.normals().row(j);
            others_b[w] = p.offsets()[j];
            ++w;
        }
        auto res = lp::maximize(others, others_b, p.normals().row(i).transpose());
        if (res.status == lp::Status::Optimal && res.value <= p.offsets()[i] + margin)
            kept[i] = false;
        // Unbounded or Error keeps the row.
    }

    int count = 0;
    for (bool k : kept)
        if (k) ++count;
    MatrixXd normals(count, p.dim());
    VectorXd offsets(count);
    int w = 0;
    for (int i = 0; i < m; ++i) {
        if (!kept[i]) continue;
        normals.row(w) = p.normals().row(i);
        offsets[w] = p.offsets()[i];
        ++w;
    }
    return Polytope(std::move(normals), std::move(offsets));
}

}  // namespace

Polytope remove_redundancy(const Polytope& p) { return reduce_rows(p, -kLpTol); }

Polytope simplify_rows(const Polytope& p, double slack) {
    if (slack < 0.0) throw std::invalid_argument("simplify_rows: negative slack");
    return reduce_rows(p, slack);
}

Polytope intersect(const Polytope& p, const Polytope& q) {
    if (p.dim() != q.dim()) throw std::invalid_argument("intersect: dimension mismatch");
    if (p.flagged_empty() || q.flagged_empty()) return Polytope::empty(p.dim());
    MatrixXd normals(p.num_rows() + q.num_rows(), p.dim());
    VectorXd offsets(p.num_rows() + q.num_rows());
    normals << p.normals(), q.normals();
    offsets << p.offsets(), q.offsets();
    return remove_redundancy(Polytope(std::move(normals), std::move(offsets)));
}

bool is_subset(const Polytope& p, const Polytope& q, double tol) {
    if (p.dim() != q.dim()) throw std::invalid_argument("is_subset: dimension mismatch");
    if (p.flagged_empty()) return true;
    if (q.flagged_empty())  // only an empty p fits inside
        return !lp::find_point(p.normals(), p.offsets()).has_value();

    for (int i = 0; i < q.num_rows(); ++i) {
        auto res = lp::maximize(p.normals(), p.offsets(), q.normals().row(i).transpose());
        if (res.status == lp::Status::Infeasible) return true;  // p is empty
        if (res.status == lp::Status::Unbounded) return false;
        if (res.status == lp::Status::Error)
            throw std::runtime_error("is_subset: LP failure");
        if (res.value > q.offsets()[i] + tol) return false;
    }
    return true;
}

bool contains_point(const Polytope& p, const VectorXd& x, double tol) {
    if (p.dim() != x.size()) throw std::invalid_argument("contains_point: dimension mismatch");
    if (p.flagged_empty()) return false;
    if (p.num_rows() == 0) return true;
    return ((p.normals() * x - p.offsets()).array() <= tol).all();
}

namespace {

// Eliminate the last coordinate by Fourier-Motzkin pairing.
Polytope eliminate_last(const Polytope& p) {
    const int n = p.dim();
    const int m = p.num_rows();
    std::vector<int> pos, neg, zero;
    for (int i = 0; i < m; ++i) {
        const double c = p.normals()(i, n - 1);
        if (c > 1e-12)
            pos.push_back(i);
        else if (c < -1e-12)
            neg.push_back(i);
        else
            zero.push_back(i);
    }

    const int out_rows = static_cast<int>(zero.size() + pos.size() * neg.size());
    MatrixXd normals(out_rows, n - 1);
    VectorXd offsets(out_rows);
    int w = 0;
    for (int i : zero) {
        normals.row(w) = p.normals().row(i).head(n - 1);
        offsets[w] = p.offsets()[i];
        ++w;
    }
    for (int i : pos) {
        const double ci = p.normals()(i, n - 1);
        for (int j : neg) {
            const double cj = -p.normals()(j, n - 1);
            normals.row(w) =
                p.normals().row(i).head(n - 1) / ci + p.normals().row(j).head(n - 1) / cj;
            offsets[w] = p.offsets()[i] / ci + p.offsets()[j] / cj;
            ++w;
        }
    }
    return remove_redundancy(Polytope(std::move(normals), std::move(offsets)));
}

}  // namespace

Polytope project_eliminate(const Polytope& p, const std::vector<int>& keep) {
    if (keep.empty()) throw std::invalid_argument("project_eliminate: keep set empty");
    std::vector<bool> seen(p.dim(), false);
    for (int k : keep) {
        if (k < 0 || k >= p.dim() || seen[k])
            throw std::invalid_argument("project_eliminate: bad keep index");
        seen[k] = true;
    }
    const int n_keep = static_cast<int>(keep.size());
    if (p.flagged_empty()) return Polytope::empty(n_keep);

    // Permute columns: kept coordinates first (in the requested order),
    // dropped coordinates trailing; then eliminate from the back.
    std::vector<int> order(keep);
    for (int i = 0; i < p.dim(); ++i)
        if (!seen[i]) order.push_back(i);

    MatrixXd normals(p.num_rows(), p.dim());
    for (int c = 0; c < p.dim(); ++c) normals.col(c) = p.normals().col(order[c]);
    Polytope current = remove_redundancy(Polytope(std::move(normals), p.offsets()));

    while (current.dim() > n_keep) {
        if (current.flagged_empty()) return Polytope::empty(n_keep);
        current = eliminate_last(current);
    }
    return current;
}

Polytope pre_set(const Polytope& target, const ParameterHull& hull, const Polytope& controls) {
    hull.check_shapes();
    const int nx = hull.nx();
    const int nu = hull.nu();
    if (target.dim() != nx) throw std::invalid_argument("pre_set: target dimension mismatch");
    if (controls.dim() != nu) throw std::invalid_argument("pre_set: control dimension mismatch");
    if (target.flagged_empty() || controls.flagged_empty()) return Polytope::empty(nx);

    const int nv = static_cast<int>(hull.vertices.size());
    const int rows = nv * target.num_rows() + controls.num_rows();
    MatrixXd normals(rows, nx + nu);
    VectorXd offsets(rows);
    int w = 0;
    for (const auto& vert : hull.vertices) {
        for (int i = 0; i < target.num_rows(); ++i) {
            normals.row(w).head(nx) = target.normals().row(i) * vert.A;
            normals.row(w).tail(nu) = target.normals().row(i) * vert.B;
            offsets[w] = target.offsets()[i] - target.normals().row(i).dot(vert.r);
            ++w;
        }
    }
    for (int i = 0; i < controls.num_rows(); ++i) {
        normals.row(w).head(nx).setZero();
        normals.row(w).tail(nu) = controls.normals().row(i);
        offsets[w] = controls.offsets()[i];
        ++w;
    }

    std::vector<int> keep(nx);
    for (int i = 0; i < nx; ++i) keep[i] = i;
    return project_eliminate(Polytope(std::move(normals), std::move(offsets)), keep);
}

}  // namespace cssmpc
