#pragma once

#include <vector>

#include "cssmpc/linalg.hpp"
#include "cssmpc/sysmodel.hpp"

namespace cssmpc {

/// Halfspace-representation polytope {x : normals x <= offsets}.
///
/// Rows are stored normalized to unit normal (offset rescaled). Zero rows
/// with nonnegative offset are dropped; a zero row with negative offset
/// marks the polytope empty. The canonical empty polytope keeps its
/// dimension and carries the single row 0'x <= -1.
class Polytope {
public:
    Polytope() = default;
    Polytope(MatrixXd normals, VectorXd offsets);

    static Polytope empty(int dim);
    static Polytope whole_space(int dim);
    static Polytope box(const VectorXd& lo, const VectorXd& hi);
    /// Interval [lo, hi] in one dimension.
    static Polytope interval(double lo, double hi);

    int dim() const { return dim_; }
    int num_rows() const { return static_cast<int>(offsets_.size()); }
    bool flagged_empty() const { return empty_; }
    const MatrixXd& normals() const { return normals_; }
    const VectorXd& offsets() const { return offsets_; }

    /// Same normals, offsets shifted by +margin (outward for positive margin).
    Polytope inflated(double margin) const;
    /// Same normals, offsets multiplied by factor.
    Polytope scaled_offsets(double factor) const;

private:
    MatrixXd normals_{0, 0};
    VectorXd offsets_{0};
    int dim_ = 0;
    bool empty_ = false;
};

/// Minimal representation with the same point set. Rows are tested with an
/// LP against the surviving rows; unbounded tests keep the row; an
/// infeasible polytope becomes the canonical empty one.
Polytope remove_redundancy(const Polytope& p);

/// Structure simplification: also drops rows whose facet sticks out by at
/// most `slack`, enlarging the set by up to that much per dropped row.
/// Used by set iterations that re-certify the final result exactly.
Polytope simplify_rows(const Polytope& p, double slack);

/// Row union followed by redundancy removal. Throws on dimension mismatch.
Polytope intersect(const Polytope& p, const Polytope& q);

/// True iff p is contained in q (LP per row of q, tolerance tol).
bool is_subset(const Polytope& p, const Polytope& q, double tol = 1e-8);

bool contains_point(const Polytope& p, const VectorXd& x, double tol = 1e-9);

/// Exact orthogonal projection onto the kept coordinates (in the order
/// given), via Fourier-Motzkin elimination with redundancy removal after
/// each eliminated variable.
Polytope project_eliminate(const Polytope& p, const std::vector<int>& keep);

/// Robust pre-set of `target`:
///   {mu : exists v in controls with A_l mu + B_l v + r_l in target for all
///    hull vertices l},
/// computed by stacking vertex transition rows in lifted (mu, v) space and
/// projecting the control coordinates out.
Polytope pre_set(const Polytope& target, const ParameterHull& hull, const Polytope& controls);

}  // namespace cssmpc
