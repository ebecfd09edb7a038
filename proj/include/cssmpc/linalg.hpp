#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace cssmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Number of entries in the scaled lower-triangle vectorization of a d x d
/// symmetric matrix.
inline int svec_size(int d) { return d * (d + 1) / 2; }

/// Scaled triangle vectorization: off-diagonal entries are multiplied by
/// sqrt(2) so that svec(A) . svec(B) == trace(A B) for symmetric A, B.
inline VectorXd svec(const MatrixXd& m) {
    const int d = static_cast<int>(m.rows());
    const double rt2 = std::sqrt(2.0);
    VectorXd out(svec_size(d));
    int k = 0;
    for (int j = 0; j < d; ++j) {
        out[k++] = m(j, j);
        for (int i = j + 1; i < d; ++i) out[k++] = rt2 * m(i, j);
    }
    return out;
}

/// Inverse of svec.
inline MatrixXd smat(const VectorXd& v, int d) {
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    MatrixXd out(d, d);
    int k = 0;
    for (int j = 0; j < d; ++j) {
        out(j, j) = v[k++];
        for (int i = j + 1; i < d; ++i) {
            const double x = inv_rt2 * v[k++];
            out(i, j) = x;
            out(j, i) = x;
        }
    }
    return out;
}

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Symmetric PSD square root; eigenvalues below zero are clamped.
inline MatrixXd psd_sqrt(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
    VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Clamp tiny negative eigenvalues to zero, keeping the matrix symmetric.
inline MatrixXd clamp_psd(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
    VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace cssmpc
