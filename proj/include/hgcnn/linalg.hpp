#pragma once

#include <Eigen/Dense>

namespace hgcnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexVector = Eigen::VectorXi;

inline bool is_finite(const Matrix& m) { return m.allFinite(); }
inline bool is_finite(const Vector& v) { return v.allFinite(); }

/// Max absolute entry of m - m^T, as a symmetry measure.
inline double symmetry_defect(const Matrix& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace hgcnn
