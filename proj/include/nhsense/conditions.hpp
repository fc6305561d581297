// conditions.hpp — tunability checks on the loss/gain couplings and their repair
//
// C1: col(Z) in span{h_p columns 2..N}        C3: same with columns 2..N-1
// C2: Y Y^T = Z Z^T                           C4: col(Z) orthogonal to row N of h_x^{-1}
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "nhsense/errors.hpp"
#include "nhsense/linalg.hpp"

namespace nhsense {

struct ConditionCheck {
    bool holds{false};
    double residual{0.0};
};

struct ConditionReport {
    ConditionCheck c1, c2, c3, c4;
    double tol{0.0};
};

namespace detail {

// Orthonormal basis of span(B). Columns are normalized before factorization:
// e^{+-A} scaling otherwise hides the small directions from the rank decision.
inline Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& b) {
    if (b.cols() == 0) return Eigen::MatrixXd::Zero(b.rows(), 0);
    Eigen::MatrixXd bn = b;
    for (Eigen::Index j = 0; j < bn.cols(); ++j) {
        const double s = bn.col(j).norm();
        if (s > 0.0) bn.col(j) /= s;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bn);
    qr.setThreshold(1e-13);
    const Eigen::Index r = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(b.rows(), r);
    return q;
}

inline ConditionCheck span_membership(const Eigen::MatrixXd& z, const Eigen::MatrixXd& basis,
                                      double tol) {
    const double zn = z.norm();
    if (zn == 0.0) return {true, 0.0};
    const Eigen::MatrixXd q = orthonormal_span(basis);
    const Eigen::MatrixXd resid = z - q * (q.transpose() * z);
    const double r = resid.norm() / std::max(1.0, zn);
    return {r <= tol, r};
}

} // namespace detail

inline ConditionCheck check_c1(const Eigen::MatrixXd& z, const Eigen::MatrixXd& h_p,
                               double tol = 1e-8) {
    if (z.rows() != h_p.rows()) throw DimensionMismatch("check_c1: Z rows must match h_p");
    return detail::span_membership(z, h_p.rightCols(h_p.cols() - 1), tol);
}

inline ConditionCheck check_c2(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                               double tol = 1e-8) {
    if (y.rows() != z.rows()) throw DimensionMismatch("check_c2: Y and Z rows must match");
    const Eigen::MatrixXd d = y * y.transpose() - z * z.transpose();
    const double dev = d.norm() / std::max(1.0, (z * z.transpose()).norm());
    return {dev <= tol, dev};
}

inline ConditionCheck check_c3(const Eigen::MatrixXd& z, const Eigen::MatrixXd& h_p,
                               double tol = 1e-8) {
    if (z.rows() != h_p.rows()) throw DimensionMismatch("check_c3: Z rows must match h_p");
    return detail::span_membership(z, h_p.middleCols(1, h_p.cols() - 2), tol);
}

inline ConditionCheck check_c4(const Eigen::MatrixXd& z, const Eigen::MatrixXd& h_x,
                               double tol = 1e-8) {
    if (z.rows() != h_x.rows()) throw DimensionMismatch("check_c4: Z rows must match h_x");
    const Eigen::Index n = h_x.rows();
    // row N of h_x^{-1} from a transposed solve
    const Eigen::VectorXd row =
        solve_refined(Eigen::MatrixXd(h_x.transpose()), Eigen::VectorXd(Eigen::VectorXd::Unit(n, n - 1)));
    const double rn = row.norm();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double cn = z.col(j).norm();
        if (cn == 0.0) continue;
        worst = std::max(worst, std::abs(row.dot(z.col(j))) / (rn * cn));
    }
    return {worst <= tol, worst};
}

// Orthogonal projection of each column of Z onto span{h_p columns 2..N}: the
// nearest (Frobenius) coupling satisfying C1. Idempotent and a contraction.
inline Eigen::MatrixXd repair_to_c1(const Eigen::MatrixXd& z, const Eigen::MatrixXd& h_p) {
    if (z.rows() != h_p.rows()) throw DimensionMismatch("repair_to_c1: Z rows must match h_p");
    const Eigen::MatrixXd q = detail::orthonormal_span(h_p.rightCols(h_p.cols() - 1));
    return q * (q.transpose() * z);
}

// Minimal balanced gain: Y = Z satisfies C2 exactly and leaves the net drift zero.
inline Eigen::MatrixXd synthesize_balanced_gain(const Eigen::MatrixXd& z) { return z; }

inline ConditionReport check_conditions(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
                                        const Eigen::MatrixXd& h_x, const Eigen::MatrixXd& h_p,
                                        double tol = 1e-8) {
    ConditionReport r;
    r.tol = tol;
    r.c1 = check_c1(z, h_p, tol);
    r.c2 = check_c2(y, z, tol);
    r.c3 = check_c3(z, h_p, tol);
    r.c4 = check_c4(z, h_x, tol);
    return r;
}

} // namespace nhsense
