// closed_form.hpp — analytic inverse elements of the balanced chain and the
// perturbed generator, kept independent of the dense numeric paths they check.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "nhsense/errors.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/log_value.hpp"
#include "nhsense/model.hpp"

namespace nhsense {

// Reference chain at A = 0: -(kappa/2)|1><1| + J sum_n (|n+1><n| - |n><n+1|).
template <typename Scalar = double>
DenseMatrix<Scalar> balanced_chain(Eigen::Index n_sites, Scalar hop_j, Scalar kappa) {
    return build_h_x<Scalar>(n_sites, hop_j, Scalar(0), kappa);
}

// T = diag(1, e^A, ..., e^{A(N-1)}); h_x = T h T^{-1} and h_p = T^{-1} h T.
struct BalancedTransform {
    Eigen::VectorXd diag; // entries e^{A i}, i = 0..N-1

    static BalancedTransform make(Eigen::Index n_sites, double amp_a) {
        BalancedTransform t;
        t.diag.resize(n_sites);
        for (Eigen::Index i = 0; i < n_sites; ++i) t.diag(i) = std::exp(amp_a * double(i));
        return t;
    }

    Eigen::MatrixXd matrix() const { return diag.asDiagonal(); }
};

// First column of h^{-1} for odd N: -2/kappa on odd sites, 0 on even (1-based).
inline Eigen::VectorXd chain_inverse_first_column(Eigen::Index n_sites, double kappa) {
    if (n_sites < 1 || n_sites % 2 == 0) {
        throw InvalidParams("chain_inverse_first_column: N must be odd and >= 1");
    }
    if (!(kappa > 0.0)) throw InvalidParams("chain_inverse_first_column: kappa must be > 0");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_sites);
    for (Eigen::Index i = 0; i < n_sites; i += 2) v(i) = -2.0 / kappa;
    return v;
}

enum class Sector { X, P };

// (h_x)^{-1}_{ij} = h^{-1}_{ij} e^{A(i-j)}, (h_p)^{-1}_{ij} = h^{-1}_{ij} e^{A(j-i)}.
// Indices 0-based; only the difference i - j enters.
inline double scaled_inverse_element(double h_inv_elem, Eigen::Index i, Eigen::Index j,
                                     double amp_a, Sector sector) {
    const double k = (sector == Sector::X) ? double(i - j) : double(j - i);
    return h_inv_elem * std::exp(amp_a * k);
}

inline LogValue scaled_inverse_element_log(double h_inv_elem, Eigen::Index i, Eigen::Index j,
                                           double amp_a, Sector sector) {
    const double k = (sector == Sector::X) ? double(i - j) : double(j - i);
    LogValue v = LogValue::from(h_inv_elem);
    if (v.is_zero()) return v;
    return LogValue::from_log(v.log_abs + amp_a * k, v.sign);
}

// First-order perturbative inverse of the full generator:
//   H^{-1} ~= H_1^{-1} - H_1^{-1} H_N[eps] H_1^{-1},  H_N[eps] = eps|N><2N| - eps|2N><N|.
// Exact at eps = 0; error is O(eps^2) on the diagonal blocks, O(eps^3) off-block.
inline Eigen::MatrixXd dyson_first_order(const Eigen::MatrixXd& q_x, const Eigen::MatrixXd& q_p,
                                         double eps) {
    if (q_x.rows() != q_x.cols() || q_p.rows() != q_p.cols() || q_x.rows() != q_p.rows()) {
        throw DimensionMismatch("dyson_first_order: blocks must be square and equal-sized");
    }
    const Eigen::Index n = q_x.rows();
    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    inv.topLeftCorner(n, n) = q_x;
    inv.bottomRightCorner(n, n) = q_p;
    // - Q_x |N><N| Q_p * eps on the top-right, + Q_p |N><N| Q_x * eps on the bottom-left
    inv.topRightCorner(n, n).noalias() = -eps * (q_x.col(n - 1) * q_p.row(n - 1));
    inv.bottomLeftCorner(n, n).noalias() = eps * (q_p.col(n - 1) * q_x.row(n - 1));
    return inv;
}

struct GeometricSeriesResult {
    double value{0.0};       // series evaluation of H[eps0]^{-1}_{1,1}
    double closed_form{0.0}; // -(2/kappa) / (1 + 4 eps0^2 / kappa^2)
    int terms{0};
};

// All-orders (geometric) evaluation of the (1,1) inverse element of the perturbed
// balanced generator. Convergence requires |eps0 * h^{-1}_{N,N}| < 1, i.e. 2 eps0/kappa < 1.
inline GeometricSeriesResult beyond_linear_series(const Eigen::MatrixXd& h_inv, double eps0,
                                                  double kappa, double truncation_tol = 1e-14,
                                                  int max_terms = 200) {
    const Eigen::Index n = h_inv.rows();
    if (n < 1 || h_inv.cols() != n) throw DimensionMismatch("beyond_linear_series: bad h_inv");
    const double hnn = h_inv(n - 1, n - 1);
    const double ratio = eps0 * hnn;
    if (!(std::abs(ratio) < 1.0)) {
        throw ConvergenceFailure("beyond_linear_series: divergent series, |eps0 * h^-1_NN| = " +
                                 std::to_string(std::abs(ratio)) + " >= 1");
    }
    const double cross = h_inv(0, n - 1) * h_inv(n - 1, 0);
    double sum = h_inv(0, 0);
    double term = -eps0 * eps0 * hnn * cross; // n = 1 term: (-1) eps^2 hnn^{2-1} h_{1N} h_{N1}
    int used = 0;
    for (int k = 1; k <= max_terms; ++k) {
        sum += term;
        ++used;
        if (std::abs(term) < truncation_tol * std::abs(sum)) break;
        term *= -eps0 * eps0 * hnn * hnn;
        if (k == max_terms) {
            throw ConvergenceFailure("beyond_linear_series: no convergence in max_terms");
        }
    }
    GeometricSeriesResult r;
    r.value = sum;
    r.closed_form = -(2.0 / kappa) / (1.0 + 4.0 * eps0 * eps0 / (kappa * kappa));
    r.terms = used;
    return r;
}

// Row N+1 of H[eps0]^{-1} for balanced dynamics (net drift zero), closed form.
// X-sector part (columns 1..N):   -(2 eps0/kappa) h^{-1}_{N,i} e^{A(2N-1-i)} / (1 + 4 eps0^2/kappa^2)
// P-sector part (columns N+1..2N): [h^{-1}_{N,i} (1/(1+4 eps0^2/kappa^2) - 1) + h^{-1}_{1,i}] e^{A(i-1)}
// with i 1-based in the formulas above.
inline Eigen::VectorXd generator_inverse_row_p1(Eigen::Index n_sites, double hop_j, double amp_a,
                                                double kappa, double eps0) {
    if (n_sites < 1 || n_sites % 2 == 0) {
        throw InvalidParams("generator_inverse_row_p1: N must be odd");
    }
    const double conv = 2.0 * eps0 / kappa;
    if (!(std::abs(conv) < 1.0)) {
        throw ConvergenceFailure("generator_inverse_row_p1: requires 2 eps0 / kappa < 1");
    }
    const Eigen::MatrixXd h = balanced_chain<double>(n_sites, hop_j, kappa);
    // rows 1 and N of h^{-1} via transposed solves; h is well conditioned at A = 0
    const Eigen::VectorXd row1 =
        solve_refined(Eigen::MatrixXd(h.transpose()), Eigen::VectorXd(Eigen::VectorXd::Unit(n_sites, 0)));
    const Eigen::VectorXd rowN = solve_refined(Eigen::MatrixXd(h.transpose()),
                                               Eigen::VectorXd(Eigen::VectorXd::Unit(n_sites, n_sites - 1)));
    const double x = 4.0 * eps0 * eps0 / (kappa * kappa);
    const double damp = 1.0 / (1.0 + x);
    Eigen::VectorXd row(2 * n_sites);
    for (Eigen::Index i = 0; i < n_sites; ++i) {
        const double expo_x = amp_a * double(2 * n_sites - 2 - i); // A(2N-1-(i+1))
        row(i) = -(2.0 * eps0 / kappa) * rowN(i) * damp * std::exp(expo_x);
        const double expo_p = amp_a * double(i); // A((i+1)-1)
        row(n_sites + i) = (rowN(i) * (damp - 1.0) + row1(i)) * std::exp(expo_p);
    }
    return row;
}

} // namespace nhsense
