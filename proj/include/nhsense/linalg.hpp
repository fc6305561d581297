// linalg.hpp — refined dense solves, Lyapunov equation, spectral abscissa
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "nhsense/errors.hpp"

namespace nhsense {

// Residual of a claimed inverse: ||Q*M - I||_inf scaled by ||Q||_inf ||M||_inf.
inline double inverse_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& q) {
    const Eigen::Index n = m.rows();
    const double num =
        (q * m - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().rowwise().sum().maxCoeff();
    const double den = std::max(1.0, q.cwiseAbs().rowwise().sum().maxCoeff() *
                                         m.cwiseAbs().rowwise().sum().maxCoeff());
    return num / den;
}

namespace detail {

// One refinement pass with the residual accumulated in long double. Fixed-precision
// refinement cannot beat cond(A)*eps forward error; the extended residual can.
inline void refine_once(const Eigen::MatrixXd& a,
                        const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                        const Eigen::MatrixXd& b,
                        Eigen::MatrixXd& x) {
    const Eigen::Index n = a.rows();
    const Eigen::Index k = b.cols();
    Eigen::MatrixXd r(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            long double acc = static_cast<long double>(b(i, j));
            for (Eigen::Index l = 0; l < n; ++l) {
                acc -= static_cast<long double>(a(i, l)) * static_cast<long double>(x(l, j));
            }
            r(i, j) = static_cast<double>(acc);
        }
    }
    x += lu.solve(r);
}

} // namespace detail

// LU solve with two extended-precision refinement passes.
inline Eigen::MatrixXd solve_refined(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw DimensionMismatch("solve_refined: incompatible shapes");
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw InvalidParams("solve_refined: non-finite input");
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::MatrixXd x = lu.solve(b);
    if (!x.allFinite()) {
        throw IllConditioned("solve_refined: factorization produced non-finite solution");
    }
    detail::refine_once(a, lu, b, x);
    detail::refine_once(a, lu, b, x);
    return x;
}

inline Eigen::VectorXd solve_refined(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    return Eigen::VectorXd(solve_refined(a, Eigen::MatrixXd(b)));
}

inline Eigen::MatrixXd inverse_refined(const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    return solve_refined(a, id);
}

// tol = tol_scale * ||M||_inf; separates genuine margins from rounding noise
inline double stability_tolerance(const Eigen::MatrixXd& m, double tol_scale = 1e-9) {
    return tol_scale * std::max(1e-300, m.cwiseAbs().rowwise().sum().maxCoeff());
}

// Max real part of the spectrum. Solver failures surface as exceptions, never NaN.
inline double spectral_abscissa(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("spectral_abscissa: matrix not square");
    if (m.rows() == 0) throw InvalidParams("spectral_abscissa: empty matrix");
    if (!m.allFinite()) throw InvalidParams("spectral_abscissa: non-finite entries");
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw EigenSolverFailure("spectral_abscissa: eigen decomposition did not converge");
    }
    const auto ev = es.eigenvalues();
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (!std::isfinite(ev(i).real())) {
            throw EigenSolverFailure("spectral_abscissa: non-finite eigenvalue");
        }
        worst = std::max(worst, ev(i).real());
    }
    return worst;
}

// Solve M S + S M^T + Q = 0 (continuous Lyapunov) by complex Schur reduction.
// Requires spectrum(M) free of opposite pairs; guaranteed when M is Hurwitz.
inline Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& m, const Eigen::MatrixXd& q) {
    if (m.rows() != m.cols() || q.rows() != q.cols() || m.rows() != q.rows()) {
        throw DimensionMismatch("lyapunov_solve: incompatible shapes");
    }
    const Eigen::Index n = m.rows();
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(m.cast<std::complex<double>>());
    if (schur.info() != Eigen::Success) {
        throw EigenSolverFailure("lyapunov_solve: Schur decomposition failed");
    }
    const Eigen::MatrixXcd u = schur.matrixU();
    const Eigen::MatrixXcd s = schur.matrixT();

    // With Y = U^H S_ig U*:  S Y + Y S^T = -U^H Q U*.
    Eigen::MatrixXcd f = -(u.adjoint() * q.cast<std::complex<double>>() * u.conjugate());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        Eigen::VectorXcd rhs = f.col(k);
        for (Eigen::Index j = k + 1; j < n; ++j) rhs -= s(k, j) * y.col(j);
        Eigen::MatrixXcd t = s;
        t.diagonal().array() += s(k, k);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(t(i, i)) < 1e-300) {
                throw IllConditioned("lyapunov_solve: eigenvalue pair sums to zero");
            }
        }
        y.col(k) = t.triangularView<Eigen::Upper>().solve(rhs);
    }
    Eigen::MatrixXd sigma = (u * y * u.transpose()).real();
    return 0.5 * (sigma + sigma.transpose()); // exact solution is symmetric
}

// ||M S + S M^T + Q|| / ||Q||, Frobenius.
inline double lyapunov_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& q,
                                const Eigen::MatrixXd& sigma) {
    const double den = std::max(q.norm(), std::numeric_limits<double>::min());
    return (m * sigma + sigma * m.transpose() + q).norm() / den;
}

} // namespace nhsense
