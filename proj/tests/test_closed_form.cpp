#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nhsense/closed_form.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/log_value.hpp"
#include "nhsense/model.hpp"

using namespace nhsense;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("LogValue arithmetic") {
    const LogValue a = LogValue::from(-3.0);
    const LogValue b = LogValue::from(2.0);
    CHECK((a * b).value() == doctest::Approx(-6.0).epsilon(1e-15));
    CHECK((a / b).value() == doctest::Approx(-1.5).epsilon(1e-15));
    CHECK((a + b).value() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK((b - a).value() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(a.squared().value() == doctest::Approx(9.0).epsilon(1e-15));
    CHECK(LogValue::from(0.0).is_zero());
    CHECK((LogValue::from(0.0) + b).value() == doctest::Approx(2.0));
    CHECK((b - b).is_zero());
    // stays finite far beyond double range
    const LogValue huge = LogValue::from_log(800.0, 1);
    CHECK((huge * huge).log_abs == doctest::Approx(1600.0));
}

TEST_CASE("chain_inverse_first_column: parity pattern and dense cross-check") {
    VectorXd v = chain_inverse_first_column(3, 10.0);
    CHECK(v(0) == doctest::Approx(-0.2));
    CHECK(v(1) == 0.0);
    CHECK(v(2) == doctest::Approx(-0.2));

    v = chain_inverse_first_column(5, 4.0);
    for (int i = 0; i < 5; ++i) {
        CHECK(v(i) == doctest::Approx(i % 2 == 0 ? -0.5 : 0.0));
    }

    for (int n : {3, 5, 7, 9}) {
        const double kappa = 7.0, j = 1.3;
        const MatrixXd hinv = inverse_refined(balanced_chain<double>(n, j, kappa));
        const VectorXd cf = chain_inverse_first_column(n, kappa);
        CHECK((hinv.col(0) - cf).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(chain_inverse_first_column(4, 1.0), InvalidParams);
}

TEST_CASE("scaled_inverse_element matches dense sector inverses") {
    const int n = 5;
    const double j = 1.3, kappa = 7.0, a = 0.8;
    const MatrixXd hinv = inverse_refined(balanced_chain<double>(n, j, kappa));
    const MatrixXd qx = inverse_refined(build_h_x<double>(n, j, a, kappa));
    const MatrixXd qp = inverse_refined(build_h_p<double>(n, j, a, kappa));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const double ex = scaled_inverse_element(hinv(i, k), i, k, a, Sector::X);
            const double ep = scaled_inverse_element(hinv(i, k), i, k, a, Sector::P);
            CHECK(std::abs(ex - qx(i, k)) <= 1e-9 * std::max(1.0, std::abs(ex)));
            CHECK(std::abs(ep - qp(i, k)) <= 1e-9 * std::max(1.0, std::abs(ep)));
        }
    }
    // i = j: no scaling
    CHECK(scaled_inverse_element(-0.4, 2, 2, 3.0, Sector::X) == doctest::Approx(-0.4));
    // corner elements of the sector inverses
    CHECK(qx(n - 1, 0) ==
          doctest::Approx(-(2.0 / kappa) * std::exp(a * (n - 1))).epsilon(1e-10));
    CHECK(qp(0, n - 1) ==
          doctest::Approx(-(2.0 / kappa) * std::exp(a * (n - 1))).epsilon(1e-10));
    // log variant carries the same value
    const LogValue lg = scaled_inverse_element_log(-2.0 / kappa, n - 1, 0, a, Sector::X);
    CHECK(lg.value() == doctest::Approx(qx(n - 1, 0)).epsilon(1e-10));
}

TEST_CASE("balanced transform identity across the (N, A) grid") {
    for (int n : {3, 5, 7}) {
        for (double a : {0.5, 1.0, 20.0 / (n - 1)}) {
            const double j = 1.0, kappa = 10.0;
            const BalancedTransform t = BalancedTransform::make(n, a);
            const MatrixXd h = balanced_chain<double>(n, j, kappa);
            const MatrixXd lhs = t.matrix() * h * t.diag.cwiseInverse().asDiagonal();
            const MatrixXd hx = build_h_x<double>(n, j, a, kappa);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    CHECK(std::abs(lhs(i, k) - hx(i, k)) <=
                          1e-10 * std::max(1.0, std::abs(hx(i, k))));
        }
    }
}

TEST_CASE("dyson_first_order: exact at eps = 0, corner element, O(eps^2) error") {
    const int n = 3;
    const double j = 1.0, kappa = 10.0, a = 1.0;
    const MatrixXd qx = inverse_refined(build_h_x<double>(n, j, a, kappa));
    const MatrixXd qp = inverse_refined(build_h_p<double>(n, j, a, kappa));

    const MatrixXd at0 = dyson_first_order(qx, qp, 0.0);
    CHECK((at0.topLeftCorner(n, n) - qx).cwiseAbs().maxCoeff() == 0.0);
    CHECK(at0.topRightCorner(n, n).cwiseAbs().maxCoeff() == 0.0);

    const double eps = 1e-3;
    const MatrixXd dy = dyson_first_order(qx, qp, eps);
    const double expect = eps * (2.0 / kappa) * (2.0 / kappa) * std::exp(2.0 * a * (n - 1));
    CHECK(dy(n, 0) == doctest::Approx(expect).epsilon(1e-9));

    // halving eps quarters the full-matrix error against the dense inverse
    MatrixXd full = MatrixXd::Zero(2 * n, 2 * n);
    full.topLeftCorner(n, n) = build_h_x<double>(n, j, a, kappa);
    full.bottomRightCorner(n, n) = build_h_p<double>(n, j, a, kappa);
    auto err_at = [&](double e) {
        MatrixXd h = full;
        h(n - 1, 2 * n - 1) += e;
        h(2 * n - 1, n - 1) += -e;
        return (inverse_refined(h) - dyson_first_order(qx, qp, e)).norm();
    };
    const double r = err_at(2e-3) / err_at(1e-3);
    CHECK(r >= 3.5);
    CHECK(r <= 4.5);
}

TEST_CASE("beyond_linear_series: closed form and dense agreement") {
    const int n = 3;
    const double kappa = 10.0, j = 1.0;
    const MatrixXd hinv = inverse_refined(balanced_chain<double>(n, j, kappa));

    auto r0 = beyond_linear_series(hinv, 0.0, kappa);
    CHECK(r0.value == doctest::Approx(-0.2).epsilon(1e-14));

    auto r1 = beyond_linear_series(hinv, 1.0, kappa);
    CHECK(r1.closed_form == doctest::Approx(-0.2 / 1.04).epsilon(1e-15));
    CHECK(r1.value == doctest::Approx(r1.closed_form).epsilon(1e-12));

    for (double ratio : {1e-3, 1e-2, 1e-1}) {
        const double eps0 = ratio * kappa;
        const double a = 1.0;
        MatrixXd h = MatrixXd::Zero(2 * n, 2 * n);
        h.topLeftCorner(n, n) = build_h_x<double>(n, j, a, kappa);
        h.bottomRightCorner(n, n) = build_h_p<double>(n, j, a, kappa);
        h(n - 1, 2 * n - 1) += eps0;
        h(2 * n - 1, n - 1) += -eps0;
        const double dense = inverse_refined(h)(0, 0);
        const auto r = beyond_linear_series(hinv, eps0, kappa);
        CHECK(std::abs(r.value - dense) <= 1e-10 * std::abs(dense));
        CHECK(std::abs(r.closed_form - dense) <= 1e-10 * std::abs(dense));
    }

    CHECK_THROWS_AS(beyond_linear_series(hinv, 5.1, kappa), ConvergenceFailure);
}

TEST_CASE("generator_inverse_row_p1: zeros at eps = 0, dense agreement, edge factor") {
    const int n = 3;
    const double j = 1.0, kappa = 10.0, a = 1.0;

    const VectorXd row0 = generator_inverse_row_p1(n, j, a, kappa, 0.0);
    CHECK(row0.head(n).cwiseAbs().maxCoeff() == 0.0);

    const double eps0 = 0.01 * kappa;
    const VectorXd row = generator_inverse_row_p1(n, j, a, kappa, eps0);
    MatrixXd h = MatrixXd::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n) = build_h_x<double>(n, j, a, kappa);
    h.bottomRightCorner(n, n) = build_h_p<double>(n, j, a, kappa);
    h(n - 1, 2 * n - 1) += eps0;
    h(2 * n - 1, n - 1) += -eps0;
    const MatrixXd hinv = inverse_refined(h);
    for (int i = 0; i < 2 * n; ++i) {
        const double expect = hinv(n, i);
        CHECK(std::abs(row(i) - expect) <= 1e-9 * std::max(std::abs(expect), 1e-12));
    }

    // the i = N element scales as e^{A(N-1)}
    const VectorXd row_a2 = generator_inverse_row_p1(n, j, 2.0, kappa, eps0);
    const VectorXd row_a1 = generator_inverse_row_p1(n, j, 1.0, kappa, eps0);
    CHECK(row_a2(n - 1) / row_a1(n - 1) ==
          doctest::Approx(std::exp(2.0 * (n - 1)) / std::exp(1.0 * (n - 1))).epsilon(1e-12));

    CHECK_THROWS_AS(generator_inverse_row_p1(n, j, a, kappa, kappa), ConvergenceFailure);
}
