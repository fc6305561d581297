#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nhsense/conditions.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/model.hpp"
#include "nhsense/presets.hpp"
#include "nhsense/rng.hpp"

using namespace nhsense;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Xoshiro256pp& rng, int r, int c, double scale = 1.0) {
    NormalSampler normal(rng.next());
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = scale * normal();
    return m;
}

} // namespace

TEST_CASE("check_c1: tuned layout passes, untuned fails, zero passes") {
    for (double a : {0.5, 1.0, 2.0, 5.0}) {
        const double j = 1e5 * 2.0 * std::exp(a) / (std::exp(2.0 * a) + 1.0);
        const MatrixXd hp = build_h_p<double>(3, j, a, 10.0);
        CHECK(check_c1(preset_loss_tuned(0.5).materialize(a), hp).holds);
        CHECK_FALSE(check_c1(preset_loss_a(0.5).materialize(a), hp).holds);
        CHECK_FALSE(check_c1(preset_loss_b(0.5).materialize(a), hp).holds);
    }
    const MatrixXd hp = build_h_p<double>(3, 1.0, 1.0, 10.0);
    const auto z0 = check_c1(MatrixXd::Zero(3, 2), hp);
    CHECK(z0.holds);
    CHECK(z0.residual == 0.0);
}

TEST_CASE("check_c2: balance under orthogonal right-factors") {
    const MatrixXd z = preset_loss_tuned(0.5).materialize(1.0);
    CHECK(check_c2(z, z).holds);
    CHECK(check_c2(z, z).residual == 0.0);

    // Y = Z R with R orthogonal leaves Y Y^T invariant
    Xoshiro256pp rng(7);
    const MatrixXd g = gaussian(rng, 2, 2);
    const Eigen::HouseholderQR<MatrixXd> qr(g);
    const MatrixXd r = qr.householderQ();
    CHECK(check_c2(z * r, z).holds);

    CHECK_FALSE(check_c2(2.0 * z, z).holds);
}

TEST_CASE("check_c3: stricter column window") {
    const int n = 5;
    const MatrixXd hp = build_h_p<double>(n, 1.0, 0.7, 10.0);
    CHECK(check_c3(MatrixXd::Zero(n, 1), hp).holds);

    // single column equal to h_p column N: inside the C1 span, outside the C3 span
    const MatrixXd zlast = hp.col(n - 1);
    CHECK(check_c1(zlast, hp).holds);
    CHECK_FALSE(check_c3(zlast, hp).holds);

    Xoshiro256pp rng(11);
    const MatrixXd w = gaussian(rng, n - 2, 2);
    const MatrixXd zc3 = hp.middleCols(1, n - 2) * w;
    CHECK(check_c3(zc3, hp).holds);
    CHECK(check_c1(zc3, hp).holds); // C3 implies C1
}

TEST_CASE("check_c4: orthogonality to row N of the inverse") {
    const int n = 3;
    const double j = 1.0, a = 0.8, kappa = 10.0;
    const MatrixXd hx = build_h_x<double>(n, j, a, kappa);
    CHECK(check_c4(MatrixXd::Zero(n, 2), hx).holds);

    // Row N of (h_x)^{-1} has no zero entries (brute-force inverse shows the
    // even-column entries are -e^{A(N-j)}/J-type, not zero), so a coupling
    // supported on site 2 alone must fail C4.
    const MatrixXd hxinv = inverse_refined(hx);
    CHECK(std::abs(hxinv(n - 1, 1)) > 1e-12);
    CHECK(hxinv(n - 1, 1) == doctest::Approx(-std::exp(a) / j).epsilon(1e-10));
    MatrixXd zmid = MatrixXd::Zero(n, 1);
    zmid(1, 0) = 0.7;
    CHECK_FALSE(check_c4(zmid, hx).holds);

    // dense random couplings generically fail
    Xoshiro256pp rng(23);
    CHECK_FALSE(check_c4(gaussian(rng, n, 2), hx).holds);

    // columns constructed in the orthogonal complement pass
    const VectorXd row = hxinv.row(n - 1).transpose();
    MatrixXd zperp = gaussian(rng, n, 2);
    zperp -= row * (row.transpose() * zperp) / row.squaredNorm();
    CHECK(check_c4(zperp, hx).holds);
}

TEST_CASE("repair_to_c1: projection properties") {
    const int n = 3;
    const double a = 2.0;
    const MatrixXd hp = build_h_p<double>(n, 1.0, a, 10.0);

    // already-satisfying layouts are fixed points
    const MatrixXd ztuned = preset_loss_tuned(0.5).materialize(a);
    CHECK((repair_to_c1(ztuned, hp) - ztuned).norm() <= 1e-12 * ztuned.norm());

    // untuned layout projects onto a C1-satisfying coupling
    const MatrixXd z1 = preset_loss_a(0.5).materialize(a);
    const MatrixXd rep = repair_to_c1(z1, hp);
    CHECK(check_c1(rep, hp).holds);
    // idempotence
    CHECK((repair_to_c1(rep, hp) - rep).norm() <= 1e-12 * rep.norm());
    // the hand-tuned layout also satisfies C1; projection optimality does not
    // force them to coincide
    CHECK(check_c1(ztuned, hp).holds);

    // a coupling orthogonal to the span projects to zero: the span of columns
    // 2..N of h_p is the orthogonal complement of the kernel of those columns'
    // transpose; build a vector annihilated by them
    Eigen::ColPivHouseholderQR<MatrixXd> qr(hp.rightCols(n - 1));
    const MatrixXd q = qr.householderQ();
    const VectorXd ortho = q.col(n - 1); // rank is n-1 here, last column spans the complement
    CHECK((repair_to_c1(ortho, hp)).norm() <= 1e-10);

    // contraction on random pairs
    Xoshiro256pp rng(5);
    for (int t = 0; t < 20; ++t) {
        const MatrixXd za = gaussian(rng, n, 2);
        const MatrixXd zb = gaussian(rng, n, 2);
        CHECK((repair_to_c1(za, hp) - repair_to_c1(zb, hp)).norm() <= (za - zb).norm() + 1e-12);
    }
}

TEST_CASE("synthesize_balanced_gain: exact balance, dynamics preserved") {
    const MatrixXd z = preset_loss_tuned(0.5).materialize(1.5);
    const MatrixXd y = synthesize_balanced_gain(z);
    CHECK((y - z).norm() == 0.0);
    CHECK(check_c2(y, z).holds);
    CHECK(net_noise(z, y).cwiseAbs().maxCoeff() == 0.0);

    const MatrixXd hx = build_h_x<double>(3, 1.0, 1.5, 10.0);
    CHECK(spectral_abscissa(hx + net_noise(z, y)) == doctest::Approx(spectral_abscissa(hx)));

    CHECK(synthesize_balanced_gain(MatrixXd::Zero(3, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("check_conditions bundles all four") {
    const int n = 5;
    const MatrixXd hx = build_h_x<double>(n, 1.0, 0.7, 10.0);
    const MatrixXd hp = build_h_p<double>(n, 1.0, 0.7, 10.0);
    Xoshiro256pp rng(3);
    const MatrixXd w = gaussian(rng, n - 1, 2, 0.2);
    const MatrixXd z = hp.rightCols(n - 1) * w;
    const auto rep = check_conditions(z, z, hx, hp);
    CHECK(rep.c1.holds);
    CHECK(rep.c2.holds);
    CHECK(rep.tol == doctest::Approx(1e-8));
}
