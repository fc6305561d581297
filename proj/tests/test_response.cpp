#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nhsense/conditions.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/model.hpp"
#include "nhsense/presets.hpp"
#include "nhsense/response.hpp"
#include "nhsense/rng.hpp"

using namespace nhsense;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SensorParams params_ja(int n, double j, double a, double kappa, double beta = 1.0,
                       double tau = 1.0) {
    return SensorParams::from_amplification(n, j, a, kappa, beta, tau);
}

const MatrixXd kNoBath = MatrixXd::Zero(3, 0);

MatrixXd no_bath(int n) { return MatrixXd::Zero(n, 0); }

} // namespace

TEST_CASE("information_matrices: corner elements and residuals") {
    const SensorParams p = params_ja(3, 1.0, 1.0, 10.0);
    const auto im = information_matrices(p, kNoBath, kNoBath);
    CHECK(im.q_p(0, 0) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(im.q_x(2, 0) == doctest::Approx(-0.2 * std::exp(2.0)).epsilon(1e-12));
    CHECK(im.q_p(0, 2) == doctest::Approx(-0.2 * std::exp(2.0)).epsilon(1e-12));
    CHECK(im.residual_x <= 1e-9);
    CHECK(im.residual_p <= 1e-9);

    // balanced Y = Z reproduces the noiseless inverses
    const MatrixXd z = preset_loss_tuned(0.5).materialize(1.0);
    const auto imb = information_matrices(p, z, z);
    CHECK((imb.q_x - im.q_x).cwiseAbs().maxCoeff() <= 1e-12 * im.q_x.cwiseAbs().maxCoeff());

    // explicit-inverse path agrees with targeted single-column solves
    const MatrixXd mx = build_h_x(p);
    const VectorXd col = solve_refined(mx, VectorXd(VectorXd::Unit(3, 0)));
    CHECK((im.q_x.col(0) - col).cwiseAbs().maxCoeff() <= 1e-9 * col.cwiseAbs().maxCoeff());
}

TEST_CASE("information_matrices: instability and conditioning-cap errors") {
    // net noise far outside the case-2 necessary bound
    const SensorParams p = params_ja(3, 1.0, 1.0, 10.0);
    MatrixXd z(3, 1);
    z << 0.0, 0.0, 0.0;
    MatrixXd zbig = MatrixXd::Zero(3, 2);
    // gamma coupling as an explicit loss/gain pair is awkward; use a gain matrix
    // whose YY^T creates the destabilizing coupling
    // simpler: huge balanced-violating gain on site 1
    MatrixXd y(3, 1);
    y << 10.0, 0.0, 0.0; // Y Y^T = 100 |1><1| anti-damps site 1
    CHECK_THROWS_AS(information_matrices(p, no_bath(3), y), UnstableDynamics);

    const SensorParams pcap = params_ja(3, 1.0, 15.1, 10.0);
    CHECK_THROWS_AS(information_matrices(pcap, no_bath(3), no_bath(3)), IllConditioned);
}

TEST_CASE("signal_power_linear: zero at eps = 0 and the ideal closed form") {
    const double kappa = 10.0, a = 1.0;
    const SensorParams p = params_ja(3, 1.0, a, kappa, 1.0, 1.0);
    const auto im = information_matrices(p, kNoBath, kNoBath);
    CHECK(signal_power_linear(p, im, 0.0) == 0.0);

    const double eps = 1e-3;
    const double expect = 2.0 * eps * eps * 100.0 * std::pow(0.2, 4) * std::exp(8.0 * a);
    CHECK(signal_power_linear(p, im, eps) == doctest::Approx(expect).epsilon(1e-11));
}

TEST_CASE("noise_power_linear: noiseless, tuned, and untuned decompositions") {
    const double kappa = 10.0;
    const SensorParams p = params_ja(3, 1.0, 1.0, kappa);
    const auto im0 = information_matrices(p, kNoBath, kNoBath);
    CHECK(noise_power_linear(p, im0, kNoBath, kNoBath) == doctest::Approx(0.5).epsilon(1e-12));

    // C1 + C2: exactly 1/2
    const MatrixXd zt = preset_loss_tuned(0.5).materialize(1.0);
    const auto imt = information_matrices(p, zt, zt);
    CHECK(noise_power_linear(p, imt, zt, zt) == doctest::Approx(0.5).epsilon(1e-9));

    // C1 violated (Y = 0): the bath-injection term is strictly positive and the
    // total moves off 1/2. (The reflection term simultaneously drops below 1/2,
    // so the sum is not necessarily above 1/2 at moderate A.)
    const MatrixXd z1 = preset_loss_a(0.5).materialize(1.0);
    const auto im1 = information_matrices(p, z1, no_bath(3));
    const double total = noise_power_linear(p, im1, z1, no_bath(3));
    const Eigen::RowVectorXd row = im1.q_p.row(0);
    const double injection = kappa * (row * z1).squaredNorm();
    CHECK(injection > 1e-3);
    CHECK(total != doctest::Approx(0.5).epsilon(1e-6));
    CHECK(total == doctest::Approx(0.43372144553296).epsilon(1e-9)); // frozen direct evaluation

    // deep in the amplified regime the untuned noise is far above 1/2
    const SensorParams p3 = params_ja(3, 1.0, 3.0, kappa);
    const MatrixXd z13 = preset_loss_a(0.5).materialize(3.0);
    const auto im13 = information_matrices(p3, z13, no_bath(3));
    CHECK(noise_power_linear(p3, im13, z13, no_bath(3)) > 10.0);
}

TEST_CASE("n_tot_linear: ideal chain closed form") {
    const double kappa = 10.0, beta = 2.0;
    for (double a : {0.0, 1.0}) {
        const SensorParams p = params_ja(3, 1.0, a, kappa, beta);
        const auto im = information_matrices(p, kNoBath, kNoBath);
        const double expect = kappa * beta * beta * (4.0 / (kappa * kappa)) *
                              (1.0 + std::exp(4.0 * a));
        CHECK(n_tot_linear(p, im) == doctest::Approx(expect).epsilon(1e-11));
    }
    const SensorParams p0 = params_ja(3, 1.0, 1.0, kappa, 0.0);
    const auto im = information_matrices(p0, kNoBath, kNoBath);
    CHECK(n_tot_linear(p0, im) == 0.0);
    // A = 0 special value: 8 beta^2 / kappa
    const SensorParams pa0 = params_ja(3, 1.0, 0.0, kappa, beta);
    CHECK(n_tot_linear(pa0, information_matrices(pa0, kNoBath, kNoBath)) ==
          doctest::Approx(8.0 * beta * beta / kappa).epsilon(1e-12));
}

TEST_CASE("snr_per_photon_linear: ideal closed form and large-A log path") {
    const double kappa = 10.0;
    for (double a : {0.0, 0.5, 1.0, 2.0}) {
        const SensorParams p = params_ja(3, 1.0, a, kappa, 1.0, 1.0);
        const double eps = 1e-3;
        const auto rep = snr_per_photon_linear(p, kNoBath, kNoBath, eps);
        const double expect_norm =
            (16.0 / kappa) * std::exp(8.0 * a) / (1.0 + std::exp(4.0 * a));
        CHECK(rep.snr_per_photon / (p.tau * eps * eps) ==
              doctest::Approx(expect_norm).epsilon(1e-10));
        CHECK(rep.log10_snr_per_photon_normalized ==
              doctest::Approx(std::log10(expect_norm)).epsilon(1e-12));
        CHECK(rep.stable);
        CHECK(rep.snr == doctest::Approx(rep.signal / rep.noise));
    }

    // N = 7, A(N-1) = 30: still on the balanced fast path, log output finite and affine
    const SensorParams pbig = params_ja(7, 1.0, 5.0, kappa, 1.0, 1.0);
    const auto rbig = snr_per_photon_linear(pbig, no_bath(7), no_bath(7), 1e-3);
    CHECK(std::isfinite(rbig.log10_snr_per_photon_normalized));
    const SensorParams pbig2 = params_ja(7, 1.0, 4.9, kappa, 1.0, 1.0);
    const auto rbig2 = snr_per_photon_linear(pbig2, no_bath(7), no_bath(7), 1e-3);
    // d log10 / dA = 2(N-1)/ln10 asymptotically
    CHECK((rbig.log10_snr_per_photon_normalized - rbig2.log10_snr_per_photon_normalized) / 0.1 ==
          doctest::Approx(2.0 * 6.0 / std::log(10.0)).epsilon(1e-4));
}

TEST_CASE("steady_state_mean: sector separation, scaling, and the x1 element") {
    const SensorParams p = params_ja(3, 1.0, 0.7, 4.0, 2.0);
    const VectorXd q = steady_state_mean(p, kNoBath, kNoBath, 0.0);
    CHECK(q.tail(3).cwiseAbs().maxCoeff() <= 1e-12);
    const auto im = information_matrices(p, kNoBath, kNoBath);
    CHECK(q(0) == doctest::Approx(std::sqrt(2.0 * p.kappa) * p.beta * im.q_x(0, 0)).epsilon(1e-10));

    SensorParams p2 = p;
    p2.beta = 2.0 * p.beta;
    const VectorXd q2 = steady_state_mean(p2, kNoBath, kNoBath, 0.0);
    CHECK((q2 - 2.0 * q).cwiseAbs().maxCoeff() <= 1e-10 * q.cwiseAbs().maxCoeff());
}

TEST_CASE("revival identities for random C1-satisfying loss") {
    const int n = 5;
    const double j = 1.0, a = 0.7, kappa = 10.0;
    const SensorParams p = params_ja(n, j, a, kappa);
    const MatrixXd hp = build_h_p(p);
    const MatrixXd hx = build_h_x(p);
    const MatrixXd hpinv = inverse_refined(hp);
    const MatrixXd hxinv = inverse_refined(hx);

    Xoshiro256pp rng(2024);
    NormalSampler normal(rng.next());
    int accepted = 0, tried = 0;
    while (accepted < 5 && tried < 100) {
        ++tried;
        MatrixXd w(n - 1, 2);
        for (int i = 0; i < n - 1; ++i)
            for (int k = 0; k < 2; ++k) w(i, k) = 0.25 * normal();
        const MatrixXd z = hp.rightCols(n - 1) * w;
        const MatrixXd net = net_noise(z, no_bath(n));
        if (spectral_abscissa(hx + net) >= -1e-9 || spectral_abscissa(hp + net) >= -1e-9) continue;
        ++accepted;
        const auto im = information_matrices(p, z, no_bath(n));
        const double scale_p = hpinv.row(0).cwiseAbs().maxCoeff();
        const double scale_x = hxinv.col(0).cwiseAbs().maxCoeff();
        for (int jj = 0; jj < n; ++jj) {
            CHECK(std::abs(im.q_p(0, jj) - hpinv(0, jj)) <= 1e-8 * scale_p);
            CHECK(std::abs(im.q_x(jj, 0) - hxinv(jj, 0)) <= 1e-8 * scale_x);
        }
        // zero injection into the measured quadrature
        const double inj = (im.q_p.row(0) * z).squaredNorm() /
                           std::max(1.0, (z * z.transpose()).norm());
        CHECK(inj <= 1e-10);
    }
    CHECK(accepted == 5);
}

TEST_CASE("signal_power_beyond: linear limit and balanced equality") {
    const SensorParams p = params_ja(3, 1.0, 0.5, 10.0, 1.0, 1.0);
    const auto im = information_matrices(p, kNoBath, kNoBath);

    // ratio beyond/linear approaches 1 quadratically in eps0
    double prev_dev = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double eps0 = 0.04 / std::pow(2.0, k);
        const double sb = signal_power_beyond(p, kNoBath, kNoBath, eps0);
        const double sl = signal_power_linear(p, im, eps0);
        const double dev = std::abs(sb / sl - 1.0);
        if (k > 0) {
            CHECK(prev_dev / dev == doctest::Approx(4.0).epsilon(0.15));
        }
        prev_dev = dev;
    }

    // balanced loss/gain leaves the generator, hence the signal, unchanged
    const MatrixXd z = preset_loss_tuned(0.4).materialize(0.5);
    CHECK(signal_power_beyond(p, z, z, 0.3) ==
          doctest::Approx(signal_power_beyond(p, kNoBath, kNoBath, 0.3)).epsilon(1e-12));
}

TEST_CASE("noise_power_beyond: noiseless value and the C2+C3+C4 equality") {
    const SensorParams p3 = params_ja(3, 1.0, 1.0, 10.0, 1.0, 1.0);
    CHECK(noise_power_beyond(p3, kNoBath, kNoBath, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

    // N = 5: construct Z inside span{h_p cols 2..N-1} and orthogonal to row N of h_x^{-1}
    const int n = 5;
    const SensorParams p = params_ja(n, 1.0, 1.0, 10.0, 1.0, 1.0);
    const MatrixXd hp = build_h_p(p);
    const MatrixXd hx = build_h_x(p);
    const MatrixXd b = hp.middleCols(1, n - 2);
    const VectorXd vrow =
        solve_refined(MatrixXd(hx.transpose()), VectorXd(VectorXd::Unit(n, n - 1)));
    const Eigen::RowVectorXd vb = vrow.transpose() * b;
    // null-space basis of the 1 x (n-2) map via full QR of its transpose
    Eigen::ColPivHouseholderQR<MatrixXd> qr(vb.transpose());
    const MatrixXd qfull = qr.householderQ();
    const MatrixXd wnull = qfull.rightCols(n - 3); // (n-2) x (n-3)
    Xoshiro256pp rng(77);
    NormalSampler normal(rng.next());
    MatrixXd mix(n - 3, 2);
    for (int i = 0; i < n - 3; ++i)
        for (int k = 0; k < 2; ++k) mix(i, k) = 0.3 * normal();
    const MatrixXd z = b * (wnull * mix);
    REQUIRE(check_c3(z, hp).holds);
    REQUIRE(check_c4(z, hx).holds);

    const double eps0 = 0.5;
    const double with_z = noise_power_beyond(p, z, z, eps0);
    const double without = noise_power_beyond(p, no_bath(n), no_bath(n), eps0);
    CHECK(with_z == doctest::Approx(without).epsilon(1e-9));

    // C2 alone (tuned layout violates C3/C4) does not reproduce the noiseless value
    const SensorParams q3 = params_ja(3, 1.0, 1.0, 10.0, 1.0, 1.0);
    const MatrixXd zt = preset_loss_tuned(0.5).materialize(1.0);
    CHECK(noise_power_beyond(q3, zt, zt, eps0) >
          1.0001 * noise_power_beyond(q3, kNoBath, kNoBath, eps0));
}

TEST_CASE("snr_beyond: linear limit, degenerate drive") {
    const SensorParams p = params_ja(3, 1.0, 0.5, 10.0, 1.0, 1.0);
    const double eps0 = 1e-3; // eps0/kappa = 1e-4
    const auto rb = snr_beyond(p, kNoBath, kNoBath, eps0);
    const auto rl = snr_per_photon_linear(p, kNoBath, kNoBath, eps0);
    CHECK(rb.snr_per_photon / rl.snr_per_photon == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rb.regime == Regime::BeyondLinear);

    SensorParams p0 = p;
    p0.beta = 0.0;
    CHECK_THROWS_AS(snr_beyond(p0, kNoBath, kNoBath, eps0), InvalidParams);
}

TEST_CASE("report quantities agree between solve and explicit-inverse routes") {
    const SensorParams p = params_ja(5, 1.0, 1.2, 7.0, 1.5, 2.0);
    const MatrixXd z = 0.3 * build_h_p(p).rightCols(4).leftCols(2);
    const auto im = information_matrices(p, z, no_bath(5));
    const MatrixXd mx = build_h_x(p) + net_noise(z, no_bath(5));
    const MatrixXd mp = build_h_p(p) + net_noise(z, no_bath(5));
    const MatrixXd qx_direct = mx.inverse(); // plain Eigen inverse as the alternate route
    const MatrixXd qp_direct = mp.inverse();
    CHECK((im.q_x - qx_direct).norm() <= 1e-9 * qx_direct.norm());
    CHECK((im.q_p - qp_direct).norm() <= 1e-9 * qp_direct.norm());
}
