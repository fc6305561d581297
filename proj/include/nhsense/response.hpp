// response.hpp — steady states, signal/noise powers, photon number, and the
// SNR-per-photon figure of merit, in linear response and beyond.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "nhsense/closed_form.hpp"
#include "nhsense/errors.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/log_value.hpp"
#include "nhsense/model.hpp"
#include "nhsense/params.hpp"

namespace nhsense {

struct ResponseOptions {
    double stability_tol_scale{1e-9};
    double residual_tol{1e-9};
    double conditioning_cap{30.0}; // refuse when A(N-1) exceeds this; see closed-form oracles
};

enum class Regime { Linear, BeyondLinear };

struct SensingReport {
    double signal{0.0};
    double noise{0.0};
    double n_tot{0.0};
    double snr{0.0};
    double snr_per_photon{0.0};
    double log10_snr_per_photon_normalized{0.0}; // log10( SNR-bar / (tau eps^2) )
    Regime regime{Regime::Linear};
    bool stable{false};
};

// Q_x = (h_x + net)^{-1}, Q_p = (h_p + net)^{-1}, with verified residuals.
struct InformationMatrices {
    Eigen::MatrixXd q_x;
    Eigen::MatrixXd q_p;
    double residual_x{0.0};
    double residual_p{0.0};
};

namespace detail {

inline void enforce_conditioning_cap(const SensorParams& p, double cap) {
    const DerivedParams d = derive_params(p);
    if (d.amp_a * double(p.n_sites - 1) > cap) {
        throw IllConditioned(
            "A(N-1) = " + std::to_string(d.amp_a * double(p.n_sites - 1)) +
            " exceeds the conditioning cap " + std::to_string(cap) +
            "; dense solves are unreliable here, use the closed-form oracle paths");
    }
}

inline void require_stable(const Eigen::MatrixXd& m, double tol_scale, const char* what) {
    const double tol = stability_tolerance(m, tol_scale);
    if (!(spectral_abscissa(m) < -tol)) {
        throw UnstableDynamics(std::string("unstable dynamics: ") + what +
                               " has spectral abscissa >= 0; no steady state exists");
    }
}

inline void require_residual(double residual, double tol, const char* what) {
    if (!(residual <= tol)) {
        throw IllConditioned(std::string("ill-conditioned: residual of ") + what + " is " +
                             std::to_string(residual));
    }
}

} // namespace detail

inline InformationMatrices information_matrices(const SensorParams& p, const Eigen::MatrixXd& z,
                                                const Eigen::MatrixXd& y,
                                                const ResponseOptions& opts = {}) {
    p.validate();
    detail::enforce_conditioning_cap(p, opts.conditioning_cap);
    const DerivedParams d = derive_params(p);
    const Eigen::MatrixXd net = net_noise(z, y);
    const Eigen::MatrixXd mx = build_h_x(p) + net;
    const Eigen::MatrixXd mp = build_h_p(p) + net;
    detail::require_stable(mx, opts.stability_tol_scale, "h_x + net");
    detail::require_stable(mp, opts.stability_tol_scale, "h_p + net");

    InformationMatrices im;
    if (net.cwiseAbs().maxCoeff() == 0.0) {
        // Balanced coordinates: invert the A = 0 chain (well conditioned for any A)
        // and scale elementwise, (h_x)^{-1}_{ij} = h^{-1}_{ij} e^{A(i-j)}.
        const Eigen::MatrixXd hinv =
            inverse_refined(balanced_chain<double>(p.n_sites, d.hop_j, p.kappa));
        im.q_x.resize(p.n_sites, p.n_sites);
        im.q_p.resize(p.n_sites, p.n_sites);
        for (Eigen::Index i = 0; i < p.n_sites; ++i) {
            for (Eigen::Index j = 0; j < p.n_sites; ++j) {
                const double s = std::exp(d.amp_a * double(i - j));
                im.q_x(i, j) = hinv(i, j) * s;
                im.q_p(i, j) = hinv(i, j) / s;
            }
        }
    } else {
        im.q_x = inverse_refined(mx);
        im.q_p = inverse_refined(mp);
    }
    im.residual_x = inverse_residual(mx, im.q_x);
    im.residual_p = inverse_residual(mp, im.q_p);
    detail::require_residual(im.residual_x, opts.residual_tol, "Q_x");
    detail::require_residual(im.residual_p, opts.residual_tol, "Q_p");
    return im;
}

// S(eps) = 2 eps^2 kappa^2 beta^2 tau |Q_x[N,1]|^2 |Q_p[1,N]|^2, exact to O(eps^2).
inline double signal_power_linear(const SensorParams& p, const InformationMatrices& im,
                                  double eps) {
    const Eigen::Index n = p.n_sites;
    const double cross = im.q_x(n - 1, 0) * im.q_p(0, n - 1);
    return 2.0 * eps * eps * p.kappa * p.kappa * p.beta * p.beta * p.tau * cross * cross;
}

// N(0) = 1/2 (1 + kappa Q_p[1,1])^2 + kappa [Q_p (YY^T + ZZ^T) Q_p^T]_{1,1}.
inline double noise_power_linear(const SensorParams& p, const InformationMatrices& im,
                                 const Eigen::MatrixXd& z, const Eigen::MatrixXd& y) {
    const Eigen::RowVectorXd row = im.q_p.row(0);
    const double base = 1.0 + p.kappa * im.q_p(0, 0);
    return 0.5 * base * base +
           p.kappa * ((row * y).squaredNorm() + (row * z).squaredNorm());
}

// n_tot(0) = kappa beta^2 sum_n Q_x[n,1]^2 (large-drive limit of the photon number).
inline double n_tot_linear(const SensorParams& p, const InformationMatrices& im) {
    return p.kappa * p.beta * p.beta * im.q_x.col(0).squaredNorm();
}

inline SensingReport snr_per_photon_linear(const SensorParams& p, const Eigen::MatrixXd& z,
                                           const Eigen::MatrixXd& y, double eps,
                                           const ResponseOptions& opts = {}) {
    const InformationMatrices im = information_matrices(p, z, y, opts);
    SensingReport r;
    r.regime = Regime::Linear;
    r.stable = true; // information_matrices would have thrown otherwise
    r.signal = signal_power_linear(p, im, eps);
    r.noise = noise_power_linear(p, im, z, y);
    r.n_tot = n_tot_linear(p, im);
    r.snr = r.signal / r.noise;
    r.snr_per_photon = r.snr / r.n_tot;
    // log10 assembled from per-factor logs so the ordinate survives past the
    // dynamic range of the raw powers
    const Eigen::Index n = p.n_sites;
    const LogValue lg_cross =
        LogValue::from(im.q_x(n - 1, 0)).squared() * LogValue::from(im.q_p(0, n - 1)).squared();
    const LogValue lg_signal_norm = LogValue::from(2.0 * p.kappa * p.kappa * p.beta * p.beta) * lg_cross;
    LogValue lg_ntot = LogValue::zero();
    for (Eigen::Index i = 0; i < n; ++i) lg_ntot = lg_ntot + LogValue::from(im.q_x(i, 0)).squared();
    lg_ntot = lg_ntot * LogValue::from(p.kappa * p.beta * p.beta);
    const LogValue lg = lg_signal_norm / (LogValue::from(r.noise) * lg_ntot);
    r.log10_snr_per_photon_normalized = lg.log_abs / 2.302585092994045684;
    return r;
}

// Mean quadratures: solve H[eps] q = drive (factorized solve, not an explicit inverse).
inline Eigen::VectorXd steady_state_mean(const SensorParams& p, const Eigen::MatrixXd& z,
                                         const Eigen::MatrixXd& y, double eps,
                                         const ResponseOptions& opts = {}) {
    detail::enforce_conditioning_cap(p, opts.conditioning_cap);
    const QuadratureGenerator gen = assemble_generator(p, z, y, eps);
    const Eigen::MatrixXd h = gen.full();
    detail::require_stable(h, opts.stability_tol_scale, "H[eps]");
    return solve_refined(h, gen.drive);
}

namespace detail {

struct BeyondSolves {
    Eigen::VectorXd col1;   // H[eps0]^{-1} e_1
    Eigen::VectorXd row_p1; // e_{N+1}^T H[eps0]^{-1}
    Eigen::MatrixXd w;      // Y Y^T + Z Z^T
};

inline BeyondSolves beyond_solves(const SensorParams& p, const Eigen::MatrixXd& z,
                                  const Eigen::MatrixXd& y, double eps0,
                                  const ResponseOptions& opts) {
    enforce_conditioning_cap(p, opts.conditioning_cap);
    const QuadratureGenerator gen0 = assemble_generator(p, z, y, 0.0);
    const QuadratureGenerator gen = assemble_generator(p, z, y, eps0);
    const Eigen::MatrixXd h0 = gen0.full();
    const Eigen::MatrixXd h = gen.full();
    require_stable(h0, opts.stability_tol_scale, "H[0]");
    require_stable(h, opts.stability_tol_scale, "H[eps0]");
    BeyondSolves s;
    const Eigen::Index dim = gen.dim();
    s.col1 = solve_refined(h, Eigen::VectorXd(Eigen::VectorXd::Unit(dim, 0)));
    s.row_p1 = solve_refined(Eigen::MatrixXd(h.transpose()),
                             Eigen::VectorXd(Eigen::VectorXd::Unit(dim, p.n_sites)));
    s.w = y * y.transpose() + z * z.transpose();
    return s;
}

} // namespace detail

// S(eps0) = 2 tau kappa^2 beta^2 |H[eps0]^{-1}_{N+1,1} - H[0]^{-1}_{N+1,1}|^2, all orders
// in eps0 via the dense 2N x 2N solve. (The prefactor carries beta squared; the drive
// enters the mean displacement linearly in beta and the power is its square.)
inline double signal_power_beyond(const SensorParams& p, const Eigen::MatrixXd& z,
                                  const Eigen::MatrixXd& y, double eps0,
                                  const ResponseOptions& opts = {}) {
    const auto s = detail::beyond_solves(p, z, y, eps0, opts);
    // H[0] is block diagonal, so its (N+1,1) element vanishes identically.
    const double diff = s.col1(p.n_sites);
    return 2.0 * p.tau * p.kappa * p.kappa * p.beta * p.beta * diff * diff;
}

// Averaged noise power N-bar = [N(0) + N(eps0)] / 2 with
//   N(eps0) = 1/2 { kappa^2 (H^{-1}_{N+1,1})^2 + (1 + kappa H^{-1}_{N+1,N+1})^2
//                   + 2 kappa [H^{-1} blockdiag(W, W) H^{-T}]_{N+1,N+1} },  W = YY^T + ZZ^T.
// N(0) uses the linear-response formula with Q_p; when C2 holds this reduces to the
// balanced (h_p)-terms of the all-orders derivation.
inline double noise_power_beyond(const SensorParams& p, const Eigen::MatrixXd& z,
                                 const Eigen::MatrixXd& y, double eps0,
                                 const ResponseOptions& opts = {}) {
    const auto s = detail::beyond_solves(p, z, y, eps0, opts);
    const Eigen::Index n = p.n_sites;
    const Eigen::VectorXd ux = s.row_p1.head(n);
    const Eigen::VectorXd up = s.row_p1.tail(n);
    const double t1 = p.kappa * p.kappa * s.row_p1(0) * s.row_p1(0);
    const double base = 1.0 + p.kappa * s.row_p1(n);
    const double bath = 2.0 * p.kappa * (ux.dot(s.w * ux) + up.dot(s.w * up));
    const double n_eps = 0.5 * (t1 + base * base + bath);
    const InformationMatrices im = information_matrices(p, z, y, opts);
    const double n_zero = noise_power_linear(p, im, z, y);
    return 0.5 * (n_zero + n_eps);
}

inline SensingReport snr_beyond(const SensorParams& p, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& y, double eps0,
                                const ResponseOptions& opts = {}) {
    if (p.beta == 0.0) {
        throw InvalidParams("snr_beyond: zero-photon drive (beta = 0) makes SNR per photon degenerate");
    }
    const auto s = detail::beyond_solves(p, z, y, eps0, opts);
    const Eigen::Index n = p.n_sites;

    const double diff = s.col1(n);
    const double signal = 2.0 * p.tau * p.kappa * p.kappa * p.beta * p.beta * diff * diff;

    const Eigen::VectorXd ux = s.row_p1.head(n);
    const Eigen::VectorXd up = s.row_p1.tail(n);
    const double base = 1.0 + p.kappa * s.row_p1(n);
    const double n_eps = 0.5 * (p.kappa * p.kappa * s.row_p1(0) * s.row_p1(0) + base * base +
                                2.0 * p.kappa * (ux.dot(s.w * ux) + up.dot(s.w * up)));
    const InformationMatrices im = information_matrices(p, z, y, opts);
    const double n_zero = noise_power_linear(p, im, z, y);
    const double noise = 0.5 * (n_zero + n_eps);

    const double kb2 = p.kappa * p.beta * p.beta;
    const double ntot_eps = kb2 * s.col1.squaredNorm();
    const double ntot_zero = kb2 * im.q_x.col(0).squaredNorm();
    const double n_tot = 0.5 * (ntot_zero + ntot_eps);

    SensingReport r;
    r.regime = Regime::BeyondLinear;
    r.stable = true;
    r.signal = signal;
    r.noise = noise;
    r.n_tot = n_tot;
    r.snr = signal / noise;
    r.snr_per_photon = signal / (noise * n_tot);
    const LogValue lg = LogValue::from(signal) /
                        (LogValue::from(noise) * LogValue::from(n_tot) *
                         LogValue::from(p.tau * eps0 * eps0));
    r.log10_snr_per_photon_normalized = lg.log_abs / 2.302585092994045684;
    return r;
}

} // namespace nhsense
