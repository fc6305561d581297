// timedomain.hpp — dynamical oracles: mean-ODE relaxation, Lyapunov covariance,
// exact finite-window output variance, and seeded Euler-Maruyama ensembles.
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "nhsense/errors.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/model.hpp"
#include "nhsense/params.hpp"
#include "nhsense/rng.hpp"

namespace nhsense {

// Drift plus noise intensity of the quadrature Langevin system.
// `diffusion` holds (1/2) L L^T: each independent channel enters with the vacuum
// symmetrized intensity 1/2, and the steady covariance solves
//   M Sigma + Sigma M^T + diffusion = 0,
// normalized so a single damped mode settles at variance 1/2 (locked by test).
struct DiffusionModel {
    Eigen::MatrixXd drift;     // 2N x 2N generator at eps
    Eigen::MatrixXd diffusion; // (1/2) L L^T, symmetric PSD
};

inline DiffusionModel build_diffusion_model(const SensorParams& p, const Eigen::MatrixXd& z,
                                            const Eigen::MatrixXd& y, double eps) {
    const QuadratureGenerator gen = assemble_generator(p, z, y, eps);
    const NoiseInputMap map = build_noise_input_map(p, z, y);
    DiffusionModel dm;
    dm.drift = gen.full();
    dm.diffusion = 0.5 * map.matrix * map.matrix.transpose();
    return dm;
}

inline Eigen::MatrixXd lyapunov_covariance(const DiffusionModel& dm) {
    const double tol = stability_tolerance(dm.drift);
    if (!(spectral_abscissa(dm.drift) < -tol)) {
        throw UnstableDynamics("lyapunov_covariance: drift is not Hurwitz, no steady covariance");
    }
    Eigen::MatrixXd sigma = lyapunov_solve(dm.drift, dm.diffusion);
    const double res = lyapunov_residual(dm.drift, dm.diffusion, sigma);
    if (!(res <= 1e-9)) {
        throw IllConditioned("lyapunov_covariance: residual " + std::to_string(res) + " > 1e-9");
    }
    return sigma;
}

struct OdeOptions {
    double dt_scale{0.5};       // dt = dt_scale / ||M||_inf
    std::int64_t max_steps{20000000};
};

// Relax dq/dt = M q - drive from q(0) = 0 with fixed-step RK4 until
// ||M q - drive|| <= tol * ||drive||. Non-convergence signals instability
// (or a tolerance tighter than the scheme can reach).
inline Eigen::VectorXd steady_mean_ode(const QuadratureGenerator& gen, double tol,
                                       const OdeOptions& opts = {}) {
    const Eigen::MatrixXd m = gen.full();
    const Eigen::VectorXd& drive = gen.drive;
    const double scale = std::max(drive.norm(), 1e-300);
    const double mnorm = std::max(m.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    const double dt = opts.dt_scale / mnorm;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(m.rows());
    Eigen::VectorXd k1, k2, k3, k4;
    for (std::int64_t step = 0; step < opts.max_steps; ++step) {
        k1 = m * q - drive;
        if (step % 16 == 0 && k1.norm() <= tol * scale) return q;
        k2 = m * (q + 0.5 * dt * k1) - drive;
        k3 = m * (q + 0.5 * dt * k2) - drive;
        k4 = m * (q + dt * k3) - drive;
        q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!q.allFinite()) {
            throw ConvergenceFailure("steady_mean_ode: trajectory diverged (unstable dynamics)");
        }
    }
    throw ConvergenceFailure("steady_mean_ode: no convergence within max horizon");
}

struct TrajectoryEnsemble {
    std::uint64_t seed{1};
    int n_traj{10000};
    double dt{0.0};         // 0: auto, 0.01 / ||M||_inf
    double t_end{0.0};      // 0: auto, burn-in + window
    double tau_window{0.0}; // 0: auto, 40 / |spectral abscissa|
};

struct MonteCarloResult {
    double estimate{0.0};
    double std_error{0.0};
    int n_traj{0};
    double dt{0.0};
    double tau_window{0.0};
    double t_end{0.0};
};

namespace detail {

struct PSectorSystem {
    Eigen::MatrixXd m;      // h_p + net
    Eigen::MatrixXd noise;  // N x (1 + N_Y + N_Z): [sqrt(k) e1, -sqrt(2) Y, sqrt(2) Z]
};

// The temporal-mode observable involves only P-sector quantities, and at eps = 0
// the X and P blocks decouple, so the ensemble integrates the N-dimensional
// P sector with the full channel set that feeds it.
inline PSectorSystem p_sector(const SensorParams& p, const Eigen::MatrixXd& z,
                              const Eigen::MatrixXd& y) {
    PSectorSystem s;
    s.m = build_h_p(p) + net_noise(z, y);
    const Eigen::Index n = p.n_sites;
    s.noise = Eigen::MatrixXd::Zero(n, 1 + y.cols() + z.cols());
    s.noise(0, 0) = std::sqrt(p.kappa);
    s.noise.block(0, 1, n, y.cols()) = -std::sqrt(2.0) * y;
    s.noise.block(0, 1 + y.cols(), n, z.cols()) = std::sqrt(2.0) * z;
    return s;
}

// One trajectory's temporal-mode sample  m = (1/sqrt(tau)) Int (P_in + sqrt(k) p_1) dt.
// The P_in increments feeding the chain are reused in the observable, as the
// physics requires; beta only displaces the mean and is irrelevant to the variance,
// so the drive term is omitted.
inline double mc_trajectory(const PSectorSystem& sys, double kappa, double dt,
                            std::int64_t burn_steps, std::int64_t window_steps,
                            std::uint64_t stream_seed) {
    NormalSampler normal(stream_seed);
    const Eigen::Index n = sys.m.rows();
    const Eigen::Index nch = sys.noise.cols();
    const Eigen::MatrixXd mdt = sys.m * dt;
    const double sqdt = std::sqrt(0.5 * dt); // vacuum channel intensity 1/2
    const double sqk = std::sqrt(kappa);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd dw(nch);
    Eigen::VectorXd qnew(n);
    double acc_p1 = 0.0;
    double acc_win = 0.0;
    const std::int64_t total = burn_steps + window_steps;
    for (std::int64_t step = 0; step < total; ++step) {
        for (Eigen::Index c = 0; c < nch; ++c) dw(c) = normal() * sqdt;
        if (step >= burn_steps) {
            acc_p1 += q(0) * dt;  // Ito convention: left endpoint
            acc_win += dw(0);     // shared P_in increment
        }
        qnew.noalias() = q + mdt * q;
        qnew.noalias() -= sys.noise * dw;
        q.swap(qnew);
    }
    const double tau = double(window_steps) * dt;
    return (acc_win + sqk * acc_p1) / std::sqrt(tau);
}

} // namespace detail

// Ensemble estimate of the noise power N(0) = Var(M-hat) with standard error.
// Identical seeds give bit-identical results regardless of thread count: each
// trajectory has its own stream and the reduction runs in index order.
inline MonteCarloResult monte_carlo_noise_power(const SensorParams& p, const Eigen::MatrixXd& z,
                                                const Eigen::MatrixXd& y,
                                                const TrajectoryEnsemble& ens,
                                                int n_threads = 1) {
    p.validate();
    if (ens.n_traj < 2) throw InvalidParams("monte_carlo_noise_power: need at least 2 trajectories");
    const detail::PSectorSystem sys = detail::p_sector(p, z, y);
    const double absc = spectral_abscissa(sys.m);
    const double tol = stability_tolerance(sys.m);
    if (!(absc < -tol)) {
        throw UnstableDynamics("monte_carlo_noise_power: P-sector dynamics is unstable");
    }
    const double mnorm = sys.m.cwiseAbs().rowwise().sum().maxCoeff();
    MonteCarloResult r;
    r.n_traj = ens.n_traj;
    r.dt = (ens.dt > 0.0) ? ens.dt : 0.01 / mnorm;
    r.tau_window = (ens.tau_window > 0.0) ? ens.tau_window : 40.0 / (-absc);
    const double burn_default = r.tau_window + 10.0 / (-absc);
    r.t_end = (ens.t_end > 0.0) ? ens.t_end : burn_default;
    if (r.t_end < r.tau_window) {
        throw InvalidParams("monte_carlo_noise_power: t_end must cover tau_window");
    }
    const auto window_steps = static_cast<std::int64_t>(std::llround(r.tau_window / r.dt));
    const auto burn_steps =
        static_cast<std::int64_t>(std::llround((r.t_end - r.tau_window) / r.dt));
    if (window_steps < 10) throw InvalidParams("monte_carlo_noise_power: window too short for dt");

    std::vector<double> samples(static_cast<std::size_t>(ens.n_traj));
    const int workers = std::max(1, n_threads);
    std::vector<std::thread> pool;
    std::atomic<int> cursor{0};
    auto body = [&]() {
        for (;;) {
            const int i = cursor.fetch_add(64);
            if (i >= ens.n_traj) return;
            const int hi = std::min(i + 64, ens.n_traj);
            for (int k = i; k < hi; ++k) {
                samples[static_cast<std::size_t>(k)] =
                    detail::mc_trajectory(sys, p.kappa, r.dt, burn_steps, window_steps,
                                          trajectory_seed(ens.seed, static_cast<std::uint64_t>(k)));
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= double(ens.n_traj);
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= double(ens.n_traj - 1);
    r.estimate = var;
    r.std_error = var * std::sqrt(2.0 / double(ens.n_traj - 1));
    return r;
}

// Exact stationary variance of the finite-window temporal mode, all boundary
// terms included:
//   Var = 1/2 - 2 kappa [M^{-1} S]_11 + (2 kappa / tau) [M^{-2} (e^{M tau} - I) S]_11
//         - (sqrt(kappa) / tau) [M^{-1} (M^{-1} (e^{M tau} - I) - tau I) Lp]_{1,1ch}
// on the P sector (p_1 is row 1, the waveguide P channel is column 1). This is the
// design and validation oracle for the ensemble estimator's window bias.
inline double temporal_mode_variance_exact(const SensorParams& p, const Eigen::MatrixXd& z,
                                           const Eigen::MatrixXd& y, double tau) {
    const detail::PSectorSystem sys = detail::p_sector(p, z, y);
    const double tol = stability_tolerance(sys.m);
    if (!(spectral_abscissa(sys.m) < -tol)) {
        throw UnstableDynamics("temporal_mode_variance_exact: unstable P sector");
    }
    const Eigen::Index n = sys.m.rows();
    const Eigen::MatrixXd q = 0.5 * sys.noise * sys.noise.transpose();
    const Eigen::MatrixXd sigma = lyapunov_solve(sys.m, q);
    const Eigen::MatrixXd minv = inverse_refined(sys.m);
    const Eigen::MatrixXd expm = (sys.m * tau).exp();
    const Eigen::MatrixXd em1 = expm - Eigen::MatrixXd::Identity(n, n);
    const double term_pp =
        p.kappa * (-2.0 * (minv * sigma)(0, 0) + (2.0 / tau) * (minv * minv * em1 * sigma)(0, 0));
    const Eigen::MatrixXd cross_core =
        minv * (minv * em1 - tau * Eigen::MatrixXd::Identity(n, n)) * sys.noise;
    const double term_cross = -(std::sqrt(p.kappa) / tau) * cross_core(0, 0);
    return 0.5 + term_pp + term_cross;
}

} // namespace nhsense
