// stability.hpp — spectral and Routh-Hurwitz verdicts plus the analytic
// necessary bounds for single-coupling net-noise perturbations.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "nhsense/errors.hpp"
#include "nhsense/linalg.hpp"
#include "nhsense/model.hpp"
#include "nhsense/params.hpp"

namespace nhsense {

enum class RouthVerdict { Stable, Unstable, Degenerate };

struct StabilityReport {
    double spectral_abscissa{0.0};
    bool stable{false};
    double margin{0.0}; // distance of the abscissa from zero
    RouthVerdict routh_verdict{RouthVerdict::Degenerate};
    std::vector<std::vector<double>> routh_table; // empty when Routh was skipped
    Eigen::VectorXd char_poly;                    // monic, descending powers; empty when skipped
};

struct StabilityOptions {
    double tol_scale{1e-9};    // stability_tolerance scale factor (see linalg.hpp)
    int routh_max_degree{10};  // above this, Routh coefficients are numerically meaningless
};

// Spectral fields only: abscissa, verdict, margin.
inline StabilityReport spectral_stability(const Eigen::MatrixXd& m, double tol) {
    StabilityReport r;
    r.spectral_abscissa = spectral_abscissa(m);
    r.stable = r.spectral_abscissa < -tol;
    r.margin = -r.spectral_abscissa;
    return r;
}

// Monic characteristic polynomial by the Faddeev-LeVerrier recursion,
// c_k = -tr(M (M_{k-1} + c_{k-1} I)) / k. Adequate for the n <= 10 Routh range.
inline Eigen::VectorXd char_poly_coeffs(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("char_poly_coeffs: matrix not square");
    const Eigen::Index n = m.rows();
    Eigen::VectorXd c(n + 1);
    c(0) = 1.0;
    Eigen::MatrixXd mk = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        mk = m * (mk + c(k - 1) * id);
        c(k) = -mk.trace() / double(k);
    }
    return c;
}

// Full Routh array for a monic polynomial (descending coefficients).
// A pivot that vanishes (relative to its source rows) makes the verdict
// Degenerate; the classic epsilon substitution is deliberately not applied.
inline std::pair<std::vector<std::vector<double>>, RouthVerdict>
routh_table(const Eigen::VectorXd& coeffs, double pivot_tol = 1e-12) {
    const Eigen::Index deg = coeffs.size() - 1;
    if (deg < 1) throw InvalidParams("routh_table: polynomial degree must be >= 1");
    if (coeffs(0) == 0.0) throw InvalidParams("routh_table: polynomial must be monic-like (a0 != 0)");

    const Eigen::Index width = deg / 2 + 1;
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(deg + 1));
    std::vector<double> r0, r1;
    for (Eigen::Index i = 0; i < coeffs.size(); i += 2) r0.push_back(coeffs(i));
    for (Eigen::Index i = 1; i < coeffs.size(); i += 2) r1.push_back(coeffs(i));
    r0.resize(static_cast<std::size_t>(width), 0.0);
    r1.resize(static_cast<std::size_t>(width), 0.0);
    rows.push_back(r0);
    rows.push_back(r1);

    auto row_scale = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (double v : a) s = std::max(s, std::abs(v));
        for (double v : b) s = std::max(s, std::abs(v));
        return std::max(s, 1e-300);
    };

    for (Eigen::Index k = 2; k <= deg; ++k) {
        const auto& above = rows[static_cast<std::size_t>(k - 2)];
        const auto& prev = rows[static_cast<std::size_t>(k - 1)];
        if (std::abs(prev[0]) <= pivot_tol * row_scale(above, prev)) {
            rows.resize(static_cast<std::size_t>(k + 1));
            return {rows, RouthVerdict::Degenerate};
        }
        std::vector<double> next(static_cast<std::size_t>(width), 0.0);
        for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(width); ++i) {
            next[i] = (prev[0] * above[i + 1] - above[0] * prev[i + 1]) / prev[0];
        }
        rows.push_back(std::move(next));
    }

    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const auto& nextrow = rows[k + 1];
        if (std::abs(rows[k][0]) <= pivot_tol * row_scale(rows[k], nextrow)) {
            return {rows, RouthVerdict::Degenerate};
        }
    }
    if (std::abs(rows.back()[0]) <= pivot_tol * row_scale(rows.back(), rows[rows.size() - 2])) {
        return {rows, RouthVerdict::Degenerate};
    }
    bool all_positive = true;
    for (const auto& row : rows) {
        if (row[0] <= 0.0) {
            all_positive = false;
            break;
        }
    }
    return {rows, all_positive ? RouthVerdict::Stable : RouthVerdict::Unstable};
}

// Spectral verdict plus the Routh cross-check when the degree permits.
inline StabilityReport full_stability(const Eigen::MatrixXd& m, const StabilityOptions& opts = {}) {
    StabilityReport r = spectral_stability(m, stability_tolerance(m, opts.tol_scale));
    if (m.rows() <= opts.routh_max_degree) {
        r.char_poly = char_poly_coeffs(m);
        auto [table, verdict] = routh_table(r.char_poly);
        r.routh_table = std::move(table);
        r.routh_verdict = verdict;
    }
    return r;
}

// D_N(lambda) = sum_{k=0}^{[N/2]} C(N-k, k) lambda^{N-2k} J^{2k}; the characteristic
// polynomial of the bare hopping chain (independent of A).
inline Eigen::VectorXd tridiagonal_char_poly_dn(int n, double hop_j) {
    if (n < 1) throw InvalidParams("tridiagonal_char_poly_dn: N must be >= 1");
    if (!(hop_j > 0.0)) throw InvalidParams("tridiagonal_char_poly_dn: J must be > 0");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    const double j2 = hop_j * hop_j;
    double binom = 1.0; // C(N-k, k), updated multiplicatively
    double jpow = 1.0;
    for (int k = 0; 2 * k <= n; ++k) {
        c(2 * k) = binom * jpow;
        // C(N-k-1, k+1) = C(N-k, k) * (N-2k)(N-2k-1) / ((k+1)(N-k))
        binom *= double(n - 2 * k) * double(n - 2 * k - 1) / (double(k + 1) * double(n - k));
        jpow *= j2;
    }
    return c;
}

// Necessary bound for net noise gamma(|1><N-1| + |N-1><1|): the asymptotic interval
// |gamma| < (N+1)/2 J e^{-A(N-2)} plus the exact roots of the first-order-coefficient
// quadratic in the X sector. Meaningful once A(N-2) is a few units or more.
struct Case1Bound {
    double asym_bound{0.0}; // (N+1)/2 J e^{-A(N-2)}
    double root_lo{0.0};    // exact quadratic roots, root_lo < 0 < root_hi
    double root_hi{0.0};
};

inline Case1Bound necessary_bound_case1(int n, double hop_j, double amp_a) {
    if (n < 3 || n % 2 == 0) throw InvalidParams("necessary_bound_case1: N must be odd and >= 3");
    Case1Bound b;
    const double s = std::exp(-amp_a * (n - 2)) - std::exp(amp_a * (n - 2));
    const double disc = std::sqrt(s * s + 2.0 * double(n + 1));
    b.root_lo = 0.5 * hop_j * (s - disc);
    b.root_hi = 0.5 * hop_j * (s + disc);
    b.asym_bound = 0.5 * double(n + 1) * hop_j * std::exp(-amp_a * (n - 2));
    return b;
}

// Necessary bound for net noise gamma(|1><N| + |N><1|): |gamma| < kappa e^{-A(N-1)},
// plus the two one-sided constraints it combines.
struct Case2Bound {
    double bound{0.0};    // kappa e^{-A(N-1)}
    double upper_r2{0.0}; // gamma <  (kappa/2) / (e^{-A(N-1)} + e^{A(N-1)})
    double lower_l2{0.0}; // gamma > -kappa e^{-A(N-1)}
};

inline Case2Bound necessary_bound_case2(int n, double kappa, double amp_a) {
    if (n < 3 || n % 2 == 0) throw InvalidParams("necessary_bound_case2: N must be odd and >= 3");
    Case2Bound b;
    const double e = std::exp(-amp_a * (n - 1));
    b.bound = kappa * e;
    b.upper_r2 = 0.5 * kappa / (e + std::exp(amp_a * (n - 1)));
    b.lower_l2 = -kappa * e;
    return b;
}

struct GammaScanPoint {
    double gamma{0.0};
    double abscissa_x{0.0};
    double abscissa_p{0.0};
    bool stable{false};
};

// Joint spectral verdict of both sectors with net noise gamma placed per case
// (1: sites 1 and N-1; 2: sites 1 and N). Output order matches input order.
inline std::vector<GammaScanPoint> gamma_stability_scan(const SensorParams& p, int coupling_case,
                                                        const std::vector<double>& gammas,
                                                        double tol_scale = 1e-9) {
    p.validate();
    if (coupling_case != 1 && coupling_case != 2) {
        throw InvalidParams("gamma_stability_scan: case must be 1 or 2");
    }
    const Eigen::Index n = p.n_sites;
    const Eigen::Index site = (coupling_case == 1) ? n - 2 : n - 1;
    const Eigen::MatrixXd hx = build_h_x(p);
    const Eigen::MatrixXd hp = build_h_p(p);
    std::vector<GammaScanPoint> out(gammas.size());
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        const double g = gammas[i];
        if (!std::isfinite(g)) throw InvalidParams("gamma_stability_scan: gamma must be finite");
        Eigen::MatrixXd net = Eigen::MatrixXd::Zero(n, n);
        net(0, site) += g;
        net(site, 0) += g;
        const Eigen::MatrixXd mx = hx + net;
        const Eigen::MatrixXd mp = hp + net;
        const double tol = tol_scale * std::max(mx.cwiseAbs().rowwise().sum().maxCoeff(),
                                                mp.cwiseAbs().rowwise().sum().maxCoeff());
        GammaScanPoint pt;
        pt.gamma = g;
        pt.abscissa_x = spectral_abscissa(mx);
        pt.abscissa_p = spectral_abscissa(mp);
        pt.stable = std::max(pt.abscissa_x, pt.abscissa_p) < -tol;
        out[i] = pt;
    }
    return out;
}

} // namespace nhsense
