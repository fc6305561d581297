// model.hpp — dynamical matrices, quadrature generator, and noise-input map
//
// Quadrature convention: state q = (x_1..x_N, p_1..p_N), 1-based site labels in
// docs and file formats. Dynamics dq/dt = H[eps] q - drive - noise, with
//   H[eps] = blockdiag(h_x + net, h_p + net) + eps|N><2N| - eps|2N><N|,
//   net    = Y Y^T - Z Z^T,
//   drive  = (sqrt(2 kappa) beta, 0, ..., 0)^T.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "nhsense/errors.hpp"
#include "nhsense/params.hpp"

namespace nhsense {

template <typename Scalar = double>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// X-sector chain: -(kappa/2)|1><1| + sum_n ( J e^{A} |n+1><n| - J e^{-A} |n><n+1| ).
template <typename Scalar = double>
DenseMatrix<Scalar> build_h_x(Eigen::Index n_sites, Scalar hop_j, Scalar amp_a, Scalar kappa) {
    if (n_sites < 1) throw InvalidParams("build_h_x: n_sites must be >= 1");
    DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Zero(n_sites, n_sites);
    m(0, 0) = -kappa / Scalar(2);
    const Scalar right = hop_j * std::exp(amp_a);  // |n+1><n|
    const Scalar left = hop_j * std::exp(-amp_a);  // |n><n+1|
    for (Eigen::Index n = 0; n + 1 < n_sites; ++n) {
        m(n + 1, n) += right;
        m(n, n + 1) += -left;
    }
    return m;
}

// P-sector chain: same with A -> -A.
template <typename Scalar = double>
DenseMatrix<Scalar> build_h_p(Eigen::Index n_sites, Scalar hop_j, Scalar amp_a, Scalar kappa) {
    return build_h_x<Scalar>(n_sites, hop_j, -amp_a, kappa);
}

inline Eigen::MatrixXd build_h_x(const SensorParams& p) {
    const DerivedParams d = derive_params(p);
    return build_h_x<double>(p.n_sites, d.hop_j, d.amp_a, p.kappa);
}

inline Eigen::MatrixXd build_h_p(const SensorParams& p) {
    const DerivedParams d = derive_params(p);
    return build_h_p<double>(p.n_sites, d.hop_j, d.amp_a, p.kappa);
}

// Net drift contribution of the baths: Y Y^T - Z Z^T (symmetric by construction).
template <typename DerivedZ, typename DerivedY>
Eigen::MatrixXd net_noise(const Eigen::MatrixBase<DerivedZ>& z,
                          const Eigen::MatrixBase<DerivedY>& y) {
    if (z.rows() != y.rows()) {
        throw DimensionMismatch("net_noise: Z and Y must have the same number of rows");
    }
    return y * y.transpose() - z * z.transpose();
}

struct QuadratureGenerator {
    Eigen::Index n_sites{0};
    Eigen::MatrixXd mx_block; // h_x + net
    Eigen::MatrixXd mp_block; // h_p + net
    double eps{0.0};
    Eigen::VectorXd drive;    // 2N

    Eigen::Index dim() const { return 2 * n_sites; }

    Eigen::MatrixXd full() const {
        const Eigen::Index n = n_sites;
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        m.topLeftCorner(n, n) = mx_block;
        m.bottomRightCorner(n, n) = mp_block;
        m(n - 1, 2 * n - 1) += eps;
        m(2 * n - 1, n - 1) += -eps;
        return m;
    }
};

inline QuadratureGenerator assemble_generator(const SensorParams& p, const Eigen::MatrixXd& z,
                                              const Eigen::MatrixXd& y, double eps) {
    p.validate();
    if (z.rows() != p.n_sites || y.rows() != p.n_sites) {
        throw DimensionMismatch("assemble_generator: coupling matrices must have N rows");
    }
    if (!z.allFinite() || !y.allFinite()) {
        throw InvalidParams("assemble_generator: non-finite coupling entries");
    }
    if (!std::isfinite(eps)) throw InvalidParams("assemble_generator: eps must be finite");
    const Eigen::MatrixXd net = net_noise(z, y);
    QuadratureGenerator g;
    g.n_sites = p.n_sites;
    g.mx_block = build_h_x(p) + net;
    g.mp_block = build_h_p(p) + net;
    g.eps = eps;
    g.drive = Eigen::VectorXd::Zero(2 * p.n_sites);
    g.drive(0) = std::sqrt(2.0 * p.kappa) * p.beta;
    return g;
}

// Map from independent white-noise channels into the quadrature equations.
// Column order: waveguide X, waveguide P, gain X (N_Y), gain P (N_Y),
// loss X (N_Z), loss P (N_Z). The gain P block carries the opposite sign.
struct NoiseInputMap {
    Eigen::MatrixXd matrix; // 2N x (2 + 2 N_Y + 2 N_Z)
    Eigen::Index n_gain{0};
    Eigen::Index n_loss{0};

    Eigen::Index channels() const { return matrix.cols(); }
};

inline NoiseInputMap build_noise_input_map(const SensorParams& p, const Eigen::MatrixXd& z,
                                           const Eigen::MatrixXd& y) {
    p.validate();
    const Eigen::Index n = p.n_sites;
    if (z.rows() != n || y.rows() != n) {
        throw DimensionMismatch("build_noise_input_map: coupling matrices must have N rows");
    }
    const Eigen::Index ny = y.cols();
    const Eigen::Index nz = z.cols();
    NoiseInputMap map;
    map.n_gain = ny;
    map.n_loss = nz;
    map.matrix = Eigen::MatrixXd::Zero(2 * n, 2 + 2 * ny + 2 * nz);
    const double sk = std::sqrt(p.kappa);
    const double s2 = std::sqrt(2.0);
    map.matrix(0, 0) = sk;            // waveguide X -> x_1
    map.matrix(n, 1) = sk;            // waveguide P -> p_1
    Eigen::Index c = 2;
    map.matrix.block(0, c, n, ny) = s2 * y;  // gain X
    c += ny;
    map.matrix.block(n, c, n, ny) = -s2 * y; // gain P (sign-flipped)
    c += ny;
    map.matrix.block(0, c, n, nz) = s2 * z;  // loss X
    c += nz;
    map.matrix.block(n, c, n, nz) = s2 * z;  // loss P
    return map;
}

} // namespace nhsense
