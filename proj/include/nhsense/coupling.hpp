// coupling.hpp — bath coupling templates with entries  scale * coeff * e^{mult*A}
//
// Loss/gain layouts are functions of the amplification factor A, so sweeps over A
// keep the coupling structure consistent instead of re-reading numeric matrices.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "nhsense/errors.hpp"

namespace nhsense {

struct CouplingEntry {
    double coeff{0.0};
    int exp_mult{0}; // entry value = coeff * e^{exp_mult * A}
};

struct CouplingTemplate {
    Eigen::Index rows{0};
    Eigen::Index cols{0};
    std::vector<CouplingEntry> entries; // row-major, rows*cols
    double scale{1.0};                  // global multiplier (the alpha of a layout family)

    static CouplingTemplate zero(Eigen::Index rows, Eigen::Index cols) {
        CouplingTemplate t;
        t.rows = rows;
        t.cols = cols;
        t.entries.assign(static_cast<std::size_t>(rows * cols), CouplingEntry{});
        return t;
    }

    // Plain numeric matrix = template with all exp_mult == 0.
    static CouplingTemplate from_matrix(const Eigen::MatrixXd& m, double scale = 1.0) {
        CouplingTemplate t = zero(m.rows(), m.cols());
        t.scale = scale;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) t.at(i, j) = {m(i, j), 0};
        }
        return t;
    }

    CouplingEntry& at(Eigen::Index i, Eigen::Index j) {
        return entries[static_cast<std::size_t>(i * cols + j)];
    }
    const CouplingEntry& at(Eigen::Index i, Eigen::Index j) const {
        return entries[static_cast<std::size_t>(i * cols + j)];
    }

    CouplingTemplate with_scale(double alpha) const {
        CouplingTemplate t = *this;
        t.scale = alpha;
        return t;
    }

    Eigen::MatrixXd materialize(double amp_a) const {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                const CouplingEntry& e = at(i, j);
                const double v = scale * e.coeff * std::exp(e.exp_mult * amp_a);
                if (!std::isfinite(v)) {
                    throw InvalidParams("coupling template entry (" + std::to_string(i + 1) + "," +
                                        std::to_string(j + 1) + ") is non-finite at A = " +
                                        std::to_string(amp_a));
                }
                m(i, j) = v;
            }
        }
        return m;
    }
};

} // namespace nhsense
