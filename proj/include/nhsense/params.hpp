// params.hpp — physical chain parameters and the (J, A) <-> (w, Delta) map
#pragma once

#include <cmath>
#include <string>

#include "nhsense/errors.hpp"

namespace nhsense {

// Derived hopping amplitude J = sqrt(w^2 - Delta^2) and amplification factor A,
// e^{2A} = (w + Delta) / (w - Delta).
struct DerivedParams {
    double hop_j{0.0};
    double amp_a{0.0};
};

// Chain of n_sites bosonic modes, waveguide-coupled at site 1.
// Rates (hop_w, drive_delta, kappa, hop_j) share one frequency unit; beta and the
// quadratures are dimensionless; tau carries inverse-frequency units.
struct SensorParams {
    int n_sites{3};
    double hop_w{1.0};
    double drive_delta{0.0};
    double kappa{1.0};
    double beta{0.0};
    double tau{1.0};

    void validate() const {
        if (n_sites < 3) throw InvalidParams("n_sites must be >= 3, got " + std::to_string(n_sites));
        if (n_sites % 2 == 0) {
            throw InvalidParams("n_sites must be odd (even chains are unsupported), got " +
                                std::to_string(n_sites));
        }
        if (!(hop_w > 0.0)) throw InvalidParams("hop_w must be > 0");
        if (!(drive_delta >= 0.0)) throw InvalidParams("drive_delta must be >= 0");
        if (!(hop_w > drive_delta)) {
            throw InvalidParams("hop_w must exceed drive_delta (amplification undefined otherwise)");
        }
        if (!(kappa > 0.0)) throw InvalidParams("kappa must be > 0");
        if (!(beta >= 0.0)) throw InvalidParams("beta must be >= 0");
        if (!(tau > 0.0)) throw InvalidParams("tau must be > 0");
        if (!std::isfinite(hop_w) || !std::isfinite(drive_delta) || !std::isfinite(kappa) ||
            !std::isfinite(beta) || !std::isfinite(tau)) {
            throw InvalidParams("sensor parameters must be finite");
        }
    }

    // Build from the (J, A) parameterization: w = J cosh A, Delta = J sinh A.
    static SensorParams from_amplification(int n_sites, double hop_j, double amp_a,
                                           double kappa, double beta, double tau) {
        if (!(hop_j > 0.0)) throw InvalidParams("hop_j must be > 0");
        if (!(amp_a >= 0.0)) throw InvalidParams("amp_a must be >= 0");
        SensorParams p;
        p.n_sites = n_sites;
        p.hop_w = hop_j * std::cosh(amp_a);
        p.drive_delta = hop_j * std::sinh(amp_a);
        p.kappa = kappa;
        p.beta = beta;
        p.tau = tau;
        p.validate();
        return p;
    }
};

inline DerivedParams derive_params(const SensorParams& p) {
    p.validate();
    DerivedParams d;
    d.hop_j = std::sqrt((p.hop_w - p.drive_delta) * (p.hop_w + p.drive_delta));
    d.amp_a = 0.5 * std::log((p.hop_w + p.drive_delta) / (p.hop_w - p.drive_delta));
    return d;
}

} // namespace nhsense
