// presets.hpp — built-in three-site loss layouts used by the bundled configs
//
// Two baths couple to the chain. The tuned layout keeps every column of Z inside
// span{h_p columns 2..N} (condition C1); each untuned variant drops one coupling:
//   loss_a omits the exponentially small site-3 <-> bath-2 entry,
//   loss_b omits the exponentially large site-1 <-> bath-2 entry.
#pragma once

#include "nhsense/coupling.hpp"

namespace nhsense {

inline CouplingTemplate preset_loss_a(double alpha) {
    CouplingTemplate t = CouplingTemplate::zero(3, 2);
    t.scale = alpha;
    t.at(0, 0) = {-1.0, 1};
    t.at(0, 1) = {-1.0, 1};
    t.at(1, 1) = {1.0, 0};
    t.at(2, 0) = {1.0, -1};
    return t;
}

inline CouplingTemplate preset_loss_b(double alpha) {
    CouplingTemplate t = CouplingTemplate::zero(3, 2);
    t.scale = alpha;
    t.at(0, 0) = {-1.0, 1};
    t.at(1, 1) = {1.0, 0};
    t.at(2, 0) = {1.0, -1};
    t.at(2, 1) = {1.0, -1};
    return t;
}

inline CouplingTemplate preset_loss_tuned(double alpha) {
    CouplingTemplate t = CouplingTemplate::zero(3, 2);
    t.scale = alpha;
    t.at(0, 0) = {-1.0, 1};
    t.at(0, 1) = {-1.0, 1};
    t.at(1, 1) = {1.0, 0};
    t.at(2, 0) = {1.0, -1};
    t.at(2, 1) = {1.0, -1};
    return t;
}

} // namespace nhsense
