#include "tipi/controller/loop_window.hpp"

#include "tipi/core/errors.hpp"

#include <algorithm>
#include <string>

namespace tipi::controller {

void LoopWindow::prime(const SensorVector& s) {
    if (readings > 0 && s.size() != s_t.size()) {
        throw InvalidInput("sensor dimension changed from " + std::to_string(s_t.size()) + " to " +
                           std::to_string(s.size()));
    }
    s_tm2 = readings >= 2 ? s_tm1 : Vector{};
    s_tm1 = readings >= 1 ? s_t : Vector{};
    s_t = s.values();
    readings = std::min(readings + 1, kWarmup + 1);
}

LoopWindow update_window(const LoopWindow& w, const SensorVector& s_new, const NetworkParams& theta_prev,
                         const NetworkParams& theta_prev2) {
    if (!w.warmed_up()) {
        throw NotWarmedUp("update_window needs two prior readings, window holds " + std::to_string(w.readings));
    }
    if (s_new.size() != w.s_t.size()) {
        throw InvalidInput("sensor dimension changed from " + std::to_string(w.s_t.size()) + " to " +
                           std::to_string(s_new.size()));
    }

    LoopWindow out;
    out.readings = std::min(w.readings + 1, LoopWindow::kWarmup + 1);
    out.s_tm2 = w.s_tm1;
    out.s_tm1 = w.s_t;
    out.s_t = s_new.values();

    out.shat_tm1 = loop_psi(out.s_tm2, theta_prev2);
    out.shat_t = loop_psi(out.shat_tm1, theta_prev);
    out.ds_tm1 = out.s_tm1 - out.shat_tm1;
    out.ds_t = out.s_t - out.shat_t;
    out.xi_tm1 = out.ds_tm1;
    return out;
}

}  // namespace tipi::controller
