#pragma once

#include "tipi/controller/network.hpp"
#include "tipi/core/types.hpp"

namespace tipi::controller {

/// Two-step history (s_{t-2}, s_{t-1}, s_t) with the deterministic forecasts started at s_{t-2}
/// and the resulting deviations.
///
/// The forecast is anchored at s_{t-2}, so the deviation there is zero by construction and the
/// deviation one step later is the raw one-step prediction error.
struct LoopWindow {
    Vector s_tm2;
    Vector s_tm1;
    Vector s_t;
    Vector shat_tm1;  // psi(s_{t-2}, theta_{t-2})
    Vector shat_t;    // psi(psi(s_{t-2}, theta_{t-2}), theta_{t-1})
    Vector ds_tm1;    // s_{t-1} - shat_{t-1}
    Vector ds_t;      // s_t - shat_t
    Vector xi_tm1;    // one-step prediction error, identical to ds_tm1
    int readings = 0;  // saturates at 3

    /// Number of readings needed before update_window may be called.
    static constexpr int kWarmup = 2;

    bool warmed_up() const { return readings >= kWarmup; }
    /// True once the deviations refer to a full window.
    bool has_deviations() const { return readings > kWarmup; }

    /// Deviation at the window start, s_{t-2} - shat_{t-2}. Always zero.
    Vector ds_tm2() const { return s_tm2 - s_tm2; }

    /// Record a reading without computing forecasts (used while warming up).
    void prime(const SensorVector& s);
};

/// Shift in s_new and recompute forecasts and deviations.
/// theta_prev is theta_{t-1} (the parameters that acted on s_{t-1}), theta_prev2 is theta_{t-2}.
/// Throws NotWarmedUp when fewer than two readings are held.
LoopWindow update_window(const LoopWindow& w, const SensorVector& s_new, const NetworkParams& theta_prev,
                         const NetworkParams& theta_prev2);

}  // namespace tipi::controller
