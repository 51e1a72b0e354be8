#include "tipi/baseline/baseline_controller.hpp"

#include "tipi/core/errors.hpp"
#include "tipi/core/seeding.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace tipi::baseline {

using nlohmann::json;

std::string params_digest(const controller::NetworkParams& params) {
    const std::string text = controller::canonical_params_text(params);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), text.data(), text.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

FrozenParams::FrozenParams(controller::ParamSnapshot snapshot, std::uint64_t seed, std::int64_t steps)
    : snapshot_(std::move(snapshot)) {
    controller::validate_shapes(snapshot_.params);
    provenance_ = {seed, steps, params_digest(snapshot_.params)};
}

json frozen_to_json(const FrozenParams& fp) {
    json j = controller::snapshot_to_json(fp.snapshot());
    j["provenance"] = {{"seed", fp.provenance().seed},
                       {"steps", fp.provenance().steps},
                       {"digest", fp.provenance().digest}};
    return j;
}

FrozenParams frozen_from_json(const json& j) {
    auto snap = controller::snapshot_from_json(j);
    if (!j.contains("provenance") || !j["provenance"].is_object()) {
        throw ConfigError("frozen parameter file is missing 'provenance'");
    }
    const auto& p = j["provenance"];
    try {
        FrozenParams fp(std::move(snap), p.at("seed").get<std::uint64_t>(), p.at("steps").get<std::int64_t>());
        const auto stored = p.at("digest").get<std::string>();
        if (stored != fp.digest()) {
            throw ConfigError("frozen parameter digest mismatch: file says " + stored + ", content hashes to " +
                              fp.digest());
        }
        return fp;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed provenance: ") + e.what());
    }
}

FrozenParams load_frozen(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open frozen parameter file " + path.string());
    try {
        return frozen_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed frozen parameter file " + path.string() + ": " + e.what());
    }
}

void save_frozen(const FrozenParams& fp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << frozen_to_json(fp).dump(2) << '\n';
}

FrozenParams pre_adapt(const sim::PlantConfig& plant, controller::TipiConfig cfg, std::uint64_t seed,
                       std::int64_t steps) {
    if (steps < 1) throw ConfigError("pre-adaptation needs at least one step");
    cfg.seed = seed;
    controller::TipiController ctrl(cfg);
    sim::SpherePlant sphere(plant, derive_seed(seed, Stream::kSensorNoise));
    const sim::ActivePerturbations none;
    for (std::int64_t t = 0; t < steps; ++t) {
        const auto result = ctrl.step(sphere.sense());
        sphere.step(result.motor, none);
        if (!sphere.state().all_finite()) throw NumericDomainError("plant state diverged during pre-adaptation");
    }
    return FrozenParams({ctrl.params(), cfg}, seed, steps);
}

BalanceCommand reactive_act(const SensorVector& s, const FrozenParams& fp, double held_heading, double k_h) {
    const MotorVector y = controller::controller_act(s, fp.params().controller);
    BalanceCommand cmd;
    cmd.speed = std::clamp(0.5 * (y[0] + 1.0), 0.0, 1.0);
    cmd.heading = sim::wrap_angle(held_heading + k_h * y[1]);
    return cmd;
}

MotorVector balance_to_wheels(const BalanceCommand& cmd, const sim::RobotState& state, const BalanceGains& gains) {
    const double error = sim::wrap_angle(cmd.heading - state.heading);
    const double diff = gains.k_p * error;
    Vector w(motor::kCount);
    w[motor::kLeft] = std::clamp(cmd.speed - diff, -1.0, 1.0);
    w[motor::kRight] = std::clamp(cmd.speed + diff, -1.0, 1.0);
    return MotorVector(std::move(w));
}

ReactiveController::ReactiveController(FrozenParams frozen, BalanceGains gains)
    : frozen_(std::move(frozen)),
      gains_(gains),
      estimator_(frozen_.config().sensors, frozen_.config().ema_decay, frozen_.config().ridge) {
    if (!std::isfinite(gains.k_p) || !std::isfinite(gains.k_h)) throw InvalidInput("balance gains must be finite");
}

ReactiveStep ReactiveController::step(const SensorVector& s) {
    ReactiveStep out{controller::controller_act(s, frozen_.params().controller), {}, {}};
    command_ = reactive_act(s, frozen_, command_.heading, gains_.k_h);
    out.command = command_;

    auto& diag = out.diag;
    if (!window_.warmed_up()) {
        window_.prime(s);
    } else {
        bool shifted = false;
        try {
            const auto w = controller::update_window(window_, s, frozen_.params(), frozen_.params());
            window_ = w;
            shifted = true;
            auto est = controller::covariance_update(estimator_, w);
            if (!est.sigma().allFinite() || !est.d_cov().allFinite()) throw NumericDomainError("covariance overflow");
            estimator_ = std::move(est);
            diag.ds_t = w.ds_t;
            diag.xi_tm1 = w.xi_tm1;
            diag.xi_norm = w.xi_tm1.norm();
        } catch (const NumericDomainError&) {
            diag.nonfinite = true;
        } catch (const InvalidInput&) {
            diag.nonfinite = true;
        }
        if (!shifted) window_.prime(s);
    }
    diag.tipi = controller::tipi_value(estimator_);
    return out;
}

}  // namespace tipi::baseline
