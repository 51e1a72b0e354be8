#pragma once

#include "tipi/controller/tipi_controller.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace tipi::controller {

/// Parameter snapshot, the unit of exchange between the adaptive and the frozen controller.
/// JSON: {n, m, C, h, A, b, ema_decay, ridge, eps_controller, eps_model, grad_clip, seed},
/// matrices as row-major nested arrays.
struct ParamSnapshot {
    NetworkParams params;
    TipiConfig config;
};

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name);
Vector vector_from_json(const nlohmann::json& j, Eigen::Index size, const char* name);

nlohmann::json snapshot_to_json(const ParamSnapshot& snap);
/// ConfigError on missing fields or shape mismatches.
ParamSnapshot snapshot_from_json(const nlohmann::json& j);

/// Canonical text of the parameter part of a snapshot (n, m, C, h, A, b), used for digests.
std::string canonical_params_text(const NetworkParams& params);

}  // namespace tipi::controller
