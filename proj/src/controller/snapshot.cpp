#include "tipi/controller/snapshot.hpp"

#include "tipi/core/errors.hpp"

#include <string>

namespace tipi::controller {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw ConfigError(std::string(name) + ": expected " + std::to_string(rows) + " rows");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(std::string(name) + ": row " + std::to_string(i) + " must have " +
                              std::to_string(cols) + " entries");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw ConfigError(std::string(name) + ": non-numeric entry");
            m(i, c) = x.get<double>();
        }
    }
    return m;
}

Vector vector_from_json(const json& j, Eigen::Index size, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
        throw ConfigError(std::string(name) + ": expected " + std::to_string(size) + " entries");
    }
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        const auto& x = j[static_cast<std::size_t>(i)];
        if (!x.is_number()) throw ConfigError(std::string(name) + ": non-numeric entry");
        v[i] = x.get<double>();
    }
    return v;
}

json snapshot_to_json(const ParamSnapshot& snap) {
    const auto& p = snap.params;
    const auto& c = snap.config;
    return json{{"n", p.sensors()},
                {"m", p.motors()},
                {"C", matrix_to_json(p.controller.C)},
                {"h", vector_to_json(p.controller.h)},
                {"A", matrix_to_json(p.model.A)},
                {"b", vector_to_json(p.model.b)},
                {"ema_decay", c.ema_decay},
                {"ridge", c.ridge},
                {"eps_controller", c.learning.eps_controller},
                {"eps_model", c.learning.eps_model},
                {"grad_clip", c.learning.grad_clip},
                {"seed", c.seed}};
}

ParamSnapshot snapshot_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("parameter snapshot must be a JSON object");
    auto field = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ConfigError(std::string("parameter snapshot is missing '") + key + "'");
        return j.at(key);
    };
    try {
        ParamSnapshot snap;
        const auto n = field("n").get<Eigen::Index>();
        const auto m = field("m").get<Eigen::Index>();
        if (n <= 0 || m <= 0) throw ConfigError("snapshot dimensions must be positive");
        snap.params.controller.C = matrix_from_json(field("C"), m, n, "C");
        snap.params.controller.h = vector_from_json(field("h"), m, "h");
        snap.params.model.A = matrix_from_json(field("A"), n, m, "A");
        snap.params.model.b = vector_from_json(field("b"), n, "b");
        snap.config.sensors = n;
        snap.config.motors = m;
        snap.config.ema_decay = field("ema_decay").get<double>();
        snap.config.ridge = field("ridge").get<double>();
        snap.config.learning.eps_controller = field("eps_controller").get<double>();
        snap.config.learning.eps_model = field("eps_model").get<double>();
        snap.config.learning.grad_clip = field("grad_clip").get<double>();
        snap.config.seed = field("seed").get<std::uint64_t>();
        if (!all_finite(snap.params)) throw ConfigError("snapshot parameters must be finite");
        return snap;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed parameter snapshot: ") + e.what());
    }
}

std::string canonical_params_text(const NetworkParams& params) {
    const json j{{"n", params.sensors()},
                 {"m", params.motors()},
                 {"C", matrix_to_json(params.controller.C)},
                 {"h", vector_to_json(params.controller.h)},
                 {"A", matrix_to_json(params.model.A)},
                 {"b", vector_to_json(params.model.b)}};
    return j.dump();
}

}  // namespace tipi::controller
