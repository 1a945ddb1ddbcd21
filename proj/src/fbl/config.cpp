#include "fbl/config.hpp"

#include <fstream>
#include <sstream>

namespace fbl {

namespace {

template <typename T>
void read_into(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json RunConfig::apply_overrides(Json base, const Json& overrides) {
    if (!overrides.is_object()) return base;
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        // Dotted keys address nested objects.
        Json* node = &base;
        std::string key = it.key();
        std::size_t dot;
        while ((dot = key.find('.')) != std::string::npos) {
            const std::string head = key.substr(0, dot);
            key = key.substr(dot + 1);
            node = &(*node)[head];
        }
        (*node)[key] = it.value();
    }
    return base;
}

RunConfig RunConfig::from_json(const Json& j) {
    RunConfig cfg;
    cfg.raw = j;
    try {
        cfg.schema = j.value("schema", 1);
        if (cfg.schema != 1)
            fail(ErrorCode::ConfigError, "unsupported schema version " +
                                             std::to_string(cfg.schema));
        if (!j.contains("model")) fail(ErrorCode::ConfigError, "config needs a model block");
        cfg.model_spec = j.at("model");
        cfg.model = model_from_json(cfg.model_spec);
        cfg.convention = NConvention::from_name(j.value("n_convention",
                                                        std::string("edge_forward_negative")));
        cfg.seed = j.value("seed", 12345ul);
        cfg.workers = j.value("workers", 1);
        if (cfg.workers < 1) fail(ErrorCode::ConfigError, "workers must be >= 1");

        if (j.contains("integrator")) {
            const Json& ji = j.at("integrator");
            read_into(ji, "rel_tol", cfg.integrator.rel_tol);
            read_into(ji, "abs_tol", cfg.integrator.abs_tol);
            read_into(ji, "initial_step", cfg.integrator.initial_step);
            read_into(ji, "max_step", cfg.integrator.max_step);
            read_into(ji, "max_steps", cfg.integrator.max_steps);
            read_into(ji, "dense_output", cfg.integrator.dense_output);
            read_into(ji, "blowup_norm", cfg.integrator.blowup_norm);
        }
        cfg.integrator.validate();

        if (j.contains("analysis")) {
            const Json& ja = j.at("analysis");
            read_into(ja, "zero_tol", cfg.analysis.zero_tol);
            read_into(ja, "gap_tol", cfg.analysis.gap_tol);
            read_into(ja, "tol_spectrum", cfg.analysis.tol_spectrum);
            read_into(ja, "multiplier_tol", cfg.analysis.multiplier_tol);
            read_into(ja, "newton_tol", cfg.analysis.newton.tol);
            read_into(ja, "newton_max_iter", cfg.analysis.newton.max_iter);
            read_into(ja, "dedup_radius_base", cfg.analysis.dedup_radius_base);
            read_into(ja, "eq_radius", cfg.analysis.limits.eq_radius);
            read_into(ja, "rec_tol", cfg.analysis.limits.rec_tol);
            read_into(ja, "horizon", cfg.analysis.limits.horizon);
            read_into(ja, "visit_radius", cfg.analysis.limits.visit_radius);
            read_into(ja, "angle_tol", cfg.analysis.angle_tol);
            read_into(ja, "confident_angle", cfg.analysis.confident_angle);
            read_into(ja, "shoot_radius_rel", cfg.analysis.shoot.radius_rel);
            read_into(ja, "shoot_directions", cfg.analysis.shoot.directions);
            read_into(ja, "shoot_horizon", cfg.analysis.shoot.horizon);
            read_into(ja, "conv_tol", cfg.analysis.shoot.conv_tol);
            read_into(ja, "cycle_transient", cfg.analysis.cycle.transient);
            read_into(ja, "cycle_search_horizon", cfg.analysis.cycle.search_horizon);
            cfg.analysis.cycle.multiplier_tol = cfg.analysis.multiplier_tol;
            cfg.analysis.cycle.newton = cfg.analysis.newton;
        }
        cfg.analysis.shoot.seed = cfg.seed;

        for (double v : {cfg.analysis.gap_tol, cfg.analysis.tol_spectrum,
                         cfg.analysis.multiplier_tol, cfg.analysis.newton.tol,
                         cfg.analysis.dedup_radius_base, cfg.analysis.limits.eq_radius,
                         cfg.analysis.limits.rec_tol, cfg.analysis.limits.horizon,
                         cfg.analysis.angle_tol, cfg.analysis.confident_angle,
                         cfg.analysis.shoot.conv_tol})
            if (!(v > 0)) fail(ErrorCode::ConfigError, "analysis thresholds must be positive");
    } catch (const Json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

}  // namespace fbl
