#pragma once

#include "fbl/connect.hpp"
#include "fbl/critical.hpp"
#include "fbl/integrate.hpp"
#include "fbl/limitset.hpp"
#include "fbl/lyapunov.hpp"
#include "fbl/model.hpp"

#include <string>

namespace fbl {

struct AnalysisSettings {
    double zero_tol = -1.0;  // negative: default by Jacobian mode
    double gap_tol = 1e-8;
    double tol_spectrum = 1e-8;
    double multiplier_tol = 1e-4;
    NewtonOptions newton{1e-10, 60};
    double dedup_radius_base = 1e-6;
    LimitThresholds limits;
    double angle_tol = 1e-6;
    double confident_angle = 1e-3;
    ShootOptions shoot;
    CycleSearchOptions cycle;
};

/// One analysis run: model, convention, integrator and thresholds. The raw
/// JSON is kept for per-command blocks and report stamping.
struct RunConfig {
    int schema = 1;
    Json model_spec;
    CyclicVectorField model;
    NConvention convention;
    unsigned long seed = 12345;
    int workers = 1;
    IntegratorConfig integrator;
    AnalysisSettings analysis;
    Json raw;

    static RunConfig from_json(const Json& j);
    static RunConfig from_file(const std::string& path);
    /// Applies a flat override object (dotted keys address nested fields)
    /// and re-parses.
    static Json apply_overrides(Json base, const Json& overrides);
};

}  // namespace fbl
