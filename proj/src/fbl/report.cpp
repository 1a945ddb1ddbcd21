#include "fbl/report.hpp"

#include "fbl/version.hpp"

#include <filesystem>
#include <fstream>

namespace fbl {

Json report_stamp(const RunConfig& cfg) {
    Json s;
    s["tool_version"] = kVersion;
    s["model"] = cfg.model.name();
    s["model_hash"] = cfg.model.hash();
    s["n_convention"] = cfg.convention.name();
    s["seed"] = cfg.seed;
    Json thr;
    thr["zero_tol"] = cfg.analysis.zero_tol < 0 ? default_zero_tol(cfg.model)
                                                : cfg.analysis.zero_tol;
    thr["gap_tol"] = cfg.analysis.gap_tol;
    thr["tol_spectrum"] = cfg.analysis.tol_spectrum;
    thr["multiplier_tol"] = cfg.analysis.multiplier_tol;
    thr["newton_tol"] = cfg.analysis.newton.tol;
    thr["eq_radius"] = cfg.analysis.limits.eq_radius;
    thr["rec_tol"] = cfg.analysis.limits.rec_tol;
    thr["horizon"] = cfg.analysis.limits.horizon;
    thr["angle_tol"] = cfg.analysis.angle_tol;
    thr["confident_angle"] = cfg.analysis.confident_angle;
    thr["conv_tol"] = cfg.analysis.shoot.conv_tol;
    thr["rel_tol"] = cfg.integrator.rel_tol;
    thr["abs_tol"] = cfg.integrator.abs_tol;
    s["thresholds"] = thr;
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << content;
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

Json write_report(const std::string& outdir, const std::string& name, const Json& result,
                  const RunConfig& cfg, double wall_seconds) {
    Json report;
    report["command"] = name;
    report["stamp"] = report_stamp(cfg);
    report["result"] = result;
    Json meta;
    meta["wall_seconds"] = wall_seconds;  // non-deterministic data stays here
    report["meta"] = meta;
    write_text_file(outdir + "/" + name + ".report.json", report.dump(2) + "\n");
    return report;
}

}  // namespace fbl
