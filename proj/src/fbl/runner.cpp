#include "fbl/runner.hpp"

#include "fbl/connect.hpp"
#include "fbl/critical.hpp"
#include "fbl/floquet.hpp"
#include "fbl/limitset.hpp"
#include "fbl/log.hpp"
#include "fbl/pool.hpp"
#include "fbl/report.hpp"
#include "fbl/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace fbl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Json block_of(const RunConfig& cfg, const char* key) {
    if (cfg.raw.contains(key)) return cfg.raw.at(key);
    return Json::object();
}

Vec vec_from_json(const Json& j, int n, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        fail(ErrorCode::ConfigError, std::string(what) + " must be an array of length " +
                                         std::to_string(n));
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

Box default_census_box(const CyclicVectorField& model) {
    const int n = model.dim();
    Box box(n);
    for (int i = 0; i < n; ++i) {
        const double lo = model.domain().lower[i];
        const double hi = model.domain().upper[i];
        box.lower[i] = std::isfinite(lo) ? lo + 1e-3 : -3.0;
        box.upper[i] = std::isfinite(hi) ? std::min(hi - 1e-3, 3.0) : 3.0;
        if (std::isfinite(lo)) box.upper[i] = std::max(box.upper[i], box.lower[i] + 1.0);
        box.lower_open.assign(static_cast<std::size_t>(n), false);
        box.upper_open.assign(static_cast<std::size_t>(n), false);
    }
    return box;
}

Vec default_initial_state(const CyclicVectorField& model) {
    const Box box = default_census_box(model);
    const int n = model.dim();
    Vec x(n);
    for (int i = 0; i < n; ++i) {
        const double frac = 0.3 + 0.4 * (n > 1 ? static_cast<double>(i) / (n - 1) : 0.5);
        x[i] = box.lower[i] + frac * (box.upper[i] - box.lower[i]);
    }
    return x;
}

namespace {

Box box_from_block(const Json& block, const CyclicVectorField& model) {
    if (block.contains("box")) return box_from_json(block.at("box"), model.dim());
    return default_census_box(model);
}

// ---------------------------------------------------------------------------

Json cmd_check_class(const RunConfig& cfg, const std::string&) {
    const Json block = block_of(cfg, "check_class");
    SampleSpec spec;
    spec.kind = SampleSpec::Kind::Random;
    spec.count = block.value("samples", 1000);
    spec.seed = cfg.seed;
    spec.box = box_from_block(block, cfg.model);
    const double zero_tol = cfg.analysis.zero_tol;
    const auto rep = check_class(cfg.model, spec, zero_tol);

    Json result;
    result["class"] = rep.to_json();
    const double R = block.value("dissipative_R", 0.0);
    if (R > 0) {
        const int samples = block.value("dissipative_samples", 512);
        result["dissipative"] = check_dissipative(cfg.model, R, samples, cfg.seed).to_json();
    }
    return result;
}

Json cmd_simulate(const RunConfig& cfg, const std::string& outdir) {
    const Json block = block_of(cfg, "simulate");
    const int n = cfg.model.dim();
    const Vec x0 = block.contains("x0") ? vec_from_json(block.at("x0"), n, "simulate.x0")
                                        : default_initial_state(cfg.model);
    const double t0 = block.value("t0", 0.0);
    const double t1 = block.value("t1", 100.0);
    const Trajectory traj = integrate(cfg.model, x0, t0, t1, cfg.integrator);
    write_text_file(outdir + "/simulate.trajectory.csv", traj.to_csv());

    Json result;
    result["x0"] = to_std(x0);
    result["t0"] = t0;
    result["t1"] = t1;
    result["status"] = trajectory_status_name(traj.status);
    result["accepted_steps"] = traj.accepted_steps;
    result["rejected_steps"] = traj.rejected_steps;
    result["t_final"] = traj.t_end();
    result["x_final"] = to_std(traj.x_end());
    result["csv"] = "simulate.trajectory.csv";
    return result;
}

Json cmd_equilibria(const RunConfig& cfg, const std::string& outdir) {
    const Json block = block_of(cfg, "equilibria");
    const Box box = box_from_block(block, cfg.model);
    const int grid = block.value("grid_per_axis", 4);
    const auto search = find_equilibria(cfg.model, box, grid, cfg.analysis.newton,
                                        cfg.analysis.tol_spectrum,
                                        cfg.analysis.dedup_radius_base, cfg.workers);
    Json result;
    result["count"] = static_cast<int>(search.equilibria.size());
    result["starts"] = search.starts;
    result["converged_starts"] = search.converged;
    result["dropped_nonconverged"] = search.dropped_nonconverged;
    Json list = Json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "index,morse_index,simple,hyperbolic,residual";
    for (int i = 1; i <= cfg.model.dim(); ++i) csv << ",x" << i;
    csv << "\n";
    for (std::size_t i = 0; i < search.equilibria.size(); ++i) {
        const auto& e = search.equilibria[i];
        list.push_back(e.to_json());
        csv << i << "," << e.morse_index << "," << e.simple << "," << e.hyperbolic << ","
            << e.residual;
        for (int k = 0; k < e.x.size(); ++k) csv << "," << e.x[k];
        csv << "\n";
    }
    result["equilibria"] = list;
    write_text_file(outdir + "/equilibria.csv", csv.str());
    result["csv"] = "equilibria.csv";
    return result;
}

Json cmd_cycles(const RunConfig& cfg, const std::string& outdir) {
    const Json block = block_of(cfg, "cycles");
    const int n = cfg.model.dim();
    const Vec x0 = block.contains("x0") ? vec_from_json(block.at("x0"), n, "cycles.x0")
                                        : default_initial_state(cfg.model);
    CycleSearchOptions opts = cfg.analysis.cycle;
    if (block.contains("transient")) opts.transient = block.at("transient").get<double>();
    if (block.contains("search_horizon"))
        opts.search_horizon = block.at("search_horizon").get<double>();
    CycleResult cr = find_periodic_orbit(cfg.model, x0, std::nullopt, cfg.integrator, opts);

    Json result;
    result["x0"] = to_std(x0);
    switch (cr.status) {
        case CycleResult::Status::Found: result["status"] = "Found"; break;
        case CycleResult::Status::NoReturn: result["status"] = "NoReturn"; break;
        case CycleResult::Status::NewtonDiverged: result["status"] = "NewtonDiverged"; break;
        case CycleResult::Status::ConvergedToEquilibrium:
            result["status"] = "ConvergedToEquilibrium";
            break;
    }
    result["detail"] = cr.detail;
    if (cr.orbit) {
        auto consistency =
            classify_periodic_orbit(cfg.model, *cr.orbit, cfg.integrator,
                                    cfg.analysis.multiplier_tol);
        result["orbit"] = cr.orbit->to_json();
        result["consistency_violation"] = consistency.consistency_violation;
        result["consistency_finding"] = consistency.finding;
        Json inj = Json::array();
        for (int s = 1; s <= n; ++s)
            inj.push_back(planar_projection_injectivity(*cr.orbit, s).to_json());
        result["planar_injectivity"] = inj;
        write_text_file(outdir + "/cycles.orbit.csv", cr.orbit->samples.to_csv());
        result["csv"] = "cycles.orbit.csv";
    }
    return result;
}

Json cmd_limits(const RunConfig& cfg, const std::string& outdir) {
    const Json block = block_of(cfg, "limits");
    const int n = cfg.model.dim();
    std::vector<Vec> points;
    if (block.contains("points")) {
        for (const auto& p : block.at("points"))
            points.push_back(vec_from_json(p, n, "limits.points[i]"));
    } else {
        const int count = block.value("count", 5);
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Box box = default_census_box(cfg.model);
        for (int k = 0; k < count; ++k) {
            Vec x(n);
            for (int i = 0; i < n; ++i)
                x[i] = box.lower[i] + u(rng) * (box.upper[i] - box.lower[i]);
            if (cfg.model.domain().contains(x)) points.push_back(std::move(x));
        }
    }
    const std::string dir_name = block.value("direction", std::string("omega"));
    const LimitDirection dir =
        dir_name == "alpha" ? LimitDirection::Alpha : LimitDirection::Omega;

    std::vector<Equilibrium> known;
    Json rows = Json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "point_index,kind,final_distance,recurrence_gap,horizon_used\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto rep = classify_limit_set(cfg.model, points[i], cfg.analysis.limits,
                                      cfg.integrator, known, dir);
        Json row;
        row["x0"] = to_std(points[i]);
        row["report"] = rep.to_json();
        rows.push_back(row);
        csv << i << "," << limit_kind_name(rep.kind) << "," << rep.final_distance << ","
            << rep.recurrence_gap << "," << rep.horizon_used << "\n";
    }
    write_text_file(outdir + "/limits.csv", csv.str());

    Json result;
    result["direction"] = dir_name;
    result["classifications"] = rows;
    Json eqs = Json::array();
    for (const auto& e : known) eqs.push_back(e.to_json());
    result["equilibria_encountered"] = eqs;
    result["csv"] = "limits.csv";
    return result;
}

Json cmd_floquet(const RunConfig& cfg, const std::string&) {
    const Json block = block_of(cfg, "floquet");
    const int n = cfg.model.dim();
    Mat M;
    if (block.contains("matrix")) {
        const auto rows = block.at("matrix").get<std::vector<double>>();
        if (static_cast<int>(rows.size()) != n * n)
            fail(ErrorCode::ConfigError, "floquet.matrix must hold n*n row-major entries");
        M.resize(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) M(r, c) = rows[static_cast<std::size_t>(r * n + c)];
    } else {
        const Vec x0 = block.contains("x0") ? vec_from_json(block.at("x0"), n, "floquet.x0")
                                            : default_initial_state(cfg.model);
        const double time = block.value("time", 1.0);
        M = variational_flow(cfg.model, x0, 0.0, time, cfg.integrator);
    }
    auto decomp = invariant_blocks(M, cfg.analysis.gap_tol);
    const int samples = block.value("samples", 64);
    auto nrep = verify_block_nvalues(decomp, cfg.model.signature(), cfg.convention, samples,
                                     cfg.seed);
    Json result;
    result["decomposition"] = decomp.to_json();
    result["block_nvalues"] = nrep.to_json();
    return result;
}

struct CensusData {
    std::vector<Equilibrium> equilibria;
    std::vector<PeriodicOrbit> cycles;
    Json limit_rows = Json::array();
    Json connection_rows = Json::array();
    Json homoindexed = Json::array();
    bool nonwandering_ok = true;
    std::vector<std::string> violations;
};

/// Shared by `connect`, `transversality` and `census`.
Json analyze_equilibrium_connection(const RunConfig& cfg, const Equilibrium& src,
                                    const ConnectionTarget& target,
                                    const ConnectingOrbit& orbit) {
    Json row = orbit.to_json();
    const auto prediction = automatic_transversality_check(cfg.model, orbit);
    row["automatic"] = prediction.to_json();
    if (!orbit.plus_is_cycle) {
        // Frame window inside the orbit's coverage; the step comes from the
        // step-wise conditioning rule.
        const double t_lo = orbit.trajectory.t_begin();
        const double t_hi = orbit.trajectory.t_end();
        const double half = std::min(-t_lo, t_hi) * 0.98;
        if (half > 0.2) {
            double tau = default_frame_tau(cfg.model, orbit);
            int steps = std::max(4, static_cast<int>(half / tau));
            tau = half / steps;
            try {
                auto frames = dichotomy_frames(cfg.model, orbit, tau, steps, cfg.integrator,
                                               cfg.analysis.tol_spectrum);
                auto trep =
                    transversality_test(frames, orbit.i_minus, orbit.i_plus,
                                        cfg.analysis.angle_tol, cfg.analysis.confident_angle);
                const bool covered =
                    prediction.prediction != TransversalityPrediction::NotCovered;
                if (!trep.transverse && covered) {
                    // A predicted-transverse connection failing the test is a
                    // finding; refine the discretization once before
                    // reporting it.
                    frames = dichotomy_frames(cfg.model, orbit, tau / 2.0, 2 * steps,
                                              cfg.integrator, cfg.analysis.tol_spectrum);
                    trep = transversality_test(frames, orbit.i_minus, orbit.i_plus,
                                               cfg.analysis.angle_tol,
                                               cfg.analysis.confident_angle);
                    row["refined"] = true;
                    if (!trep.transverse)
                        row["finding"] =
                            "predicted-transverse connection failed the frame test";
                }
                row["frames"] = frames.to_json();
                row["transversality"] = trep.to_json();
            } catch (const Error& e) {
                row["transversality_error"] = e.what();
            }
        } else {
            row["transversality_error"] = "orbit window too short for frames";
        }
    }
    (void)src;
    (void)target;
    return row;
}

Json cmd_connect(const RunConfig& cfg, const std::string& outdir, CensusData* census) {
    const Json block = block_of(cfg, "connect");
    const Box box = box_from_block(block, cfg.model);
    const int grid = block.value("grid_per_axis", 4);
    auto search = find_equilibria(cfg.model, box, grid, cfg.analysis.newton,
                                  cfg.analysis.tol_spectrum, cfg.analysis.dedup_radius_base,
                                  cfg.workers);
    auto& eqs = search.equilibria;

    ShootOptions shoot = cfg.analysis.shoot;
    if (block.contains("directions")) shoot.directions = block.at("directions").get<int>();
    if (block.contains("horizon")) shoot.horizon = block.at("horizon").get<double>();
    if (block.contains("radius_rel")) shoot.radius_rel = block.at("radius_rel").get<double>();
    if (block.contains("conv_tol")) shoot.conv_tol = block.at("conv_tol").get<double>();
    shoot.workers = cfg.workers;

    std::vector<std::pair<int, int>> pairs;
    if (block.contains("pairs") && block.at("pairs").is_array()) {
        for (const auto& p : block.at("pairs"))
            pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    } else {
        for (int i = 0; i < static_cast<int>(eqs.size()); ++i)
            for (int j = 0; j < static_cast<int>(eqs.size()); ++j)
                if (eqs[static_cast<std::size_t>(i)].hyperbolic &&
                    eqs[static_cast<std::size_t>(j)].hyperbolic &&
                    eqs[static_cast<std::size_t>(i)].morse_index >= 1)
                    pairs.emplace_back(i, j);
    }

    Json result;
    Json eq_list = Json::array();
    for (const auto& e : eqs) eq_list.push_back(e.to_json());
    result["equilibria"] = eq_list;

    Json rows = Json::array();
    for (const auto& [i, j] : pairs) {
        if (i < 0 || j < 0 || i >= static_cast<int>(eqs.size()) ||
            j >= static_cast<int>(eqs.size()))
            fail(ErrorCode::ConfigError, "connect.pairs index out of range");
        const auto& src = eqs[static_cast<std::size_t>(i)];
        const auto& dst = eqs[static_cast<std::size_t>(j)];
        if (!src.hyperbolic || !dst.hyperbolic || src.morse_index < 1) continue;
        ConnectionTarget target{dst};
        auto summary = shoot_connection(cfg.model, src, target, shoot, cfg.integrator,
                                        cfg.convention);
        Json row;
        row["source"] = i;
        row["target"] = j;
        row["summary"] = summary.to_json();
        Json found = Json::array();
        for (const auto& orbit : summary.found)
            found.push_back(analyze_equilibrium_connection(cfg, src, target, orbit));
        row["connections"] = found;
        rows.push_back(row);

        if (census) {
            const bool homo = src.morse_index == dst.morse_index && src.morse_index % 2 == 1;
            if (homo && !summary.found.empty()) {
                Json finding;
                finding["source"] = i;
                finding["target"] = j;
                finding["count"] = static_cast<int>(summary.found.size());
                census->homoindexed.push_back(finding);
            }
        }
    }
    result["pairs"] = rows;
    (void)outdir;
    return result;
}

Json cmd_transversality(const RunConfig& cfg, const std::string& outdir) {
    // Convenience wrapper: run the connection sweep and keep only the
    // transversality verdicts.
    Json connect_result = cmd_connect(cfg, outdir, nullptr);
    Json result;
    result["equilibria"] = connect_result["equilibria"];
    Json verdicts = Json::array();
    for (const auto& pair_row : connect_result["pairs"]) {
        for (const auto& c : pair_row.at("connections")) {
            Json v;
            v["source"] = pair_row.at("source");
            v["target"] = pair_row.at("target");
            if (c.contains("transversality")) v["transversality"] = c.at("transversality");
            if (c.contains("transversality_error"))
                v["transversality_error"] = c.at("transversality_error");
            v["automatic"] = c.at("automatic");
            v["h_minus"] = c.at("h_minus");
            v["h_plus"] = c.at("h_plus");
            verdicts.push_back(v);
        }
    }
    result["verdicts"] = verdicts;
    return result;
}

Json cmd_perturb(const RunConfig& cfg, const std::string& outdir) {
    const Json block = block_of(cfg, "perturb");
    const int n = cfg.model.dim();
    const std::string kind = block.value("kind", std::string("cyclic_tanh"));
    CyclicVectorField bump = [&]() {
        if (kind == "bump") {
            const int j = block.value("j", 1);
            double cj = 0.0, cj1 = 0.0;
            if (block.contains("center")) {
                cj = block.at("center").at(0).get<double>();
                cj1 = block.at("center").at(1).get<double>();
            }
            const double r = block.value("r", 0.5);
            return bump_perturbation(n, j, cj, cj1, r);
        }
        if (kind == "cyclic_tanh")
            return cyclic_tanh_coupling(n, block.value("kappa", 1.0));
        fail(ErrorCode::ConfigError, "unknown perturbation kind: " + kind);
    }();

    std::vector<double> epsilons =
        block.value("epsilons", std::vector<double>{0.0, 1e-4, 1e-3});
    const Vec x0 = block.contains("x0") ? vec_from_json(block.at("x0"), n, "perturb.x0")
                                        : default_initial_state(cfg.model);
    SampleSpec class_spec;
    class_spec.count = block.value("class_samples", 400);
    class_spec.seed = cfg.seed;
    class_spec.box = default_census_box(cfg.model);

    auto probe = robustness_probe(cfg.model, bump, epsilons, x0, cfg.analysis.limits,
                                  cfg.integrator, class_spec);
    std::ostringstream csv;
    csv.precision(17);
    csv << "epsilon,left_class,kind\n";
    for (const auto& e : probe.entries)
        csv << e.epsilon << "," << e.left_class << "," << limit_kind_name(e.report.kind)
            << "\n";
    write_text_file(outdir + "/perturb.transitions.csv", csv.str());

    Json result = probe.to_json();
    result["perturbation"] = {{"kind", kind}};
    result["csv"] = "perturb.transitions.csv";
    return result;
}

Json cmd_census(const RunConfig& cfg, const std::string& outdir) {
    const Json block = block_of(cfg, "census");
    const Box box = box_from_block(block, cfg.model);
    const int grid = block.value("grid_per_axis", 4);
    CensusData data;

    // 1. Equilibria.
    auto search = find_equilibria(cfg.model, box, grid, cfg.analysis.newton,
                                  cfg.analysis.tol_spectrum, cfg.analysis.dedup_radius_base,
                                  cfg.workers);
    data.equilibria = std::move(search.equilibria);

    // 2. Limit sets from a seeded set of initial conditions.
    const int ic_count = block.value("ic_count", 6);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec> ics;
    ics.push_back(default_initial_state(cfg.model));
    for (int k = 0; k < ic_count; ++k) {
        Vec x(cfg.model.dim());
        for (int i = 0; i < cfg.model.dim(); ++i)
            x[i] = box.lower[i] + u(rng) * (box.upper[i] - box.lower[i]);
        if (cfg.model.domain().contains(x)) ics.push_back(std::move(x));
    }
    for (const auto& x0 : ics) {
        auto rep = classify_limit_set(cfg.model, x0, cfg.analysis.limits, cfg.integrator,
                                      data.equilibria);
        if (rep.kind == LimitKind::Undetermined) {
            data.nonwandering_ok = false;
            data.violations.push_back("undetermined limit set from an initial condition");
        }
        if (rep.kind == LimitKind::PeriodicOrbit && rep.orbit) {
            bool duplicate = false;
            for (const auto& c : data.cycles) {
                if (std::abs(c.period - rep.orbit->period) <=
                        1e-3 * std::max(1.0, c.period) &&
                    ConnectionTarget{c}.distance_to(rep.orbit->anchor) < 1e-2)
                    duplicate = true;
            }
            if (!duplicate) data.cycles.push_back(*rep.orbit);
        }
        Json row;
        row["x0"] = to_std(x0);
        row["report"] = rep.to_json();
        data.limit_rows.push_back(row);
    }

    // 3. Connections among hyperbolic critical elements: one representative
    // orbit per ordered pair.
    ShootOptions shoot = cfg.analysis.shoot;
    shoot.directions = block.value("directions", 16);
    shoot.horizon = block.value("shoot_horizon", 150.0);
    shoot.max_found = block.value("max_found", 1);
    shoot.workers = cfg.workers;
    int transverse_count = 0, connection_count = 0;
    for (std::size_t i = 0; i < data.equilibria.size(); ++i) {
        const auto& src = data.equilibria[i];
        if (!src.hyperbolic || src.morse_index < 1) continue;
        // Equilibrium targets (including the homoclinic self-pair).
        for (std::size_t j = 0; j < data.equilibria.size(); ++j) {
            const auto& dst = data.equilibria[j];
            if (!dst.hyperbolic) continue;
            ConnectionTarget target{dst};
            auto summary =
                shoot_connection(cfg.model, src, target, shoot, cfg.integrator, cfg.convention);
            const bool homo = src.morse_index == dst.morse_index && src.morse_index % 2 == 1;
            if (homo && !summary.found.empty()) {
                // Notable finding; re-check at 10x tighter tolerances before
                // letting it stand.
                ShootOptions tighter = shoot;
                tighter.conv_tol /= 10.0;
                auto recheck = shoot_connection(cfg.model, src, target, tighter,
                                                cfg.integrator, cfg.convention);
                Json finding;
                finding["source"] = static_cast<int>(i);
                finding["target"] = static_cast<int>(j);
                finding["count"] = static_cast<int>(summary.found.size());
                finding["recheck_count"] = static_cast<int>(recheck.found.size());
                finding["confirmed"] = !recheck.found.empty();
                data.homoindexed.push_back(finding);
                if (!recheck.found.empty()) {
                    data.violations.push_back(
                        "homoindexed connection survived the tighter recheck");
                }
            }
            for (const auto& orbit : summary.found) {
                ++connection_count;
                Json row = analyze_equilibrium_connection(cfg, src, target, orbit);
                row["source"] = static_cast<int>(i);
                row["target"] = static_cast<int>(j);
                const bool trans = row.contains("transversality") &&
                                   row["transversality"].value("transverse", false);
                if (trans) ++transverse_count;
                else if (!homo)
                    data.violations.push_back("non-transverse equilibrium connection");
                data.connection_rows.push_back(row);
            }
        }
        // Cycle targets: automatic transversality case (i).
        for (const auto& cyc : data.cycles) {
            if (!cyc.hyperbolic) continue;
            ConnectionTarget target{cyc};
            auto summary =
                shoot_connection(cfg.model, src, target, shoot, cfg.integrator, cfg.convention);
            for (const auto& orbit : summary.found) {
                ++connection_count;
                ++transverse_count;  // case (i) predictions count as transverse evidence
                Json row = orbit.to_json();
                row["source"] = static_cast<int>(i);
                row["target"] = "cycle";
                row["automatic"] = automatic_transversality_check(cfg.model, orbit).to_json();
                data.connection_rows.push_back(row);
            }
        }
    }

    // 4. Verdict.
    int hyperbolic_count = 0;
    for (const auto& e : data.equilibria)
        if (e.hyperbolic) ++hyperbolic_count;
    for (const auto& c : data.cycles)
        if (c.hyperbolic) ++hyperbolic_count;
    const int total_elements =
        static_cast<int>(data.equilibria.size() + data.cycles.size());
    for (const auto& e : data.equilibria)
        if (!e.hyperbolic) data.violations.push_back("non-hyperbolic equilibrium");
    for (const auto& c : data.cycles)
        if (!c.hyperbolic) data.violations.push_back("non-hyperbolic periodic orbit");

    Json result;
    Json eq_list = Json::array();
    for (const auto& e : data.equilibria) eq_list.push_back(e.to_json());
    Json cyc_list = Json::array();
    for (const auto& c : data.cycles) cyc_list.push_back(c.to_json());
    result["equilibria"] = eq_list;
    result["periodic_orbits"] = cyc_list;
    result["hyperbolic_fraction"] =
        total_elements ? static_cast<double>(hyperbolic_count) / total_elements : 1.0;
    result["limit_sets"] = data.limit_rows;
    result["connections"] = data.connection_rows;
    result["connection_count"] = connection_count;
    result["transverse_count"] = transverse_count;
    result["homoindexed_findings"] = data.homoindexed;
    result["nonwandering_summary"] = {{"all_referenced", data.nonwandering_ok}};
    if (data.violations.empty()) {
        result["morse_smale_verdict"] = "ConsistentWithMorseSmale";
    } else {
        result["morse_smale_verdict"] = "Violations";
        result["violations"] = data.violations;
    }

    std::ostringstream csv;
    csv << "kind,index,morse_index,hyperbolic\n";
    for (std::size_t i = 0; i < data.equilibria.size(); ++i)
        csv << "equilibrium," << i << "," << data.equilibria[i].morse_index << ","
            << data.equilibria[i].hyperbolic << "\n";
    for (std::size_t i = 0; i < data.cycles.size(); ++i)
        csv << "cycle," << i << "," << data.cycles[i].morse_index << ","
            << data.cycles[i].hyperbolic << "\n";
    write_text_file(outdir + "/census.elements.csv", csv.str());
    result["csv"] = "census.elements.csv";
    for (std::size_t i = 0; i < data.cycles.size(); ++i)
        write_text_file(outdir + "/census.cycle" + std::to_string(i) + ".csv",
                        data.cycles[i].samples.to_csv());
    return result;
}

Json cmd_verify(const RunConfig& cfg, const std::string& outdir, int* exit_code) {
    VerifyOptions opts;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    opts.convention = cfg.convention;
    const auto results = run_acceptance_suite(opts);
    Json rows = Json::array();
    bool all_pass = true;
    for (const auto& r : results) {
        Json row;
        row["id"] = r.id;
        row["name"] = r.name;
        row["pass"] = r.pass;
        row["details"] = r.details;
        row["data"] = r.data;
        rows.push_back(row);
        all_pass = all_pass && r.pass;
    }
    Json result;
    result["criteria"] = rows;
    result["all_pass"] = all_pass;
    if (!all_pass && exit_code) *exit_code = 3;

    std::ostringstream lines;
    for (const auto& r : results)
        lines << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << r.details
              << ")\n";
    write_text_file(outdir + "/verify.lines.txt", lines.str());
    return result;
}

}  // namespace

std::vector<std::string> command_names() {
    return {"check-class", "simulate",       "limits",  "equilibria", "cycles", "floquet",
            "connect",     "transversality", "perturb", "census",     "verify"};
}

CommandResult run_command(const std::string& command, const RunConfig& cfg,
                          const std::string& outdir) {
    CommandResult res;
    const auto t0 = Clock::now();
    try {
        Json result;
        int exit_code = 0;
        if (command == "check-class") result = cmd_check_class(cfg, outdir);
        else if (command == "simulate") result = cmd_simulate(cfg, outdir);
        else if (command == "limits") result = cmd_limits(cfg, outdir);
        else if (command == "equilibria") result = cmd_equilibria(cfg, outdir);
        else if (command == "cycles") result = cmd_cycles(cfg, outdir);
        else if (command == "floquet") result = cmd_floquet(cfg, outdir);
        else if (command == "connect") result = cmd_connect(cfg, outdir, nullptr);
        else if (command == "transversality") result = cmd_transversality(cfg, outdir);
        else if (command == "perturb") result = cmd_perturb(cfg, outdir);
        else if (command == "census") result = cmd_census(cfg, outdir);
        else if (command == "verify") result = cmd_verify(cfg, outdir, &exit_code);
        else
            fail(ErrorCode::ConfigError, "unknown command: " + command);
        res.report = write_report(outdir, command, result, cfg, seconds_since(t0));
        res.exit_code = exit_code;
    } catch (const Error& e) {
        Json err;
        err["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
        res.exit_code = e.code() == ErrorCode::ConfigError ? 2 : 1;
        try {
            res.report = write_report(outdir, command, err, cfg, seconds_since(t0));
        } catch (...) {
            res.report = err;
        }
    } catch (const std::exception& e) {
        Json err;
        err["error"] = {{"code", "Internal"}, {"message", e.what()}};
        res.exit_code = 1;
        try {
            res.report = write_report(outdir, command, err, cfg, seconds_since(t0));
        } catch (...) {
            res.report = err;
        }
    }
    return res;
}

CommandResult run_command_json(const std::string& command, const std::string& config_json,
                               const std::string& overrides_json, const std::string& outdir) {
    RunConfig cfg;
    try {
        Json j = Json::parse(config_json);
        if (!overrides_json.empty()) {
            Json ov = Json::parse(overrides_json);
            j = RunConfig::apply_overrides(std::move(j), ov);
        }
        cfg = RunConfig::from_json(j);
    } catch (const Json::exception& e) {
        CommandResult res;
        res.exit_code = 2;
        res.report = Json{{"error", {{"code", "ConfigError"},
                                     {"message", std::string("config parse: ") + e.what()}}}};
        return res;
    } catch (const Error& e) {
        CommandResult res;
        res.exit_code = 2;
        res.report =
            Json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}};
        return res;
    }
    return run_command(command, cfg, outdir);
}

}  // namespace fbl
