#include "fbl/verify.hpp"

#include "fbl/connect.hpp"
#include "fbl/critical.hpp"
#include "fbl/floquet.hpp"
#include "fbl/integrate.hpp"
#include "fbl/limitset.hpp"
#include "fbl/log.hpp"
#include "fbl/pool.hpp"
#include "fbl/runner.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace fbl {

CyclicVectorField shipped_linear3() { return linear_cyclic(3, 1.0, -1.0); }
CyclicVectorField shipped_goodwin_stable() { return goodwin(2.0, 1.0); }
CyclicVectorField shipped_goodwin_oscillatory() { return goodwin(12.0, 0.5); }
CyclicVectorField shipped_bidirectional() {
    return bidirectional_synthetic(3, BidirectionalParams{1.0, 1.0, 0.08, 0.08});
}
CyclicVectorField shipped_repressilator() { return repressilator(12.0, 0.5, 2.0); }

namespace {

using Clock = std::chrono::steady_clock;

IntegratorConfig probe_integrator() {
    IntegratorConfig c;
    c.rel_tol = 1e-9;
    c.abs_tol = 1e-11;
    c.max_step = 1.0;
    return c;
}

IntegratorConfig tight_integrator() {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-12;
    c.max_step = 0.5;
    return c;
}

/// Random matrix with the cyclic sign pattern: one strict branch fully
/// populated, weak-side entries zero or matching the sign condition.
Mat random_mminus_matrix(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> mag(0.2, 2.0);
    std::uniform_real_distribution<double> diag(-1.5, 0.5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (;;) {
        Mat A = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) A(i, i) = diag(rng);
        const bool c_branch = u01(rng) < 0.5;
        Vec b = Vec::Zero(n), c = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            const double sign = (i == n - 1) ? -1.0 : 1.0;
            if (c_branch) {
                c[i] = sign * mag(rng);
                if (u01(rng) < 0.5) b[i] = sign * mag(rng);
            } else {
                b[i] = sign * mag(rng);
                if (u01(rng) < 0.5) c[i] = sign * mag(rng);
            }
        }
        if (std::abs(b.prod() + c.prod()) < 1e-9) continue;
        for (int i = 0; i + 1 < n; ++i) {
            A(i, i + 1) = b[i];
            A(i + 1, i) = c[i];
        }
        A(n - 1, 0) = b[n - 1];
        A(0, n - 1) = c[n - 1];
        return A;
    }
}

/// Independent brute-force N bounds: enumerates concrete sign assignments on
/// patched vectors and counts the weighted products directly from doubles.
std::pair<int, int> brute_force_bounds(const Vec& x, const FeedbackSignature& sig,
                                       const NConvention& conv) {
    const int n = sig.n;
    std::vector<int> zero_pos;
    for (int i = 0; i < n; ++i)
        if (x[i] == 0.0) zero_pos.push_back(i);
    int lo = n + 1, hi = -1;
    const std::size_t total = std::size_t{1} << zero_pos.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
        Vec y = x;
        for (std::size_t k = 0; k < zero_pos.size(); ++k)
            y[zero_pos[k]] = (mask >> k) & 1 ? 0.5 : -0.5;
        int count = 0;
        for (int i = 0; i < n; ++i) {
            const int partner = conv.pairing == EdgePairing::EdgeForward ? (i + 1) % n
                                                                         : (i + n - 1) % n;
            const double prod = sig.delta[static_cast<std::size_t>(i)] * y[i] * y[partner];
            if (conv.counted == CountedSign::Negative ? prod < 0 : prod > 0) ++count;
        }
        lo = std::min(lo, count);
        hi = std::max(hi, count);
    }
    return {lo, hi};
}

struct Checker {
    bool ok = true;
    std::ostringstream detail;
    int failures = 0;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            ++failures;
            if (failures <= 6) detail << what << "; ";
        }
    }
};

// ---------------------------------------------------------------------------

CriterionResult criterion_1(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 1;
    r.name = "N oddness and monotone drop on random matrix-class linear systems";
    const auto t0 = Clock::now();
    Checker chk;

    const int runs = 1000;
    std::atomic<int> violations{0};
    std::atomic<int> defined_samples{0};
    parallel_for(runs, opts.workers, [&](std::size_t run) {
        std::mt19937_64 rng(opts.seed + 77 * run);
        std::uniform_int_distribution<int> dim(3, 8);
        std::uniform_real_distribution<double> mag(0.2, 1.5);
        std::uniform_real_distribution<double> dtd(0.05, 0.4);
        const int n = dim(rng);
        const Mat A = random_mminus_matrix(rng, n);
        const auto sig = FeedbackSignature::normalized(n);
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
        const double dt = dtd(rng);
        const Mat E = (A * dt).exp();  // matrix-exponential oracle
        int last = -1;
        for (int k = 0; k < 50; ++k) {
            x = E * x;
            if (x.norm() < 1e-280) break;
            const NValue nv = n_value(x, sig, opts.convention, 1e-12);
            if (!nv.defined) continue;
            ++defined_samples;
            if (nv.value % 2 == 0) ++violations;
            if (last >= 0 && nv.value > last) ++violations;
            last = nv.value;
        }
    });
    chk.expect(violations.load() == 0,
               "violations=" + std::to_string(violations.load()));
    chk.expect(defined_samples.load() > 10000, "too few defined samples");

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 60.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "0 violations over 1000 systems x 50 samples" : chk.detail.str();
    r.data["violations"] = violations.load();
    r.data["defined_samples"] = defined_samples.load();
    return r;
}

CriterionResult criterion_2(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 2;
    r.name = "Floquet convention arbiter on the closed-form circulant model";
    const auto t0 = Clock::now();
    Checker chk;

    const auto field = shipped_linear3();
    const Mat A = field.jacobian(Vec::Zero(3));
    const Mat M = A.exp();
    const auto decomp = invariant_blocks(M, 1e-8);

    chk.expect(decomp.blocks.size() == 2, "expected two blocks");
    if (decomp.blocks.size() == 2) {
        const double m1 = std::exp(-0.5), m2 = std::exp(-2.0);
        chk.expect(std::abs(decomp.blocks[0].mu - m1) < 1e-8, "block-1 max modulus");
        chk.expect(std::abs(decomp.blocks[0].nu - m1) < 1e-8, "block-1 min modulus");
        chk.expect(std::abs(decomp.blocks[1].mu - m2) < 1e-8, "block-2 modulus");
        Vec w2(3);
        w2 << 1.0, -1.0, 1.0;
        w2.normalize();
        const Vec b2 = decomp.blocks[1].basis.col(0);
        const double angle = std::acos(std::min(1.0, std::abs(b2.dot(w2))));
        chk.expect(angle <= 1e-8, "W_2 direction angle " + std::to_string(angle));
        chk.expect(decomp.gap_ok, "modulus gaps");
    }
    const auto nrep =
        verify_block_nvalues(decomp, field.signature(), opts.convention, 200, opts.seed);
    chk.expect(nrep.ok(), "block N labels failed under the active convention (" +
                              opts.convention.name() + ")");

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 5.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "moduli, W_2 direction and N labels match the closed form"
                       : chk.detail.str();
    r.data["decomposition"] = decomp.to_json();
    return r;
}

CriterionResult criterion_3(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 3;
    r.name = "cone invariance under the variational flow";
    const auto t0 = Clock::now();
    Checker chk;

    const auto cfg = probe_integrator();
    const std::vector<CyclicVectorField> zoo = {
        shipped_linear3(), shipped_goodwin_stable(), shipped_goodwin_oscillatory(),
        shipped_bidirectional(), shipped_repressilator()};
    int total_checked = 0, total_violations = 0;
    for (const auto& field : zoo) {
        const Vec x0 = default_initial_state(field);
        // The mirror (backward-flow) check retraces the forward orbit from
        // its endpoint, so the base stays inside the domain.
        const auto fwd = integrate(field, x0, 0.0, 1.5, cfg);
        chk.expect(fwd.status == TrajectoryStatus::Ok, field.name() + " base trajectory");
        const Vec x_end = fwd.x_end();
        const int hmax = max_cone_index(field.dim());
        // K_upper at h = hmax is the trivial cone {0}: nothing to sample.
        const int combos = 2 * hmax - 1;
        const int per_combo = std::max(1, 1000 / combos);
        for (int h = 1; h <= hmax; ++h) {
            auto repl = verify_cone_invariance(field, x0, h, 0.0, 1.5, per_combo,
                                               opts.seed + h, cfg, opts.convention,
                                               ConeSide::KLower, 1e-9);
            total_checked += repl.checked;
            total_violations += repl.violations;
            if (h < hmax) {
                auto repu = verify_cone_invariance(field, x_end, h, 0.0, -1.5, per_combo,
                                                   opts.seed + 100 + h, cfg,
                                                   opts.convention, ConeSide::KUpper, 1e-9);
                total_checked += repu.checked;
                total_violations += repu.violations;
            }
        }
    }
    chk.expect(total_violations == 0, "violations=" + std::to_string(total_violations));
    chk.expect(total_checked >= 4000, "too few propagated vectors");

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 120.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? std::to_string(total_checked) + " propagated vectors, 0 violations"
                       : chk.detail.str();
    r.data["checked"] = total_checked;
    r.data["violations"] = total_violations;
    return r;
}

CriterionResult criterion_4(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 4;
    r.name = "N bounds match the independent brute-force enumerator";
    const auto t0 = Clock::now();
    Checker chk;

    std::mt19937_64 rng(opts.seed + 4);
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    int mismatches = 0;
    const int total = 10000;
    for (int k = 0; k < total; ++k) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const auto sig = FeedbackSignature::normalized(n);
        const int zeros = static_cast<int>(rng() % n);  // up to n-1 zero coordinates
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
        for (int z = 0; z < zeros; ++z) x[static_cast<int>(rng() % n)] = 0.0;
        const auto nb = n_bounds(x, sig, opts.convention);
        const auto [lo, hi] = brute_force_bounds(x, sig, opts.convention);
        if (nb.n_m != lo || nb.n_M != hi) ++mismatches;
    }
    chk.expect(mismatches == 0, "mismatches=" + std::to_string(mismatches));

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 10.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "10^4 random sparse vectors, exact integer match" : chk.detail.str();
    r.data["mismatches"] = mismatches;
    return r;
}

CriterionResult criterion_5(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 5;
    r.name = "periodic-orbit classification at the recorded oscillatory point";
    const auto t0 = Clock::now();
    Checker chk;

    const auto field = shipped_goodwin_oscillatory();
    CycleSearchOptions copts;
    copts.transient = 300.0;
    copts.search_horizon = 120.0;
    copts.multiplier_tol = 1e-4;
    const auto res =
        find_periodic_orbit(field, default_initial_state(field), std::nullopt,
                            tight_integrator(), copts);
    chk.expect(res.status == CycleResult::Status::Found,
               "orbit not found: " + res.detail);
    if (res.orbit) {
        const auto& orbit = *res.orbit;
        chk.expect(orbit.trivial_multiplier_error <= 1e-4,
                   "trivial multiplier error " +
                       std::to_string(orbit.trivial_multiplier_error));
        chk.expect(orbit.unique_unit_modulus, "unit-modulus multiplier not unique");
        chk.expect(orbit.simple, "trivial multiplier not simple");
        for (int s = 1; s <= 3; ++s) {
            const auto inj = planar_projection_injectivity(orbit, s, 0.05);
            chk.expect(inj.min_distance > 0.0,
                       "planar injectivity margin at s=" + std::to_string(s));
        }
        r.data["orbit"] = orbit.to_json();
        (void)opts;
    }

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 120.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "trivial multiplier, uniqueness and injectivity margins hold"
                       : chk.detail.str();
    return r;
}

CriterionResult criterion_6(const VerifyOptions&) {
    CriterionResult r;
    r.id = 6;
    r.name = "Morse indices of the closed-form linear models";
    const auto t0 = Clock::now();
    Checker chk;

    const auto e1 = classify_equilibrium(linear_cyclic(3, 1.0, -1.0), Vec::Zero(3));
    const auto e3 = classify_equilibrium(linear_cyclic(3, 3.0, -1.0), Vec::Zero(3));
    chk.expect(e1.morse_index == 0, "c=1 index " + std::to_string(e1.morse_index));
    chk.expect(e1.hyperbolic, "c=1 hyperbolic");
    chk.expect(e3.morse_index == 2, "c=3 index " + std::to_string(e3.morse_index));
    chk.expect(e3.hyperbolic, "c=3 hyperbolic");

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 1.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "index 0 at c=1, index 2 at c=3, exact" : chk.detail.str();
    return r;
}

CriterionResult criterion_7(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 7;
    r.name = "transversality machinery: frame unit cases and a computed connection";
    const auto t0 = Clock::now();
    Checker chk;

    // (a) Coordinate-frame unit cases.
    {
        DichotomyFrames fr;
        fr.U_frame_at_0 = Mat::Identity(3, 2);
        Mat S(3, 2);
        S.setZero();
        S(1, 0) = 1;
        S(2, 1) = 1;
        fr.S_frame_at_0 = S;
        const auto rep = transversality_test(fr, 2, 1, 1e-6, 1e-3);
        chk.expect(rep.transverse && rep.span_defect == 0 && rep.bounded_adjoint_dim == 0,
                   "case span{e1,e2}+span{e2,e3}");
        chk.expect(rep.fredholm_index == 1, "fredholm of the first unit case");
    }
    {
        DichotomyFrames fr;
        fr.U_frame_at_0 = Mat::Identity(3, 1);
        fr.S_frame_at_0 = Mat::Identity(3, 2);
        const auto rep = transversality_test(fr, 1, 1, 1e-6, 1e-3);
        chk.expect(!rep.transverse && rep.span_defect == 1 && rep.bounded_adjoint_dim == 1,
                   "case span{e1}+span{e1,e2}");
        chk.expect(rep.fredholm_index == 0, "fredholm of the second unit case");
    }

    // (b) Computed index-2 -> index-0 connection in the dissipative instance.
    const auto field = shipped_bidirectional();
    const auto cfg = probe_integrator();
    auto search = find_equilibria(field, Box::cube(3, -2.0, 2.0), 5, {1e-11, 60}, 1e-8, 1e-6,
                                  opts.workers);
    bool found_connection = false;
    for (const auto& src : search.equilibria) {
        if (!src.hyperbolic || src.morse_index != 2) continue;
        for (const auto& dst : search.equilibria) {
            if (!dst.hyperbolic || dst.morse_index != 0) continue;
            ShootOptions sopts;
            sopts.directions = 64;
            sopts.horizon = 150.0;
            sopts.conv_tol = 1e-6;
            sopts.seed = opts.seed + 7;
            sopts.max_found = 1;
            sopts.workers = opts.workers;
            const auto summary = shoot_connection(field, src, ConnectionTarget{dst}, sopts,
                                                  cfg, opts.convention);
            if (summary.found.empty()) continue;
            const auto& orbit = summary.found.front();
            const double half = std::min(-orbit.trajectory.t_begin(),
                                         orbit.trajectory.t_end()) * 0.95;
            const int steps = std::max(6, static_cast<int>(half / 0.25));
            const auto frames =
                dichotomy_frames(field, orbit, half / steps, steps, cfg, 1e-8);
            const auto rep = transversality_test(frames, orbit.i_minus, orbit.i_plus,
                                                 1e-6, 1e-3);
            chk.expect(rep.transverse, "computed connection not transverse");
            chk.expect(rep.min_principal_angle > 1e-3,
                       "principal angle " + std::to_string(rep.min_principal_angle));
            chk.expect(rep.fredholm_index == 2, "fredholm index");
            const auto auto_chk = automatic_transversality_check(field, orbit);
            chk.expect(auto_chk.prediction ==
                           TransversalityPrediction::PredictedTransverseCaseII,
                       "case (ii) prediction expected");
            r.data["transversality"] = rep.to_json();
            r.data["connection"] = orbit.to_json();
            found_connection = true;
            break;
        }
        if (found_connection) break;
    }
    chk.expect(found_connection, "no index-2 -> index-0 connection located");

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 180.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "unit cases exact; computed connection transverse with margin"
                       : chk.detail.str();
    return r;
}

CriterionResult criterion_8(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 8;
    r.name = "Green-function solve on the constant hyperbolic operator";
    const auto t0 = Clock::now();
    Checker chk;

    const int L = 80;
    Mat T(2, 2);
    T << 2.0, 0.0, 0.0, 0.5;
    const Mat P = spectral_dichotomy_projection(T);
    std::vector<Mat> ops(L, T), projections(L + 1, P);
    {
        std::vector<Vec> f(L, (Vec(2) << 1.0, 0.0).finished());
        const auto sol = green_function_solve(ops, projections, f);
        const Vec mid = sol.Y[L / 2];
        chk.expect(std::abs(mid[0] + 1.0) <= 1e-9 && std::abs(mid[1]) <= 1e-12,
                   "midpoint value (" + std::to_string(mid[0]) + "," +
                       std::to_string(mid[1]) + ")");
        chk.expect(sol.interior_residual <= 1e-12,
                   "constant-forcing residual " + std::to_string(sol.interior_residual));
    }
    {
        std::mt19937_64 rng(opts.seed + 8);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<Vec> f(L);
            for (auto& v : f) v = (Vec(2) << u(rng), u(rng)).finished();
            const auto sol = green_function_solve(ops, projections, f);
            worst = std::max(worst, sol.interior_residual);
        }
        chk.expect(worst <= 1e-8, "random-forcing residual " + std::to_string(worst));
        r.data["max_random_residual"] = worst;
    }

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 5.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "hand value reproduced; residuals within 1e-8" : chk.detail.str();
    return r;
}

CriterionResult criterion_9(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 9;
    r.name = "dichotomy roughness scaling";
    const auto t0 = Clock::now();
    Checker chk;

    Mat R(2, 2);
    const double a = 0.3;
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    Mat D(2, 2);
    D << 2.0, 0.0, 0.0, 0.5;
    const Mat T = R * D * R.inverse();
    std::vector<Mat> ops(60, T);
    const auto rep =
        dichotomy_roughness_probe(ops, {1e-4, 1e-3, 1e-2}, opts.seed + 9);
    chk.expect(rep.slope_valid, "regression did not run");
    chk.expect(rep.slope >= 0.7 && rep.slope <= 1.3,
               "slope " + std::to_string(rep.slope));

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 30.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "log-log slope " + std::to_string(rep.slope) : chk.detail.str();
    r.data = rep.to_json();
    return r;
}

CriterionResult criterion_10(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 10;
    r.name = "Poincare-Bendixson classification and perturbation robustness";
    const auto t0 = Clock::now();
    Checker chk;

    struct Case {
        CyclicVectorField field;
        std::string name;
        bool use_bump;
        double horizon;
    };
    std::vector<Case> cases;
    cases.push_back({shipped_linear3(), "linear3", false, 200.0});
    cases.push_back({shipped_goodwin_stable(), "goodwin_stable", false, 200.0});
    cases.push_back({shipped_goodwin_oscillatory(), "goodwin_oscillatory", false, 600.0});
    cases.push_back({shipped_bidirectional(), "bidirectional", true, 200.0});
    cases.push_back({shipped_repressilator(), "repressilator", false, 600.0});

    const auto cfg = probe_integrator();
    Json rows = Json::array();
    for (const auto& c : cases) {
        const int n = c.field.dim();
        const CyclicVectorField bump =
            c.use_bump ? bump_perturbation(n, 1, 0.3, 0.3, 0.5) : cyclic_tanh_coupling(n, 1.0);
        LimitThresholds thresholds;
        thresholds.horizon = c.horizon;
        SampleSpec class_spec;
        class_spec.count = 300;
        class_spec.seed = opts.seed + 10;
        class_spec.box = default_census_box(c.field);
        const auto probe = robustness_probe(c.field, bump, {0.0, 1e-4, 1e-3},
                                            default_initial_state(c.field), thresholds, cfg,
                                            class_spec);
        for (const auto& e : probe.entries) {
            chk.expect(e.report.kind != LimitKind::Undetermined,
                       c.name + " eps=" + std::to_string(e.epsilon) + " undetermined");
        }
        chk.expect(probe.classification_invariant,
                   c.name + " classification not invariant over class-passing eps");
        Json row = probe.to_json();
        row["model"] = c.name;
        rows.push_back(row);
    }
    r.data["cases"] = rows;

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    chk.expect(r.seconds < 300.0, "runtime budget exceeded");
    r.pass = chk.ok;
    r.details = chk.ok ? "all classifications in the PB dichotomy and invariant"
                       : chk.detail.str();
    return r;
}

CriterionResult criterion_11(const VerifyOptions& opts) {
    CriterionResult r;
    r.id = 11;
    r.name = "homoindexed connection sweep returns empty";
    const auto t0 = Clock::now();
    Checker chk;

    const auto field = shipped_bidirectional();
    const auto cfg = probe_integrator();
    auto search = find_equilibria(field, Box::cube(3, -2.0, 2.0), 5, {1e-11, 60}, 1e-8, 1e-6,
                                  opts.workers);
    int confirmed = 0, findings = 0, pairs = 0;
    for (const auto& src : search.equilibria) {
        if (!src.hyperbolic || src.morse_index % 2 == 0 || src.morse_index < 1) continue;
        for (const auto& dst : search.equilibria) {
            if (!dst.hyperbolic || dst.morse_index != src.morse_index) continue;
            ++pairs;
            ShootOptions sopts;
            sopts.directions = 16;
            sopts.horizon = 120.0;
            sopts.conv_tol = 1e-6;
            sopts.seed = opts.seed + 11;
            sopts.workers = opts.workers;
            const auto summary =
                shoot_connection(field, src, ConnectionTarget{dst}, sopts, cfg,
                                 opts.convention);
            if (!summary.found.empty()) {
                ++findings;
                ShootOptions tighter = sopts;
                tighter.conv_tol /= 10.0;
                const auto recheck = shoot_connection(field, src, ConnectionTarget{dst},
                                                      tighter, cfg, opts.convention);
                if (!recheck.found.empty()) ++confirmed;
            }
        }
    }
    chk.expect(pairs > 0, "no equal-odd-index pairs in the census");
    chk.expect(confirmed == 0,
               std::to_string(confirmed) + " homoindexed connections survived the recheck");

    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.pass = chk.ok;
    r.details = chk.ok ? std::to_string(pairs) + " pairs swept, " +
                             std::to_string(findings) + " raw findings, 0 confirmed"
                       : chk.detail.str();
    r.data["pairs"] = pairs;
    r.data["raw_findings"] = findings;
    r.data["confirmed"] = confirmed;
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(const VerifyOptions& opts) {
    using Criterion = CriterionResult (*)(const VerifyOptions&);
    const Criterion criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                  criterion_5, criterion_6, criterion_7, criterion_8,
                                  criterion_9, criterion_10, criterion_11};
    std::vector<CriterionResult> out;
    int id = 0;
    for (const auto& fn : criteria) {
        ++id;
        try {
            out.push_back(fn(opts));
        } catch (const std::exception& e) {
            CriterionResult r;
            r.id = id;
            r.name = "criterion " + std::to_string(id);
            r.pass = false;
            r.details = std::string("exception: ") + e.what();
            out.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace fbl
