#include "fbl/connect.hpp"

#include "fbl/log.hpp"
#include "fbl/pool.hpp"
#include "fbl/schur.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace fbl {

namespace {

Json mat_to_json(const Mat& M) {
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(M.size()));
    for (int r = 0; r < M.rows(); ++r)
        for (int c = 0; c < M.cols(); ++c) rows.push_back(M(r, c));
    Json j;
    j["rows"] = static_cast<int>(M.rows());
    j["cols"] = static_cast<int>(M.cols());
    j["row_major"] = rows;
    return j;
}

Mat orthonormal_complement(const Mat& B, int n) {
    if (B.cols() == 0) return Mat::Identity(n, n);
    Eigen::HouseholderQR<Mat> qr(B);
    const Mat Q = qr.householderQ();
    return Q.rightCols(n - B.cols());
}

Mat thin_qr(const Mat& A, bool* rank_ok = nullptr) {
    const int n = static_cast<int>(A.rows());
    const int d = static_cast<int>(A.cols());
    if (d == 0) return Mat(n, 0);
    if (rank_ok) {
        Eigen::JacobiSVD<Mat> svd(A);
        *rank_ok = svd.singularValues().minCoeff() > 1e-13 * (1.0 + svd.singularValues()(0));
    }
    Eigen::HouseholderQR<Mat> qr(A);
    return qr.householderQ() * Mat::Identity(n, d);
}

}  // namespace

Mat local_invariant_basis(const CyclicVectorField& field, const Equilibrium& e,
                          ManifoldSide side, double tol_spectrum) {
    if (!e.hyperbolic)
        fail(ErrorCode::NotHyperbolic, "local invariant basis needs a hyperbolic equilibrium");
    const Mat J = field.jacobian(e.x);
    if (side == ManifoldSide::Unstable)
        return spectral_subspace(
            J, [tol_spectrum](std::complex<double> z) { return z.real() > tol_spectrum; });
    return spectral_subspace(
        J, [tol_spectrum](std::complex<double> z) { return z.real() < -tol_spectrum; });
}

int ConnectionTarget::morse_index() const {
    if (is_cycle()) return std::get<PeriodicOrbit>(element).morse_index;
    return std::get<Equilibrium>(element).morse_index;
}

double ConnectionTarget::distance_to(const Vec& x) const {
    if (!is_cycle()) return (std::get<Equilibrium>(element).x - x).norm();
    const auto& orbit = std::get<PeriodicOrbit>(element);
    double best = kInf;
    for (const auto& s : orbit.samples.states) best = std::min(best, (s - x).norm());
    return best;
}

Json ConnectingOrbit::to_json() const {
    Json j;
    j["e_minus"] = std::vector<double>(e_minus.data(), e_minus.data() + e_minus.size());
    j["e_plus"] = std::vector<double>(e_plus.data(), e_plus.data() + e_plus.size());
    j["plus_is_cycle"] = plus_is_cycle;
    j["i_minus"] = i_minus;
    j["i_plus"] = i_plus;
    j["h_minus"] = h_minus;
    j["h_plus"] = h_plus;
    j["conv_err_minus"] = conv_err_minus;
    j["conv_err_plus"] = conv_err_plus;
    j["direction_index"] = direction_index;
    j["window"] = {{"t_begin", trajectory.times.empty() ? 0.0 : trajectory.t_begin()},
                   {"t_end", trajectory.times.empty() ? 0.0 : trajectory.t_end()}};
    return j;
}

Json ShootSummary::to_json(bool with_orbits) const {
    Json j;
    j["attempts"] = attempts;
    j["misses"] = misses;
    j["found_count"] = static_cast<int>(found.size());
    if (with_orbits) {
        Json arr = Json::array();
        for (const auto& c : found) arr.push_back(c.to_json());
        j["found"] = arr;
    }
    return j;
}

namespace {

/// Quasi-uniform unit directions in R^d: signed axes for d = 1, a uniform
/// circle for d = 2, seeded low-discrepancy normals otherwise.
std::vector<Vec> unit_directions(int d, int count, unsigned long seed) {
    std::vector<Vec> dirs;
    if (d <= 0) return dirs;
    if (d == 1) {
        dirs.push_back(Vec::Constant(1, 1.0));
        dirs.push_back(Vec::Constant(1, -1.0));
        return dirs;
    }
    if (d == 2) {
        for (int k = 0; k < count; ++k) {
            const double a = 2.0 * M_PI * k / count;
            Vec v(2);
            v << std::cos(a), std::sin(a);
            dirs.push_back(std::move(v));
        }
        return dirs;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v[i] = g(rng);
        if (v.norm() < 1e-12) {
            --k;
            continue;
        }
        dirs.push_back(v.normalized());
    }
    return dirs;
}

/// Asymptotic N-level of the orbit derivative near a window end. The raw
/// end sample is unreliable (the seed's off-manifold error dominates there),
/// so the level is the modal N(f(c(t))) over the outer fifth of the window.
int tail_h_level(const CyclicVectorField& field, const Trajectory& traj, bool at_end,
                 const NConvention& conv) {
    const std::size_t m = traj.times.size();
    if (m < 8) return 0;
    const std::size_t span = std::max<std::size_t>(16, m / 5);
    const std::size_t stride = std::max<std::size_t>(1, span / 64);
    std::map<int, int> histogram;
    Vec fx(field.dim());
    for (std::size_t k = 0; k < span; k += stride) {
        const std::size_t idx = at_end ? m - 1 - k : k;
        if (idx >= m) break;
        if (!field.domain().contains(traj.states[idx])) continue;
        if (!field.try_evaluate(traj.states[idx], fx)) continue;
        const NValue nv = n_value(fx, field.signature(), conv, 1e-12);
        if (nv.defined) ++histogram[nv.value];
    }
    if (histogram.empty()) return 0;
    int best = -1, count = 0;
    for (const auto& [value, c] : histogram)
        if (c > count) {
            best = value;
            count = c;
        }
    return (best + 1) / 2;
}

}  // namespace

ShootSummary shoot_connection(const CyclicVectorField& field, const Equilibrium& e_minus,
                              const ConnectionTarget& target, const ShootOptions& opts,
                              const IntegratorConfig& config, const NConvention& conv) {
    ShootSummary summary;
    const Mat U = local_invariant_basis(field, e_minus, ManifoldSide::Unstable);
    const int iu = static_cast<int>(U.cols());
    if (iu == 0) return summary;  // index 0: nothing to shoot

    const double radius = opts.radius_rel * (1.0 + e_minus.x.norm());
    const auto dirs = unit_directions(iu, opts.directions, opts.seed);

    IntegratorConfig cfg = config;
    cfg.dense_output = false;  // forward probing; the final window re-integrates densely

    // Phase 1: forward probes, independent per direction.
    struct Probe {
        bool in_domain = false;
        double hit_time = -1.0;
        Vec seed_point;
    };
    std::vector<Probe> probes(dirs.size());
    parallel_for(dirs.size(), opts.workers, [&](std::size_t di) {
        Probe& p = probes[di];
        p.seed_point = e_minus.x + radius * (U * dirs[di]);
        if (!field.domain().contains(p.seed_point)) return;
        p.in_domain = true;
        Vec x = p.seed_point;
        double t = 0.0;
        while (t < opts.horizon) {
            const double span = std::min(25.0, opts.horizon - t);
            Trajectory chunk = integrate(field, x, 0.0, span, cfg);
            for (std::size_t k = 0; k < chunk.states.size(); ++k) {
                if (target.distance_to(chunk.states[k]) <= opts.conv_tol) {
                    p.hit_time = t + chunk.times[k];
                    break;
                }
            }
            t += chunk.times.back();
            x = chunk.x_end();
            if (p.hit_time >= 0 || chunk.status != TrajectoryStatus::Ok) break;
        }
    });

    // Phase 2: build windows for hits, in direction order.
    for (std::size_t di = 0; di < dirs.size(); ++di) {
        ++summary.attempts;
        if (!probes[di].in_domain || probes[di].hit_time < 0) {
            ++summary.misses;
            continue;
        }
        if (static_cast<int>(summary.found.size()) >= opts.max_found) continue;
        const Vec seed_point = probes[di].seed_point;
        const double hit_time = probes[di].hit_time;

        // Require the orbit to keep converging through the dwell window.
        const double t_plus = hit_time + opts.dwell;

        // Backward extension toward e_minus.
        IntegratorConfig bcfg = cfg;
        Trajectory back = integrate(field, seed_point, 0.0, -opts.backward_span, bcfg);
        double best_dist = (seed_point - e_minus.x).norm();
        double t_minus = 0.0;
        for (std::size_t k = 0; k < back.states.size(); ++k) {
            const double d = (back.states[k] - e_minus.x).norm();
            if (d < best_dist) {
                best_dist = d;
                t_minus = back.times[k];
            }
            if (d <= opts.conv_tol) break;
        }

        // Final dense window in one forward pass.
        IntegratorConfig wcfg = config;
        wcfg.dense_output = true;
        const Vec left_state = t_minus < 0 ? back.state_at(t_minus) : seed_point;
        Trajectory window = integrate(field, left_state, t_minus, t_plus, wcfg);
        if (window.status != TrajectoryStatus::Ok) {
            ++summary.misses;
            continue;
        }
        const double d_end = target.distance_to(window.x_end());
        if (d_end > opts.conv_tol) {  // stopped converging during the dwell
            ++summary.misses;
            continue;
        }

        ConnectingOrbit orbit;
        orbit.trajectory = std::move(window);
        orbit.e_minus = e_minus.x;
        orbit.plus_is_cycle = target.is_cycle();
        orbit.e_plus = target.is_cycle() ? std::get<PeriodicOrbit>(target.element).anchor
                                         : std::get<Equilibrium>(target.element).x;
        orbit.i_minus = e_minus.morse_index;
        orbit.i_plus = target.morse_index();
        orbit.conv_err_minus = best_dist;
        orbit.conv_err_plus = d_end;
        orbit.direction_index = static_cast<int>(di);
        orbit.h_minus = tail_h_level(field, orbit.trajectory, false, conv);
        orbit.h_plus = tail_h_level(field, orbit.trajectory, true, conv);
        if (orbit.h_minus && orbit.h_plus && orbit.h_plus > orbit.h_minus)
            log::warn("connecting orbit has h+ > h-, violating the monotone drop");
        summary.found.push_back(std::move(orbit));
    }
    return summary;
}

Json DichotomyFrames::to_json() const {
    Json j;
    j["tau"] = tau;
    j["n_steps"] = n_steps;
    j["U_frame_at_0"] = mat_to_json(U_frame_at_0);
    j["S_frame_at_0"] = mat_to_json(S_frame_at_0);
    j["P_minus_0"] = mat_to_json(P_minus_0);
    j["P_plus_0"] = mat_to_json(P_plus_0);
    j["oblique"] = oblique;
    return j;
}

DichotomyFrames dichotomy_frames(const CyclicVectorField& field, const ConnectingOrbit& orbit,
                                 double tau, int n_steps, const IntegratorConfig& config,
                                 double tol_spectrum) {
    if (orbit.plus_is_cycle)
        fail(ErrorCode::InvalidParameter,
             "dichotomy frames are built for equilibrium endpoints only");
    if (tau <= 0 || n_steps < 1) fail(ErrorCode::InvalidParameter, "need tau > 0, n_steps >= 1");
    const double T = tau * n_steps;
    if (!orbit.trajectory.covers(-T) || !orbit.trajectory.covers(T))
        fail(ErrorCode::WindowTooShort, "orbit window does not cover [-n*tau, n*tau]");

    const int n = field.dim();
    Equilibrium em = classify_equilibrium(field, orbit.e_minus, tol_spectrum);
    Equilibrium ep = classify_equilibrium(field, orbit.e_plus, tol_spectrum);

    DichotomyFrames frames;
    frames.tau = tau;
    frames.n_steps = n_steps;

    // Unstable frame forward from -T.
    Mat Uf = local_invariant_basis(field, em, ManifoldSide::Unstable, tol_spectrum);
    for (int k = -n_steps; k < 0; ++k) {
        if (Uf.cols() == 0) break;
        const Vec xk = orbit.trajectory.state_at(k * tau);
        const Mat step = variational_flow(field, xk, 0.0, tau, config);
        bool ok = true;
        Uf = thin_qr(step * Uf, &ok);
        if (!ok) fail(ErrorCode::FrameCollapse, "unstable frame lost rank during propagation");
    }
    frames.U_frame_at_0 = Uf.cols() ? Uf : Mat(n, 0);

    // Stable frame backward from +T.
    Mat Sf = local_invariant_basis(field, ep, ManifoldSide::Stable, tol_spectrum);
    for (int k = n_steps; k > 0; --k) {
        if (Sf.cols() == 0) break;
        const Vec xk = orbit.trajectory.state_at(k * tau);
        const Mat step = variational_flow(field, xk, 0.0, -tau, config);
        bool ok = true;
        Sf = thin_qr(step * Sf, &ok);
        if (!ok) fail(ErrorCode::FrameCollapse, "stable frame lost rank during propagation");
    }
    frames.S_frame_at_0 = Sf.cols() ? Sf : Mat(n, 0);

    // Projections at step 0: oblique when [U S] is square and well
    // conditioned, orthogonal fallback otherwise.
    const Mat& U = frames.U_frame_at_0;
    const Mat& S = frames.S_frame_at_0;
    const int du = static_cast<int>(U.cols());
    const int ds = static_cast<int>(S.cols());
    frames.oblique = false;
    if (du + ds == n && du > 0 && ds > 0) {
        Mat B(n, n);
        B.leftCols(du) = U;
        B.rightCols(ds) = S;
        Eigen::FullPivLU<Mat> lu(B);
        if (lu.isInvertible()) {
            Mat Binv = lu.inverse();
            Mat P = U * Binv.topRows(du);
            frames.P_minus_0 = P;
            frames.P_plus_0 = Mat::Identity(n, n) - S * Binv.bottomRows(ds);
            frames.oblique = true;
        }
    }
    if (!frames.oblique) {
        frames.P_minus_0 = du ? Mat(U * U.transpose()) : Mat(Mat::Zero(n, n));
        frames.P_plus_0 =
            ds ? Mat(Mat::Identity(n, n) - S * S.transpose()) : Mat(Mat::Identity(n, n));
    }
    return frames;
}

double default_frame_tau(const CyclicVectorField& field, const ConnectingOrbit& orbit) {
    double rate = 1.0;
    const std::size_t m = orbit.trajectory.states.size();
    const std::size_t stride = std::max<std::size_t>(1, m / 32);
    for (std::size_t k = 0; k < m; k += stride) {
        const Vec& x = orbit.trajectory.states[k];
        if (!field.domain().contains(x)) continue;
        try {
            rate = std::max(rate, field.jacobian(x).operatorNorm());
        } catch (const Error&) {
        }
    }
    return std::min(0.25, std::log(1e2) / rate);
}

FramePath propagate_frames(const std::vector<Mat>& operators, const Mat& U_init,
                           const Mat& S_init) {
    FramePath path;
    const std::size_t L = operators.size();
    path.U.resize(L + 1);
    path.S.resize(L + 1);
    path.U[0] = U_init;
    for (std::size_t k = 0; k < L; ++k) {
        bool ok = true;
        path.U[k + 1] = U_init.cols() ? thin_qr(operators[k] * path.U[k], &ok) : U_init;
        if (!ok) {
            path.collapsed = true;
            return path;
        }
    }
    path.S[L] = S_init;
    for (std::size_t k = L; k > 0; --k) {
        bool ok = true;
        if (S_init.cols()) {
            Eigen::FullPivLU<Mat> lu(operators[k - 1]);
            if (!lu.isInvertible()) {
                path.collapsed = true;
                return path;
            }
            path.S[k - 1] = thin_qr(lu.solve(path.S[k]), &ok);
        } else {
            path.S[k - 1] = S_init;
        }
        if (!ok) {
            path.collapsed = true;
            return path;
        }
    }
    return path;
}

Json TransversalityReport::to_json() const {
    Json j;
    j["transverse"] = transverse;
    j["span_defect"] = span_defect;
    j["min_principal_angle"] = min_principal_angle;
    j["bounded_adjoint_dim"] = bounded_adjoint_dim;
    j["fredholm_index"] = fredholm_index;
    j["gray_zone"] = gray_zone;
    return j;
}

TransversalityReport transversality_test(const DichotomyFrames& frames, int i_minus, int i_plus,
                                         double angle_tol, double confident_angle) {
    const Mat& U = frames.U_frame_at_0;
    const Mat& S = frames.S_frame_at_0;
    const int n = static_cast<int>(std::max(U.rows(), S.rows()));
    if (U.rows() != S.rows() && U.cols() > 0 && S.cols() > 0)
        fail(ErrorCode::DimensionMismatch, "frame row dimensions differ");
    if (static_cast<int>(U.cols()) != i_minus || static_cast<int>(S.cols()) != n - i_plus)
        fail(ErrorCode::DimensionMismatch, "frame dimensions do not match the Morse indices");

    TransversalityReport rep;
    rep.fredholm_index = i_minus - i_plus;

    // Span defect from the singular values of the stacked frames.
    Mat B(n, U.cols() + S.cols());
    if (U.cols()) B.leftCols(U.cols()) = U;
    if (S.cols()) B.rightCols(S.cols()) = S;
    int rank = 0;
    if (B.cols() > 0) {
        Eigen::JacobiSVD<Mat> svd(B);
        const auto& sv = svd.singularValues();
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > angle_tol) ++rank;
    }
    rep.span_defect = n - rank;
    rep.transverse = rep.span_defect == 0;

    // Complements and their intersection (bounded adjoint solutions live in
    // U-perp cap S-perp).
    const Mat Up = orthonormal_complement(U, n);
    const Mat Sp = orthonormal_complement(S, n);
    if (Up.cols() == 0 || Sp.cols() == 0) {
        rep.bounded_adjoint_dim = 0;
        rep.min_principal_angle = M_PI / 2.0;
    } else {
        Mat C(n, Up.cols() + Sp.cols());
        C.leftCols(Up.cols()) = Up;
        C.rightCols(Sp.cols()) = Sp;
        Eigen::JacobiSVD<Mat> svd(C);
        int rank_c = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > angle_tol) ++rank_c;
        rep.bounded_adjoint_dim =
            static_cast<int>(Up.cols() + Sp.cols()) - rank_c;  // dim of the intersection
        // Smallest principal angle via sines: the singular values of
        // (I - P_Uperp) Sp are the sines of the principal angles.
        const Mat Y = Sp - Up * (Up.transpose() * Sp);
        Eigen::JacobiSVD<Mat> svd_y(Y);
        const double smin = svd_y.singularValues().minCoeff();
        rep.min_principal_angle = std::asin(std::clamp(smin, 0.0, 1.0));
    }
    rep.gray_zone = rep.transverse && rep.min_principal_angle <= confident_angle;
    return rep;
}

Json AutomaticCheck::to_json() const {
    Json j;
    switch (prediction) {
        case TransversalityPrediction::PredictedTransverseCaseI:
            j["prediction"] = "PredictedTransverse(case_i)";
            break;
        case TransversalityPrediction::PredictedTransverseCaseII:
            j["prediction"] = "PredictedTransverse(case_ii)";
            break;
        case TransversalityPrediction::NotCovered:
            j["prediction"] = "NotCovered";
            break;
    }
    j["witness_h"] = witness_h;
    j["index_inequalities_ok"] = index_inequalities_ok;
    j["finding"] = finding;
    if (homoindexed_injectivity) j["homoindexed_injectivity"] = homoindexed_injectivity->to_json();
    return j;
}

AutomaticCheck automatic_transversality_check(const CyclicVectorField& field,
                                              const ConnectingOrbit& orbit) {
    AutomaticCheck chk;
    const int hmax = max_cone_index(field.dim());

    if (orbit.plus_is_cycle) {
        chk.prediction = TransversalityPrediction::PredictedTransverseCaseI;
    } else {
        const int lo = std::max(1, (orbit.i_plus + 1) / 2);
        const int hi = std::min(orbit.i_minus / 2, hmax);
        if (lo <= hi) {
            chk.prediction = TransversalityPrediction::PredictedTransverseCaseII;
            chk.witness_h = lo;
        } else {
            chk.prediction = TransversalityPrediction::NotCovered;
        }
    }

    // Asymptotic index inequalities from the N-levels of the orbit derivative.
    if (orbit.h_plus > 0 && !orbit.plus_is_cycle &&
        orbit.i_plus > 2 * orbit.h_plus - 1) {
        chk.index_inequalities_ok = false;
        chk.finding += "i(e+) > 2h+-1; ";
    }
    if (orbit.h_minus > 0 && orbit.i_minus < std::max(2 * orbit.h_minus - 1, 1)) {
        chk.index_inequalities_ok = false;
        chk.finding += "i(e-) < max(2h--1, 1); ";
    }

    // Homoindexed equilibrium pairs: the planar projections of the orbit
    // itself must be injective.
    if (!orbit.plus_is_cycle && orbit.i_minus == orbit.i_plus && orbit.i_minus % 2 == 1 &&
        orbit.trajectory.states.size() >= 16) {
        const double span = orbit.trajectory.t_end() - orbit.trajectory.t_begin();
        InjectivityReport best;
        best.min_distance = kInf;
        for (int s = 1; s <= field.dim(); ++s) {
            auto rep = planar_injectivity_from_samples(orbit.trajectory.states,
                                                       orbit.trajectory.times,
                                                       2.0 * span,  // no cyclic wrap
                                                       s, 0.02);
            if (rep.min_distance < best.min_distance) best = rep;
        }
        chk.homoindexed_injectivity = best;
        if (best.min_distance < 1e-9)
            chk.finding += "homoindexed orbit planar projection nearly non-injective; ";
    }
    return chk;
}

Mat spectral_dichotomy_projection(const Mat& T) {
    const Mat U = spectral_subspace(T, [](std::complex<double> z) { return std::abs(z) > 1.0; });
    const Mat S = spectral_subspace(T, [](std::complex<double> z) { return std::abs(z) < 1.0; });
    const int n = static_cast<int>(T.rows());
    if (U.cols() + S.cols() != n)
        fail(ErrorCode::NoDichotomy, "operator has eigenvalues on the unit circle");
    if (U.cols() == 0) return Mat::Zero(n, n);
    if (S.cols() == 0) return Mat::Identity(n, n);
    Mat B(n, n);
    B.leftCols(U.cols()) = U;
    B.rightCols(S.cols()) = S;
    Eigen::FullPivLU<Mat> lu(B);
    if (!lu.isInvertible()) fail(ErrorCode::NoDichotomy, "spectral splitting is degenerate");
    return U * lu.inverse().topRows(U.cols());
}

GreenSolve green_function_solve(const std::vector<Mat>& operators,
                                const std::vector<Mat>& projections,
                                const std::vector<Vec>& rhs) {
    const std::size_t L = operators.size();
    if (L == 0) fail(ErrorCode::InvalidParameter, "empty operator window");
    if (projections.size() != L + 1)
        fail(ErrorCode::DimensionMismatch, "need one projection per step plus the endpoint");
    if (rhs.size() != L) fail(ErrorCode::DimensionMismatch, "need one forcing term per step");
    const int n = static_cast<int>(operators.front().rows());

    // Orthonormal bases of the unstable ranges for the stable backward pass.
    std::vector<Mat> F(L + 1);
    int rank_u = -1;
    for (std::size_t k = 0; k <= L; ++k) {
        Eigen::JacobiSVD<Mat> svd(projections[k], Eigen::ComputeThinU);
        int r = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > 1e-10) ++r;
        F[k] = svd.matrixU().leftCols(r);
        if (rank_u < 0) rank_u = r;
        if (r != rank_u) fail(ErrorCode::NoDichotomy, "projection ranks vary along the window");
    }

    GreenSolve out;
    out.Y.assign(L + 1, Vec::Zero(n));

    // Stable (forward) part: YS(k+1) = T_k YS(k) + (I - P(k+1)) f(k).
    std::vector<Vec> YS(L + 1, Vec::Zero(n));
    for (std::size_t k = 0; k < L; ++k)
        YS[k + 1] = operators[k] * YS[k] + (Mat::Identity(n, n) - projections[k + 1]) * rhs[k];

    // Unstable (backward) part: YU(k) = T_k^{-1}|_U (YU(k+1) - P(k+1) f(k)).
    std::vector<Vec> YU(L + 1, Vec::Zero(n));
    if (rank_u > 0) {
        for (std::size_t k = L; k > 0; --k) {
            const Vec u = YU[k] - projections[k] * rhs[k - 1];
            const Mat C = F[k].transpose() * (operators[k - 1] * F[k - 1]);
            Eigen::FullPivLU<Mat> lu(C);
            if (!lu.isInvertible())
                fail(ErrorCode::NoDichotomy, "unstable restriction is not invertible");
            YU[k - 1] = F[k - 1] * lu.solve(F[k].transpose() * u);
        }
    }
    for (std::size_t k = 0; k <= L; ++k) out.Y[k] = YS[k] + YU[k];

    for (std::size_t k = 0; k < L; ++k) {
        const double r = (out.Y[k + 1] - operators[k] * out.Y[k] - rhs[k]).norm();
        out.interior_residual = std::max(out.interior_residual, r);
    }
    return out;
}

Json RoughnessEntry::to_json() const {
    Json j;
    j["epsilon"] = epsilon;
    j["projection_deviation"] = projection_deviation;
    j["collapsed"] = collapsed;
    return j;
}

Json RoughnessReport::to_json() const {
    Json j;
    Json rows = Json::array();
    for (const auto& e : entries) rows.push_back(e.to_json());
    j["entries"] = rows;
    j["slope"] = slope;
    j["slope_valid"] = slope_valid;
    return j;
}

namespace {

/// Oblique projections P(k) onto U(k) along S(k) over a frame path; empty on
/// conditioning failure.
std::vector<Mat> oblique_projections(const FramePath& path, int n) {
    std::vector<Mat> P;
    const std::size_t L = path.U.size();
    P.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
        const Mat& U = path.U[k];
        const Mat& S = path.S[k];
        if (U.cols() + S.cols() != n) return {};
        if (U.cols() == 0) {
            P.push_back(Mat::Zero(n, n));
            continue;
        }
        if (S.cols() == 0) {
            P.push_back(Mat::Identity(n, n));
            continue;
        }
        Mat B(n, n);
        B.leftCols(U.cols()) = U;
        B.rightCols(S.cols()) = S;
        Eigen::FullPivLU<Mat> lu(B);
        if (!lu.isInvertible()) return {};
        P.push_back(U * lu.inverse().topRows(U.cols()));
    }
    return P;
}

}  // namespace

RoughnessReport dichotomy_roughness_probe(const std::vector<Mat>& operators,
                                          const std::vector<double>& epsilons,
                                          unsigned long seed) {
    const std::size_t L = operators.size();
    if (L < 8) fail(ErrorCode::InvalidParameter, "window too short for the roughness probe");
    const int n = static_cast<int>(operators.front().rows());

    // Base dichotomy data from the ends of the window.
    const Mat U0 = spectral_subspace(operators.front(),
                                     [](std::complex<double> z) { return std::abs(z) > 1.0; });
    const Mat SL = spectral_subspace(operators.back(),
                                     [](std::complex<double> z) { return std::abs(z) < 1.0; });
    FramePath base = propagate_frames(operators, U0, SL);
    if (base.collapsed) fail(ErrorCode::NoDichotomy, "base sequence frames collapsed");
    const auto Pbase = oblique_projections(base, n);
    if (Pbase.empty()) fail(ErrorCode::NoDichotomy, "base sequence is not dichotomic");

    // Unit-norm random perturbation directions, fixed across scales.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Mat> R(L);
    for (std::size_t k = 0; k < L; ++k) {
        Mat M(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) M(r, c) = g(rng);
        R[k] = M / M.operatorNorm();
    }

    const std::size_t margin = L / 4;
    RoughnessReport rep;
    for (double eps : epsilons) {
        RoughnessEntry entry;
        entry.epsilon = eps;
        std::vector<Mat> pert(L);
        for (std::size_t k = 0; k < L; ++k) pert[k] = operators[k] + eps * R[k];
        FramePath path = propagate_frames(pert, U0, SL);
        if (path.collapsed) {
            entry.collapsed = true;
            rep.entries.push_back(entry);
            continue;
        }
        const auto P = oblique_projections(path, n);
        if (P.empty()) {
            entry.collapsed = true;
            rep.entries.push_back(entry);
            continue;
        }
        double dev = 0.0;
        for (std::size_t k = margin; k + margin <= L; ++k)
            dev = std::max(dev, (P[k] - Pbase[k]).operatorNorm());
        entry.projection_deviation = dev;
        rep.entries.push_back(entry);
    }

    // Log-log regression over surviving nonzero entries.
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : rep.entries)
        if (!e.collapsed && e.epsilon > 0 && e.projection_deviation > 0)
            pts.emplace_back(std::log(e.epsilon), std::log(e.projection_deviation));
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto& [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double m = static_cast<double>(pts.size());
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        rep.slope_valid = true;
    }
    return rep;
}

CyclicVectorField bump_perturbation(int n, int j, double center_j, double center_j1, double r) {
    if (r <= 0) fail(ErrorCode::InvalidParameter, "bump radius must be positive");
    if (j < 1 || j > n) fail(ErrorCode::InvalidParameter, "bump component out of range");
    const int ji = j - 1;
    const int j1 = j % n;

    auto xi = [](double y) { return y > 0 ? std::exp(-1.0 / y) : 0.0; };
    auto dxi = [](double y) { return y > 0 ? std::exp(-1.0 / y) / (y * y) : 0.0; };
    auto psi = [=](double d) {
        const double a = xi(r - d);
        const double b = xi(d - r / 2.0);
        return a + b > 0 ? a / (a + b) : 0.0;
    };
    auto dpsi = [=](double d) {
        const double a = xi(r - d);
        const double b = xi(d - r / 2.0);
        if (a + b <= 0) return 0.0;
        const double da = -dxi(r - d);
        const double db = dxi(d - r / 2.0);
        return (da * b - a * db) / ((a + b) * (a + b));
    };

    auto ev = [=](const Vec& x, Vec& out) {
        out.setZero();
        const double dj = x[ji] - center_j;
        const double dj1 = x[j1] - center_j1;
        out[ji] = psi(dj * dj + dj1 * dj1);
    };
    auto jc = [=](const Vec& x, Mat& J) {
        J.setZero();
        const double dj = x[ji] - center_j;
        const double dj1 = x[j1] - center_j1;
        const double dp = dpsi(dj * dj + dj1 * dj1);
        J(ji, ji) = dp * 2.0 * dj;
        J(ji, j1) = dp * 2.0 * dj1;
    };
    Json params{{"n", n}, {"j", j}, {"center", {center_j, center_j1}}, {"r", r}};
    CyclicVectorField f(n, Box::all(n), FeedbackSignature::normalized(n), std::move(ev),
                        std::move(jc), "bump", std::move(params));
    std::vector<std::set<int>> deps(static_cast<std::size_t>(n));
    deps[static_cast<std::size_t>(ji)] = {j, j1 + 1};
    f.set_dependencies(std::move(deps));
    return f;
}

double functional_transversality_integral(const Trajectory& window,
                                          const std::vector<Vec>& phi,
                                          const CyclicVectorField& h) {
    const std::size_t m = window.times.size();
    if (phi.size() != m)
        fail(ErrorCode::GridMismatch, "adjoint samples do not match the trajectory grid");
    if (m < 2) fail(ErrorCode::TooFewSamples, "window too short");

    std::vector<double> g(m);
    Vec hx(h.dim());
    for (std::size_t k = 0; k < m; ++k) {
        if (!h.try_evaluate(window.states[k], hx))
            fail(ErrorCode::NonFiniteValue, "perturbation field not finite on the window");
        g[k] = phi[k].dot(hx);
    }

    // Composite Simpson on the (nonuniform) trajectory grid, trapezoid for a
    // trailing odd interval.
    double total = 0.0;
    std::size_t k = 0;
    while (k + 2 < m) {
        const double h0 = window.times[k + 1] - window.times[k];
        const double h1 = window.times[k + 2] - window.times[k + 1];
        const double hs = h0 + h1;
        total += hs / 6.0 *
                 ((2.0 - h1 / h0) * g[k] + hs * hs / (h0 * h1) * g[k + 1] +
                  (2.0 - h0 / h1) * g[k + 2]);
        k += 2;
    }
    if (k + 1 < m) {
        const double dt = window.times[k + 1] - window.times[k];
        total += 0.5 * dt * (g[k] + g[k + 1]);
    }
    return total;
}

CyclicVectorField perturb_to_hyperbolic(const CyclicVectorField& field, const Vec& e,
                                        double alpha) {
    return field.radial_perturbed(e, alpha);
}

CyclicVectorField constant_shift(const CyclicVectorField& field, const Vec& lambda) {
    return field.shifted(lambda);
}

}  // namespace fbl
