#include "fbl/critical.hpp"

#include "fbl/log.hpp"
#include "fbl/pool.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace fbl {

namespace {

Json cvec_to_json(const CVec& v) {
    Json arr = Json::array();
    for (int i = 0; i < v.size(); ++i)
        arr.push_back({{"re", v[i].real()}, {"im", v[i].imag()}});
    return arr;
}

}  // namespace

Json Equilibrium::to_json() const {
    Json j;
    j["x"] = std::vector<double>(x.data(), x.data() + x.size());
    j["eigenvalues"] = cvec_to_json(eigenvalues);
    j["morse_index"] = morse_index;
    j["simple"] = simple;
    j["hyperbolic"] = hyperbolic;
    j["residual"] = residual;
    return j;
}

Equilibrium classify_equilibrium(const CyclicVectorField& field, const Vec& x,
                                 double tol_spectrum) {
    Equilibrium e;
    e.x = x;
    e.residual = field.evaluate(x).norm();
    if (e.residual > 1e-6)
        log::warn("classify_equilibrium: residual " + std::to_string(e.residual) +
                  " is not small");
    const Mat J = field.jacobian(x);
    Eigen::EigenSolver<Mat> es(J);
    if (es.info() != Eigen::Success)
        fail(ErrorCode::NonFiniteValue, "eigen solve failed at equilibrium");
    e.eigenvalues = es.eigenvalues();
    e.morse_index = 0;
    e.simple = true;
    e.hyperbolic = true;
    for (int i = 0; i < e.eigenvalues.size(); ++i) {
        const auto lam = e.eigenvalues[i];
        if (lam.real() > tol_spectrum) ++e.morse_index;
        if (std::abs(lam) <= tol_spectrum) e.simple = false;
        if (std::abs(lam.real()) <= tol_spectrum) e.hyperbolic = false;
    }
    return e;
}

std::optional<Vec> refine_equilibrium(const CyclicVectorField& field, const Vec& start,
                                      const NewtonOptions& newton) {
    Vec x = start;
    if (!field.domain().contains(x)) return std::nullopt;
    Vec fx = field.evaluate(x);
    for (int it = 0; it < newton.max_iter; ++it) {
        if (fx.norm() <= newton.tol) return x;
        Mat J;
        try {
            J = field.jacobian(x);
        } catch (const Error&) {
            return std::nullopt;
        }
        const Vec step = J.fullPivLu().solve(-fx);
        if (!step.allFinite()) return std::nullopt;
        double lambda = 1.0;
        bool advanced = false;
        for (int halve = 0; halve < 25; ++halve, lambda *= 0.5) {
            const Vec xn = x + lambda * step;
            if (!field.domain().contains(xn)) continue;
            Vec fn(field.dim());
            if (!field.try_evaluate(xn, fn)) continue;
            if (fn.norm() < fx.norm() || fn.norm() <= newton.tol) {
                x = xn;
                fx = fn;
                advanced = true;
                break;
            }
        }
        if (!advanced) return std::nullopt;
    }
    return fx.norm() <= newton.tol ? std::optional<Vec>(x) : std::nullopt;
}

EquilibriumSearch find_equilibria(const CyclicVectorField& field, const Box& box,
                                  int grid_per_axis, const NewtonOptions& newton,
                                  double tol_spectrum, double dedup_base, int workers) {
    EquilibriumSearch out;
    const int n = field.dim();
    for (int i = 0; i < n; ++i)
        if (!(box.lower[i] <= box.upper[i])) return out;  // empty box

    // Grid of starts, clipped to the domain interior.
    std::vector<Vec> starts;
    const int m = std::max(1, grid_per_axis);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        Vec x(n);
        for (int i = 0; i < n; ++i) {
            const double t =
                m == 1 ? 0.5 : (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) / m;
            double lo = std::isfinite(box.lower[i]) ? box.lower[i] : -5.0;
            double hi = std::isfinite(box.upper[i]) ? box.upper[i] : 5.0;
            x[i] = lo + t * (hi - lo);
        }
        if (field.domain().contains(x)) starts.push_back(std::move(x));
        int k = 0;
        while (k < n && ++idx[static_cast<std::size_t>(k)] == m) {
            idx[static_cast<std::size_t>(k)] = 0;
            ++k;
        }
        if (k == n) break;
    }
    out.starts = static_cast<int>(starts.size());

    std::vector<std::optional<Vec>> roots(starts.size());
    parallel_for(starts.size(), workers, [&](std::size_t i) {
        roots[i] = refine_equilibrium(field, starts[i], newton);
    });

    std::vector<Vec> unique_roots;
    for (const auto& r : roots) {
        if (!r) {
            ++out.dropped_nonconverged;
            continue;
        }
        ++out.converged;
        if (!box.contains(*r)) continue;  // outside the requested census box
        bool duplicate = false;
        for (const auto& u : unique_roots) {
            if ((u - *r).norm() <= dedup_base * (1.0 + u.norm())) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) unique_roots.push_back(*r);
    }
    // Deterministic ordering regardless of grid enumeration details.
    std::sort(unique_roots.begin(), unique_roots.end(), [](const Vec& a, const Vec& b) {
        for (int i = 0; i < a.size(); ++i)
            if (a[i] != b[i]) return a[i] < b[i];
        return false;
    });
    for (const auto& r : unique_roots)
        out.equilibria.push_back(classify_equilibrium(field, r, tol_spectrum));
    return out;
}

Json PeriodicOrbit::to_json(bool include_samples) const {
    Json j;
    j["anchor"] = std::vector<double>(anchor.data(), anchor.data() + anchor.size());
    j["period"] = period;
    j["multipliers"] = cvec_to_json(multipliers);
    j["trivial_multiplier_error"] = trivial_multiplier_error;
    j["simple"] = simple;
    j["unique_unit_modulus"] = unique_unit_modulus;
    j["hyperbolic"] = hyperbolic;
    j["morse_index"] = morse_index;
    if (include_samples) {
        Json rows = Json::array();
        for (std::size_t k = 0; k < samples.times.size(); ++k) {
            Json row;
            row["t"] = samples.times[k];
            row["x"] = std::vector<double>(samples.states[k].data(),
                                           samples.states[k].data() + samples.states[k].size());
            rows.push_back(row);
        }
        j["samples"] = rows;
    }
    return j;
}

void classify_from_monodromy(PeriodicOrbit& orbit, const Mat& monodromy,
                             double multiplier_tol) {
    Eigen::EigenSolver<Mat> es(monodromy);
    if (es.info() != Eigen::Success)
        fail(ErrorCode::NonFiniteValue, "monodromy eigen solve failed");
    orbit.multipliers = es.eigenvalues();
    int near_one = 0, unit_modulus = 0;
    orbit.trivial_multiplier_error = kInf;
    orbit.morse_index = 0;
    for (int i = 0; i < orbit.multipliers.size(); ++i) {
        const auto mu = orbit.multipliers[i];
        orbit.trivial_multiplier_error =
            std::min(orbit.trivial_multiplier_error, std::abs(mu - std::complex<double>(1, 0)));
        if (std::abs(mu - std::complex<double>(1, 0)) <= multiplier_tol) ++near_one;
        if (std::abs(std::abs(mu) - 1.0) <= multiplier_tol) ++unit_modulus;
        if (std::abs(mu) > 1.0 + multiplier_tol) ++orbit.morse_index;
    }
    orbit.simple = near_one == 1;
    orbit.unique_unit_modulus = unit_modulus == 1;
    orbit.hyperbolic = orbit.simple && orbit.unique_unit_modulus;
}

namespace {

/// Orthonormal basis of the section hyperplane (columns orthogonal to the
/// normal).
Mat section_basis(const Vec& normal) {
    const int n = static_cast<int>(normal.size());
    Mat A(n, 1);
    A.col(0) = normal.normalized();
    Eigen::HouseholderQR<Mat> qr(A);
    const Mat Q = qr.householderQ();
    return Q.rightCols(n - 1);
}

struct ReturnMap {
    const CyclicVectorField& field;
    const SectionSpec& section;
    const IntegratorConfig& config;
    double horizon;
    double time_sign = 1.0;
    double min_return_time = 1e-9;  // skip fold re-crossings near the start

    struct Result {
        bool ok = false;
        Vec point;        // first-return state
        double time = 0;  // return time (positive)
    };

    Result first_return(const Vec& start) const {
        Result res;
        IntegratorConfig cfg = config;
        cfg.dense_output = true;
        Trajectory traj = integrate(field, start, 0.0, time_sign * horizon, cfg);
        auto crossings = section_crossings(field, traj, section, config.abs_tol);
        std::sort(crossings.begin(), crossings.end(),
                  [](const SectionCrossing& a, const SectionCrossing& b) {
                      return std::abs(a.time) < std::abs(b.time);
                  });
        for (const auto& c : crossings) {
            if (std::abs(c.time) > min_return_time) {
                res.ok = true;
                res.point = c.state;
                res.time = std::abs(c.time);
                return res;
            }
        }
        return res;
    }
};

}  // namespace

CycleResult find_periodic_orbit(const CyclicVectorField& field, const Vec& x0,
                                std::optional<SectionSpec> section,
                                const IntegratorConfig& config,
                                const CycleSearchOptions& opts) {
    CycleResult result;
    const int n = field.dim();
    const double ts = opts.time_sign >= 0 ? 1.0 : -1.0;

    // Transient.
    Trajectory transient = integrate(field, x0, 0.0, ts * opts.transient, config);
    if (transient.status != TrajectoryStatus::Ok) {
        result.status = CycleResult::Status::NoReturn;
        result.detail = std::string("transient stopped: ") +
                        trajectory_status_name(transient.status);
        return result;
    }
    Vec settled = transient.x_end();
    {
        Vec fx(n);
        if (field.try_evaluate(settled, fx) && fx.norm() < opts.equilibrium_speed_tol) {
            result.status = CycleResult::Status::ConvergedToEquilibrium;
            result.detail = "trajectory settled at an equilibrium";
            return result;
        }
    }

    // Exploration for the default section and the initial guess.
    IntegratorConfig dense_cfg = config;
    dense_cfg.dense_output = true;
    Trajectory explore = integrate(field, settled, 0.0, ts * opts.search_horizon, dense_cfg);
    if (explore.status != TrajectoryStatus::Ok) {
        result.status = CycleResult::Status::NoReturn;
        result.detail = std::string("exploration stopped: ") +
                        trajectory_status_name(explore.status);
        return result;
    }

    // A slowly contracting spiral can cross any section indefinitely while
    // converging; catch it by the diameter of the settled exploration tail.
    {
        double diam = 0.0;
        const std::size_t half = explore.states.size() / 2;
        for (std::size_t k = half; k < explore.states.size(); ++k)
            diam = std::max(diam, (explore.states[k] - explore.x_end()).norm());
        if (diam < 1e-6 * (1.0 + explore.x_end().norm())) {
            result.status = CycleResult::Status::ConvergedToEquilibrium;
            result.detail = "exploration tail collapsed to a point";
            return result;
        }
    }

    // Default section: through the time average, normal along the flow
    // there. Non-convex cycles can cut that plane several times per period,
    // which leaves the first-return displacement without a fixed point; when
    // the crossing pattern shows that, fall back to a coordinate section
    // through the midrange of the widest-swinging coordinate.
    Vec lo_v = explore.states.front(), hi_v = explore.states.front();
    for (const auto& s : explore.states) {
        lo_v = lo_v.cwiseMin(s);
        hi_v = hi_v.cwiseMax(s);
    }
    const double explore_diam = (hi_v - lo_v).norm();

    auto collect = [&](const SectionSpec& s) {
        auto cr = section_crossings(field, explore, s, config.abs_tol);
        std::sort(cr.begin(), cr.end(), [](const SectionCrossing& a, const SectionCrossing& b) {
            return std::abs(a.time) < std::abs(b.time);
        });
        return cr;
    };
    // Best near-return pair among the trailing crossings: candidate period
    // and the number of crossings per period.
    struct CycleGuess {
        bool ok = false;
        Vec p0;
        double period = 0.0;
        std::size_t stride = 1;
        double gap = kInf;  // state distance of the best near-return pair
    };
    auto guess_from = [&](const std::vector<SectionCrossing>& cr) {
        CycleGuess g;
        if (cr.size() < 2) return g;
        const std::size_t lo = cr.size() > 14 ? cr.size() - 14 : 0;
        double best = kInf;
        for (std::size_t i = lo; i < cr.size(); ++i)
            for (std::size_t j = i + 1; j < cr.size(); ++j)
                best = std::min(best, (cr[i].state - cr[j].state).norm());
        if (!std::isfinite(best)) return g;
        // Among near-minimal pairs prefer the smallest stride: for a clean
        // once-per-period section the consecutive pair then wins even when a
        // double-period pair is marginally tighter. The absolute floor keeps
        // noise-level gap differences from deciding the stride.
        const double window = std::max(10.0 * best, 1e-6 * explore_diam);
        for (std::size_t i = lo; i < cr.size(); ++i)
            for (std::size_t j = i + 1; j < cr.size(); ++j) {
                const double d = (cr[i].state - cr[j].state).norm();
                if (d > window) continue;
                const std::size_t stride = j - i;
                if (!g.ok || stride < g.stride || (stride == g.stride && d < g.gap)) {
                    g.ok = true;
                    g.gap = d;
                    g.p0 = cr[j].state;
                    g.period = std::abs(cr[j].time - cr[i].time);
                    g.stride = stride;
                }
            }
        return g;
    };

    SectionSpec sec;
    if (section) {
        sec = *section;
    } else {
        Vec mean = Vec::Zero(n);
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < explore.times.size(); ++k) {
            const double dt = explore.times[k + 1] - explore.times[k];
            mean += 0.5 * dt * (explore.states[k] + explore.states[k + 1]);
            total += dt;
        }
        mean /= total;
        Vec fmean(n);
        if (!field.domain().contains(mean) || !field.try_evaluate(mean, fmean) ||
            fmean.norm() < 1e-12) {
            fmean = field.evaluate(explore.x_end());
        }
        sec.normal = fmean.normalized();
        sec.offset = sec.normal.dot(mean);
        sec.direction = SectionSpec::Direction::Increasing;
    }
    sec.validate();

    auto crossings = collect(sec);
    CycleGuess guess = guess_from(crossings);
    // Section health: every crossing should cut the flow transversally and
    // the near-return pair should be adjacent crossings.
    double min_transversality = kInf;
    for (const auto& c : crossings) {
        Vec fx(n);
        if (field.domain().contains(c.state) && field.try_evaluate(c.state, fx) &&
            fx.norm() > 0)
            min_transversality =
                std::min(min_transversality, std::abs(sec.normal.dot(fx)) / fx.norm());
    }
    if (!section && (!guess.ok || guess.stride > 1 || guess.gap > 0.02 * explore_diam ||
                     min_transversality < 0.2)) {
        log::debug("cycle search: flow-mean section unhealthy, trying coordinate section");
        int widest = 0;
        double amp = -1.0;
        for (int i = 0; i < n; ++i)
            if (hi_v[i] - lo_v[i] > amp) {
                amp = hi_v[i] - lo_v[i];
                widest = i;
            }
        SectionSpec coord;
        coord.normal = Vec::Unit(n, widest);
        coord.offset = 0.5 * (lo_v[widest] + hi_v[widest]);
        coord.direction = SectionSpec::Direction::Increasing;
        const auto cr2 = collect(coord);
        const auto g2 = guess_from(cr2);
        // A single crossing per period is what the return map needs; the
        // near-return gap only sanity-checks the candidate.
        if (g2.ok && g2.stride == 1 && g2.gap <= 0.02 * explore_diam) {
            sec = coord;
            crossings = cr2;
            guess = g2;
            log::debug("cycle search: coordinate section adopted, period guess " +
                       std::to_string(guess.period));
        } else {
            log::debug("cycle search: coordinate section rejected (ok=" +
                       std::to_string(g2.ok) + " stride=" + std::to_string(g2.stride) +
                       " gap=" + std::to_string(g2.gap) + ")");
        }
    }
    if (!guess.ok) {
        result.status = CycleResult::Status::NoReturn;
        result.detail = "fewer than two section crossings within the horizon";
        return result;
    }

    const Vec p0 = guess.p0;
    const double tau0 = guess.period;

    const Mat E = section_basis(sec.normal);
    ReturnMap rmap{field, sec, config, std::max(3.0 * tau0, 1.0), ts, 0.05 * tau0};

    // Newton on the displacement of the return map in section coordinates.
    Vec xi = Vec::Zero(n - 1);
    auto embed = [&](const Vec& coords) { return p0 + E * coords; };
    double return_time = tau0;
    double disp_norm = kInf;
    bool converged = false;
    for (int it = 0; it < opts.newton.max_iter; ++it) {
        const Vec xcur = embed(xi);
        if (!field.domain().contains(xcur)) {
            result.status = CycleResult::Status::NewtonDiverged;
            result.detail = "Newton iterate left the domain";
            return result;
        }
        const auto ret = rmap.first_return(xcur);
        if (!ret.ok) {
            result.status = CycleResult::Status::NoReturn;
            result.detail = "return map lost the section";
            return result;
        }
        return_time = ret.time;
        const Vec disp_full = ret.point - xcur;
        disp_norm = disp_full.norm();
        log::debug("cycle newton: it " + std::to_string(it) + " disp " +
                   std::to_string(disp_norm) + " return time " + std::to_string(ret.time));
        if (disp_norm <= opts.newton.tol) {
            converged = true;
            break;
        }
        // Return-map Jacobian from the monodromy projected onto the section.
        Vec xend;
        const Mat S = variational_flow(field, xcur, 0.0, ts * ret.time, config, xend);
        Vec fret(n);
        field.try_evaluate(ret.point, fret);
        const double gdot = sec.normal.dot(fret);
        if (std::abs(gdot) < 1e-14) {
            result.status = CycleResult::Status::NewtonDiverged;
            result.detail = "section became tangent to the flow";
            return result;
        }
        const Mat proj = Mat::Identity(n, n) - fret * sec.normal.transpose() / gdot;
        const Mat DR = E.transpose() * proj * S * E;
        const Vec rhs = -E.transpose() * disp_full;
        const Vec delta = (DR - Mat::Identity(n - 1, n - 1)).fullPivLu().solve(rhs);
        if (!delta.allFinite()) {
            result.status = CycleResult::Status::NewtonDiverged;
            result.detail = "singular return-map Jacobian";
            return result;
        }
        // Damped update.
        double lambda = 1.0;
        bool advanced = false;
        for (int halve = 0; halve < 12; ++halve, lambda *= 0.5) {
            const Vec xi_try = xi + lambda * delta;
            const Vec xtry = embed(xi_try);
            if (!field.domain().contains(xtry)) continue;
            const auto rt = rmap.first_return(xtry);
            if (!rt.ok) continue;
            if ((rt.point - xtry).norm() < disp_norm) {
                xi = xi_try;
                advanced = true;
                break;
            }
        }
        if (!advanced) {
            result.status = CycleResult::Status::NewtonDiverged;
            result.detail = "no descent in the return-map displacement";
            return result;
        }
    }
    if (!converged && disp_norm > 100 * opts.newton.tol) {
        result.status = CycleResult::Status::NewtonDiverged;
        result.detail = "Newton did not reach tolerance; last displacement " +
                        std::to_string(disp_norm);
        return result;
    }

    PeriodicOrbit orbit;
    orbit.anchor = embed(xi);
    orbit.period = return_time;

    Vec xend;
    const Mat monodromy = variational_flow(field, orbit.anchor, 0.0, orbit.period, config, xend);
    classify_from_monodromy(orbit, monodromy, opts.multiplier_tol);

    // Uniform resampling over one period for injectivity and export.
    Trajectory one_period = integrate(field, orbit.anchor, 0.0, orbit.period, dense_cfg);
    const int m = std::max(opts.samples_per_period, 32);
    orbit.samples.times.reserve(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) {
        const double t = orbit.period * static_cast<double>(k) / m;
        orbit.samples.times.push_back(t);
        orbit.samples.states.push_back(one_period.state_at(std::min(t, one_period.t_end())));
    }
    orbit.samples.status = TrajectoryStatus::Ok;

    result.status = CycleResult::Status::Found;
    result.orbit = std::move(orbit);
    return result;
}

OrbitConsistency classify_periodic_orbit(const CyclicVectorField& field, PeriodicOrbit& orbit,
                                         const IntegratorConfig& config,
                                         double multiplier_tol) {
    const Mat monodromy =
        variational_flow(field, orbit.anchor, 0.0, orbit.period, config);
    classify_from_monodromy(orbit, monodromy, multiplier_tol);
    OrbitConsistency oc;
    if (orbit.simple && !orbit.hyperbolic) {
        oc.consistency_violation = true;
        oc.finding =
            "CONSISTENCY_VIOLATION: simple periodic orbit is not hyperbolic "
            "(contradicts the simplicity/hyperbolicity coincidence)";
    }
    return oc;
}

Json InjectivityReport::to_json() const {
    Json j;
    j["s"] = s;
    j["min_distance"] = min_distance;
    j["phase_separation"] = phase_separation;
    j["witness_t1"] = witness_t1;
    j["witness_t2"] = witness_t2;
    return j;
}

InjectivityReport planar_injectivity_from_samples(const std::vector<Vec>& points,
                                                  const std::vector<double>& times,
                                                  double period, int s, double min_phase_sep) {
    if (points.size() < 16) fail(ErrorCode::TooFewSamples, "need at least 16 orbit samples");
    if (points.size() != times.size())
        fail(ErrorCode::DimensionMismatch, "times/points length mismatch");
    const int n = static_cast<int>(points.front().size());
    if (s < 1 || s > n) fail(ErrorCode::InvalidParameter, "coordinate index out of range");
    const int i = s - 1;
    const int j = s % n;  // wraparound pairs coordinate n with coordinate 1
    InjectivityReport rep;
    rep.s = s;
    rep.phase_separation = min_phase_sep * period;
    const std::size_t m = points.size();
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            double dt = std::abs(times[b] - times[a]);
            dt = std::min(dt, period - dt);  // cyclic separation
            if (dt < rep.phase_separation) continue;
            const double dx = points[a][i] - points[b][i];
            const double dy = points[a][j] - points[b][j];
            const double dist = std::hypot(dx, dy);
            if (dist < rep.min_distance) {
                rep.min_distance = dist;
                rep.witness_t1 = times[a];
                rep.witness_t2 = times[b];
            }
        }
    }
    return rep;
}

InjectivityReport planar_projection_injectivity(const PeriodicOrbit& orbit, int s,
                                                double min_phase_sep) {
    if (orbit.samples.states.size() < 512)
        fail(ErrorCode::TooFewSamples, "orbit must carry >= 512 samples per period");
    // Drop the duplicated endpoint sample for the cyclic distance scan.
    std::vector<Vec> pts(orbit.samples.states.begin(), orbit.samples.states.end() - 1);
    std::vector<double> ts(orbit.samples.times.begin(), orbit.samples.times.end() - 1);
    auto rep = planar_injectivity_from_samples(pts, ts, orbit.period, s, min_phase_sep);
    return rep;
}

}  // namespace fbl
