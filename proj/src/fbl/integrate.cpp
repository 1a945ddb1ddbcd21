#include "fbl/integrate.hpp"

#include "fbl/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbl {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

Vec dense_eval(const std::array<Vec, 5>& r, double theta) {
    const double th1 = 1.0 - theta;
    return r[0] + theta * (r[1] + th1 * (r[2] + theta * (r[3] + th1 * r[4])));
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0 && rel_tol < 1) || !(abs_tol > 0 && abs_tol < 1))
        fail(ErrorCode::InvalidParameter, "tolerances must lie in (0,1)");
    if (max_step <= 0) fail(ErrorCode::InvalidParameter, "max_step must be positive");
    if (initial_step < 0) fail(ErrorCode::InvalidParameter, "initial_step must be >= 0");
    if (max_steps <= 0) fail(ErrorCode::InvalidParameter, "max_steps must be positive");
}

const char* trajectory_status_name(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::Ok: return "Ok";
        case TrajectoryStatus::BlowUp: return "BlowUp";
        case TrajectoryStatus::LeftDomain: return "LeftDomain";
        case TrajectoryStatus::MaxStepsExceeded: return "MaxStepsExceeded";
        case TrajectoryStatus::StepSizeUnderflow: return "StepSizeUnderflow";
    }
    return "?";
}

bool Trajectory::covers(double t) const {
    if (times.empty()) return false;
    const double lo = std::min(times.front(), times.back());
    const double hi = std::max(times.front(), times.back());
    const double slack = 1e-12 * (1.0 + std::abs(hi) + std::abs(lo));
    return t >= lo - slack && t <= hi + slack;
}

Vec Trajectory::state_at(double t) const {
    if (times.empty()) fail(ErrorCode::Internal, "empty trajectory");
    if (!covers(t)) fail(ErrorCode::GridMismatch, "time outside trajectory window");
    const bool fwd = forward();
    // Find the step index k with t between times[k] and times[k+1].
    auto cmp_lower = [&](double a, double b) { return fwd ? a < b : a > b; };
    std::size_t lo = 0, hi = times.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (cmp_lower(times[mid], t) || times[mid] == t)
            lo = mid;
        else
            hi = mid;
    }
    if (times[lo] == t) return states[lo];
    if (times[hi] == t) return states[hi];
    if (dense.empty())
        fail(ErrorCode::GridMismatch, "interpolation requested without dense output");
    const double h = times[hi] - times[lo];
    const double theta = (t - times[lo]) / h;
    return dense_eval(dense[lo], theta);
}

std::string Trajectory::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    const int n = states.empty() ? 0 : static_cast<int>(states.front().size());
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    os << "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        os << times[k];
        for (int i = 0; i < n; ++i) os << "," << states[k][i];
        os << "\n";
    }
    return os.str();
}

Trajectory integrate_ode(const OdeRhs& rhs, int dim, const Vec& y0, double t0, double t1,
                         const IntegratorConfig& config, const OdeGuard& guard) {
    config.validate();
    if (y0.size() != dim) fail(ErrorCode::DimensionMismatch, "initial state dimension");

    Trajectory traj;
    traj.times.push_back(t0);
    traj.states.push_back(y0);
    if (t0 == t1) return traj;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double rtol = config.rel_tol, atol = config.abs_tol;

    Vec y = y0;
    double t = t0;
    Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Vec ytmp(dim), ynew(dim), err(dim);

    if (!rhs(t, y, k1)) {
        traj.status = TrajectoryStatus::StepSizeUnderflow;
        return traj;
    }

    auto sc = [&](const Vec& a, const Vec& b, int i) {
        return atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    };

    // Initial step size: curvature-based heuristic unless fixed by config.
    double h;
    if (config.initial_step > 0) {
        h = dir * std::min(config.initial_step, config.max_step);
    } else {
        double dny = 0, dnf = 0;
        for (int i = 0; i < dim; ++i) {
            const double s = atol + rtol * std::abs(y[i]);
            dny += (y[i] / s) * (y[i] / s);
            dnf += (k1[i] / s) * (k1[i] / s);
        }
        double h0 = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h0 = std::min(h0, config.max_step);
        ytmp = y + dir * h0 * k1;
        double der2 = 0.0;
        if (rhs(t + dir * h0, ytmp, k2)) {
            for (int i = 0; i < dim; ++i) {
                const double s = atol + rtol * std::abs(y[i]);
                const double d = (k2[i] - k1[i]) / s;
                der2 += d * d;
            }
            der2 = std::sqrt(der2) / h0;
        }
        const double der12 = std::max(std::sqrt(dnf), der2);
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                         : std::pow(0.01 / der12, 0.2);
        h = dir * std::min({100 * h0, h1, config.max_step});
    }

    long steps = 0;
    bool rejected_last = false;
    while (dir * (t1 - t) > 0) {
        if (++steps > config.max_steps) {
            traj.status = TrajectoryStatus::MaxStepsExceeded;
            return traj;
        }
        if (std::abs(h) > config.max_step) h = dir * config.max_step;
        bool final_step = false;
        if (dir * (t + h - t1) >= 0) {  // clamp the final step, land exactly
            h = t1 - t;
            final_step = true;
        }
        if (std::abs(h) <= std::abs(t) * 1e-16 + 1e-300) {
            traj.status = TrajectoryStatus::StepSizeUnderflow;
            return traj;
        }

        bool finite = true;
        ytmp = y + h * (a21 * k1);
        finite = finite && rhs(t + c2 * h, ytmp, k2);
        if (finite) {
            ytmp = y + h * (a31 * k1 + a32 * k2);
            finite = rhs(t + c3 * h, ytmp, k3);
        }
        if (finite) {
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            finite = rhs(t + c4 * h, ytmp, k4);
        }
        if (finite) {
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            finite = rhs(t + c5 * h, ytmp, k5);
        }
        if (finite) {
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            finite = rhs(t + h, ytmp, k6);
        }
        if (finite) {
            ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            finite = rhs(t + h, ynew, k7);  // FSAL
        }

        double err_norm = kInf;
        if (finite) {
            err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double acc = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double q = err[i] / sc(y, ynew, i);
                acc += q * q;
            }
            err_norm = std::sqrt(acc / dim);
        }

        if (err_norm <= 1.0) {
            if (config.dense_output) {
                std::array<Vec, 5> r;
                r[0] = y;
                r[1] = ynew - y;
                r[2] = h * k1 - r[1];
                r[3] = r[1] - h * k7 - r[2];
                r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                traj.dense.push_back(std::move(r));
            }
            t = final_step ? t1 : t + h;
            y.swap(ynew);
            k1.swap(k7);  // FSAL reuse
            traj.times.push_back(t);
            traj.states.push_back(y);
            ++traj.accepted_steps;

            if (y.norm() > guard.blowup_norm) {
                traj.status = TrajectoryStatus::BlowUp;
                return traj;
            }
            if (guard.inside && !guard.inside(y)) {
                traj.status = TrajectoryStatus::LeftDomain;
                return traj;
            }

            const double fac = err_norm <= 1e-30
                                   ? 5.0
                                   : std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2)));
            h *= rejected_last ? std::min(1.0, fac) : fac;
            rejected_last = false;
        } else {
            ++traj.rejected_steps;
            rejected_last = true;
            const double fac =
                std::isfinite(err_norm) ? std::max(0.1, 0.9 * std::pow(err_norm, -0.2)) : 0.1;
            h *= fac;
        }
    }
    return traj;
}

Trajectory integrate(const CyclicVectorField& field, const Vec& x0, double t0, double t1,
                     const IntegratorConfig& config) {
    if (!field.domain().contains(x0))
        fail(ErrorCode::DomainViolation, "initial state outside domain");
    OdeRhs rhs = [&field](double, const Vec& x, Vec& out) { return field.try_evaluate(x, out); };
    OdeGuard guard;
    guard.blowup_norm = config.blowup_norm;
    guard.inside = [&field](const Vec& x) { return field.domain().contains(x); };
    return integrate_ode(rhs, field.dim(), x0, t0, t1, config, guard);
}

Mat variational_flow(const CyclicVectorField& field, const Vec& x0, double s, double t,
                     const IntegratorConfig& config, Vec& x_end) {
    const int n = field.dim();
    Vec y0(n + n * n);
    y0.head(n) = x0;
    Eigen::Map<Mat>(y0.data() + n, n, n) = Mat::Identity(n, n);

    OdeRhs rhs = [&field, n](double, const Vec& y, Vec& out) {
        const Vec x = y.head(n);
        if (!field.domain().contains(x)) return false;
        Vec fx(n);
        if (!field.try_evaluate(x, fx)) return false;
        Mat J;
        try {
            J = field.jacobian(x);
        } catch (const Error&) {
            return false;
        }
        out.head(n) = fx;
        Eigen::Map<const Mat> V(y.data() + n, n, n);
        Eigen::Map<Mat>(out.data() + n, n, n).noalias() = J * V;
        return out.allFinite();
    };
    OdeGuard guard;
    guard.blowup_norm = config.blowup_norm;
    IntegratorConfig cfg = config;
    cfg.dense_output = false;
    Trajectory traj = integrate_ode(rhs, n + n * n, y0, s, t, cfg, guard);
    if (traj.status != TrajectoryStatus::Ok || traj.times.back() != t)
        fail(ErrorCode::NonFiniteValue, std::string("variational flow stopped early: ") +
                                            trajectory_status_name(traj.status));
    x_end = traj.states.back().head(n);
    return Eigen::Map<const Mat>(traj.states.back().data() + n, n, n);
}

Mat variational_flow(const CyclicVectorField& field, const Vec& x0, double s, double t,
                     const IntegratorConfig& config) {
    Vec x_end;
    return variational_flow(field, x0, s, t, config, x_end);
}

Mat adjoint_flow(const CyclicVectorField& field, const Trajectory& base, double t, double s,
                 const IntegratorConfig& config, AdjointRoute route) {
    if (s > t) fail(ErrorCode::InvalidParameter, "adjoint_flow needs s <= t");
    if (!base.covers(s) || !base.covers(t))
        fail(ErrorCode::GridMismatch, "base trajectory does not cover [s,t]");
    if (route == AdjointRoute::TransposeVariational) {
        const Vec xs = base.state_at(s);
        return variational_flow(field, xs, s, t, config).transpose();
    }
    // Direct backward integration of phi' = -A(u)^T phi, column by column as
    // a matrix system, using the dense base for A(u) = Df(x(u)).
    const int n = field.dim();
    OdeRhs rhs = [&field, &base, n](double u, const Vec& y, Vec& out) {
        Vec x;
        try {
            x = base.state_at(u);
        } catch (const Error&) {
            return false;
        }
        Mat J;
        try {
            J = field.jacobian(x);
        } catch (const Error&) {
            return false;
        }
        Eigen::Map<const Mat> Phi(y.data(), n, n);
        Eigen::Map<Mat>(out.data(), n, n).noalias() = -J.transpose() * Phi;
        return out.allFinite();
    };
    Vec y0(n * n);
    Eigen::Map<Mat>(y0.data(), n, n) = Mat::Identity(n, n);
    IntegratorConfig cfg = config;
    cfg.dense_output = false;
    OdeGuard guard;
    guard.blowup_norm = config.blowup_norm;
    Trajectory traj = integrate_ode(rhs, n * n, y0, t, s, cfg, guard);
    if (traj.status != TrajectoryStatus::Ok || traj.times.back() != s)
        fail(ErrorCode::NonFiniteValue, "adjoint flow stopped early");
    return Eigen::Map<const Mat>(traj.states.back().data(), n, n);
}

void SectionSpec::validate() const {
    if (normal.size() == 0 || normal.norm() == 0)
        fail(ErrorCode::InvalidParameter, "section normal must be nonzero");
}

std::vector<SectionCrossing> section_crossings(const CyclicVectorField& field,
                                               const Trajectory& traj,
                                               const SectionSpec& section, double g_tol) {
    section.validate();
    std::vector<SectionCrossing> out;
    if (traj.times.size() < 2) return out;
    if (traj.dense.empty())
        fail(ErrorCode::InvalidParameter, "section_crossings requires dense output");

    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        double tl = traj.times[k], tr = traj.times[k + 1];
        double gl = section.g(traj.states[k]);
        double gr = section.g(traj.states[k + 1]);
        if (gl == 0.0) continue;  // counted at the previous step (or is t0)
        if (gl * gr > 0.0) continue;

        // Bracketed secant with bisection fallback on the dense interpolant.
        double a = tl, b = tr, ga = gl, gb = gr;
        double tc = b, gc = gb;
        for (int it = 0; it < 100; ++it) {
            double trial = (std::abs(gb - ga) > 1e-300)
                               ? b - gb * (b - a) / (gb - ga)
                               : 0.5 * (a + b);
            const double lo = std::min(a, b), hi = std::max(a, b);
            if (!(trial > lo && trial < hi)) trial = 0.5 * (a + b);
            const Vec x = traj.state_at(trial);
            const double g = section.g(x);
            tc = trial;
            gc = g;
            if (std::abs(g) <= g_tol || std::abs(b - a) < 1e-14 * (1.0 + std::abs(b))) break;
            if (ga * g <= 0.0) {
                b = trial;
                gb = g;
            } else {
                a = trial;
                ga = g;
            }
        }
        (void)gc;
        SectionCrossing cr;
        cr.time = tc;
        cr.state = traj.state_at(tc);
        Vec fx(field.dim());
        const bool have_f = field.domain().contains(cr.state) &&
                            field.try_evaluate(cr.state, fx);
        const double gdot = have_f ? section.normal.dot(fx) : (gr - gl);
        cr.increasing = gdot >= 0.0;
        if (section.direction == SectionSpec::Direction::Increasing && !cr.increasing) continue;
        if (section.direction == SectionSpec::Direction::Decreasing && cr.increasing) continue;
        out.push_back(std::move(cr));
    }
    return out;
}

std::vector<SectionCrossing> section_crossings(const CyclicVectorField& field, const Vec& x0,
                                               double t0, double t1, const SectionSpec& section,
                                               const IntegratorConfig& config) {
    IntegratorConfig cfg = config;
    cfg.dense_output = true;
    const Trajectory traj = integrate(field, x0, t0, t1, cfg);
    return section_crossings(field, traj, section, config.abs_tol);
}

}  // namespace fbl
