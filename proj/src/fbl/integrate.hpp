#pragma once

#include "fbl/model.hpp"
#include "fbl/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fbl {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double initial_step = 0.0;  // 0 = automatic
    double max_step = 1.0;
    long max_steps = 2000000;
    bool dense_output = true;
    double blowup_norm = 1e8;

    void validate() const;
};

enum class TrajectoryStatus { Ok, BlowUp, LeftDomain, MaxStepsExceeded, StepSizeUnderflow };

const char* trajectory_status_name(TrajectoryStatus s);

/// Accepted-step record of one integration. Times are strictly monotone in
/// the direction of integration. Dense rows enable 4th-order interpolation
/// on each accepted step.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    long accepted_steps = 0;
    long rejected_steps = 0;
    TrajectoryStatus status = TrajectoryStatus::Ok;
    std::vector<std::array<Vec, 5>> dense;  // per step; empty without dense output

    bool forward() const { return times.size() < 2 || times.back() >= times.front(); }
    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }
    const Vec& x_end() const { return states.back(); }
    bool covers(double t) const;
    /// Interpolated state; requires dense rows (or an exact node hit).
    Vec state_at(double t) const;
    std::string to_csv() const;
};

/// Generic RHS: writes dy into out, returns false when out is non-finite
/// (the step is then rejected and retried smaller).
using OdeRhs = std::function<bool(double, const Vec&, Vec&)>;

/// Domain/stop guard, checked on accepted states only.
struct OdeGuard {
    std::function<bool(const Vec&)> inside;  // optional
    double blowup_norm = 1e8;
};

Trajectory integrate_ode(const OdeRhs& rhs, int dim, const Vec& y0, double t0, double t1,
                         const IntegratorConfig& config, const OdeGuard& guard = {});

/// Flow of the field from x0 over [t0, t1] (t1 < t0 integrates backward).
Trajectory integrate(const CyclicVectorField& field, const Vec& x0, double t0, double t1,
                     const IntegratorConfig& config);

/// Fundamental matrix S(s,t) of the variational equation along the orbit of
/// x0 with x(s) = x0: integrates the (n + n^2)-dimensional augmented system
/// with identity initial matrix at time s. Maps tangent vectors at time s to
/// time t (t < s propagates backward).
Mat variational_flow(const CyclicVectorField& field, const Vec& x0, double s, double t,
                     const IntegratorConfig& config);

/// Variant that also returns the base end state.
Mat variational_flow(const CyclicVectorField& field, const Vec& x0, double s, double t,
                     const IntegratorConfig& config, Vec& x_end);

enum class AdjointRoute { TransposeVariational, DirectBackward };

/// S*(s,t) = (forward operator from s to t)^T for s <= t: the adjoint
/// propagator taking phi(t) to phi(s) along the base trajectory. The direct
/// route integrates phi' = -A(u)^T phi backward using the dense base.
Mat adjoint_flow(const CyclicVectorField& field, const Trajectory& base, double t, double s,
                 const IntegratorConfig& config,
                 AdjointRoute route = AdjointRoute::TransposeVariational);

struct SectionSpec {
    Vec normal;
    double offset = 0.0;
    enum class Direction { Increasing, Decreasing, Both } direction = Direction::Increasing;

    void validate() const;
    double g(const Vec& x) const { return normal.dot(x) - offset; }
};

struct SectionCrossing {
    double time = 0.0;
    Vec state;
    bool increasing = true;  // sign of d/dt <normal, x> at the crossing
};

/// Sign changes of <normal, x(t)> - offset between accepted steps, refined by
/// bracketed secant/bisection on the dense output until |g| <= abs_tol.
std::vector<SectionCrossing> section_crossings(const CyclicVectorField& field, const Vec& x0,
                                               double t0, double t1, const SectionSpec& section,
                                               const IntegratorConfig& config);

/// Crossing scan over an existing dense trajectory.
std::vector<SectionCrossing> section_crossings(const CyclicVectorField& field,
                                               const Trajectory& traj,
                                               const SectionSpec& section, double g_tol);

}  // namespace fbl
