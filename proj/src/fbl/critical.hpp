#pragma once

#include "fbl/integrate.hpp"
#include "fbl/model.hpp"
#include "fbl/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fbl {

struct Equilibrium {
    Vec x;
    CVec eigenvalues;
    int morse_index = 0;   // eigenvalues with real part > tol
    bool simple = false;     // no eigenvalue within tol of 0
    bool hyperbolic = false; // no eigenvalue real part within tol of 0
    double residual = 0.0;   // ||f(x)||
    Json to_json() const;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 60;
};

Equilibrium classify_equilibrium(const CyclicVectorField& field, const Vec& x,
                                 double tol_spectrum = 1e-8);

struct EquilibriumSearch {
    std::vector<Equilibrium> equilibria;
    int starts = 0;
    int converged = 0;
    int dropped_nonconverged = 0;
};

/// Multi-start damped Newton from a grid over the box; converged roots are
/// deduplicated by a scale-aware radius and classified.
EquilibriumSearch find_equilibria(const CyclicVectorField& field, const Box& box,
                                  int grid_per_axis, const NewtonOptions& newton = {},
                                  double tol_spectrum = 1e-8, double dedup_base = 1e-6,
                                  int workers = 1);

/// Newton refinement from a single start; empty when it does not converge.
std::optional<Vec> refine_equilibrium(const CyclicVectorField& field, const Vec& start,
                                      const NewtonOptions& newton = {});

struct PeriodicOrbit {
    Vec anchor;            // point on the orbit (on the section)
    double period = 0.0;
    Trajectory samples;    // uniformly resampled over one period
    CVec multipliers;      // eigenvalues of the monodromy
    double trivial_multiplier_error = kInf;
    bool simple = false;             // exactly one multiplier near 1
    bool unique_unit_modulus = false;
    bool hyperbolic = false;         // simple and unique unit modulus
    int morse_index = 0;             // multipliers with |mu| > 1 + tol
    Json to_json(bool include_samples = false) const;
};

/// Classification from a given monodromy matrix (test seam; also used after
/// recomputation).
void classify_from_monodromy(PeriodicOrbit& orbit, const Mat& monodromy,
                             double multiplier_tol);

struct CycleSearchOptions {
    double transient = 200.0;       // discarded before crossing collection
    double search_horizon = 400.0;  // crossing collection window
    NewtonOptions newton = {1e-10, 40};
    double multiplier_tol = 1e-4;
    int samples_per_period = 512;
    double equilibrium_speed_tol = 1e-8;  // ||f|| below this means settled
    double time_sign = 1.0;  // -1 hunts cycles along the backward flow; the
                             // reported monodromy is always the forward one
};

struct CycleResult {
    enum class Status { Found, NoReturn, NewtonDiverged, ConvergedToEquilibrium };
    Status status = Status::NoReturn;
    std::optional<PeriodicOrbit> orbit;
    std::string detail;
};

/// Integrates past a transient, collects Poincare-section crossings, runs
/// Newton on the (n-1)-dimensional return-map displacement and classifies
/// the monodromy of the converged orbit. The default section passes through
/// the time-average of the exploratory trajectory with normal f(mean).
CycleResult find_periodic_orbit(const CyclicVectorField& field, const Vec& x0,
                                std::optional<SectionSpec> section,
                                const IntegratorConfig& config,
                                const CycleSearchOptions& opts = {});

struct OrbitConsistency {
    bool consistency_violation = false;  // simple but not hyperbolic
    std::string finding;
};

/// Recomputes the multipliers from the stored anchor/period and reports the
/// simplicity/hyperbolicity coincidence check.
OrbitConsistency classify_periodic_orbit(const CyclicVectorField& field, PeriodicOrbit& orbit,
                                         const IntegratorConfig& config,
                                         double multiplier_tol = 1e-4);

struct InjectivityReport {
    int s = 1;                   // projected coordinate pair (s, s+1)
    double min_distance = kInf;  // over pairs with enough phase separation
    double phase_separation = 0.0;
    double witness_t1 = 0.0, witness_t2 = 0.0;
    Json to_json() const;
};

/// Minimum distance between planar projections (p_s, p_{s+1}) over sample
/// pairs with cyclic time separation >= min_phase_sep * period.
InjectivityReport planar_projection_injectivity(const PeriodicOrbit& orbit, int s,
                                                double min_phase_sep = 0.05);

/// Same machinery on raw samples (test seam for designed curves); times must
/// parametrize one full period.
InjectivityReport planar_injectivity_from_samples(const std::vector<Vec>& points,
                                                  const std::vector<double>& times,
                                                  double period, int s, double min_phase_sep);

}  // namespace fbl
