#pragma once

#include "fbl/critical.hpp"
#include "fbl/integrate.hpp"
#include "fbl/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fbl {

enum class LimitKind { Equilibrium, PeriodicOrbit, EquilibriaWithConnections, Undetermined };
enum class LimitDirection { Omega, Alpha };

const char* limit_kind_name(LimitKind k);

struct LimitThresholds {
    double eq_radius = 1e-5;
    double rec_tol = 1e-5;
    double horizon = 1000.0;
    double visit_radius = 1e-2;  // epsilon-visit detection for connection chains
    double chunk = 50.0;         // integration window kept in memory
    // Alpha runs toward a weakly repelling focus cannot reach eq_radius:
    // the backward contraction rate is dominated by the growth of the
    // forward-stable contamination. The alpha equilibrium decision therefore
    // accepts the run's closest approach within this radius, provided the
    // approach preceded the breakdown of the backward integration.
    double alpha_capture_radius = 5e-3;
};

struct LimitSetReport {
    LimitKind kind = LimitKind::Undetermined;
    LimitDirection direction = LimitDirection::Omega;
    int equilibrium_ref = -1;  // index into the known-equilibria list
    std::optional<PeriodicOrbit> orbit;
    std::vector<int> visited_equilibria;
    double final_distance = kInf;
    double recurrence_gap = kInf;
    double horizon_used = 0.0;
    TrajectoryStatus integration_status = TrajectoryStatus::Ok;
    std::string evidence_note;
    Json to_json() const;
};

/// Decision cascade on the integrated tail: (1) settled at a known or
/// Newton-refined equilibrium, (2) section near-returns confirmed by the
/// periodic-orbit solver, (3) alternating epsilon-visits between equilibria
/// (heuristic evidence for a connection chain), else Undetermined. Alpha
/// limit sets integrate the same field backward. `known` may grow.
LimitSetReport classify_limit_set(const CyclicVectorField& field, const Vec& x0,
                                  const LimitThresholds& thresholds,
                                  const IntegratorConfig& config,
                                  std::vector<Equilibrium>& known,
                                  LimitDirection direction = LimitDirection::Omega);

struct RobustnessEntry {
    double epsilon = 0.0;
    bool left_class = false;  // f + eps*g failed the sampled class check
    LimitSetReport report;
    Json to_json() const;
};

struct RobustnessProbe {
    std::vector<RobustnessEntry> entries;
    bool classification_invariant = true;  // over the class-passing epsilons
    LimitKind base_kind = LimitKind::Undetermined;
    Json to_json() const;
};

/// Classifies the perturbed system f + eps*g for each eps; an eps whose
/// perturbed field fails the sampled class check is flagged LeftClass but
/// still classified.
RobustnessProbe robustness_probe(const CyclicVectorField& field, const CyclicVectorField& bump,
                                 const std::vector<double>& epsilons, const Vec& x0,
                                 const LimitThresholds& thresholds,
                                 const IntegratorConfig& config, const SampleSpec& class_samples);

}  // namespace fbl
