#include "fbl/limitset.hpp"

#include "fbl/log.hpp"

#include <algorithm>
#include <cmath>

namespace fbl {

const char* limit_kind_name(LimitKind k) {
    switch (k) {
        case LimitKind::Equilibrium: return "Equilibrium";
        case LimitKind::PeriodicOrbit: return "PeriodicOrbit";
        case LimitKind::EquilibriaWithConnections: return "EquilibriaWithConnections";
        case LimitKind::Undetermined: return "Undetermined";
    }
    return "?";
}

Json LimitSetReport::to_json() const {
    Json j;
    j["kind"] = limit_kind_name(kind);
    j["direction"] = direction == LimitDirection::Omega ? "omega" : "alpha";
    j["equilibrium_ref"] = equilibrium_ref;
    if (orbit) j["orbit"] = orbit->to_json();
    j["visited_equilibria"] = visited_equilibria;
    Json ev;
    ev["final_distance"] = std::isfinite(final_distance) ? Json(final_distance) : Json(nullptr);
    ev["recurrence_gap"] = std::isfinite(recurrence_gap) ? Json(recurrence_gap) : Json(nullptr);
    ev["horizon_used"] = horizon_used;
    ev["integration_status"] = trajectory_status_name(integration_status);
    ev["note"] = evidence_note;
    j["evidence"] = ev;
    return j;
}

namespace {

int nearest_equilibrium(const std::vector<Equilibrium>& known, const Vec& x, double* dist) {
    int best = -1;
    double bd = kInf;
    for (std::size_t i = 0; i < known.size(); ++i) {
        const double d = (known[i].x - x).norm();
        if (d < bd) {
            bd = d;
            best = static_cast<int>(i);
        }
    }
    if (dist) *dist = bd;
    return best;
}

}  // namespace

LimitSetReport classify_limit_set(const CyclicVectorField& field, const Vec& x0,
                                  const LimitThresholds& thresholds,
                                  const IntegratorConfig& config,
                                  std::vector<Equilibrium>& known, LimitDirection direction) {
    LimitSetReport rep;
    rep.direction = direction;
    const double sign = direction == LimitDirection::Omega ? 1.0 : -1.0;
    const int n = field.dim();

    // Chunked integration keeps memory bounded over long horizons; only the
    // last chunk is retained for the tail analysis.
    IntegratorConfig cfg = config;
    cfg.dense_output = true;
    Vec x = x0;
    double elapsed = 0.0;
    Trajectory tail;
    std::vector<std::pair<double, Vec>> visit_log;  // (time, state) of epsilon-visits
    Vec slowest_state = x0;                         // closest-to-equilibrium candidate
    double slowest_speed = kInf;
    while (elapsed < thresholds.horizon) {
        const double span = std::min(thresholds.chunk, thresholds.horizon - elapsed);
        Trajectory chunk = integrate(field, x, 0.0, sign * span, cfg);
        rep.integration_status = chunk.status;
        // Visit tracking against currently known equilibria; slowest-point
        // tracking for the alpha capture rule.
        Vec fx(n);
        for (std::size_t k = 0; k < chunk.states.size(); k += 8) {
            double d;
            const int idx = nearest_equilibrium(known, chunk.states[k], &d);
            if (idx >= 0 && d <= thresholds.visit_radius)
                visit_log.emplace_back(elapsed + std::abs(chunk.times[k]), chunk.states[k]);
            if (field.try_evaluate(chunk.states[k], fx)) {
                const double speed = fx.norm();
                if (speed < slowest_speed) {
                    slowest_speed = speed;
                    slowest_state = chunk.states[k];
                }
            }
        }
        elapsed += std::abs(chunk.times.back() - chunk.times.front());
        x = chunk.x_end();
        tail = std::move(chunk);
        if (rep.integration_status != TrajectoryStatus::Ok) break;
        // Early exit when clearly settled at an equilibrium.
        if (field.try_evaluate(x, fx) && fx.norm() < 1e-12) break;
    }
    rep.horizon_used = elapsed;

    const bool stopped_early = rep.integration_status == TrajectoryStatus::BlowUp ||
                               rep.integration_status == TrajectoryStatus::LeftDomain ||
                               rep.integration_status == TrajectoryStatus::MaxStepsExceeded ||
                               rep.integration_status == TrajectoryStatus::StepSizeUnderflow;

    // Alpha capture: the closest approach to a refined equilibrium counts
    // when the backward run cannot contract all the way to eq_radius.
    if (direction == LimitDirection::Alpha) {
        const auto refined = refine_equilibrium(field, slowest_state, {1e-11, 60});
        if (refined) {
            const double dist = (slowest_state - *refined).norm();
            if (dist <= thresholds.alpha_capture_radius) {
                double d2 = kInf;
                int idx2 = nearest_equilibrium(known, *refined, &d2);
                if (idx2 < 0 || d2 > 1e-6 * (1.0 + refined->norm())) {
                    known.push_back(classify_equilibrium(field, *refined));
                    idx2 = static_cast<int>(known.size()) - 1;
                }
                rep.kind = LimitKind::Equilibrium;
                rep.equilibrium_ref = idx2;
                rep.final_distance = dist;
                rep.evidence_note =
                    "alpha capture: closest backward approach within alpha_capture_radius";
                return rep;
            }
        }
    }

    if (stopped_early) {
        rep.kind = LimitKind::Undetermined;
        rep.evidence_note = std::string("integration stopped: ") +
                            trajectory_status_name(rep.integration_status);
        return rep;
    }

    // (1) Equilibrium.
    {
        double dist = kInf;
        int idx = nearest_equilibrium(known, x, &dist);
        if (idx >= 0 && dist <= thresholds.eq_radius) {
            rep.kind = LimitKind::Equilibrium;
            rep.equilibrium_ref = idx;
            rep.final_distance = dist;
            rep.evidence_note = "tail inside eq_radius of a known equilibrium";
            return rep;
        }
        const auto refined = refine_equilibrium(field, x, {1e-11, 60});
        if (refined && (x - *refined).norm() <= thresholds.eq_radius) {
            // Register the newly found equilibrium.
            double d2 = kInf;
            int idx2 = nearest_equilibrium(known, *refined, &d2);
            if (idx2 < 0 || d2 > 1e-6 * (1.0 + refined->norm())) {
                known.push_back(classify_equilibrium(field, *refined));
                idx2 = static_cast<int>(known.size()) - 1;
            }
            rep.kind = LimitKind::Equilibrium;
            rep.equilibrium_ref = idx2;
            rep.final_distance = (x - *refined).norm();
            rep.evidence_note = "tail Newton-refined to an equilibrium";
            return rep;
        }
    }

    // (2) Periodic orbit: near-returns on a tail section, then confirm.
    {
        Vec mean = Vec::Zero(n);
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < tail.times.size(); ++k) {
            const double dt = std::abs(tail.times[k + 1] - tail.times[k]);
            mean += 0.5 * dt * (tail.states[k] + tail.states[k + 1]);
            total += dt;
        }
        if (total > 0) mean /= total;
        Vec fmean(n);
        if (field.domain().contains(mean) && field.try_evaluate(mean, fmean) &&
            fmean.norm() > 1e-12) {
            // Candidate sections: flow-normal through the mean, and the
            // midrange of the widest-swinging coordinate (robust for
            // non-convex cycles).
            std::vector<SectionSpec> candidates;
            {
                SectionSpec sec;
                sec.normal = fmean.normalized();
                sec.offset = sec.normal.dot(mean);
                sec.direction = SectionSpec::Direction::Increasing;
                candidates.push_back(sec);
                Vec lo = tail.states.front(), hi = tail.states.front();
                for (const auto& s : tail.states) {
                    lo = lo.cwiseMin(s);
                    hi = hi.cwiseMax(s);
                }
                int widest = 0;
                for (int i = 0; i < n; ++i)
                    if (hi[i] - lo[i] > hi[widest] - lo[widest]) widest = i;
                SectionSpec coord;
                coord.normal = Vec::Unit(n, widest);
                coord.offset = 0.5 * (lo[widest] + hi[widest]);
                coord.direction = SectionSpec::Direction::Increasing;
                candidates.push_back(coord);
            }
            // Near returns over crossing pairs of the better candidate.
            double period_est = 0.0;
            for (const auto& sec : candidates) {
                std::vector<SectionCrossing> crossings;
                try {
                    crossings = section_crossings(field, tail, sec, config.abs_tol);
                } catch (const Error&) {
                    continue;
                }
                for (std::size_t i = 0; i < crossings.size(); ++i)
                    for (std::size_t j = i + 1; j < crossings.size(); ++j) {
                        const double gap = (crossings[j].state - crossings[i].state).norm();
                        if (gap < rep.recurrence_gap) {
                            rep.recurrence_gap = gap;
                            period_est = std::abs(crossings[j].time - crossings[i].time);
                        }
                    }
            }
            if (rep.recurrence_gap <= thresholds.rec_tol) {
                CycleSearchOptions copts;
                copts.transient = 0.0;
                copts.search_horizon = 4.0 * period_est + 20.0;
                copts.time_sign = sign;  // alpha limit sets hunt along the backward flow
                const CycleResult cr =
                    find_periodic_orbit(field, x, std::nullopt, config, copts);
                if (cr.status == CycleResult::Status::Found) {
                    rep.kind = LimitKind::PeriodicOrbit;
                    rep.orbit = std::move(cr.orbit);
                    rep.final_distance = rep.recurrence_gap;
                    rep.evidence_note = "section near-returns confirmed by the cycle solver";
                    return rep;
                }
            }
        }
    }

    // (3) Alternating epsilon-visits with excursions.
    {
        int episodes = 0;
        bool inside = false;
        double last_t = -kInf;
        for (const auto& [t, state] : visit_log) {
            (void)state;
            if (!inside || t - last_t > 2.0) ++episodes;
            inside = true;
            last_t = t;
        }
        if (episodes >= 2) {
            rep.kind = LimitKind::EquilibriaWithConnections;
            for (const auto& [t, state] : visit_log) {
                (void)t;
                double d;
                const int idx = nearest_equilibrium(known, state, &d);
                if (idx >= 0 && d <= thresholds.visit_radius &&
                    std::find(rep.visited_equilibria.begin(), rep.visited_equilibria.end(),
                              idx) == rep.visited_equilibria.end())
                    rep.visited_equilibria.push_back(idx);
            }
            rep.evidence_note =
                "heuristic: repeated epsilon-visits to equilibria with excursions";
            return rep;
        }
    }

    rep.kind = LimitKind::Undetermined;
    rep.evidence_note = "no decision rule fired within the horizon";
    return rep;
}

Json RobustnessEntry::to_json() const {
    Json j;
    j["epsilon"] = epsilon;
    j["left_class"] = left_class;
    j["report"] = report.to_json();
    return j;
}

Json RobustnessProbe::to_json() const {
    Json j;
    j["base_kind"] = limit_kind_name(base_kind);
    j["classification_invariant"] = classification_invariant;
    Json rows = Json::array();
    for (const auto& e : entries) rows.push_back(e.to_json());
    j["entries"] = rows;
    return j;
}

RobustnessProbe robustness_probe(const CyclicVectorField& field, const CyclicVectorField& bump,
                                 const std::vector<double>& epsilons, const Vec& x0,
                                 const LimitThresholds& thresholds,
                                 const IntegratorConfig& config,
                                 const SampleSpec& class_samples) {
    RobustnessProbe probe;
    bool have_base = false;
    for (double eps : epsilons) {
        RobustnessEntry entry;
        entry.epsilon = eps;
        const CyclicVectorField pert = eps == 0.0 ? field : field.plus(bump, eps);
        const auto cls = check_class(pert, class_samples);
        entry.left_class = !cls.in_Lminus;
        std::vector<Equilibrium> known;
        entry.report = classify_limit_set(pert, x0, thresholds, config, known);
        if (!entry.left_class) {
            if (!have_base) {
                probe.base_kind = entry.report.kind;
                have_base = true;
            } else if (entry.report.kind != probe.base_kind) {
                probe.classification_invariant = false;
            }
        }
        probe.entries.push_back(std::move(entry));
    }
    return probe;
}

}  // namespace fbl
