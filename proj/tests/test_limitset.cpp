#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbl/connect.hpp"
#include "fbl/limitset.hpp"
#include "fbl/verify.hpp"
#include "test_support.hpp"

using namespace fbl;

namespace {

IntegratorConfig probe() {
    IntegratorConfig c;
    c.rel_tol = 1e-9;
    c.abs_tol = 1e-11;
    return c;
}

}  // namespace

TEST_CASE("contracting linear flow lands on the origin") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    LimitThresholds th;
    th.horizon = 200.0;
    std::vector<Equilibrium> known;
    for (const Vec& x0 : {(Vec(3) << 1, 2, -1).finished(), (Vec(3) << -2, 0.5, 2).finished()}) {
        const auto rep = classify_limit_set(lin, x0, th, probe(), known);
        CHECK(rep.kind == LimitKind::Equilibrium);
        REQUIRE(rep.equilibrium_ref >= 0);
        CHECK(known[static_cast<std::size_t>(rep.equilibrium_ref)].x.norm() < 1e-6);
    }
}

TEST_CASE("goodwin oscillatory omega limit is the cycle") {
    auto gw = shipped_goodwin_oscillatory();
    LimitThresholds th;
    th.horizon = 600.0;
    std::vector<Equilibrium> known;
    const auto rep = classify_limit_set(gw, (Vec(3) << 0.9, 0.9, 0.9).finished(), th, probe(),
                                        known);
    REQUIRE(rep.kind == LimitKind::PeriodicOrbit);
    REQUIRE(rep.orbit.has_value());
    CHECK(rep.orbit->hyperbolic);
    CHECK(rep.recurrence_gap <= th.rec_tol);
}

TEST_CASE("alpha limit from inside the cycle is the focus") {
    auto gw = shipped_goodwin_oscillatory();
    const auto eq = refine_equilibrium(gw, (Vec(3) << 0.3, 0.6, 1.2).finished(), {1e-12, 60});
    REQUIRE(eq.has_value());
    const auto e = classify_equilibrium(gw, *eq);
    REQUIRE(e.morse_index == 2);

    // Seed on the numerically computed unstable plane, just off the focus.
    const Mat U = local_invariant_basis(gw, e, ManifoldSide::Unstable);
    const Vec x0 = e.x + 1e-3 * U.col(0);

    LimitThresholds th;
    th.horizon = 300.0;
    std::vector<Equilibrium> known;
    const auto rep = classify_limit_set(gw, x0, th, probe(), known, LimitDirection::Alpha);
    REQUIRE(rep.kind == LimitKind::Equilibrium);
    CHECK(rep.final_distance <= th.alpha_capture_radius);
    CHECK((known[static_cast<std::size_t>(rep.equilibrium_ref)].x - e.x).norm() < 1e-6);
}

TEST_CASE("robustness probe with a class-preserving perturbation") {
    auto gw = goodwin(2.0, 1.0);  // stable regime: fast to classify
    auto bump = cyclic_tanh_coupling(3, 1.0);
    LimitThresholds th;
    th.horizon = 150.0;
    SampleSpec cls;
    cls.count = 200;
    cls.seed = 5;

    const auto probe_rep = robustness_probe(gw, bump, {0.0, 1e-4, 1e-3, 1e-2},
                                            (Vec(3) << 1, 1, 1).finished(), th, probe(), cls);
    REQUIRE(probe_rep.entries.size() == 4);
    CHECK(probe_rep.base_kind == LimitKind::Equilibrium);
    for (const auto& e : probe_rep.entries) {
        CHECK(!e.left_class);  // subdiagonal tanh coupling preserves the branch
        CHECK(e.report.kind == LimitKind::Equilibrium);
    }
    CHECK(probe_rep.classification_invariant);

    // eps = 0 reproduces the unperturbed classification exactly.
    std::vector<Equilibrium> known;
    const auto base = classify_limit_set(gw, (Vec(3) << 1, 1, 1).finished(), th, probe(), known);
    CHECK(probe_rep.entries[0].report.kind == base.kind);
}

TEST_CASE("bump perturbations on a monotone model leave the class") {
    // Goodwin has zero superdiagonal couplings, so the bump's x_{j+1}
    // dependence breaks the weak sign condition at any visible eps.
    auto gw = goodwin(2.0, 1.0);
    auto bump = bump_perturbation(3, 1, 1.0, 1.0, 0.5);
    LimitThresholds th;
    th.horizon = 100.0;
    SampleSpec cls;
    cls.count = 400;
    cls.seed = 6;
    cls.box = Box::cube(3, 0.3, 2.0);

    const auto rep = robustness_probe(gw, bump, {0.0, 1e-3}, (Vec(3) << 1, 1, 1).finished(),
                                      th, probe(), cls);
    CHECK(!rep.entries[0].left_class);
    CHECK(rep.entries[1].left_class);  // recorded, classification still ran
    CHECK(rep.entries[1].report.kind != LimitKind::Undetermined);
}

TEST_CASE("classification is stable under halved tolerances") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    LimitThresholds th;
    th.horizon = 100.0;
    std::vector<Equilibrium> k1, k2;
    IntegratorConfig loose = probe();
    IntegratorConfig tight = probe();
    tight.rel_tol /= 2.0;
    tight.abs_tol /= 2.0;
    const Vec x0 = (Vec(3) << 1.5, -0.5, 0.7).finished();
    const auto a = classify_limit_set(lin, x0, th, loose, k1);
    const auto b = classify_limit_set(lin, x0, th, tight, k2);
    CHECK(a.kind == b.kind);
    CHECK((k1[0].x - k2[0].x).norm() < 1e-8);
}

TEST_CASE("blow-up reports as undetermined with evidence") {
    auto expanding = custom_field({"x1", "x2", "x3"});
    LimitThresholds th;
    th.horizon = 100.0;
    std::vector<Equilibrium> known;
    const auto rep = classify_limit_set(expanding, (Vec(3) << 1, 1, 1).finished(), th, probe(),
                                        known);
    CHECK(rep.kind == LimitKind::Undetermined);
    CHECK(rep.integration_status == TrajectoryStatus::BlowUp);
}
