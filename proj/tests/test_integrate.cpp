#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbl/integrate.hpp"
#include "fbl/model.hpp"
#include "test_support.hpp"

#include <random>

using namespace fbl;

namespace {

IntegratorConfig tight() {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-12;
    c.max_step = 0.5;
    return c;
}

}  // namespace

TEST_CASE("linear flow matches the matrix exponential oracle") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Mat A = lin.jacobian(Vec::Zero(3));
    const Vec x0 = (Vec(3) << 1.0, 0.0, 0.0).finished();

    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    const auto traj = integrate(lin, x0, 0.0, 1.0, cfg);
    REQUIRE(traj.status == TrajectoryStatus::Ok);
    const Vec oracle = fbl_test::expm(A) * x0;
    CHECK((traj.x_end() - oracle).norm() < 1e-7);
}

TEST_CASE("degenerate and blow-up cases") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Vec x0 = (Vec(3) << 1.0, 2.0, 3.0).finished();
    const auto traj = integrate(lin, x0, 2.0, 2.0, tight());
    CHECK(traj.times.size() == 1);
    CHECK(traj.times[0] == 2.0);
    CHECK(traj.states[0] == x0);

    // One-dimensional harness through the generic core: x' = x^2 from 2
    // blows up at t = 1/2.
    OdeRhs rhs = [](double, const Vec& y, Vec& out) {
        out[0] = y[0] * y[0];
        return true;
    };
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-8;
    cfg.abs_tol = 1e-10;
    cfg.max_step = 0.1;
    OdeGuard guard;
    guard.blowup_norm = 1e8;
    const auto bu = integrate_ode(rhs, 1, Vec::Constant(1, 2.0), 0.0, 1.0, cfg, guard);
    CHECK(bu.status == TrajectoryStatus::BlowUp);
    CHECK(bu.times.back() < 0.5);

    // Goodwin's open orthant: starting at the boundary is a domain violation.
    CHECK_THROWS_AS(integrate(goodwin(2.0, 1.0), Vec::Zero(3), 0.0, 1.0, tight()), Error);
}

TEST_CASE("convergence with tightening tolerances") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Mat A = lin.jacobian(Vec::Zero(3));
    const Vec x0 = (Vec(3) << 0.3, -0.4, 1.1).finished();
    const Vec oracle = fbl_test::expm(Mat(2.0 * A)) * x0;

    double prev = kInf;
    for (double rtol : {1e-4, 1e-6, 1e-8, 1e-10}) {
        IntegratorConfig cfg;
        cfg.rel_tol = rtol;
        cfg.abs_tol = rtol * 1e-2;
        const auto traj = integrate(lin, x0, 0.0, 2.0, cfg);
        const double err = (traj.x_end() - oracle).norm();
        CHECK(err <= prev * 1.5);  // monotone up to noise at the float floor
        prev = err;
    }
    CHECK(prev < 1e-10);
}

TEST_CASE("time reversal returns to the start") {
    for (const auto& f : {linear_cyclic(3, 1.0, -1.0), goodwin(2.0, 1.0)}) {
        const Vec x0 = (Vec(3) << 1.0, 0.8, 1.2).finished();
        const auto fwd = integrate(f, x0, 0.0, 10.0, tight());
        REQUIRE(fwd.status == TrajectoryStatus::Ok);
        const auto back = integrate(f, fwd.x_end(), 10.0, 0.0, tight());
        REQUIRE(back.status == TrajectoryStatus::Ok);
        CHECK((back.x_end() - x0).norm() < 1e-5);
    }
}

TEST_CASE("dense output interpolates accepted steps") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Mat A = lin.jacobian(Vec::Zero(3));
    const Vec x0 = (Vec(3) << 1.0, -0.5, 0.25).finished();
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    const auto traj = integrate(lin, x0, 0.0, 3.0, cfg);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int k = 0; k < 40; ++k) {
        const double t = u(rng);
        const Vec oracle = fbl_test::expm(Mat(t * A)) * x0;
        CHECK((traj.state_at(t) - oracle).norm() < 1e-7);
    }
    CHECK_THROWS_AS(traj.state_at(3.5), Error);
}

TEST_CASE("variational flow") {
    auto lin = linear_cyclic(3, 1.2, -1.0);
    const Mat A = lin.jacobian(Vec::Zero(3));
    const Vec x0 = (Vec(3) << 0.5, 0.1, -0.3).finished();

    // S(s,s) = I.
    CHECK((variational_flow(lin, x0, 1.0, 1.0, tight()) - Mat::Identity(3, 3)).norm() <
          1e-12);

    // Constant Jacobian: the fundamental matrix is the exponential.
    const Mat S = variational_flow(lin, x0, 0.0, 1.5, tight());
    CHECK((S - fbl_test::expm(Mat(1.5 * A))).norm() < 1e-7);

    // Backward in time: the inverse exponential.
    const Mat Sb = variational_flow(lin, x0, 0.0, -1.0, tight());
    CHECK((Sb - fbl_test::expm(Mat(-A))).norm() < 1e-7);

    // Cocycle property on a nonlinear model.
    auto gw = goodwin(2.0, 1.0);
    const Vec y0 = (Vec(3) << 1.0, 0.9, 1.1).finished();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
        double r = u(rng), s = r + 0.5 + u(rng), t = s + 0.5 + u(rng);
        const auto base = integrate(gw, y0, 0.0, t + 0.1, tight());
        const Vec xr = base.state_at(r);
        const Vec xs = base.state_at(s);
        const Mat Srt = variational_flow(gw, xr, r, t, tight());
        const Mat Srs = variational_flow(gw, xr, r, s, tight());
        const Mat Sst = variational_flow(gw, xs, s, t, tight());
        CHECK((Srt - Sst * Srs).norm() < 1e-6 * (1.0 + Srt.norm()));
    }
}

TEST_CASE("adjoint flow duality and route agreement") {
    auto gw = goodwin(2.0, 1.0);
    const Vec x0 = (Vec(3) << 1.0, 0.9, 1.1).finished();
    IntegratorConfig cfg = tight();
    cfg.dense_output = true;
    const auto base = integrate(gw, x0, 0.0, 3.0, cfg);

    const double s = 0.5, t = 2.5;
    const Mat adj_t = adjoint_flow(gw, base, t, s, cfg, AdjointRoute::TransposeVariational);
    const Mat adj_d = adjoint_flow(gw, base, t, s, cfg, AdjointRoute::DirectBackward);
    CHECK((adj_t - adj_d).norm() < 1e-6 * (1.0 + adj_t.norm()));

    // s = t gives the identity.
    CHECK((adjoint_flow(gw, base, 1.0, 1.0, cfg) - Mat::Identity(3, 3)).norm() < 1e-12);

    // Duality <S*(s,t) phi, v> = <phi, S(s,t) v> with S the forward operator.
    const Mat fwd = variational_flow(gw, base.state_at(s), s, t, cfg);
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec phi = fbl_test::random_vec(rng, 3);
        const Vec v = fbl_test::random_vec(rng, 3);
        CHECK((adj_t * phi).dot(v) ==
              doctest::Approx(phi.dot(fwd * v)).epsilon(1e-6));
    }

    // Constant Jacobian: transpose of the exponential.
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Mat A = lin.jacobian(Vec::Zero(3));
    const auto lbase = integrate(lin, x0, 0.0, 2.0, cfg);
    const Mat adj = adjoint_flow(lin, lbase, 2.0, 0.0, cfg);
    CHECK((adj - fbl_test::expm(Mat(2.0 * A)).transpose()).norm() < 1e-7);
}

TEST_CASE("section crossings on a closed-form rotation") {
    // Planar rotation in (x1, x2) with a decaying third coordinate; the
    // section x2 = 0 is hit at multiples of pi.
    auto rot = custom_field({"-x2", "x1", "-x3"});
    const Vec x0 = (Vec(3) << 1.0, 0.0, 1.0).finished();
    SectionSpec sec;
    sec.normal = (Vec(3) << 0.0, 1.0, 0.0).finished();
    sec.offset = 0.0;
    sec.direction = SectionSpec::Direction::Increasing;

    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.max_step = 0.2;
    const auto ups = section_crossings(rot, x0, 0.0, 13.0, sec, cfg);
    REQUIRE(ups.size() == 2);
    CHECK(ups[0].time == doctest::Approx(2 * M_PI).epsilon(1e-6));
    CHECK(ups[1].time == doctest::Approx(4 * M_PI).epsilon(1e-6));

    sec.direction = SectionSpec::Direction::Both;
    const auto both = section_crossings(rot, x0, 0.0, 13.0, sec, cfg);
    REQUIRE(both.size() == 4);
    for (std::size_t k = 0; k < both.size(); ++k)
        CHECK(both[k].time == doctest::Approx((k + 1) * M_PI).epsilon(1e-6));

    // A trajectory that never crosses yields an empty sequence.
    sec.offset = 5.0;
    sec.direction = SectionSpec::Direction::Both;
    CHECK(section_crossings(rot, x0, 0.0, 13.0, sec, cfg).empty());

    SectionSpec badsec;
    badsec.normal = Vec::Zero(3);
    CHECK_THROWS_AS(badsec.validate(), Error);
}

TEST_CASE("trajectory CSV export") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const auto traj = integrate(lin, (Vec(3) << 1, 0, 0).finished(), 0.0, 0.5, tight());
    const std::string csv = traj.to_csv();
    CHECK(csv.rfind("t,x1,x2,x3\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<long>(traj.times.size()) + 1);
}

TEST_CASE("config validation") {
    IntegratorConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = IntegratorConfig{};
    bad.max_step = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
