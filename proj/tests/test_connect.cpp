#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbl/connect.hpp"
#include "fbl/verify.hpp"
#include "test_support.hpp"

#include <random>

using namespace fbl;

namespace {

IntegratorConfig probe() {
    IntegratorConfig c;
    c.rel_tol = 1e-9;
    c.abs_tol = 1e-11;
    return c;
}

const NConvention def = NConvention::default_convention();

/// Constant-coefficient test seam: a trajectory frozen at an equilibrium on
/// a uniform grid covering [-T, T].
ConnectingOrbit frozen_orbit(const Equilibrium& e, double tau, int steps) {
    ConnectingOrbit orbit;
    orbit.e_minus = e.x;
    orbit.e_plus = e.x;
    orbit.i_minus = e.morse_index;
    orbit.i_plus = e.morse_index;
    for (int k = -steps; k <= steps; ++k) {
        orbit.trajectory.times.push_back(k * tau);
        orbit.trajectory.states.push_back(e.x);
    }
    return orbit;
}

}  // namespace

TEST_CASE("local invariant bases") {
    auto unstable_model = linear_cyclic(3, 3.0, -1.0);
    const auto e = classify_equilibrium(unstable_model, Vec::Zero(3));
    REQUIRE(e.morse_index == 2);

    const Mat U = local_invariant_basis(unstable_model, e, ManifoldSide::Unstable);
    const Mat S = local_invariant_basis(unstable_model, e, ManifoldSide::Stable);
    CHECK(U.cols() == 2);
    CHECK(S.cols() == 1);

    // Invariance of each subspace under the Jacobian.
    const Mat J = unstable_model.jacobian(Vec::Zero(3));
    CHECK((J * U - U * (U.transpose() * J * U)).norm() < 1e-10);
    CHECK((J * S - S * (S.transpose() * J * S)).norm() < 1e-10);

    // Stacked frames span the whole space.
    Mat B(3, 3);
    B.leftCols(2) = U;
    B.rightCols(1) = S;
    CHECK(std::abs(B.fullPivLu().determinant()) > 1e-6);

    // Index-0 equilibrium: empty unstable frame.
    auto stable_model = linear_cyclic(3, 1.0, -1.0);
    const auto e0 = classify_equilibrium(stable_model, Vec::Zero(3));
    CHECK(local_invariant_basis(stable_model, e0, ManifoldSide::Unstable).cols() == 0);

    // Non-hyperbolic input is rejected.
    const auto enh = classify_equilibrium(linear_cyclic(3, 2.0, -1.0), Vec::Zero(3));
    CHECK_THROWS_AS(local_invariant_basis(linear_cyclic(3, 2.0, -1.0), enh,
                                          ManifoldSide::Unstable),
                    Error);
}

TEST_CASE("shooting from an index-0 source finds nothing") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const auto e = classify_equilibrium(lin, Vec::Zero(3));
    const auto summary = shoot_connection(lin, e, ConnectionTarget{e}, {}, probe(), def);
    CHECK(summary.found.empty());
    CHECK(summary.attempts == 0);
}

TEST_CASE("index-2 to index-0 connection in the dissipative instance") {
    auto f = shipped_bidirectional();
    const auto search = find_equilibria(f, Box::cube(3, -2.0, 2.0), 5, {1e-11, 60});
    const Equilibrium* src = nullptr;
    for (const auto& e : search.equilibria)
        if (e.morse_index == 2) {
            src = &e;
            break;
        }
    REQUIRE(src != nullptr);

    ShootOptions opts;
    opts.directions = 64;
    opts.horizon = 150.0;
    opts.max_found = 1;
    ConnectingOrbit orbit;
    bool found = false;
    for (const auto& dst : search.equilibria) {
        if (dst.morse_index != 0) continue;
        const auto summary = shoot_connection(f, *src, ConnectionTarget{dst}, opts, probe(), def);
        if (!summary.found.empty()) {
            orbit = summary.found.front();
            found = true;
            break;
        }
    }
    REQUIRE(found);
    CHECK(orbit.conv_err_minus <= opts.conv_tol);
    CHECK(orbit.conv_err_plus <= opts.conv_tol);
    CHECK(orbit.h_plus <= orbit.h_minus);
    CHECK(orbit.i_minus == 2);
    CHECK(orbit.i_plus == 0);

    // Frames and the transversality verdict.
    const double half = std::min(-orbit.trajectory.t_begin(), orbit.trajectory.t_end()) * 0.95;
    const int steps = std::max(6, static_cast<int>(half / 0.25));
    const auto frames = dichotomy_frames(f, orbit, half / steps, steps, probe());
    CHECK(frames.U_frame_at_0.cols() == 2);
    CHECK(frames.S_frame_at_0.cols() == 3);
    CHECK((frames.U_frame_at_0.transpose() * frames.U_frame_at_0 - Mat::Identity(2, 2)).norm() <
          1e-10);

    const auto rep = transversality_test(frames, orbit.i_minus, orbit.i_plus);
    CHECK(rep.transverse);
    CHECK(rep.span_defect == 0);
    CHECK(rep.bounded_adjoint_dim == 0);
    CHECK(rep.fredholm_index == 2);
    CHECK(rep.min_principal_angle > 1e-3);

    // Case (ii) of the automatic prediction with witness h = 1.
    const auto auto_chk = automatic_transversality_check(f, orbit);
    CHECK(auto_chk.prediction == TransversalityPrediction::PredictedTransverseCaseII);
    CHECK(auto_chk.witness_h == 1);
    CHECK(auto_chk.index_inequalities_ok);

    // Discretization insensitivity: halving tau with doubled steps moves the
    // frames at 0 by less than 1e-6.
    const auto frames2 = dichotomy_frames(f, orbit, half / (2 * steps), 2 * steps, probe());
    CHECK((frames.U_frame_at_0 * frames.U_frame_at_0.transpose() -
           frames2.U_frame_at_0 * frames2.U_frame_at_0.transpose())
              .norm() < 1e-6);
    CHECK((frames.S_frame_at_0 * frames.S_frame_at_0.transpose() -
           frames2.S_frame_at_0 * frames2.S_frame_at_0.transpose())
              .norm() < 1e-6);

    CHECK_THROWS_AS(dichotomy_frames(f, orbit, half, 1000, probe()), Error);
}

TEST_CASE("constant-coefficient frames equal the spectral data") {
    auto f = linear_cyclic(3, 3.0, -1.0);
    const auto e = classify_equilibrium(f, Vec::Zero(3));
    const auto orbit = frozen_orbit(e, 0.25, 20);
    const auto frames = dichotomy_frames(f, orbit, 0.25, 20, probe());

    const Mat U = local_invariant_basis(f, e, ManifoldSide::Unstable);
    const Mat S = local_invariant_basis(f, e, ManifoldSide::Stable);
    CHECK((frames.U_frame_at_0 * frames.U_frame_at_0.transpose() - U * U.transpose()).norm() <
          1e-8);
    CHECK((frames.S_frame_at_0 * frames.S_frame_at_0.transpose() - S * S.transpose()).norm() <
          1e-8);
    CHECK(frames.oblique);

    // P-(0) equals the spectral projection onto the unstable subspace.
    Mat B(3, 3);
    B.leftCols(2) = U;
    B.rightCols(1) = S;
    const Mat Pspec = B * (Vec(3) << 1, 1, 0).finished().asDiagonal() * B.inverse();
    CHECK((frames.P_minus_0 - Pspec).norm() < 1e-8);
    CHECK((frames.P_plus_0 - Pspec).norm() < 1e-8);  // e+ = e-: same splitting

    // An index-0 endpoint produces an empty unstable frame and P- = 0.
    auto sink_model = linear_cyclic(3, 1.0, -1.0);
    const auto sink = classify_equilibrium(sink_model, Vec::Zero(3));
    const auto orbit0 = frozen_orbit(sink, 0.25, 10);
    const auto frames0 = dichotomy_frames(sink_model, orbit0, 0.25, 10, probe());
    CHECK(frames0.U_frame_at_0.cols() == 0);
    CHECK(frames0.P_minus_0.norm() == 0.0);
}

TEST_CASE("transversality coordinate-frame unit cases") {
    DichotomyFrames fr;
    fr.U_frame_at_0 = Mat::Identity(3, 2);
    Mat S(3, 2);
    S.setZero();
    S(1, 0) = 1;
    S(2, 1) = 1;
    fr.S_frame_at_0 = S;
    auto rep = transversality_test(fr, 2, 1);
    CHECK(rep.transverse);
    CHECK(rep.span_defect == 0);
    CHECK(rep.bounded_adjoint_dim == 0);
    CHECK(rep.fredholm_index == 1);

    fr.U_frame_at_0 = Mat::Identity(3, 1);
    fr.S_frame_at_0 = Mat::Identity(3, 2);
    rep = transversality_test(fr, 1, 1);
    CHECK(!rep.transverse);
    CHECK(rep.span_defect == 1);
    CHECK(rep.bounded_adjoint_dim == 1);
    CHECK(rep.fredholm_index == 0);

    CHECK_THROWS_AS(transversality_test(fr, 2, 1), Error);  // dims disagree
}

TEST_CASE("three transversality criteria agree on random frames") {
    std::mt19937_64 rng(71);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 4);
        const int iu = static_cast<int>(rng() % (n + 1));
        const int ip = static_cast<int>(rng() % (n + 1));
        Mat U(n, iu), S(n, n - ip);
        for (int c = 0; c < iu; ++c) U.col(c) = fbl_test::random_vec(rng, n);
        for (int c = 0; c < n - ip; ++c) S.col(c) = fbl_test::random_vec(rng, n);
        // Orthonormalize.
        auto orth = [](Mat& M) {
            if (M.cols() == 0) return;
            Eigen::HouseholderQR<Mat> qr(M);
            M = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
        };
        orth(U);
        orth(S);
        DichotomyFrames fr;
        fr.U_frame_at_0 = U;
        fr.S_frame_at_0 = S;
        const auto t = transversality_test(fr, iu, ip);
        CHECK(t.fredholm_index == iu - ip);
        CHECK((t.span_defect == 0) == (t.bounded_adjoint_dim == 0));
        CHECK((t.min_principal_angle > 1e-6) == (t.bounded_adjoint_dim == 0));
    }
}

TEST_CASE("automatic prediction dispatch") {
    auto f = shipped_bidirectional();
    ConnectingOrbit orbit;
    orbit.i_minus = 2;
    orbit.i_plus = 0;
    CHECK(automatic_transversality_check(f, orbit).prediction ==
          TransversalityPrediction::PredictedTransverseCaseII);

    orbit.plus_is_cycle = true;
    CHECK(automatic_transversality_check(f, orbit).prediction ==
          TransversalityPrediction::PredictedTransverseCaseI);

    orbit.plus_is_cycle = false;
    orbit.i_minus = orbit.i_plus = 1;  // equal odd indices
    CHECK(automatic_transversality_check(f, orbit).prediction ==
          TransversalityPrediction::NotCovered);
}

TEST_CASE("green function window solve") {
    Mat T(2, 2);
    T << 2.0, 0.0, 0.0, 0.5;
    const Mat P = spectral_dichotomy_projection(T);
    CHECK((P - (Vec(2) << 1, 0).finished().asDiagonal().toDenseMatrix()).norm() < 1e-12);

    const int L = 80;
    std::vector<Mat> ops(L, T), projs(L + 1, P);

    // Zero forcing stays zero.
    std::vector<Vec> zero(L, Vec::Zero(2));
    auto sol = green_function_solve(ops, projs, zero);
    for (const auto& y : sol.Y) CHECK(y.norm() == 0.0);

    // Hand-computed geometric series: f = (1,0) gives Y = (-1, 0); window
    // truncation perturbs the midpoint by 2^{-L/2}.
    std::vector<Vec> ones(L, (Vec(2) << 1.0, 0.0).finished());
    sol = green_function_solve(ops, projs, ones);
    CHECK(sol.Y[L / 2][0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(std::abs(sol.Y[L / 2][1]) < 1e-14);
    CHECK(sol.interior_residual < 1e-12);

    // Random bounded forcing keeps a tiny interior residual.
    std::mt19937_64 rng(5);
    std::vector<Vec> f(L);
    for (auto& v : f) v = fbl_test::random_vec(rng, 2);
    sol = green_function_solve(ops, projs, f);
    CHECK(sol.interior_residual < 1e-8);

    CHECK_THROWS_AS(green_function_solve({}, {}, {}), Error);
    CHECK_THROWS_AS(spectral_dichotomy_projection(Mat::Identity(2, 2)), Error);
}

TEST_CASE("roughness probe") {
    Mat R(2, 2);
    const double a = 0.3;
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const Mat T = R * (Vec(2) << 2.0, 0.5).finished().asDiagonal() * R.inverse();
    std::vector<Mat> ops(60, T);

    auto rep = dichotomy_roughness_probe(ops, {0.0, 1e-4, 1e-3, 1e-2}, 17);
    REQUIRE(rep.entries.size() == 4);
    CHECK(rep.entries[0].projection_deviation == 0.0);
    CHECK(rep.slope_valid);
    CHECK(rep.slope > 0.7);
    CHECK(rep.slope < 1.3);

    // A perturbation large enough to close the spectral gap collapses and is
    // excluded from the regression.
    auto rep2 = dichotomy_roughness_probe(ops, {1e-3, 2.0}, 17);
    CHECK((rep2.entries[1].collapsed || rep2.entries[1].projection_deviation > 0.1));
}

TEST_CASE("bump perturbation values and smoothness") {
    const double r = 0.8;
    auto bump = bump_perturbation(4, 2, 0.5, -0.25, r);
    CHECK(bump.dim() == 4);

    auto value = [&](double d2_over_r) {
        // Place x on the distance shell d = d2_over_r * r along x2.
        Vec x = Vec::Zero(4);
        x[1] = 0.5 + std::sqrt(d2_over_r * r);
        x[2] = -0.25;
        return bump.evaluate(x)[1];
    };
    CHECK(value(0.0) == doctest::Approx(1.0));
    CHECK(value(1.0) == doctest::Approx(0.0));
    CHECK(value(1.5) == doctest::Approx(0.0));
    CHECK(value(0.75) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(value(0.25) == doctest::Approx(1.0));

    // Only component j is nonzero; the Jacobian touches (j, j) and (j, j+1).
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const Vec x = fbl_test::random_vec(rng, 4, -1.0, 1.5);
        const Vec v = bump.evaluate(x);
        CHECK(v[0] == 0.0);
        CHECK(v[2] == 0.0);
        CHECK(v[3] == 0.0);
        CHECK(v[1] >= 0.0);
        CHECK(v[1] <= 1.0);
        const Mat J = bump.jacobian(x);
        const Mat Jf = bump.jacobian_fd(x, 1e-6);
        CHECK((J - Jf).cwiseAbs().maxCoeff() < 1e-5);
    }

    CHECK_THROWS_AS(bump_perturbation(4, 2, 0.0, 0.0, -1.0), Error);
    CHECK_THROWS_AS(bump_perturbation(4, 9, 0.0, 0.0, 1.0), Error);
}

TEST_CASE("functional transversality integral") {
    auto gw = goodwin(2.0, 1.0);
    IntegratorConfig cfg = probe();
    cfg.dense_output = true;
    const auto window = integrate(gw, (Vec(3) << 1.0, 0.9, 1.1).finished(), 0.0, 5.0, cfg);

    // h identically zero.
    auto zero_field = cyclic_tanh_coupling(3, 0.0);
    std::vector<Vec> phi(window.times.size(), (Vec(3) << 1.0, 0.0, 0.0).finished());
    CHECK(functional_transversality_integral(window, phi, zero_field) == 0.0);

    // phi identically zero.
    auto bump = bump_perturbation(3, 1, 1.0, 0.9, 4.0);
    std::vector<Vec> zero_phi(window.times.size(), Vec::Zero(3));
    CHECK(functional_transversality_integral(window, zero_phi, bump) == 0.0);

    // A sign-definite phi_j over the bump support gives a positive value;
    // the bump is wide enough to cover the early window.
    CHECK(functional_transversality_integral(window, phi, bump) > 0.0);

    std::vector<Vec> short_phi(3, Vec::Zero(3));
    CHECK_THROWS_AS(functional_transversality_integral(window, short_phi, bump), Error);
}

TEST_CASE("eigenvalue-shifting perturbations") {
    auto lin = linear_cyclic(3, 2.0, -1.0);  // complex pair on the imaginary axis
    const Vec e = Vec::Zero(3);

    // Linear field: every eigenvalue moves by exactly alpha.
    auto shifted = perturb_to_hyperbolic(lin, e, 0.1);
    const auto before = classify_equilibrium(lin, e);
    const auto after = classify_equilibrium(shifted, e);
    std::vector<double> re_before, re_after;
    for (int i = 0; i < 3; ++i) {
        re_before.push_back(before.eigenvalues[i].real());
        re_after.push_back(after.eigenvalues[i].real());
    }
    std::sort(re_before.begin(), re_before.end());
    std::sort(re_after.begin(), re_after.end());
    for (int i = 0; i < 3; ++i)
        CHECK(re_after[static_cast<std::size_t>(i)] ==
              doctest::Approx(re_before[static_cast<std::size_t>(i)] + 0.1).epsilon(1e-10));

    // alpha = 0 leaves the field unchanged.
    auto same = perturb_to_hyperbolic(lin, e, 0.0);
    CHECK((same.evaluate((Vec(3) << 1, 2, 3).finished()) -
           lin.evaluate((Vec(3) << 1, 2, 3).finished()))
              .norm() == 0.0);

    // The imaginary-axis pair becomes hyperbolic under a small shift.
    CHECK(!before.hyperbolic);
    CHECK(classify_equilibrium(perturb_to_hyperbolic(lin, e, 1e-3), e).hyperbolic);

    // Constant shift moves the equilibrium, not the spectrum.
    auto moved = constant_shift(lin, (Vec(3) << 0.01, 0.0, 0.0).finished());
    CHECK(moved.evaluate(e).norm() > 0.0);
}
