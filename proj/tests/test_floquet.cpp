#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbl/floquet.hpp"
#include "fbl/model.hpp"
#include "fbl/schur.hpp"
#include "test_support.hpp"

#include <random>

using namespace fbl;

namespace {

const NConvention def = NConvention::default_convention();

Mat random_mminus(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> mag(0.3, 2.0);
    std::uniform_real_distribution<double> diag(-1.5, 0.5);
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) A(i, i) = diag(rng);
    for (int i = 0; i < n; ++i) {
        const double sign = (i == n - 1) ? -1.0 : 1.0;
        const double c = sign * mag(rng);
        const double b = (rng() % 2) ? sign * mag(rng) : 0.0;
        if (i + 1 < n) {
            A(i + 1, i) = c;
            A(i, i + 1) = b;
        } else {
            A(0, n - 1) = c;
            A(n - 1, 0) = b;
        }
    }
    return A;
}

}  // namespace

TEST_CASE("closed-form circulant decomposition") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Mat M = fbl_test::expm(lin.jacobian(Vec::Zero(3)));
    const auto d = invariant_blocks(M, 1e-8);

    REQUIRE(d.blocks.size() == 2);
    CHECK(d.n_tilde == 3);
    CHECK(d.blocks[0].basis.cols() == 2);
    CHECK(d.blocks[1].basis.cols() == 1);
    CHECK(d.blocks[0].mu == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
    CHECK(d.blocks[0].nu == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
    CHECK(d.blocks[1].mu == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
    CHECK(d.gap_ok);
    CHECK(d.sylvester_ok);

    Vec w2 = (Vec(3) << 1.0, -1.0, 1.0).finished().normalized();
    CHECK(std::abs(d.blocks[1].basis.col(0).dot(w2)) == doctest::Approx(1.0).epsilon(1e-12));

    // N labels on the two blocks under the default convention; the spanned
    // directions are the hand-computed eigenvectors.
    const auto sig = FeedbackSignature::normalized(3);
    const auto rep = verify_block_nvalues(d, sig, def, 100, 42);
    CHECK(rep.ok());
    CHECK(n_value((Vec(3) << 1.0, 0.5, -0.5).finished(), sig, def).value == 1);
    CHECK(n_value(w2, sig, def).value == 3);
}

TEST_CASE("diagonal four-dimensional case") {
    const Mat M = (Vec(4) << 4.0, 3.0, 0.5, 0.2).finished().asDiagonal();
    const auto d = invariant_blocks(M, 1e-8);
    REQUIRE(d.blocks.size() == 2);
    CHECK(d.blocks[0].mu == doctest::Approx(4.0));
    CHECK(d.blocks[0].nu == doctest::Approx(3.0));
    CHECK(d.blocks[1].mu == doctest::Approx(0.5));
    CHECK(d.blocks[1].nu == doctest::Approx(0.2));
    CHECK(d.gap_ok);
    // Bases are the coordinate planes.
    Mat P0 = d.blocks[0].basis * d.blocks[0].basis.transpose();
    Mat E0 = Mat::Zero(4, 4);
    E0(0, 0) = E0(1, 1) = 1.0;
    CHECK((P0 - E0).norm() < 1e-12);
}

TEST_CASE("degenerate and split cases") {
    // Identity: no modulus gaps; reported, not thrown.
    const auto d = invariant_blocks(Mat::Identity(4, 4), 1e-8);
    CHECK(!d.gap_ok);

    // Singular matrix is rejected.
    Mat S = Mat::Identity(3, 3);
    S(2, 2) = 0.0;
    CHECK_THROWS_AS(invariant_blocks(S, 1e-8), Error);

    // A complex pair straddling the block boundary cannot be decomposed.
    Mat M = Mat::Zero(3, 3);
    M(0, 0) = 2.0;     // single large real eigenvalue
    M(1, 1) = 0.6;     // rotation pair below it
    M(1, 2) = -0.3;
    M(2, 1) = 0.3;
    M(2, 2) = 0.6;
    CHECK_THROWS_AS(invariant_blocks(M, 1e-8), Error);
}

TEST_CASE("random matrix-class operators decompose cleanly") {
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const Mat A = random_mminus(rng, n);
        const Mat M = fbl_test::expm(A);
        FloquetDecomposition d;
        try {
            d = invariant_blocks(M, 1e-8);
        } catch (const Error&) {
            continue;  // extreme draws may be numerically degenerate
        }
        ++checked;
        CHECK(d.gap_ok);

        int total = 0;
        Mat stacked(n, n);
        for (const auto& b : d.blocks) {
            // Invariance residual of each block basis.
            const Mat R = M * b.basis - b.basis * (b.basis.transpose() * M * b.basis);
            CHECK(R.norm() <= 1e-8 * M.norm());
            stacked.middleCols(total, static_cast<int>(b.basis.cols())) = b.basis;
            total += static_cast<int>(b.basis.cols());
        }
        REQUIRE(total == n);
        Eigen::JacobiSVD<Mat> svd(stacked);
        CHECK(svd.singularValues().minCoeff() > 1e-8);

        // Ordered modulus bands.
        for (std::size_t g = 0; g + 1 < d.blocks.size(); ++g)
            CHECK(d.blocks[g].nu > d.blocks[g + 1].mu);

        // Theorem-level N labels, used as a test.
        const auto nrep =
            verify_block_nvalues(d, FeedbackSignature::normalized(n), def, 8, rng());
        CHECK(nrep.block_failures == 0);
        CHECK(nrep.span_failures == 0);
    }
    CHECK(checked >= 280);
}

TEST_CASE("solution operator along a nonlinear trajectory decomposes") {
    // A genuinely time-dependent coefficient path: the variational flow
    // along a Goodwin trajectory.
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    auto gw = goodwin(2.0, 1.0);
    const Vec x0 = (Vec(3) << 0.9, 1.5, 2.1).finished();
    const Mat M = variational_flow(gw, x0, 0.0, 2.0, cfg);
    const auto d = invariant_blocks(M, 1e-8);
    CHECK(d.gap_ok);
    CHECK(d.blocks.size() == 2);
    const auto rep = verify_block_nvalues(d, gw.signature(), def, 64, 5);
    CHECK(rep.ok());

    // Propagating the closed-form model's leading plane stays in it with
    // the expected label.
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const Mat E = fbl_test::expm(lin.jacobian(Vec::Zero(3)));
    const auto dl = invariant_blocks(E, 1e-8);
    const Vec v = dl.blocks[0].basis.col(0);
    const Vec w = E * v;
    const auto sig = FeedbackSignature::normalized(3);
    CHECK(n_value(w, sig, def).value == 1);
    CHECK(in_cone(w, 1, ConeSide::KLower, sig, def).interior);
}

TEST_CASE("block labels for odd and even dimension closed forms") {
    for (int n : {3, 4, 5, 6}) {
        auto lin = linear_cyclic(n, 1.0, -1.0);
        const Mat M = fbl_test::expm(lin.jacobian(Vec::Zero(n)));
        const auto d = invariant_blocks(M, 1e-10);
        CHECK(static_cast<int>(d.blocks.size()) == (n_tilde(n) + 1) / 2);
        CHECK(d.gap_ok);
        const auto rep = verify_block_nvalues(d, FeedbackSignature::normalized(n), def, 64,
                                              900 + n);
        CHECK(rep.ok());
    }
}

TEST_CASE("cone invariance along zoo trajectories") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;

    auto gw = goodwin(2.0, 1.0);
    // Deep interior start: the backward mirror run must stay in the orthant.
    const Vec x0 = (Vec(3) << 0.9, 1.5, 2.1).finished();

    // Full cone: every propagated vector must land interior.
    const int hmax = max_cone_index(3);
    auto rep = verify_cone_invariance(gw, x0, hmax, 0.0, 1.0, 100, 7, cfg, def);
    CHECK(rep.ok());

    // h = 1 forward, mirror under the backward flow.
    rep = verify_cone_invariance(gw, x0, 1, 0.0, 1.5, 150, 8, cfg, def);
    CHECK(rep.ok());
    rep = verify_cone_invariance(gw, x0, 1, 0.0, -1.5, 150, 9, cfg, def, ConeSide::KUpper);
    CHECK(rep.ok());

    // Boundary vectors with a zero coordinate on a model where they exist.
    auto bd = bidirectional_synthetic(5, {});
    rep = verify_cone_invariance(bd, Vec::Zero(5), 2, 0.0, 1.0, 200, 10, cfg, def);
    CHECK(rep.ok());
    CHECK(rep.boundary_checked > 0);

    CHECK_THROWS_AS(verify_cone_invariance(gw, x0, 1, 0.0, -1.0, 10, 1, cfg, def), Error);
}

TEST_CASE("decomposition JSON export") {
    auto lin = linear_cyclic(3, 1.0, -1.0);
    const auto d = invariant_blocks(fbl_test::expm(lin.jacobian(Vec::Zero(3))), 1e-8);
    const Json j = d.to_json();
    CHECK(j.at("n") == 3);
    CHECK(j.at("blocks").size() == 2);
    CHECK(j.at("blocks")[0].at("basis_row_major").size() == 6);
    CHECK(j.at("gap_ok") == true);
}
