#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbl/lyapunov.hpp"
#include "test_support.hpp"

#include <random>

using namespace fbl;

namespace {
const FeedbackSignature sig3 = FeedbackSignature::normalized(3);
const NConvention def = NConvention::default_convention();
}  // namespace

TEST_CASE("n_value hand-enumerated cases") {
    // All three forward products delta_i x_i x_{i+1} are negative.
    CHECK(n_value((Vec(3) << 1, -1, 1).finished(), sig3, def).value == 3);
    CHECK(n_value((Vec(3) << 1, -1, 1).finished(), sig3, def).defined);

    // Products (0.5, -0.25, +0.5): exactly one negative.
    const auto nv = n_value((Vec(3) << 1.0, 0.5, -0.5).finished(), sig3, def);
    CHECK(nv.defined);
    CHECK(nv.value == 1);

    // A zero coordinate leaves N undefined (a value, not an error).
    CHECK(!n_value((Vec(3) << 1.0, 0.0, 1.0).finished(), sig3, def).defined);

    // The verbatim formula counts positive backward products: for (1,-1,1)
    // the products (x1 x3, -(x2 x1), -(x3 x2)) read (+1, +1... ) by hand: 2.
    const auto verbatim = NConvention::paper_verbatim();
    CHECK(n_value((Vec(3) << 1, -1, 1).finished(), sig3, verbatim).value == 2);
}

TEST_CASE("relative zero threshold") {
    const Vec x = (Vec(3) << 1.0, 1e-12, -1.0).finished();
    CHECK(n_value(x, sig3, def, 0.0).defined);       // exact: nonzero
    CHECK(!n_value(x, sig3, def, 1e-9).defined);     // tolerant: treated as zero
}

TEST_CASE("n_bounds enumeration") {
    // Spec-style sparse case under the backward/negative combination.
    const NConvention back_neg{EdgePairing::EdgeBackward, CountedSign::Negative};
    const auto nb = n_bounds((Vec(3) << 0.0, 1.0, 0.0).finished(), sig3, back_neg);
    CHECK(nb.n_m == 1);
    CHECK(nb.n_M == 3);
    CHECK(!nb.in_regular_set);
    CHECK(!nb.zero_vector);

    // No zeros: bounds collapse to the value.
    const Vec y = (Vec(3) << 1.0, 0.5, -0.5).finished();
    const auto nb2 = n_bounds(y, sig3, def);
    CHECK(nb2.in_regular_set);
    CHECK(nb2.n_m == n_value(y, sig3, def).value);

    // The zero vector enumerates all 2^n assignments; every count is odd
    // under the default convention.
    const auto nb0 = n_bounds(Vec::Zero(3), sig3, def);
    CHECK(nb0.zero_vector);
    CHECK(nb0.n_m % 2 == 1);
    CHECK(nb0.n_M % 2 == 1);
    CHECK(nb0.n_m <= nb0.n_M);
}

TEST_CASE("oddness of N for negative feedback") {
    std::mt19937_64 rng(101);
    for (int n = 3; n <= 9; ++n) {
        const auto sig = FeedbackSignature::normalized(n);
        for (int rep = 0; rep < 1500; ++rep) {
            Vec x(n);
            for (int i = 0; i < n; ++i) {
                double v = 0.0;
                while (v == 0.0) v = fbl_test::random_vec(rng, 1)[0];
                x[i] = v;
            }
            const auto nv = n_value(x, sig, def);
            REQUIRE(nv.defined);
            CHECK(nv.value % 2 == 1);
            CHECK(nv.value <= n);
        }
    }
}

TEST_CASE("n_bounds equals an independent brute force on sparse vectors") {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    for (int rep = 0; rep < 10000; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const auto sig = FeedbackSignature::normalized(n);
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
        const int zeros = static_cast<int>(rng() % n);
        for (int z = 0; z < zeros; ++z) x[static_cast<int>(rng() % n)] = 0.0;

        // Independent oracle: direct double loop over sign assignments.
        std::vector<int> zpos;
        for (int i = 0; i < n; ++i)
            if (x[i] == 0.0) zpos.push_back(i);
        int lo = n + 1, hi = -1;
        for (std::size_t mask = 0; mask < (std::size_t{1} << zpos.size()); ++mask) {
            Vec y = x;
            for (std::size_t k = 0; k < zpos.size(); ++k)
                y[zpos[k]] = (mask >> k) & 1 ? 1.0 : -1.0;
            int count = 0;
            for (int i = 0; i < n; ++i) {
                const double prod =
                    sig.delta[static_cast<std::size_t>(i)] * y[i] * y[(i + 1) % n];
                if (prod < 0) ++count;
            }
            lo = std::min(lo, count);
            hi = std::max(hi, count);
        }

        const auto nb = n_bounds(x, sig, def);
        REQUIRE(nb.n_m == lo);
        REQUIRE(nb.n_M == hi);
    }
}

TEST_CASE("cone membership basics") {
    // Zero vector: member of every cone, never interior.
    for (int h = 1; h <= max_cone_index(3); ++h) {
        for (auto side : {ConeSide::KLower, ConeSide::KUpper}) {
            const auto m = in_cone(Vec::Zero(3), h, side, sig3, def);
            CHECK(m.member);
            CHECK(!m.interior);
        }
    }

    const Vec low = (Vec(3) << 1.0, 0.5, -0.5).finished();   // N = 1
    const Vec high = (Vec(3) << 1.0, -1.0, 1.0).finished();  // N = 3
    auto m = in_cone(low, 1, ConeSide::KLower, sig3, def);
    CHECK(m.member);
    CHECK(m.interior);
    m = in_cone(high, 1, ConeSide::KLower, sig3, def);
    CHECK(!m.member);
    m = in_cone(high, 1, ConeSide::KUpper, sig3, def);
    CHECK(m.member);

    CHECK_THROWS_AS(in_cone(low, 0, ConeSide::KLower, sig3, def), Error);
    CHECK_THROWS_AS(in_cone(low, 3, ConeSide::KLower, sig3, def), Error);
}

TEST_CASE("cone intersection and nesting") {
    std::mt19937_64 rng(303);
    for (int n : {3, 4, 5, 6, 7}) {
        const auto sig = FeedbackSignature::normalized(n);
        const int hmax = max_cone_index(n);
        for (int rep = 0; rep < 400; ++rep) {
            Vec x = fbl_test::random_vec(rng, n);
            if (rng() % 3 == 0) x[static_cast<int>(rng() % n)] = 0.0;
            if (x.norm() == 0.0) continue;
            for (int h = 1; h <= hmax; ++h) {
                const auto lower = in_cone(x, h, ConeSide::KLower, sig, def);
                const auto upper = in_cone(x, h, ConeSide::KUpper, sig, def);
                CHECK(!(lower.member && upper.member));  // only 0 lies in both
                if (h + 1 <= hmax) {
                    if (lower.member)
                        CHECK(in_cone(x, h + 1, ConeSide::KLower, sig, def).member);
                    if (in_cone(x, h + 1, ConeSide::KUpper, sig, def).member)
                        CHECK(upper.member);
                }
            }
        }
    }
}

TEST_CASE("convention registry") {
    CHECK(NConvention::from_name("edge_forward_negative") == def);
    CHECK(NConvention::from_name("paper_verbatim") == NConvention::paper_verbatim());
    CHECK(NConvention::from_name("default") == def);
    CHECK(def.name() == "edge_forward_negative");
    CHECK(NConvention::paper_verbatim().name() == "paper_verbatim");
    CHECK_THROWS_AS(NConvention::from_name("bogus"), Error);
}
