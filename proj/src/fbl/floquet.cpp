#include "fbl/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fbl {

Json FloquetDecomposition::to_json() const {
    Json j;
    j["n"] = n;
    j["n_tilde"] = n_tilde;
    j["gap_ok"] = gap_ok;
    j["sylvester_ok"] = sylvester_ok;
    j["gaps"] = gaps;
    Json bl = Json::array();
    for (const auto& b : blocks) {
        Json e;
        e["dim"] = static_cast<int>(b.basis.cols());
        std::vector<double> rows;
        for (int r = 0; r < b.basis.rows(); ++r)
            for (int c = 0; c < b.basis.cols(); ++c) rows.push_back(b.basis(r, c));
        e["basis_row_major"] = rows;
        e["nu"] = b.nu;
        e["mu"] = b.mu;
        e["defective"] = b.defective;
        Json eig = Json::array();
        for (const auto& z : b.eigenvalues) eig.push_back({{"re", z.real()}, {"im", z.imag()}});
        e["eigenvalues"] = eig;
        bl.push_back(e);
    }
    j["blocks"] = bl;
    return j;
}

FloquetDecomposition invariant_blocks(const Mat& M, double gap_tol) {
    if (M.rows() != M.cols()) fail(ErrorCode::DimensionMismatch, "matrix not square");
    const int n = static_cast<int>(M.rows());
    if (n < 3) fail(ErrorCode::InvalidParameter, "need n >= 3");

    SchurForm S = real_schur(M);
    double max_mod = 0.0, min_mod = kInf;
    for (const auto& b : S.blocks) {
        max_mod = std::max(max_mod, b.max_modulus);
        min_mod = std::min(min_mod, b.min_modulus);
    }
    if (max_mod == 0.0 || min_mod < 1e-12 * max_mod)
        fail(ErrorCode::SingularMatrix, "matrix is numerically singular");
    if (!sort_blocks_by_modulus(S))
        fail(ErrorCode::BlockSplit, "modulus sorting could not separate eigenvalue clusters");

    // Assemble groups of dimension 2 (final 1 when n is odd) from the sorted
    // Schur blocks. A conjugate pair is never split: when the fill pattern
    // would split one, a 1x1 block of equal modulus is pulled above it.
    FloquetDecomposition out;
    out.n = n;
    out.n_tilde = n_tilde(n);
    const int groups = (out.n_tilde + 1) / 2;
    std::vector<int> group_sizes;
    group_sizes.reserve(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g)
        group_sizes.push_back((g == groups - 1 && n % 2 == 1) ? 1 : 2);

    const double tie_tol = 1e-9 * max_mod;
    std::size_t bi = 0;
    for (int g = 0; g < groups; ++g) {
        int need = group_sizes[static_cast<std::size_t>(g)];
        while (need > 0) {
            if (bi >= S.blocks.size()) fail(ErrorCode::Internal, "block bookkeeping error");
            const int sz = S.blocks[bi].size;
            if (sz <= need) {
                need -= sz;
                ++bi;
                continue;
            }
            // A 2x2 conjugate block meets a 1-slot group: look for a later
            // 1x1 block of (numerically) equal modulus to fill the slot.
            std::size_t cand = bi + 1;
            while (cand < S.blocks.size() &&
                   (S.blocks[cand].size != 1 ||
                    std::abs(S.blocks[cand].max_modulus - S.blocks[bi].max_modulus) > tie_tol))
                ++cand;
            if (cand == S.blocks.size())
                fail(ErrorCode::BlockSplit,
                     "a complex conjugate pair straddles a block boundary");
            for (std::size_t k = cand; k > bi; --k)
                if (!swap_adjacent_blocks(S, k - 1))
                    fail(ErrorCode::BlockSplit, "swap failed while aligning conjugate pair");
            // retry the slot with the pulled-up real block
        }
    }

    GroupBases gb = group_invariant_bases(S, group_sizes);
    out.sylvester_ok = gb.sylvester_ok;

    // Per-group spectral data from the sorted Schur blocks.
    std::size_t blk = 0;
    for (int g = 0; g < groups; ++g) {
        FloquetBlock fb;
        fb.basis = gb.bases[static_cast<std::size_t>(g)];
        int remaining = group_sizes[static_cast<std::size_t>(g)];
        double nu = kInf, mu = 0.0;
        std::vector<const SchurForm::Block*> members;
        while (remaining > 0) {
            const auto& b = S.blocks[blk];
            members.push_back(&b);
            fb.eigenvalues.push_back(b.eig1);
            if (b.size == 2) fb.eigenvalues.push_back(b.eig2);
            nu = std::min(nu, b.min_modulus);
            mu = std::max(mu, b.max_modulus);
            remaining -= b.size;
            ++blk;
        }
        fb.nu = nu;
        fb.mu = mu;
        if (members.size() == 2) {
            // Two real eigenvalues sharing a group: defective when they
            // coincide and the Schur coupling between them is not negligible.
            const double l1 = members[0]->eig1.real(), l2 = members[1]->eig1.real();
            const double coupling = std::abs(S.T(members[0]->start, members[1]->start));
            if (std::abs(l1 - l2) <= 1e-10 * std::max(1.0, std::abs(l1)) &&
                coupling > 1e-10 * std::max(1.0, max_mod))
                fb.defective = true;
        }
        out.blocks.push_back(std::move(fb));
    }

    for (std::size_t g = 0; g + 1 < out.blocks.size(); ++g)
        out.gaps.push_back(out.blocks[g].nu - out.blocks[g + 1].mu);
    const double mu1 = out.blocks.front().mu;
    out.gap_ok = std::all_of(out.gaps.begin(), out.gaps.end(),
                             [&](double g) { return g > gap_tol * mu1; });
    return out;
}

Json BlockNValueReport::to_json() const {
    Json j;
    j["block_checks"] = block_checks;
    j["block_failures"] = block_failures;
    j["span_checks"] = span_checks;
    j["span_failures"] = span_failures;
    Json w = Json::array();
    for (const auto& it : witnesses) {
        Json e;
        e["block"] = it.block;
        e["expected"] = it.expected;
        e["got"] = it.got;
        e["defined"] = it.defined;
        e["what"] = it.what;
        e["vector"] = std::vector<double>(it.vector.data(), it.vector.data() + it.vector.size());
        w.push_back(e);
    }
    j["witnesses"] = w;
    j["ok"] = ok();
    return j;
}

BlockNValueReport verify_block_nvalues(const FloquetDecomposition& decomp,
                                       const FeedbackSignature& sig, const NConvention& conv,
                                       int samples, unsigned long rng_seed) {
    BlockNValueReport rep;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int g = static_cast<int>(decomp.blocks.size());

    auto random_combo = [&](int from, int to) {
        Vec v = Vec::Zero(decomp.n);
        for (int b = from; b <= to; ++b) {
            const Mat& B = decomp.blocks[static_cast<std::size_t>(b)].basis;
            Vec c(B.cols());
            for (int i = 0; i < c.size(); ++i) c[i] = gauss(rng);
            v += B * c;
        }
        return v;
    };

    for (int b = 0; b < g; ++b) {
        const int expected = 2 * (b + 1) - 1;
        for (int s = 0; s < samples; ++s) {
            const Vec v = random_combo(b, b);
            ++rep.block_checks;
            const NValue nv = n_value(v, sig, conv);
            if (!nv.defined || nv.value != expected) {
                ++rep.block_failures;
                if (rep.witnesses.size() < 16)
                    rep.witnesses.push_back({b + 1, v, expected, nv.value, nv.defined,
                                             "N on block basis sample"});
            }
        }
    }

    std::uniform_int_distribution<int> pick(0, g - 1);
    for (int s = 0; s < samples; ++s) {
        int i = pick(rng), k = pick(rng);
        if (i > k) std::swap(i, k);
        const Vec v = random_combo(i, k);
        ++rep.span_checks;
        const NBounds nb = n_bounds(v, sig, conv);
        const bool ok = !nb.zero_vector && nb.n_m >= 2 * (i + 1) - 1 && nb.n_M <= 2 * (k + 1) - 1;
        if (!ok) {
            ++rep.span_failures;
            if (rep.witnesses.size() < 16)
                rep.witnesses.push_back({i + 1, v, 2 * (i + 1) - 1, nb.n_m, true,
                                         "N bounds on span sample up to block " +
                                             std::to_string(k + 1)});
        }
    }
    return rep;
}

Json ConeInvarianceReport::to_json() const {
    Json j;
    j["checked"] = checked;
    j["violations"] = violations;
    j["boundary_checked"] = boundary_checked;
    j["witnesses"] = witnesses;
    j["ok"] = ok();
    return j;
}

ConeInvarianceReport verify_cone_invariance(const CyclicVectorField& field, const Vec& x0,
                                            int h, double s, double t, int samples,
                                            unsigned long rng_seed,
                                            const IntegratorConfig& config,
                                            const NConvention& conv, ConeSide side,
                                            double zero_eps) {
    const auto& sig = field.signature();
    if (side == ConeSide::KLower && !(t > s))
        fail(ErrorCode::InvalidParameter, "K_lower invariance needs t > s");
    if (side == ConeSide::KUpper && !(t < s))
        fail(ErrorCode::InvalidParameter, "K_upper invariance needs t < s");

    const Mat Phi = variational_flow(field, x0, s, t, config);
    const int n = field.dim();
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> coord(0, n - 1);

    ConeInvarianceReport rep;
    auto sample_member = [&](bool boundary) -> std::optional<Vec> {
        // Genuine boundary vectors need not exist for every (h, side); the
        // attempt cap keeps the rejection sampler from spinning then.
        for (int attempt = 0; attempt < 2000; ++attempt) {
            Vec v(n);
            for (int i = 0; i < n; ++i) v[i] = gauss(rng);
            if (boundary) v[coord(rng)] = 0.0;
            if (v.norm() < 1e-12) continue;
            const auto m = in_cone(v, h, side, sig, conv);
            if (!m.member) continue;
            if (boundary) {
                const auto nb = n_bounds(v, sig, conv);
                if (nb.in_regular_set) continue;  // want genuine boundary vectors
            }
            return v;
        }
        return std::nullopt;
    };

    // Target `samples` propagated vectors; boundary draws that cannot be
    // realized for this (h, side) are skipped without reducing the total.
    for (int k = 0; rep.checked < samples && k < 8 * samples; ++k) {
        const bool boundary = (k % 4 == 3);  // a quarter of the draws probe the boundary
        const auto v = sample_member(boundary);
        if (!v) continue;
        const Vec w = Phi * (*v);
        ++rep.checked;
        if (boundary) ++rep.boundary_checked;
        const auto m = in_cone(w, h, side, sig, conv, zero_eps);
        if (!m.member || !m.interior) {
            ++rep.violations;
            if (rep.witnesses.size() < 16) {
                Json e;
                e["v"] = std::vector<double>(v->data(), v->data() + n);
                e["w"] = std::vector<double>(w.data(), w.data() + n);
                e["member"] = m.member;
                e["interior"] = m.interior;
                rep.witnesses.push_back(e);
            }
        }
    }
    return rep;
}

}  // namespace fbl
