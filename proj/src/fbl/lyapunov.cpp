#include "fbl/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fbl {

NConvention NConvention::from_name(const std::string& name) {
    if (name == "edge_forward_negative" || name == "default")
        return {EdgePairing::EdgeForward, CountedSign::Negative};
    if (name == "paper_verbatim" || name == "edge_backward_positive")
        return {EdgePairing::EdgeBackward, CountedSign::Positive};
    if (name == "edge_forward_positive")
        return {EdgePairing::EdgeForward, CountedSign::Positive};
    if (name == "edge_backward_negative")
        return {EdgePairing::EdgeBackward, CountedSign::Negative};
    fail(ErrorCode::ConfigError, "unknown n_convention: " + name);
}

std::string NConvention::name() const {
    if (pairing == EdgePairing::EdgeBackward && counted == CountedSign::Positive)
        return "paper_verbatim";
    std::string s = pairing == EdgePairing::EdgeForward ? "edge_forward" : "edge_backward";
    s += counted == CountedSign::Negative ? "_negative" : "_positive";
    return s;
}

namespace {

/// N from a full sign vector (entries +-1); depends only on signs.
int count_from_signs(const std::vector<int>& sgn, const FeedbackSignature& sig,
                     const NConvention& conv) {
    const int n = sig.n;
    int count = 0;
    for (int i = 0; i < n; ++i) {
        const int partner =
            conv.pairing == EdgePairing::EdgeForward ? (i + 1) % n : (i + n - 1) % n;
        const int s = sig.delta[static_cast<std::size_t>(i)] *
                      sgn[static_cast<std::size_t>(i)] * sgn[static_cast<std::size_t>(partner)];
        if (conv.counted == CountedSign::Negative ? (s < 0) : (s > 0)) ++count;
    }
    return count;
}

/// Signs with zeros marked as 0 under the relative zero threshold.
std::vector<int> classify_signs(const Vec& x, double zero_eps) {
    const double scale = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    const double thr = zero_eps * scale;
    std::vector<int> sgn(static_cast<std::size_t>(x.size()), 0);
    for (int i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > thr && x[i] != 0.0)
            sgn[static_cast<std::size_t>(i)] = x[i] > 0 ? 1 : -1;
    }
    return sgn;
}

}  // namespace

NValue n_value(const Vec& x, const FeedbackSignature& sig, const NConvention& conv,
               double zero_eps) {
    sig.validate();
    if (x.size() != sig.n) fail(ErrorCode::DimensionMismatch, "vector length != n");
    NValue out;
    out.convention = conv;
    auto sgn = classify_signs(x, zero_eps);
    if (std::any_of(sgn.begin(), sgn.end(), [](int s) { return s == 0; })) {
        out.defined = false;
        return out;
    }
    out.defined = true;
    out.value = count_from_signs(sgn, sig, conv);
    return out;
}

NBounds n_bounds(const Vec& x, const FeedbackSignature& sig, const NConvention& conv,
                 double zero_eps) {
    sig.validate();
    if (x.size() != sig.n) fail(ErrorCode::DimensionMismatch, "vector length != n");
    NBounds out;
    out.convention = conv;
    auto sgn = classify_signs(x, zero_eps);
    std::vector<int> zeros;
    for (std::size_t i = 0; i < sgn.size(); ++i)
        if (sgn[i] == 0) zeros.push_back(static_cast<int>(i));
    out.zero_vector = static_cast<int>(zeros.size()) == sig.n;
    if (zeros.empty()) {
        out.n_m = out.n_M = count_from_signs(sgn, sig, conv);
        out.in_regular_set = true;
        return out;
    }
    if (zeros.size() > 24)
        fail(ErrorCode::InvalidParameter, "too many zero coordinates to enumerate");
    int nm = sig.n + 1, nM = -1;
    const std::size_t total = std::size_t{1} << zeros.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
        auto s = sgn;
        for (std::size_t k = 0; k < zeros.size(); ++k)
            s[static_cast<std::size_t>(zeros[k])] = (mask >> k) & 1 ? 1 : -1;
        const int v = count_from_signs(s, sig, conv);
        nm = std::min(nm, v);
        nM = std::max(nM, v);
    }
    out.n_m = nm;
    out.n_M = nM;
    out.in_regular_set = (nm == nM);
    return out;
}

ConeMembership in_cone(const Vec& x, int h, ConeSide side, const FeedbackSignature& sig,
                       const NConvention& conv, double zero_eps) {
    if (h < 1 || h > max_cone_index(sig.n))
        fail(ErrorCode::InvalidConeIndex,
             "cone index h=" + std::to_string(h) + " outside 1.." +
                 std::to_string(max_cone_index(sig.n)));
    ConeMembership out;
    const auto bounds = n_bounds(x, sig, conv, zero_eps);
    if (bounds.zero_vector) {
        out.member = true;  // {0} belongs to every cone
        out.interior = false;
        return out;
    }
    if (side == ConeSide::KLower) {
        out.member = bounds.n_M <= 2 * h - 1;
    } else {
        out.member = bounds.n_m > 2 * h - 1;
    }
    out.interior = out.member && bounds.in_regular_set;
    return out;
}

}  // namespace fbl
