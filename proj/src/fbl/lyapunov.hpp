#pragma once

#include "fbl/model.hpp"
#include "fbl/types.hpp"

#include <string>

namespace fbl {

/// Which neighbor pairs with delta_i: EdgeForward weights x_i * x_{i+1},
/// EdgeBackward weights x_i * x_{i-1} (the source text's literal formula).
enum class EdgePairing { EdgeForward, EdgeBackward };
/// Whether N counts delta-weighted products below or above zero.
enum class CountedSign { Negative, Positive };

struct NConvention {
    EdgePairing pairing = EdgePairing::EdgeForward;
    CountedSign counted = CountedSign::Negative;

    static NConvention default_convention() { return {}; }
    static NConvention paper_verbatim() {
        return {EdgePairing::EdgeBackward, CountedSign::Positive};
    }
    static NConvention from_name(const std::string& name);
    std::string name() const;

    bool operator==(const NConvention&) const = default;
};

struct NValue {
    int value = 0;
    bool defined = false;  // all cyclic products nonzero
    NConvention convention;
};

struct NBounds {
    int n_m = 0;
    int n_M = 0;
    bool in_regular_set = false;  // n_m == n_M
    bool zero_vector = false;     // x == 0 (cones treat it separately)
    NConvention convention;
};

/// Coordinates with |x_i| <= zero_eps * |x|_inf are treated as zeros.
/// zero_eps = 0 means exact comparison.
NValue n_value(const Vec& x, const FeedbackSignature& sig, const NConvention& conv,
               double zero_eps = 0.0);

/// Exact combinatorial neighborhood bounds: nonzero coordinates keep their
/// signs, the z zero coordinates range over all 2^z sign assignments.
NBounds n_bounds(const Vec& x, const FeedbackSignature& sig, const NConvention& conv,
                 double zero_eps = 0.0);

enum class ConeSide { KLower, KUpper };

struct ConeMembership {
    bool member = false;
    bool interior = false;
};

/// K_lower(h) = {0} u {N_M(x) <= 2h-1}; K_upper(h) = {0} u {N_m(x) > 2h-1}.
/// Interior requires membership, x != 0 and the regular set.
ConeMembership in_cone(const Vec& x, int h, ConeSide side, const FeedbackSignature& sig,
                       const NConvention& conv, double zero_eps = 0.0);

inline int n_tilde(int n) { return (n % 2 == 1) ? n : n - 1; }
inline int max_cone_index(int n) { return (n_tilde(n) + 1) / 2; }

}  // namespace fbl
