#pragma once

#include "fbl/integrate.hpp"
#include "fbl/lyapunov.hpp"
#include "fbl/model.hpp"
#include "fbl/schur.hpp"
#include "fbl/types.hpp"

#include <complex>
#include <vector>

namespace fbl {

struct FloquetBlock {
    Mat basis;  // n x d, orthonormal columns, d in {1,2}
    double nu = 0.0;  // min eigenvalue modulus within the block
    double mu = 0.0;  // max eigenvalue modulus within the block
    std::vector<std::complex<double>> eigenvalues;
    bool defective = false;  // repeated eigenvalue with coupling inside the block
};

struct FloquetDecomposition {
    int n = 0;
    int n_tilde = 0;
    std::vector<FloquetBlock> blocks;  // ordered by descending modulus band
    std::vector<double> gaps;          // nu_i - mu_{i+1}
    bool gap_ok = false;
    bool sylvester_ok = true;  // cross-group decoupling solves succeeded
    Json to_json() const;
};

/// Splits an invertible solution-operator matrix into the ordered invariant
/// blocks of dimensions 2,...,2[,1] (final 1 when n is odd), sorted by
/// descending eigenvalue modulus, via an eigenvalue-reordered real Schur
/// decomposition. Throws SingularMatrix when M is not invertible and
/// BlockSplit when a complex pair would straddle a block boundary. A failed
/// modulus gap is reported through gap_ok, not thrown.
FloquetDecomposition invariant_blocks(const Mat& M, double gap_tol = 1e-8);

struct BlockNValueReport {
    struct Witness {
        int block = 0;
        Vec vector;
        int expected = 0;
        int got = 0;
        bool defined = true;
        std::string what;
    };
    int block_checks = 0;
    int block_failures = 0;
    int span_checks = 0;
    int span_failures = 0;
    std::vector<Witness> witnesses;  // capped
    bool ok() const { return block_failures == 0 && span_failures == 0; }
    Json to_json() const;
};

/// Samples unit vectors in each block W_i and asserts N = 2i-1; samples the
/// partial sums W_i + ... + W_k and asserts N_m >= 2i-1, N_M <= 2k-1.
BlockNValueReport verify_block_nvalues(const FloquetDecomposition& decomp,
                                       const FeedbackSignature& sig, const NConvention& conv,
                                       int samples, unsigned long rng_seed);

struct ConeInvarianceReport {
    int checked = 0;
    int violations = 0;
    int boundary_checked = 0;
    std::vector<Json> witnesses;  // capped
    bool ok() const { return checked > 0 && violations == 0; }
    Json to_json() const;
};

/// Propagates random members of K_lower(h) (including boundary vectors with
/// a zero coordinate) by S(s,t) along the orbit of x0 and asserts the images
/// land strictly interior. t > s checks K_lower; pass t < s with
/// side=KUpper for the mirror statement under the backward flow.
ConeInvarianceReport verify_cone_invariance(const CyclicVectorField& field, const Vec& x0,
                                            int h, double s, double t, int samples,
                                            unsigned long rng_seed,
                                            const IntegratorConfig& config,
                                            const NConvention& conv,
                                            ConeSide side = ConeSide::KLower,
                                            double zero_eps = 1e-9);

}  // namespace fbl
