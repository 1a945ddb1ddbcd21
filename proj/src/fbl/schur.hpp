#pragma once

#include "fbl/types.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace fbl {

/// Real Schur form A = Q T Q^T with bookkeeping for the 1x1 / 2x2 diagonal
/// blocks, plus orthogonal reordering of blocks (direct swap of adjacent
/// blocks via a small Sylvester solve and a Householder QR).
struct SchurForm {
    Mat T;
    Mat Q;

    struct Block {
        int start = 0;
        int size = 1;
        std::complex<double> eig1, eig2;  // eig2 only for size 2
        double max_modulus = 0.0;
        double min_modulus = 0.0;
    };
    std::vector<Block> blocks;

    int dim() const { return static_cast<int>(T.rows()); }
};

SchurForm real_schur(const Mat& A);

/// Swaps the adjacent diagonal blocks starting at blocks[i] and blocks[i+1]
/// by an orthogonal similarity. Returns false when the blocks could not be
/// separated (eigenvalues numerically coincide).
bool swap_adjacent_blocks(SchurForm& S, std::size_t i);

/// Stable selection sort of the diagonal blocks by descending max modulus.
/// Returns false if some required swap failed.
bool sort_blocks_by_modulus(SchurForm& S);

/// Moves all blocks selected by `pred` (conjugation-symmetric predicate on
/// the block eigenvalues) to the top, preserving relative order. Returns the
/// selected dimension, or -1 when a swap failed.
int reorder_selected_first(SchurForm& S, const std::function<bool(const SchurForm::Block&)>& pred);

/// Orthonormal basis (n x d) of the invariant subspace belonging to the
/// eigenvalues selected by `pred`; d may be zero.
Mat spectral_subspace(const Mat& A, const std::function<bool(std::complex<double>)>& pred);

/// Decouples consecutive block groups of the (already ordered) Schur form:
/// finds the block-upper-triangular transform with unit diagonal killing the
/// cross-group coupling, and returns per-group orthonormalized bases of the
/// corresponding invariant subspaces in the original coordinates.
struct GroupBases {
    std::vector<Mat> bases;   // n x d_j each
    bool sylvester_ok = true; // false when a cross-group solve was singular
};
GroupBases group_invariant_bases(const SchurForm& S, const std::vector<int>& group_sizes);

}  // namespace fbl
