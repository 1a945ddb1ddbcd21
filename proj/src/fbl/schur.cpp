#include "fbl/schur.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace fbl {

namespace {

void fill_block_eigs(const Mat& T, SchurForm::Block& b) {
    if (b.size == 1) {
        b.eig1 = b.eig2 = T(b.start, b.start);
    } else {
        const double a = T(b.start, b.start), bb = T(b.start, b.start + 1);
        const double c = T(b.start + 1, b.start), d = T(b.start + 1, b.start + 1);
        const double tr2 = 0.5 * (a + d);
        const double disc = 0.25 * (a - d) * (a - d) + bb * c;
        if (disc >= 0) {
            const double s = std::sqrt(disc);
            b.eig1 = tr2 + s;
            b.eig2 = tr2 - s;
        } else {
            const double s = std::sqrt(-disc);
            b.eig1 = std::complex<double>(tr2, s);
            b.eig2 = std::complex<double>(tr2, -s);
        }
    }
    b.max_modulus = std::max(std::abs(b.eig1), std::abs(b.eig2));
    b.min_modulus = std::min(std::abs(b.eig1), std::abs(b.eig2));
}

void scan_blocks(SchurForm& S) {
    S.blocks.clear();
    const int n = S.dim();
    const double tiny = 1e-14 * std::max(1.0, S.T.norm());
    int row = 0;
    while (row < n) {
        SchurForm::Block b;
        b.start = row;
        b.size = (row + 1 < n && std::abs(S.T(row + 1, row)) > tiny) ? 2 : 1;
        fill_block_eigs(S.T, b);
        S.blocks.push_back(b);
        row += b.size;
    }
}

/// Sylvester solve A X - X B = C via the Kronecker system (sizes <= 2).
bool solve_sylvester_small(const Mat& A, const Mat& B, const Mat& C, Mat& X) {
    const int p = static_cast<int>(A.rows());
    const int q = static_cast<int>(B.rows());
    Mat K = Mat::Zero(p * q, p * q);
    // vec ordering: column-major, X(i,j) -> index j*p + i
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) {
            const int r = j * p + i;
            for (int k = 0; k < p; ++k) K(r, j * p + k) += A(i, k);
            for (int k = 0; k < q; ++k) K(r, k * p + i) -= B(k, j);
        }
    Vec rhs(p * q);
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) rhs[j * p + i] = C(i, j);
    Eigen::FullPivLU<Mat> lu(K);
    const double cond_floor = 1e-13 * std::max(1.0, K.cwiseAbs().maxCoeff());
    if (lu.rank() < p * q ||
        std::abs(lu.matrixLU().diagonal().cwiseAbs().minCoeff()) < cond_floor) {
        return false;
    }
    const Vec x = lu.solve(rhs);
    X.resize(p, q);
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) X(i, j) = x[j * p + i];
    return x.allFinite();
}

}  // namespace

SchurForm real_schur(const Mat& A) {
    if (A.rows() != A.cols()) fail(ErrorCode::DimensionMismatch, "matrix not square");
    if (!A.allFinite()) fail(ErrorCode::NonFiniteValue, "matrix has non-finite entries");
    Eigen::RealSchur<Mat> schur(A);
    if (schur.info() != Eigen::Success)
        fail(ErrorCode::Internal, "real Schur decomposition failed to converge");
    SchurForm S;
    S.T = schur.matrixT();
    S.Q = schur.matrixU();
    scan_blocks(S);
    return S;
}

bool swap_adjacent_blocks(SchurForm& S, std::size_t i) {
    if (i + 1 >= S.blocks.size()) fail(ErrorCode::Internal, "swap index out of range");
    const int s = S.blocks[i].start;
    const int p = S.blocks[i].size;
    const int q = S.blocks[i + 1].size;
    const int m = p + q;
    const Mat A11 = S.T.block(s, s, p, p);
    const Mat A12 = S.T.block(s, s + p, p, q);
    const Mat A22 = S.T.block(s + p, s + p, q, q);

    // Columns of [X; I] span the A22-invariant subspace of the 2x2 block
    // pencil: A11 X - X A22 = -A12.
    Mat X;
    if (!solve_sylvester_small(A11, A22, -A12, X)) return false;

    Mat W(m, q);
    W.topRows(p) = X;
    W.bottomRows(q) = Mat::Identity(q, q);
    Eigen::HouseholderQR<Mat> qr(W);
    const Mat Qf = qr.householderQ();

    S.T.middleRows(s, m) = Qf.transpose() * S.T.middleRows(s, m);
    S.T.middleCols(s, m) = S.T.middleCols(s, m) * Qf;
    S.Q.middleCols(s, m) = S.Q.middleCols(s, m) * Qf;

    // The swapped region is block triangular up to round-off; flush it.
    const double scale = std::max(1.0, S.T.norm());
    for (int r = s + q; r < s + m; ++r)
        for (int c = s; c < s + q; ++c) {
            if (std::abs(S.T(r, c)) > 1e-8 * scale) return false;
            S.T(r, c) = 0.0;
        }
    // Re-standardize a swapped-in 2x2 block's subdiagonal pattern is not
    // required for subspace extraction; only block bookkeeping is updated.
    std::swap(S.blocks[i].size, S.blocks[i + 1].size);
    S.blocks[i + 1].start = S.blocks[i].start + S.blocks[i].size;
    fill_block_eigs(S.T, S.blocks[i]);
    fill_block_eigs(S.T, S.blocks[i + 1]);
    return true;
}

bool sort_blocks_by_modulus(SchurForm& S) {
    const std::size_t g = S.blocks.size();
    for (std::size_t top = 0; top < g; ++top) {
        std::size_t best = top;
        for (std::size_t k = top + 1; k < g; ++k)
            if (S.blocks[k].max_modulus > S.blocks[best].max_modulus + 0.0) best = k;
        for (std::size_t k = best; k > top; --k)
            if (!swap_adjacent_blocks(S, k - 1)) return false;
    }
    return true;
}

int reorder_selected_first(SchurForm& S,
                           const std::function<bool(const SchurForm::Block&)>& pred) {
    std::vector<char> selected;
    selected.reserve(S.blocks.size());
    int dim = 0;
    for (const auto& b : S.blocks) {
        const bool sel = pred(b);
        selected.push_back(sel);
        if (sel) dim += b.size;
    }
    std::size_t top = 0;
    for (std::size_t k = 0; k < selected.size(); ++k) {
        if (!selected[k]) continue;
        for (std::size_t j = k; j > top; --j) {
            if (!swap_adjacent_blocks(S, j - 1)) return -1;
            std::swap(selected[j], selected[j - 1]);
        }
        ++top;
    }
    return dim;
}

Mat spectral_subspace(const Mat& A, const std::function<bool(std::complex<double>)>& pred) {
    SchurForm S = real_schur(A);
    const int d = reorder_selected_first(
        S, [&pred](const SchurForm::Block& b) { return pred(b.eig1); });
    if (d < 0)
        fail(ErrorCode::SingularMatrix,
             "spectral subspace reordering failed (eigenvalue cluster not separable)");
    return S.Q.leftCols(d);
}

GroupBases group_invariant_bases(const SchurForm& S, const std::vector<int>& group_sizes) {
    GroupBases out;
    const int n = S.dim();
    const int g = static_cast<int>(group_sizes.size());
    std::vector<int> offset(static_cast<std::size_t>(g), 0);
    int acc = 0;
    for (int j = 0; j < g; ++j) {
        offset[static_cast<std::size_t>(j)] = acc;
        acc += group_sizes[static_cast<std::size_t>(j)];
    }
    if (acc != n) fail(ErrorCode::DimensionMismatch, "group sizes do not sum to n");

    // Y has unit diagonal groups; Y(i,j) kills the cross-group coupling:
    // T_ii Y_ij - Y_ij T_jj = -(T_ij + sum_{i<k<j} T_ik Y_kj).
    std::vector<std::vector<Mat>> Y(static_cast<std::size_t>(g),
                                    std::vector<Mat>(static_cast<std::size_t>(g)));
    for (int j = 1; j < g; ++j) {
        const int oj = offset[static_cast<std::size_t>(j)];
        const int dj = group_sizes[static_cast<std::size_t>(j)];
        for (int i = j - 1; i >= 0; --i) {
            const int oi = offset[static_cast<std::size_t>(i)];
            const int di = group_sizes[static_cast<std::size_t>(i)];
            Mat C = S.T.block(oi, oj, di, dj);
            for (int k = i + 1; k < j; ++k) {
                const int ok = offset[static_cast<std::size_t>(k)];
                const int dk = group_sizes[static_cast<std::size_t>(k)];
                C += S.T.block(oi, ok, di, dk) * Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            }
            const Mat Tii = S.T.block(oi, oi, di, di);
            const Mat Tjj = S.T.block(oj, oj, dj, dj);
            Mat X;
            if (!solve_sylvester_small(Tii, Tjj, -C, X)) {
                out.sylvester_ok = false;
                X = Mat::Zero(di, dj);  // keep the flag column as a fallback
            }
            Y[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = X;
        }
    }

    out.bases.reserve(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) {
        const int dj = group_sizes[static_cast<std::size_t>(j)];
        Mat col = Mat::Zero(n, dj);
        col.middleRows(offset[static_cast<std::size_t>(j)], dj) = Mat::Identity(dj, dj);
        for (int i = 0; i < j; ++i) {
            const int oi = offset[static_cast<std::size_t>(i)];
            const int di = group_sizes[static_cast<std::size_t>(i)];
            col.middleRows(oi, di) = Y[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        Mat raw = S.Q * col;
        Eigen::HouseholderQR<Mat> qr(raw);
        Mat thinQ = qr.householderQ() * Mat::Identity(n, dj);
        out.bases.push_back(std::move(thinQ));
    }
    return out;
}

}  // namespace fbl
