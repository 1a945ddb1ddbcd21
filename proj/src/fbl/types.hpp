#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Everything that can go wrong, mapped 1:1 onto the C API status codes.
enum class ErrorCode {
    Ok = 0,
    InvalidParameter,
    DomainViolation,
    DimensionMismatch,
    NonFiniteValue,
    InvalidConeIndex,
    EmptyCompactSet,
    TooFewSamples,
    WindowTooShort,
    FrameCollapse,
    GridMismatch,
    NoDichotomy,
    NotHyperbolic,
    SingularMatrix,
    BlockSplit,
    ConfigError,
    IoError,
    Internal,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string msg)
        : std::runtime_error(std::move(msg)), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

/// Axis-aligned box, possibly unbounded per side. Bounds at +-inf are
/// treated as open; finite bounds carry an open/closed flag per side.
struct Box {
    Vec lower;  // -inf allowed
    Vec upper;  // +inf allowed
    std::vector<bool> lower_open;  // strict inequality when true
    std::vector<bool> upper_open;

    Box() = default;
    explicit Box(int n);  // all of R^n

    static Box all(int n) { return Box(n); }
    static Box positive_orthant(int n);  // open: x_i > 0
    static Box cube(int n, double lo, double hi);

    int dim() const { return static_cast<int>(lower.size()); }
    bool contains(const Vec& x) const;
    /// Distance to the complement (min over coordinates of the margin to
    /// the nearest violated bound); +inf when the box is all of R^n.
    double distance_to_complement(const Vec& x) const;
    /// Strictly interior with margin eps on every finite side.
    bool interior(const Vec& x, double eps) const;

    Box intersect(const Box& other) const;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace fbl
