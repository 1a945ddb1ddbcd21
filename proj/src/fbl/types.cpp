#include "fbl/types.hpp"

#include <algorithm>
#include <sstream>

namespace fbl {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::DomainViolation: return "DomainViolation";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::InvalidConeIndex: return "InvalidConeIndex";
        case ErrorCode::EmptyCompactSet: return "EmptyCompactSet";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::FrameCollapse: return "FrameCollapse";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::NoDichotomy: return "NoDichotomy";
        case ErrorCode::NotHyperbolic: return "NotHyperbolic";
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::BlockSplit: return "BlockSplit";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

Box::Box(int n)
    : lower(Vec::Constant(n, -kInf)),
      upper(Vec::Constant(n, kInf)),
      lower_open(n, true),
      upper_open(n, true) {}

Box Box::positive_orthant(int n) {
    Box b(n);
    b.lower.setZero();
    return b;  // lower_open stays true: x_i > 0
}

Box Box::cube(int n, double lo, double hi) {
    Box b(n);
    b.lower.setConstant(lo);
    b.upper.setConstant(hi);
    b.lower_open.assign(n, false);
    b.upper_open.assign(n, false);
    return b;
}

bool Box::contains(const Vec& x) const {
    if (x.size() != lower.size()) return false;
    for (int i = 0; i < x.size(); ++i) {
        if (lower_open[i] ? !(x[i] > lower[i]) : !(x[i] >= lower[i])) return false;
        if (upper_open[i] ? !(x[i] < upper[i]) : !(x[i] <= upper[i])) return false;
    }
    return true;
}

double Box::distance_to_complement(const Vec& x) const {
    double d = kInf;
    for (int i = 0; i < x.size(); ++i) {
        if (std::isfinite(lower[i])) d = std::min(d, x[i] - lower[i]);
        if (std::isfinite(upper[i])) d = std::min(d, upper[i] - x[i]);
    }
    return d;
}

bool Box::interior(const Vec& x, double eps) const {
    return contains(x) && distance_to_complement(x) >= eps;
}

Box Box::intersect(const Box& other) const {
    if (other.dim() != dim()) fail(ErrorCode::DimensionMismatch, "box dimension mismatch");
    Box b = *this;
    for (int i = 0; i < dim(); ++i) {
        if (other.lower[i] > b.lower[i] ||
            (other.lower[i] == b.lower[i] && other.lower_open[i])) {
            b.lower[i] = other.lower[i];
            b.lower_open[i] = other.lower_open[i];
        }
        if (other.upper[i] < b.upper[i] ||
            (other.upper[i] == b.upper[i] && other.upper_open[i])) {
            b.upper[i] = other.upper[i];
            b.upper_open[i] = other.upper_open[i];
        }
    }
    return b;
}

}  // namespace fbl
