#pragma once

#include "fbl/expr.hpp"
#include "fbl/types.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fbl {

using Json = nlohmann::json;

/// Which of the two strict sign branches of the matrix class applies:
/// SubdiagonalStrict = c-branch (c_i > 0 for i < n, c_n < 0),
/// SuperdiagonalStrict = b-branch.
enum class SignBranch { SubdiagonalStrict, SuperdiagonalStrict };

struct FeedbackSignature {
    int n = 0;
    std::vector<int> delta;  // entries in {-1,+1}, product must be -1
    SignBranch branch = SignBranch::SubdiagonalStrict;

    /// Normalized signature delta = (+1, ..., +1, -1).
    static FeedbackSignature normalized(int n,
                                        SignBranch branch = SignBranch::SubdiagonalStrict);
    void validate() const;
    bool is_normalized() const;
};

enum class JacobianMode { Analytic, CentralDifference };

/// Immutable cyclic nearest-neighbor vector field on an axis-aligned box.
/// Component i reads only coordinates (i-1, i, i+1) cyclically. Safe to
/// share across threads; all member functions are const and pure.
class CyclicVectorField {
public:
    using EvalFn = std::function<void(const Vec&, Vec&)>;
    using JacFn = std::function<void(const Vec&, Mat&)>;

    CyclicVectorField() = default;
    CyclicVectorField(int n, Box domain, FeedbackSignature sig, EvalFn eval, JacFn jac,
                      std::string name, Json params, double fd_step = 1e-6);

    int dim() const { return n_; }
    const Box& domain() const { return domain_; }
    const FeedbackSignature& signature() const { return signature_; }
    JacobianMode jacobian_mode() const {
        return jac_ ? JacobianMode::Analytic : JacobianMode::CentralDifference;
    }
    double fd_step() const { return fd_step_; }
    const std::string& name() const { return name_; }
    const Json& params() const { return params_; }
    /// Per-component referenced coordinate indices (1-based), when known
    /// (expression models record them; zoo models fill them in).
    const std::vector<std::set<int>>& dependencies() const { return deps_; }

    /// f(x). Throws DomainViolation if x is outside the domain.
    Vec evaluate(const Vec& x) const;
    /// Non-throwing evaluation for integrator inner loops; returns false when
    /// the result is not finite.
    bool try_evaluate(const Vec& x, Vec& out) const;

    /// Df(x). Analytic when available, otherwise symmetric differences with
    /// the configured step. Throws DomainViolation / NonFiniteValue.
    Mat jacobian(const Vec& x) const;
    /// Central differences regardless of mode (self-consistency checks).
    Mat jacobian_fd(const Vec& x, double step) const;

    /// The field f + eps * g (shared dimension; domains intersected).
    CyclicVectorField plus(const CyclicVectorField& g, double eps) const;
    /// The field f + lambda (constant shift).
    CyclicVectorField shifted(const Vec& lambda) const;
    /// The field f(x) + alpha * (x - e).
    CyclicVectorField radial_perturbed(const Vec& e, double alpha) const;

    /// FNV-1a hash of the canonical model description, for report stamping.
    std::string hash() const;

    void set_dependencies(std::vector<std::set<int>> deps) { deps_ = std::move(deps); }

private:
    int n_ = 0;
    Box domain_;
    FeedbackSignature signature_;
    EvalFn eval_;
    JacFn jac_;
    double fd_step_ = 1e-6;
    std::string name_;
    Json params_;
    std::vector<std::set<int>> deps_;
};

// ---------------------------------------------------------------------------
// Model zoo

/// xdot = A x with A = a*I + c*P, P the cyclic down-shift with negated
/// (1,n) corner: subdiagonal entries c, corner entry -c, diagonal a.
CyclicVectorField linear_cyclic(int n, double c, double a = -1.0);
/// Classic three-variable Goodwin loop on the open positive orthant:
/// x1' = 1/(1+x3^p) - b x1, x2' = x1 - b x2, x3' = x2 - b x3.
CyclicVectorField goodwin(double p, double b);
/// Six-variable mRNA/protein repressilator, stored in sign-normalized
/// coordinates (y3, y4 flipped) so the couplings match the normalized
/// signature; the domain is the correspondingly flipped orthant.
CyclicVectorField repressilator(double alpha, double beta, double p);

struct BidirectionalParams {
    double a = 1.0;   // linear self-activation
    double d = 1.0;   // cubic self-limitation (>= 0 keeps dissipativity)
    double b = 0.08;  // superdiagonal coupling gain
    double c = 0.08;  // subdiagonal coupling gain
};
/// Bistable units coupled through tanh terms with strictly positive sub- and
/// superdiagonal couplings and negated wraparound edges:
/// f_i = a x_i - d x_i^3 + s_i b tanh(x_{i+1}) + t_i c tanh(x_{i-1}).
CyclicVectorField bidirectional_synthetic(int n, const BidirectionalParams& params);

/// Bounded monotone coupling field g_i = kappa * tanh(x_{i-1}) with negated
/// wraparound; lies in the subdiagonal-strict branch, so f + eps*g stays in
/// the class for any eps > 0 when f does. Used as a perturbation probe.
CyclicVectorField cyclic_tanh_coupling(int n, double kappa);

/// Field from component expression strings (grammar: + - * / ^, exp, hill).
CyclicVectorField custom_field(const std::vector<std::string>& components,
                               std::optional<Box> domain = std::nullopt,
                               double fd_step = 1e-6);

/// {"name": ..., "params": {...}} or {"custom": [...], "domain": {...}}.
CyclicVectorField model_from_json(const Json& spec);
Json box_to_json(const Box& box);
Box box_from_json(const Json& j, int n);

// ---------------------------------------------------------------------------
// Class membership

struct MminusCheck {
    bool ok = false;
    SignBranch branch = SignBranch::SubdiagonalStrict;  // valid when ok
    std::string reason;                                 // set when !ok
};

/// Checks the cyclic tridiagonal-plus-corners pattern, b_i c_i >= -zero_tol,
/// |prod b + prod c| > zero_tol and one strict sign branch. A non-normalized
/// signature is handled by conjugating with the sign-normalizing diagonal.
MminusCheck check_Mminus(const Mat& A, const FeedbackSignature& sig, double zero_tol);

/// Default pattern tolerance: 1e-10 for analytic Jacobians, 1e-6 for
/// central differences.
double default_zero_tol(const CyclicVectorField& field);

struct SampleSpec {
    enum class Kind { Grid, Random };
    Kind kind = Kind::Random;
    int count = 1000;         // Random
    int per_axis = 4;         // Grid
    Box box;                  // sampling region, intersected with the domain
    unsigned long seed = 1u;
    double interior_margin = 1e-9;  // keep samples strictly inside open sides
};

std::vector<Vec> sample_points(const CyclicVectorField& field, const SampleSpec& spec);

struct ClassReport {
    bool in_C1BF = true;
    double in_Mminus_fraction = 0.0;
    bool in_Lminus = false;
    int samples_checked = 0;
    struct Failure {
        Vec point;
        std::string reason;
    };
    std::vector<Failure> failures;  // capped
    std::string note;               // sampled-evidence disclaimer
    Json to_json() const;
};

/// Evaluates check_Mminus on every sampled interior point. Sampling evidence
/// only; the report says so.
ClassReport check_class(const CyclicVectorField& field, const SampleSpec& spec,
                        double zero_tol = -1.0);

struct DissipativityRecord {
    double radius = 0.0;
    int samples = 0;
    int violations = 0;
    int skipped_outside_domain = 0;
    double margin = 0.0;  // min of -<f(x),x>/|x| over checked points
    Json to_json() const;
};

/// Samples <f(x),x> at quasi-uniform points with |x| in {R, 2R}.
DissipativityRecord check_dissipative(const CyclicVectorField& field, double R, int samples,
                                      unsigned long seed = 7u);

// ---------------------------------------------------------------------------
// Seminorms and metric

struct SeminormOptions {
    int count = 2000;
    unsigned long seed = 11u;
};

/// Grid maximum of ||f-g|| + ||Df-Dg|| (spectral norm) over sampled points of
/// K_m = {|x| <= m} cap {dist(x, domain complement) >= 1/m}. A lower bound of
/// the true sup. Throws EmptyCompactSet when no sample lands in K_m.
double seminorm_pm(const CyclicVectorField& f, const CyclicVectorField& g, int m,
                   const SeminormOptions& opts = {});

/// Truncated metric sum_{k<=k_max} 2^-k p_k/(1+p_k); empty K_k terms
/// contribute zero.
double metric_d(const CyclicVectorField& f, const CyclicVectorField& g, int k_max,
                const SeminormOptions& opts = {});

}  // namespace fbl
