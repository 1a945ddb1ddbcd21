#include "fbl/model.hpp"

#include "fbl/log.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace fbl {

namespace {

std::string vec_to_string(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

double sech2(double u) {
    const double c = std::cosh(u);
    return 1.0 / (c * c);
}

}  // namespace

// ---------------------------------------------------------------------------
// FeedbackSignature

FeedbackSignature FeedbackSignature::normalized(int n, SignBranch branch) {
    FeedbackSignature s;
    s.n = n;
    s.delta.assign(static_cast<std::size_t>(n), 1);
    s.delta.back() = -1;
    s.branch = branch;
    s.validate();
    return s;
}

void FeedbackSignature::validate() const {
    if (n < 3) fail(ErrorCode::InvalidParameter, "signature dimension must be >= 3");
    if (static_cast<int>(delta.size()) != n)
        fail(ErrorCode::DimensionMismatch, "signature delta length != n");
    int prod = 1;
    for (int d : delta) {
        if (d != 1 && d != -1)
            fail(ErrorCode::InvalidParameter, "signature delta entries must be +-1");
        prod *= d;
    }
    if (prod != -1)
        fail(ErrorCode::InvalidParameter,
             "signature is not negative feedback (product of delta != -1)");
}

bool FeedbackSignature::is_normalized() const {
    for (int i = 0; i + 1 < n; ++i)
        if (delta[static_cast<std::size_t>(i)] != 1) return false;
    return delta.back() == -1;
}

// ---------------------------------------------------------------------------
// CyclicVectorField

CyclicVectorField::CyclicVectorField(int n, Box domain, FeedbackSignature sig, EvalFn eval,
                                     JacFn jac, std::string name, Json params, double fd_step)
    : n_(n),
      domain_(std::move(domain)),
      signature_(std::move(sig)),
      eval_(std::move(eval)),
      jac_(std::move(jac)),
      fd_step_(fd_step),
      name_(std::move(name)),
      params_(std::move(params)) {
    signature_.validate();
    if (domain_.dim() != n_) fail(ErrorCode::DimensionMismatch, "domain dimension != n");
    if (fd_step_ <= 0) fail(ErrorCode::InvalidParameter, "fd step must be positive");
}

Vec CyclicVectorField::evaluate(const Vec& x) const {
    if (x.size() != n_) fail(ErrorCode::DimensionMismatch, "state dimension != n");
    if (!domain_.contains(x))
        fail(ErrorCode::DomainViolation, "point outside domain: " + vec_to_string(x));
    Vec out(n_);
    eval_(x, out);
    return out;
}

bool CyclicVectorField::try_evaluate(const Vec& x, Vec& out) const {
    out.resize(n_);
    eval_(x, out);
    return out.allFinite();
}

Mat CyclicVectorField::jacobian(const Vec& x) const {
    if (x.size() != n_) fail(ErrorCode::DimensionMismatch, "state dimension != n");
    if (!domain_.contains(x))
        fail(ErrorCode::DomainViolation, "point outside domain: " + vec_to_string(x));
    Mat J;
    if (jac_) {
        J.resize(n_, n_);
        jac_(x, J);
    } else {
        J = jacobian_fd(x, fd_step_);
    }
    if (!J.allFinite())
        fail(ErrorCode::NonFiniteValue, "Jacobian has non-finite entries at " + vec_to_string(x));
    return J;
}

Mat CyclicVectorField::jacobian_fd(const Vec& x, double step) const {
    Mat J(n_, n_);
    Vec xp = x, xm = x, fp(n_), fm(n_);
    for (int j = 0; j < n_; ++j) {
        const double h = step * (1.0 + std::abs(x[j]));
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        eval_(xp, fp);
        eval_(xm, fm);
        J.col(j) = (fp - fm) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return J;
}

CyclicVectorField CyclicVectorField::plus(const CyclicVectorField& g, double eps) const {
    if (g.dim() != n_) fail(ErrorCode::DimensionMismatch, "field dimensions differ");
    EvalFn ev = [f_eval = eval_, g_eval = g.eval_, eps, n = n_](const Vec& x, Vec& out) {
        Vec tmp(n);
        f_eval(x, out);
        g_eval(x, tmp);
        out += eps * tmp;
    };
    JacFn jc;
    if (jac_ && g.jac_) {
        jc = [f_jac = jac_, g_jac = g.jac_, eps, n = n_](const Vec& x, Mat& J) {
            Mat tmp(n, n);
            f_jac(x, J);
            g_jac(x, tmp);
            J += eps * tmp;
        };
    }
    Json params;
    params["base"] = {{"name", name_}, {"params", params_}};
    params["increment"] = {{"name", g.name_}, {"params", g.params_}};
    params["eps"] = eps;
    CyclicVectorField out(n_, domain_.intersect(g.domain_), signature_, std::move(ev),
                          std::move(jc), name_ + "+" + std::to_string(eps) + "*" + g.name_,
                          std::move(params), fd_step_);
    if (!deps_.empty() && !g.deps_.empty()) {
        auto deps = deps_;
        for (std::size_t i = 0; i < deps.size(); ++i)
            deps[i].insert(g.deps_[i].begin(), g.deps_[i].end());
        out.set_dependencies(std::move(deps));
    }
    return out;
}

CyclicVectorField CyclicVectorField::shifted(const Vec& lambda) const {
    if (lambda.size() != n_) fail(ErrorCode::DimensionMismatch, "shift dimension != n");
    EvalFn ev = [f_eval = eval_, lambda](const Vec& x, Vec& out) {
        f_eval(x, out);
        out += lambda;
    };
    JacFn jc = jac_;  // unchanged
    Json params;
    params["base"] = {{"name", name_}, {"params", params_}};
    params["lambda"] = std::vector<double>(lambda.data(), lambda.data() + lambda.size());
    CyclicVectorField out(n_, domain_, signature_, std::move(ev), std::move(jc),
                          name_ + "+lambda", std::move(params), fd_step_);
    out.set_dependencies(deps_);
    return out;
}

CyclicVectorField CyclicVectorField::radial_perturbed(const Vec& e, double alpha) const {
    if (e.size() != n_) fail(ErrorCode::DimensionMismatch, "center dimension != n");
    EvalFn ev = [f_eval = eval_, e, alpha](const Vec& x, Vec& out) {
        f_eval(x, out);
        out += alpha * (x - e);
    };
    JacFn jc;
    if (jac_) {
        jc = [f_jac = jac_, alpha, n = n_](const Vec& x, Mat& J) {
            f_jac(x, J);
            J += alpha * Mat::Identity(n, n);
        };
    }
    Json params;
    params["base"] = {{"name", name_}, {"params", params_}};
    params["alpha"] = alpha;
    params["center"] = std::vector<double>(e.data(), e.data() + e.size());
    CyclicVectorField out(n_, domain_, signature_, std::move(ev), std::move(jc),
                          name_ + "+alpha*(x-e)", std::move(params), fd_step_);
    out.set_dependencies(deps_);
    return out;
}

std::string CyclicVectorField::hash() const {
    Json desc;
    desc["name"] = name_;
    desc["params"] = params_;
    desc["n"] = n_;
    const std::string s = desc.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Zoo

CyclicVectorField linear_cyclic(int n, double c, double a) {
    if (n < 3) fail(ErrorCode::InvalidParameter, "linear_cyclic: n must be >= 3");
    if (c <= 0) fail(ErrorCode::InvalidParameter, "linear_cyclic: c must be > 0");
    Mat A = a * Mat::Identity(n, n);
    for (int i = 0; i + 1 < n; ++i) A(i + 1, i) = c;
    A(0, n - 1) = -c;
    auto ev = [A](const Vec& x, Vec& out) { out.noalias() = A * x; };
    auto jc = [A](const Vec&, Mat& J) { J = A; };
    Json params{{"n", n}, {"c", c}, {"a", a}};
    CyclicVectorField f(n, Box::all(n), FeedbackSignature::normalized(n), std::move(ev),
                        std::move(jc), "linear_cyclic", std::move(params));
    std::vector<std::set<int>> deps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        deps[static_cast<std::size_t>(i)].insert(i + 1);
        deps[static_cast<std::size_t>(i)].insert((i + n - 1) % n + 1);
    }
    f.set_dependencies(std::move(deps));
    return f;
}

CyclicVectorField goodwin(double p, double b) {
    if (p < 1.0) fail(ErrorCode::InvalidParameter, "goodwin: p must be >= 1");
    if (b <= 0.0) fail(ErrorCode::InvalidParameter, "goodwin: b must be > 0");
    auto ev = [p, b](const Vec& x, Vec& out) {
        out[0] = 1.0 / (1.0 + std::pow(x[2], p)) - b * x[0];
        out[1] = x[0] - b * x[1];
        out[2] = x[1] - b * x[2];
    };
    auto jc = [p, b](const Vec& x, Mat& J) {
        J.setZero();
        const double xp = std::pow(x[2], p);
        const double denom = (1.0 + xp) * (1.0 + xp);
        J(0, 0) = -b;
        J(0, 2) = -p * std::pow(x[2], p - 1.0) / denom;
        J(1, 0) = 1.0;
        J(1, 1) = -b;
        J(2, 1) = 1.0;
        J(2, 2) = -b;
    };
    Json params{{"p", p}, {"b", b}};
    CyclicVectorField f(3, Box::positive_orthant(3), FeedbackSignature::normalized(3),
                        std::move(ev), std::move(jc), "goodwin", std::move(params));
    f.set_dependencies({{1, 3}, {1, 2}, {2, 3}});
    return f;
}

CyclicVectorField repressilator(double alpha, double beta, double p) {
    if (alpha <= 0 || beta <= 0 || p < 1.0)
        fail(ErrorCode::InvalidParameter, "repressilator: need alpha>0, beta>0, p>=1");
    // Sign-normalized coordinates: y = (m1, p1, -m2, -p2, m3, p3).
    auto hill = [p](double u) { return 1.0 / (1.0 + std::pow(u, p)); };
    auto dhill = [p](double u) {
        const double up = std::pow(u, p);
        return -p * std::pow(u, p - 1.0) / ((1.0 + up) * (1.0 + up));
    };
    auto ev = [alpha, beta, hill](const Vec& y, Vec& out) {
        out[0] = alpha * hill(y[5]) - y[0];
        out[1] = beta * (y[0] - y[1]);
        out[2] = -alpha * hill(y[1]) - y[2];
        out[3] = beta * (y[2] - y[3]);
        out[4] = alpha * hill(-y[3]) - y[4];
        out[5] = beta * (y[4] - y[5]);
    };
    auto jc = [alpha, beta, dhill](const Vec& y, Mat& J) {
        J.setZero();
        J(0, 0) = -1;
        J(0, 5) = alpha * dhill(y[5]);
        J(1, 0) = beta;
        J(1, 1) = -beta;
        J(2, 1) = -alpha * dhill(y[1]);
        J(2, 2) = -1;
        J(3, 2) = beta;
        J(3, 3) = -beta;
        J(4, 3) = -alpha * dhill(-y[3]);
        J(4, 4) = -1;
        J(5, 4) = beta;
        J(5, 5) = -beta;
    };
    Box dom(6);
    dom.lower[0] = dom.lower[1] = dom.lower[4] = dom.lower[5] = 0.0;
    dom.upper[2] = dom.upper[3] = 0.0;
    Json params{{"alpha", alpha}, {"beta", beta}, {"p", p}};
    CyclicVectorField f(6, dom, FeedbackSignature::normalized(6), std::move(ev), std::move(jc),
                        "repressilator", std::move(params));
    f.set_dependencies({{1, 6}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}});
    return f;
}

CyclicVectorField bidirectional_synthetic(int n, const BidirectionalParams& params) {
    if (n < 3) fail(ErrorCode::InvalidParameter, "bidirectional_synthetic: n must be >= 3");
    if (params.d < 0)
        fail(ErrorCode::InvalidParameter, "bidirectional_synthetic: d must be >= 0");
    if (params.b * params.c < 0)
        fail(ErrorCode::InvalidParameter,
             "bidirectional_synthetic: b1*c1 < 0 violates the weak sign condition");
    if (params.b < 0 || params.c < 0)
        fail(ErrorCode::InvalidParameter,
             "bidirectional_synthetic: negative couplings leave both strict branches");
    if (params.b <= 0 && params.c <= 0)
        fail(ErrorCode::InvalidParameter,
             "bidirectional_synthetic: at least one coupling must be strictly positive");
    const double a = params.a, d = params.d, b = params.b, c = params.c;
    auto ev = [n, a, d, b, c](const Vec& x, Vec& out) {
        for (int i = 0; i < n; ++i) {
            const int up = (i + 1) % n;
            const int dn = (i + n - 1) % n;
            const double sb = (i == n - 1) ? -1.0 : 1.0;  // wraparound edge (n,1)
            const double sc = (i == 0) ? -1.0 : 1.0;      // wraparound edge (1,n)
            out[i] = a * x[i] - d * x[i] * x[i] * x[i] + sb * b * std::tanh(x[up]) +
                     sc * c * std::tanh(x[dn]);
        }
    };
    auto jc = [n, a, d, b, c](const Vec& x, Mat& J) {
        J.setZero();
        for (int i = 0; i < n; ++i) {
            const int up = (i + 1) % n;
            const int dn = (i + n - 1) % n;
            const double sb = (i == n - 1) ? -1.0 : 1.0;
            const double sc = (i == 0) ? -1.0 : 1.0;
            J(i, i) = a - 3.0 * d * x[i] * x[i];
            J(i, up) += sb * b * sech2(x[up]);
            J(i, dn) += sc * c * sech2(x[dn]);
        }
    };
    const SignBranch branch =
        params.c > 0 ? SignBranch::SubdiagonalStrict : SignBranch::SuperdiagonalStrict;
    Json jp{{"n", n}, {"a", a}, {"d", d}, {"b", b}, {"c", c}};
    CyclicVectorField f(n, Box::all(n), FeedbackSignature::normalized(n, branch), std::move(ev),
                        std::move(jc), "bidirectional_synthetic", std::move(jp));
    std::vector<std::set<int>> deps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        deps[static_cast<std::size_t>(i)] = {i + 1, (i + 1) % n + 1, (i + n - 1) % n + 1};
    }
    f.set_dependencies(std::move(deps));
    return f;
}

CyclicVectorField cyclic_tanh_coupling(int n, double kappa) {
    if (n < 3) fail(ErrorCode::InvalidParameter, "cyclic_tanh_coupling: n must be >= 3");
    auto ev = [n, kappa](const Vec& x, Vec& out) {
        for (int i = 0; i < n; ++i) {
            const int dn = (i + n - 1) % n;
            const double sc = (i == 0) ? -1.0 : 1.0;
            out[i] = sc * kappa * std::tanh(x[dn]);
        }
    };
    auto jc = [n, kappa](const Vec& x, Mat& J) {
        J.setZero();
        for (int i = 0; i < n; ++i) {
            const int dn = (i + n - 1) % n;
            const double sc = (i == 0) ? -1.0 : 1.0;
            J(i, dn) = sc * kappa * sech2(x[dn]);
        }
    };
    Json params{{"n", n}, {"kappa", kappa}};
    CyclicVectorField f(n, Box::all(n), FeedbackSignature::normalized(n), std::move(ev),
                        std::move(jc), "cyclic_tanh_coupling", std::move(params));
    std::vector<std::set<int>> deps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) deps[static_cast<std::size_t>(i)] = {(i + n - 1) % n + 1};
    f.set_dependencies(std::move(deps));
    return f;
}

CyclicVectorField custom_field(const std::vector<std::string>& components,
                               std::optional<Box> domain, double fd_step) {
    const int n = static_cast<int>(components.size());
    if (n < 3) fail(ErrorCode::InvalidParameter, "custom field needs >= 3 components");
    std::vector<Expr> exprs;
    exprs.reserve(components.size());
    std::vector<std::set<int>> deps;
    for (const auto& s : components) {
        exprs.push_back(Expr::parse(s, n));
        deps.push_back(exprs.back().variables());
    }
    auto ev = [exprs](const Vec& x, Vec& out) {
        for (std::size_t i = 0; i < exprs.size(); ++i)
            out[static_cast<int>(i)] = exprs[i].eval(x);
    };
    Json params{{"components", components}};
    CyclicVectorField f(n, domain ? *domain : Box::all(n), FeedbackSignature::normalized(n),
                        std::move(ev), nullptr, "custom", std::move(params), fd_step);
    f.set_dependencies(std::move(deps));
    return f;
}

Json box_to_json(const Box& box) {
    Json j;
    std::vector<Json> lo, hi;
    for (int i = 0; i < box.dim(); ++i) {
        lo.push_back(std::isfinite(box.lower[i]) ? Json(box.lower[i]) : Json(nullptr));
        hi.push_back(std::isfinite(box.upper[i]) ? Json(box.upper[i]) : Json(nullptr));
    }
    j["lower"] = lo;
    j["upper"] = hi;
    return j;
}

Box box_from_json(const Json& j, int n) {
    Box box(n);
    if (j.contains("lower")) {
        const auto& lo = j.at("lower");
        if (static_cast<int>(lo.size()) != n)
            fail(ErrorCode::ConfigError, "domain lower bound length != n");
        for (int i = 0; i < n; ++i)
            if (!lo[static_cast<std::size_t>(i)].is_null())
                box.lower[i] = lo[static_cast<std::size_t>(i)].get<double>();
    }
    if (j.contains("upper")) {
        const auto& hi = j.at("upper");
        if (static_cast<int>(hi.size()) != n)
            fail(ErrorCode::ConfigError, "domain upper bound length != n");
        for (int i = 0; i < n; ++i)
            if (!hi[static_cast<std::size_t>(i)].is_null())
                box.upper[i] = hi[static_cast<std::size_t>(i)].get<double>();
    }
    if (j.contains("closed") && j.at("closed").get<bool>()) {
        box.lower_open.assign(static_cast<std::size_t>(n), false);
        box.upper_open.assign(static_cast<std::size_t>(n), false);
    }
    return box;
}

CyclicVectorField model_from_json(const Json& spec) {
    if (spec.contains("custom")) {
        std::vector<std::string> comps = spec.at("custom").get<std::vector<std::string>>();
        std::optional<Box> dom;
        if (spec.contains("domain"))
            dom = box_from_json(spec.at("domain"), static_cast<int>(comps.size()));
        const double fd = spec.value("fd_step", 1e-6);
        return custom_field(comps, dom, fd);
    }
    if (!spec.contains("name")) fail(ErrorCode::ConfigError, "model spec needs name or custom");
    const std::string name = spec.at("name").get<std::string>();
    const Json params = spec.value("params", Json::object());
    try {
        if (name == "linear_cyclic")
            return linear_cyclic(params.value("n", 3), params.value("c", 1.0),
                                 params.value("a", -1.0));
        if (name == "goodwin")
            return goodwin(params.value("p", 2.0), params.value("b", 1.0));
        if (name == "repressilator")
            return repressilator(params.value("alpha", 10.0), params.value("beta", 1.0),
                                 params.value("p", 2.0));
        if (name == "bidirectional_synthetic") {
            BidirectionalParams bp;
            bp.a = params.value("a", 1.0);
            bp.d = params.value("d", 1.0);
            bp.b = params.value("b", 0.08);
            bp.c = params.value("c", 0.08);
            return bidirectional_synthetic(params.value("n", 3), bp);
        }
        if (name == "cyclic_tanh_coupling")
            return cyclic_tanh_coupling(params.value("n", 3), params.value("kappa", 1.0));
    } catch (const Json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad model params: ") + e.what());
    }
    fail(ErrorCode::ConfigError, "unknown model name: " + name);
}

// ---------------------------------------------------------------------------
// Class membership

namespace {

/// Sign-normalizing diagonal: conjugating by diag(eps) moves a general
/// delta to (+1,...,+1,-1) on the forward edges.
Vec normalizing_signs(const FeedbackSignature& sig) {
    Vec eps(sig.n);
    eps[0] = 1.0;
    for (int i = 0; i + 1 < sig.n; ++i)
        eps[i + 1] = eps[i] * static_cast<double>(sig.delta[static_cast<std::size_t>(i)]);
    return eps;
}

}  // namespace

MminusCheck check_Mminus(const Mat& A, const FeedbackSignature& sig, double zero_tol) {
    MminusCheck res;
    const int n = sig.n;
    if (A.rows() != A.cols()) fail(ErrorCode::DimensionMismatch, "matrix not square");
    if (A.rows() != n) fail(ErrorCode::DimensionMismatch, "matrix size != signature n");
    Mat M = A;
    if (!sig.is_normalized()) {
        const Vec eps = normalizing_signs(sig);
        M = eps.asDiagonal() * A * eps.asDiagonal();
    }
    // Pattern: entries outside the cyclic tridiagonal-plus-corners support.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const bool on_pattern = (i == j) || ((j - i + n) % n == 1) || ((i - j + n) % n == 1);
            if (!on_pattern && std::abs(M(i, j)) > zero_tol) {
                res.reason = "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                             ") off the cyclic pattern";
                return res;
            }
        }
    }
    Vec b(n), c(n);
    for (int i = 0; i + 1 < n; ++i) {
        b[i] = M(i, i + 1);
        c[i] = M(i + 1, i);
    }
    b[n - 1] = M(n - 1, 0);
    c[n - 1] = M(0, n - 1);
    for (int i = 0; i < n; ++i) {
        if (b[i] * c[i] < -zero_tol) {
            res.reason = "b" + std::to_string(i + 1) + "*c" + std::to_string(i + 1) + " < 0";
            return res;
        }
    }
    // prod(b) + prod(c) != 0. Under b_i c_i >= 0 the two products share a
    // sign, so they cannot cancel: the sum vanishes exactly when neither
    // branch has a complete loop of nonzero couplings. Testing factor-wise
    // keeps the decision scale-aware (an n-fold product of honest couplings
    // underflows any absolute tolerance).
    const bool b_loop = (b.cwiseAbs().minCoeff() > zero_tol);
    const bool c_loop = (c.cwiseAbs().minCoeff() > zero_tol);
    if (!b_loop && !c_loop) {
        res.reason = "prod(b) + prod(c) = 0";
        return res;
    }
    auto strict_branch = [&](const Vec& v) {
        for (int i = 0; i + 1 < n; ++i)
            if (!(v[i] > zero_tol)) return false;
        return v[n - 1] < -zero_tol;
    };
    if (strict_branch(c)) {
        res.ok = true;
        res.branch = SignBranch::SubdiagonalStrict;
        return res;
    }
    if (strict_branch(b)) {
        res.ok = true;
        res.branch = SignBranch::SuperdiagonalStrict;
        return res;
    }
    res.reason = "neither strict sign branch holds";
    return res;
}

double default_zero_tol(const CyclicVectorField& field) {
    return field.jacobian_mode() == JacobianMode::Analytic ? 1e-10 : 1e-6;
}

std::vector<Vec> sample_points(const CyclicVectorField& field, const SampleSpec& spec) {
    const int n = field.dim();
    Box region = spec.box.dim() == n ? field.domain().intersect(spec.box) : field.domain();
    // Clip unbounded sides to a finite sampling window.
    Vec lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        lo[i] = std::isfinite(region.lower[i]) ? region.lower[i] : -5.0;
        hi[i] = std::isfinite(region.upper[i]) ? region.upper[i] : 5.0;
        if (region.lower_open[i] || !std::isfinite(region.lower[i]))
            lo[i] += spec.interior_margin * (1.0 + std::abs(lo[i]));
        if (region.upper_open[i] || !std::isfinite(region.upper[i]))
            hi[i] -= spec.interior_margin * (1.0 + std::abs(hi[i]));
        if (!(lo[i] < hi[i])) fail(ErrorCode::EmptyCompactSet, "empty sampling region");
    }
    std::vector<Vec> pts;
    if (spec.kind == SampleSpec::Kind::Grid) {
        const int m = std::max(1, spec.per_axis);
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        for (;;) {
            Vec x(n);
            for (int i = 0; i < n; ++i) {
                const double t = m == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / (m - 1);
                x[i] = lo[i] + t * (hi[i] - lo[i]);
            }
            if (field.domain().contains(x)) pts.push_back(std::move(x));
            int k = 0;
            while (k < n && ++idx[static_cast<std::size_t>(k)] == m) {
                idx[static_cast<std::size_t>(k)] = 0;
                ++k;
            }
            if (k == n) break;
        }
    } else {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int attempts = 0;
        while (static_cast<int>(pts.size()) < spec.count && attempts < 100 * spec.count) {
            ++attempts;
            Vec x(n);
            for (int i = 0; i < n; ++i) x[i] = lo[i] + u(rng) * (hi[i] - lo[i]);
            if (field.domain().contains(x)) pts.push_back(std::move(x));
        }
    }
    if (pts.empty()) fail(ErrorCode::EmptyCompactSet, "no sample points inside the domain");
    return pts;
}

Json ClassReport::to_json() const {
    Json j;
    j["in_C1BF"] = in_C1BF;
    j["in_Mminus_fraction"] = in_Mminus_fraction;
    j["in_Lminus"] = in_Lminus;
    j["samples_checked"] = samples_checked;
    j["note"] = note;
    Json fails = Json::array();
    for (const auto& f : failures) {
        Json e;
        e["point"] = std::vector<double>(f.point.data(), f.point.data() + f.point.size());
        e["reason"] = f.reason;
        fails.push_back(e);
    }
    j["failures"] = fails;
    return j;
}

ClassReport check_class(const CyclicVectorField& field, const SampleSpec& spec,
                        double zero_tol) {
    if (zero_tol < 0) zero_tol = default_zero_tol(field);
    ClassReport rep;
    rep.note = "sampled evidence only; class conditions are universally quantified";

    // Structural dependency check when the component reads are known.
    const int n = field.dim();
    if (!field.dependencies().empty()) {
        for (int i = 0; i < n; ++i) {
            for (int v : field.dependencies()[static_cast<std::size_t>(i)]) {
                const int j = v - 1;
                const bool neighbor =
                    (j == i) || ((j - i + n) % n == 1) || ((i - j + n) % n == 1);
                if (!neighbor) rep.in_C1BF = false;
            }
        }
    }

    const auto pts = sample_points(field, spec);
    int pass = 0;
    for (const auto& x : pts) {
        ++rep.samples_checked;
        try {
            const Mat J = field.jacobian(x);
            const auto chk = check_Mminus(J, field.signature(), zero_tol);
            if (chk.ok) {
                ++pass;
            } else {
                if (chk.reason.find("pattern") != std::string::npos) rep.in_C1BF = false;
                if (rep.failures.size() < 16) rep.failures.push_back({x, chk.reason});
            }
        } catch (const Error& e) {
            if (rep.failures.size() < 16) rep.failures.push_back({x, e.what()});
        }
    }
    rep.in_Mminus_fraction =
        rep.samples_checked ? static_cast<double>(pass) / rep.samples_checked : 0.0;
    rep.in_Lminus = rep.in_C1BF && rep.samples_checked > 0 && pass == rep.samples_checked;
    return rep;
}

Json DissipativityRecord::to_json() const {
    Json j;
    j["R"] = radius;
    j["samples"] = samples;
    j["violations"] = violations;
    j["skipped_outside_domain"] = skipped_outside_domain;
    j["margin"] = margin;
    return j;
}

DissipativityRecord check_dissipative(const CyclicVectorField& field, double R, int samples,
                                      unsigned long seed) {
    if (R <= 0) fail(ErrorCode::InvalidParameter, "radius must be positive");
    DissipativityRecord rec;
    rec.radius = R;
    const int n = field.dim();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    rec.margin = kInf;
    for (int k = 0; k < samples; ++k) {
        Vec dir(n);
        for (int i = 0; i < n; ++i) dir[i] = g(rng);
        const double nrm = dir.norm();
        if (nrm < 1e-12) continue;
        const double r = (k % 2 == 0) ? R : 2.0 * R;
        const Vec x = (r / nrm) * dir;
        ++rec.samples;
        if (!field.domain().contains(x)) {
            ++rec.skipped_outside_domain;
            continue;
        }
        const double ip = field.evaluate(x).dot(x);
        if (ip >= 0) ++rec.violations;
        rec.margin = std::min(rec.margin, -ip / x.norm());
    }
    if (!std::isfinite(rec.margin)) rec.margin = 0.0;
    return rec;
}

// ---------------------------------------------------------------------------
// Seminorms

namespace {

/// Random points of K_m = {|x| <= m} cap {dist(x, domain^c) >= 1/m}.
std::vector<Vec> sample_Km(const CyclicVectorField& f, int m, int count,
                           unsigned long seed) {
    const int n = f.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> pts;
    const int max_attempts = 200 * count;
    for (int a = 0; a < max_attempts && static_cast<int>(pts.size()) < count; ++a) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = m * u(rng);
        if (x.norm() > m) continue;
        if (!f.domain().contains(x)) continue;
        if (f.domain().distance_to_complement(x) < 1.0 / m) continue;
        pts.push_back(std::move(x));
    }
    return pts;
}

double spectral_norm(const Mat& A) {
    return A.jacobiSvd().singularValues()(0);
}

}  // namespace

double seminorm_pm(const CyclicVectorField& f, const CyclicVectorField& g, int m,
                   const SeminormOptions& opts) {
    if (f.dim() != g.dim()) fail(ErrorCode::DimensionMismatch, "fields of different dimension");
    if (m < 1) fail(ErrorCode::InvalidParameter, "m must be >= 1");
    const auto pts = sample_Km(f, m, opts.count, opts.seed);
    if (pts.empty()) fail(ErrorCode::EmptyCompactSet, "K_m is empty at m=" + std::to_string(m));
    double sup = 0.0;
    for (const auto& x : pts) {
        const double v = (f.evaluate(x) - g.evaluate(x)).norm() +
                         spectral_norm(f.jacobian(x) - g.jacobian(x));
        sup = std::max(sup, v);
    }
    return sup;
}

double metric_d(const CyclicVectorField& f, const CyclicVectorField& g, int k_max,
                const SeminormOptions& opts) {
    double d = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        double pk = 0.0;
        try {
            pk = seminorm_pm(f, g, k, opts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyCompactSet) throw;
            pk = 0.0;  // empty K_k contributes nothing
        }
        d += std::ldexp(pk / (1.0 + pk), -k);
    }
    return d;
}

}  // namespace fbl
