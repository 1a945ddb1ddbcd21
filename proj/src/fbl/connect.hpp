#pragma once

#include "fbl/critical.hpp"
#include "fbl/integrate.hpp"
#include "fbl/lyapunov.hpp"
#include "fbl/model.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fbl {

enum class ManifoldSide { Unstable, Stable };

/// Orthonormal basis of the real invariant subspace of Df(e) for eigenvalues
/// with positive (Unstable) or negative (Stable) real part, via
/// eigenvalue-reordered orthogonal block triangularization.
Mat local_invariant_basis(const CyclicVectorField& field, const Equilibrium& e,
                          ManifoldSide side, double tol_spectrum = 1e-8);

/// Target of a shooting run: an equilibrium or a periodic orbit (tube test
/// against its samples).
struct ConnectionTarget {
    std::variant<Equilibrium, PeriodicOrbit> element;
    bool is_cycle() const { return std::holds_alternative<PeriodicOrbit>(element); }
    int morse_index() const;
    double distance_to(const Vec& x) const;
};

struct ConnectingOrbit {
    Trajectory trajectory;  // dense window; time 0 at the shooting seed
    Vec e_minus;            // source equilibrium state
    Vec e_plus;             // target state (equilibrium or cycle anchor)
    bool plus_is_cycle = false;
    int i_minus = 0, i_plus = 0;
    int h_minus = 0, h_plus = 0;  // asymptotic N-levels of the orbit derivative
    double conv_err_minus = kInf, conv_err_plus = kInf;
    int direction_index = -1;  // which shooting direction produced it
    Json to_json() const;
};

struct ShootOptions {
    // Seed offset, times (1 + |e_minus|). Small enough that the backward
    // extension can push the source-side convergence error under conv_tol
    // before the off-manifold contamination takes over.
    double radius_rel = 3e-5;
    int directions = 64;
    double horizon = 300.0;
    double conv_tol = 1e-6;
    double dwell = 5.0;        // extra time the orbit must keep converging
    double backward_span = 40.0;
    unsigned long seed = 123u;
    int max_found = 8;
    int workers = 1;  // forward probes run in parallel; results stay ordered
};

struct ShootSummary {
    std::vector<ConnectingOrbit> found;
    int attempts = 0;
    int misses = 0;
    Json to_json(bool with_orbits = false) const;
};

/// Seeds trajectories at e_minus + radius * (unstable-frame direction) over a
/// quasi-uniform set of unit vectors and integrates forward; a trajectory
/// that enters the conv_tol-ball (or cycle tube) of the target and keeps
/// converging is accepted and extended backward toward e_minus. An empty
/// result is meaningful (misses are counted).
ShootSummary shoot_connection(const CyclicVectorField& field, const Equilibrium& e_minus,
                              const ConnectionTarget& target, const ShootOptions& opts,
                              const IntegratorConfig& config, const NConvention& conv);

struct DichotomyFrames {
    double tau = 0.0;
    int n_steps = 0;        // window half-length in steps
    Mat U_frame_at_0;       // n x i(e-)
    Mat S_frame_at_0;       // n x (n - i(e+))
    Mat P_minus_0, P_plus_0;
    bool oblique = false;   // projections are dichotomy-consistent, not just orthogonal
    Json to_json() const;
};

/// Propagates the unstable frame forward from -n_steps*tau and the stable
/// frame backward from +n_steps*tau with per-step thin-QR renormalization;
/// derives the projections at step 0. Endpoints must be equilibria.
DichotomyFrames dichotomy_frames(const CyclicVectorField& field, const ConnectingOrbit& orbit,
                                 double tau, int n_steps, const IntegratorConfig& config,
                                 double tol_spectrum = 1e-8);

/// Step so the one-step operator norms stay within [1e-2, 1e2] along the
/// orbit (conditioning surrogate): tau = min(0.25, ln(1e2) / max |Df|).
double default_frame_tau(const CyclicVectorField& field, const ConnectingOrbit& orbit);

/// Frame propagation over an explicit operator sequence (constant-coefficient
/// test paths and the roughness probe).
struct FramePath {
    std::vector<Mat> U;  // frames at steps 0..L
    std::vector<Mat> S;
    bool collapsed = false;
};
FramePath propagate_frames(const std::vector<Mat>& operators, const Mat& U_init,
                           const Mat& S_init);

struct TransversalityReport {
    bool transverse = false;
    int span_defect = 0;
    double min_principal_angle = 0.0;  // between the two orthogonal complements
    int bounded_adjoint_dim = 0;
    int fredholm_index = 0;
    bool gray_zone = false;  // transverse by rank but below the confident angle
    Json to_json() const;
};

/// Rank/angle analysis of the stacked frames [U | S]: span defect from the
/// singular values, bounded-adjoint dimension from dim(U-perp cap S-perp),
/// smallest principal angle between the complements, Fredholm index
/// i(e-) - i(e+).
TransversalityReport transversality_test(const DichotomyFrames& frames, int i_minus, int i_plus,
                                         double angle_tol = 1e-6,
                                         double confident_angle = 1e-3);

enum class TransversalityPrediction { PredictedTransverseCaseI, PredictedTransverseCaseII, NotCovered };

struct AutomaticCheck {
    TransversalityPrediction prediction = TransversalityPrediction::NotCovered;
    int witness_h = 0;  // case (ii): an h with i- >= 2h >= i+
    bool index_inequalities_ok = true;  // i+ <= 2h+-1 and i- >= max(2h--1, 1)
    std::string finding;
    std::optional<InjectivityReport> homoindexed_injectivity;  // projections of the orbit
    Json to_json() const;
};

/// Dispatches the automatic-transversality cases: (i) an endpoint is a
/// periodic orbit, (ii) equilibrium pair with some h satisfying
/// i- >= 2h >= i+; equal odd indices are NotCovered. Also checks the
/// asymptotic index inequalities and, for homoindexed orbits, the planar
/// injectivity of the connecting orbit itself.
AutomaticCheck automatic_transversality_check(const CyclicVectorField& field,
                                              const ConnectingOrbit& orbit);

struct GreenSolve {
    std::vector<Vec> Y;  // length L+1
    double interior_residual = 0.0;
};

/// Bounded solution of Y(k+1) - T_k Y(k) = f(k) on a finite window via the
/// truncated Green-function sum, splitting along the given dichotomy
/// projections (P(k) onto the unstable range).
GreenSolve green_function_solve(const std::vector<Mat>& operators,
                                const std::vector<Mat>& projections,
                                const std::vector<Vec>& rhs);

/// Spectral dichotomy projection of a single hyperbolic matrix (|lambda|>1
/// block is the unstable range).
Mat spectral_dichotomy_projection(const Mat& T);

struct RoughnessEntry {
    double epsilon = 0.0;
    double projection_deviation = 0.0;
    bool collapsed = false;
    Json to_json() const;
};

struct RoughnessReport {
    std::vector<RoughnessEntry> entries;
    double slope = 0.0;  // log-log regression over the surviving entries
    bool slope_valid = false;
    Json to_json() const;
};

/// Perturbs each operator by a random matrix of norm eps, recomputes the
/// dichotomy frames, and regresses the sup projection deviation against eps.
RoughnessReport dichotomy_roughness_probe(const std::vector<Mat>& operators,
                                          const std::vector<double>& epsilons,
                                          unsigned long seed);

/// Smooth bump in components (j, j+1): value 1 where the squared offset from
/// the center is <= r/2 and 0 where >= r; all other components vanish.
CyclicVectorField bump_perturbation(int n, int j, double center_j, double center_j1, double r);

/// Composite Simpson quadrature of <phi(t), h(v(t))> over the orbit window;
/// phi must be sampled on the trajectory grid.
double functional_transversality_integral(const Trajectory& window,
                                          const std::vector<Vec>& phi,
                                          const CyclicVectorField& h);

/// f(x) + alpha (x - e): eigenvalues at e shift by exactly alpha for linear
/// fields, approximately otherwise.
CyclicVectorField perturb_to_hyperbolic(const CyclicVectorField& field, const Vec& e,
                                        double alpha);
/// f(x) + lambda.
CyclicVectorField constant_shift(const CyclicVectorField& field, const Vec& lambda);

}  // namespace fbl
