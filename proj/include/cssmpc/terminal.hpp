#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "cssmpc/conic.hpp"
#include "cssmpc/polytope.hpp"
#include "cssmpc/sysmodel.hpp"

namespace cssmpc::terminal {

/// Offline products that make the receding-horizon scheme recursively
/// feasible: the terminal covariance bound with its feedback gain, the
/// tightened safe sets, and the robust controlled invariant mean set.
struct TerminalIngredients {
    MatrixXd cov_bound;       // terminal covariance bound (PD)
    MatrixXd gain;            // terminal feedback gain
    MatrixXd gain_times_cov;  // SDP variable Z = gain * cov_bound
    Polytope state_safe;
    Polytope control_safe;
    Polytope mean_set;  // invariant set of terminal means
    int iterations = 0;
    bool converged = false;
};

enum class SynthesisErrorKind {
    SdpInfeasible,    // no common contractive structure over the hull
    SdpNumerical,     // solver breakdown or failed certificate
    GainRecovery,     // covariance too ill-conditioned to invert
    SafeSetEmpty,     // tightening removed every point
    NoInvariantSet,   // iteration reached the empty set
    NotConverged,     // iteration cap or certificate failure
};

class SynthesisError : public std::runtime_error {
public:
    SynthesisError(SynthesisErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    SynthesisErrorKind kind() const { return kind_; }

private:
    SynthesisErrorKind kind_;
};

struct CovarianceDesign {
    MatrixXd cov_bound;
    MatrixXd z;
    MatrixXd gain;
    conic::SolverStats stats;
};

struct SynthesisOptions {
    double ridge = 1e-9;        // lower bound ridge on the SDP variable
    double gain_weight = 1e-1;  // small regularizer selecting a usable gain
    double eps = 1e-6;          // invariant-set termination margin
    double set_contraction = 0.01;   // pre-set target shrink per iteration
    double set_simplify = 1e-3;      // facet slack dropped during iteration
    int max_iterations = 100;
    double certificate_tol = 1e-6;
    conic::SolveSettings solver;
};

/// Min-trace common Lyapunov covariance over the hull vertices, with the
/// feedback gain recovered from the change of variables. Throws
/// SynthesisError on infeasibility or recovery failure.
CovarianceDesign solve_terminal_covariance(const ParameterHull& hull,
                                           const SynthesisOptions& options = {});

/// Quantile-tightened safe sets for means and feedforwards. Throws
/// SynthesisError{SafeSetEmpty} if a tightened set has no points.
std::pair<Polytope, Polytope> tighten(const Polytope& state_poly, const Polytope& control_poly,
                                      const MatrixXd& cov_bound, const MatrixXd& gain,
                                      const ChanceSpec& spec);

struct InvariantSetResult {
    Polytope set;
    int iterations = 0;
    bool converged = false;
};

/// Fixed-point iteration for the maximal robust controlled invariant subset
/// of state_safe, certified by verify_invariance (with up to five offset
/// contractions). Unconverged iterates are never returned.
///
/// The defaults compute the exact iteration. For systems whose maximal set
/// has a curved limit boundary the facet count diverges; a positive
/// `contraction` targets the pre-set of the slightly shrunk iterate and a
/// positive `simplify_slack` drops facets that stick out by less than the
/// slack. Both trade a bounded amount of conservatism for a finite
/// representation; the final certificate is always checked exactly.
InvariantSetResult robust_invariant_set(const Polytope& state_safe, const Polytope& control_safe,
                                        const ParameterHull& hull, int max_iter = 100,
                                        double eps = 1e-6, double contraction = 0.0,
                                        double simplify_slack = 0.0);

/// True iff candidate is contained in its own robust pre-set.
bool verify_invariance(const Polytope& candidate, const Polytope& control_safe,
                       const ParameterHull& hull);

/// Full pipeline: SDP, tightening, invariant set, and the vertex Lyapunov
/// certificate at tolerance options.certificate_tol.
TerminalIngredients synthesize(const ParameterHull& hull, const ChanceSpec& spec,
                               const SynthesisOptions& options = {});

/// JSON round trip (matrices row-major, polytope rows as [a..., b]).
std::string to_json(const TerminalIngredients& ingredients);
TerminalIngredients ingredients_from_json(const std::string& text);

/// Content hash of the synthesis inputs, for on-disk caching.
std::string content_hash(const ParameterHull& hull, const ChanceSpec& spec,
                         const SynthesisOptions& options);

}  // namespace cssmpc::terminal
