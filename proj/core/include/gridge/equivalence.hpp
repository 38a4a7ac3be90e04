#ifndef GRIDGE_EQUIVALENCE_HPP
#define GRIDGE_EQUIVALENCE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridge/ridge.hpp"
#include "gridge/types.hpp"

namespace gridge {

/// The unique split of a pd Omega over the bases (X, Z):
/// Omega = X Gamma X^T + Z Delta Z^T + X Xi Z^T + Z Xi^T X^T.
struct OmegaDecomposition {
    Matrix gamma; // k x k
    Matrix delta; // (n-k) x (n-k)
    Matrix xi;    // k x (n-k)
    Matrix z_used;
};

/// Decomposes with Z = null_space_basis(x).
OmegaDecomposition decompose_omega(const Matrix& omega, const Matrix& x,
                                   const Tolerances& tol = {});

/// Decomposes over a caller-supplied Z (any full-rank complement basis).
OmegaDecomposition decompose_omega_with(const Matrix& omega, const Matrix& x,
                                        const Matrix& z, const Tolerances& tol = {});

Matrix recompose_omega(const Matrix& x, const OmegaDecomposition& d);

enum class DecisionRule { theorem1, theorem2, pd_shortcut, oracle };

const char* decision_rule_name(DecisionRule rule);

/// Verdict on whether the covariance-aware and covariance-free estimators
/// coincide, plus the residuals that decided it. Verdicts produced by the
/// column-space route carry a nonsingular witness G with
/// Omega X = X G and K = K G.
struct EquivalenceVerdict {
    bool equal = false;
    DecisionRule fired_condition = DecisionRule::theorem1;
    std::vector<std::pair<std::string, double>> residuals;
    std::optional<Matrix> witness_g;
    std::optional<double> witness_min_sv;
};

/// Structural test: Xi = 0 (checked as X^T Omega Z = 0) and
/// X^T X Gamma K = K with Gamma extracted from Omega.
EquivalenceVerdict theorem1_check(const Matrix& omega, const Matrix& x,
                                  const Matrix& k, const Tolerances& tol = {});

/// Same test over a caller-supplied complement basis Z; the verdict must not
/// depend on the choice of Z.
EquivalenceVerdict theorem1_check_with(const Matrix& omega, const Matrix& x,
                                       const Matrix& z, const Matrix& k,
                                       const Tolerances& tol = {});

/// Column-space test: span((Omega X; K)) == span((X; K)).
EquivalenceVerdict theorem2_check(const Matrix& omega, const Matrix& x,
                                  const Matrix& k, const Tolerances& tol = {});

/// Shortcut valid for positive definite K only: equality iff Omega X = X.
bool pd_shortcut_check(const Matrix& omega, const Matrix& x,
                       const Tolerances& tol = {});

struct CrossValidationOptions {
    bool include_oracle = true;
    // Disagreements where no deciding residual exceeds
    // residual_atol * hysteresis are reported as borderline instead of
    // raising InconsistencyError.
    double hysteresis = 1e3;
};

struct CrossValidationReport {
    EquivalenceVerdict theorem1;
    EquivalenceVerdict theorem2;
    std::optional<CoincidenceResult> oracle;
    bool agreed = false;
    bool borderline = false;
    bool equal = false; // meaningful only when agreed
    std::string diagnostic;
};

/// Runs theorem1_check, theorem2_check and (optionally) the brute-force
/// oracle, and asserts pairwise agreement. Disagreement inside the
/// hysteresis band is reported, disagreement beyond it throws
/// InconsistencyError carrying all residuals.
CrossValidationReport cross_validate(const Matrix& omega, const Matrix& x,
                                     const Matrix& k, const Tolerances& tol = {},
                                     const CrossValidationOptions& opts = {});

} // namespace gridge

#endif
