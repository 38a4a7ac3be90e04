#ifndef GRIDGE_MODELS_HPP
#define GRIDGE_MODELS_HPP

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gridge/types.hpp"

namespace gridge {

/// Omega given directly as a positive definite matrix.
struct ExplicitModel {
    Matrix omega;
};

/// Mixed-effects error structure Omega = I + X GammaBar X^T + Z DeltaBar Z^T
/// with GammaBar known and DeltaBar possibly unknown. The design matrix is
/// part of the model because GammaBar and DeltaBar live in its bases.
struct RaoModel {
    Matrix x;
    Matrix gamma_bar;                // k x k, psd
    std::optional<Matrix> delta_bar; // (n-k) x (n-k), psd; nullopt = unknown
};

/// Two stacked regressions with cross-correlated errors,
/// Omega = [[I, s12 I], [s12 I, I]] after the unit-variance normalization.
struct SurModel {
    Matrix x1;
    Matrix x2;
    std::optional<double> sigma12; // |sigma12| < 1; nullopt = unknown
};

/// First-order spatial autoregressive errors:
/// Omega = (I - rho W)^{-1} (I - rho W^T)^{-1}.
struct Sar1Model {
    Matrix w;
    std::optional<double> rho; // |rho| < 1; nullopt = unknown
};

/// First-order spatial moving-average errors:
/// Omega = (I + rho W)(I + rho W^T).
struct Sma1Model {
    Matrix w;
    std::optional<double> rho;
};

/// Serial correlation with inverse structure Omega^{-1} = I + theta A,
/// A symmetric and known.
struct SerialModel {
    Matrix a;
    std::optional<double> theta; // nullopt = unknown
};

using CovarianceModel =
    std::variant<ExplicitModel, RaoModel, SurModel, Sar1Model, Sma1Model, SerialModel>;

const char* model_kind_name(const CovarianceModel& model);

/// Checks the structural invariants that do not need the unknown parameters
/// (psd blocks, weight row sums, symmetry of A, parameter domains).
void validate_model(const CovarianceModel& model, const Tolerances& tol = {});

/// Materializes Omega; every unknown parameter must be present.
Matrix build_omega(const CovarianceModel& model, const Tolerances& tol = {});

/// Block-diagonal stacked design diag(x1, x2) of the two-equation system.
Matrix sur_design(const Matrix& x1, const Matrix& x2);

/// Correlation implied by a raw (s11, s12, s22) covariance; the model is
/// normalized to unit variances by rescaling each equation.
double normalized_sigma12(double s11, double s12, double s22);

/// Verdict of a parameter-free condition checker. holds = false means the
/// condition is not established; for the sufficient-only checkers it never
/// by itself means the estimators differ.
struct ConditionVerdict {
    bool holds = false;
    std::vector<std::pair<std::string, double>> residuals;
    bool parameter_free = true;
};

/// Mixed-effects: equality holds (for every DeltaBar) iff
/// X^T X GammaBar K = 0. Necessary and sufficient.
ConditionVerdict cor1_check(const Matrix& x, const Matrix& gamma_bar,
                            const Matrix& k, const Tolerances& tol = {});

/// Two-equation system: X1^T Z2 = 0, X2^T Z1 = 0 and X1^T X2 = 0 with Zi a
/// full-rank null-space basis of Xi. Sufficient only.
ConditionVerdict cor2_check(const Matrix& x1, const Matrix& x2,
                            const Matrix& z1, const Matrix& z2,
                            const Tolerances& tol = {});
ConditionVerdict cor2_check(const Matrix& x1, const Matrix& x2,
                            const Tolerances& tol = {});

/// Spatial errors at a fixed unknown rho: span((W X; 0)) and
/// span((W^T X; 0)) inside span((X; K)). Sufficient only.
ConditionVerdict cor3_check(const Matrix& w, const Matrix& x, const Matrix& k,
                            const Tolerances& tol = {});

enum class SpatialVariant { sma, sar };

/// Necessary and sufficient for equality at every admissible rho:
/// span(((W + W^T) X; 0)) and span((W W^T X; 0)) inside span((X; K)) for the
/// moving-average form; the autoregressive form uses W^T W X instead.
ConditionVerdict cor4_condition_iii(const Matrix& w, const Matrix& x,
                                    const Matrix& k, SpatialVariant variant,
                                    const Tolerances& tol = {});

/// Equivalent algebraic form of the moving-average condition:
/// K (X^T X)^{-1} X^T (W + W^T) X, K (X^T X)^{-1} X^T W W^T X,
/// Z^T (W + W^T) X and Z^T W W^T X all vanish.
ConditionVerdict cor4_remark_b_check(const Matrix& w, const Matrix& x,
                                     const Matrix& k, const Tolerances& tol = {});

/// Single-rho test: span(((W + W^T + rho W W^T) X; 0)) inside span((X; K)).
/// Equivalent to the stacked column-space equality for the moving-average
/// Omega(rho), so it decides equality at exactly that rho (the verdict is
/// not parameter-free).
ConditionVerdict lemma1_check(const Matrix& w, const Matrix& x, const Matrix& k,
                              double rho, const Tolerances& tol = {});

/// lemma1_check at two distinct admissible rho values; a pass certifies
/// equality for every admissible rho.
ConditionVerdict cor4_two_point_test(const Matrix& w, const Matrix& x,
                                     const Matrix& k, double rho1, double rho2,
                                     const Tolerances& tol = {});

/// Serial correlation: span((A X; 0)) inside span((X; K)). Sufficient for
/// equality at every admissible theta.
ConditionVerdict cor5_check(const Matrix& a, const Matrix& x, const Matrix& k,
                            const Tolerances& tol = {});

/// Standard symmetric A matrices for the serial model. These concrete
/// choices are implementation presets: intra-class is ones(n) - I, ar1 has
/// ones on the first off-diagonals, circular additionally wraps around.
enum class SerialPreset { intra_class, ar1, circular };

Matrix serial_preset_matrix(SerialPreset preset, Index n);

std::optional<SerialPreset> serial_preset_from_name(const std::string& name);

} // namespace gridge

#endif
