#ifndef GRIDGE_RIDGE_HPP
#define GRIDGE_RIDGE_HPP

#include <optional>

#include "gridge/types.hpp"

namespace gridge {

enum class PenaltyKind { zero, ordinary_ridge, shrinkage, custom };

/// Penalty matrix K of the general ridge estimator, kept as a recipe until
/// materialized against a concrete design.
///
///   zero            -> 0
///   ordinary_ridge  -> lambda * I_k
///   shrinkage       -> delta * X^T Phi^{-1} X
///   custom          -> a user-supplied psd matrix
class Penalty {
public:
    static Penalty zero();
    static Penalty ordinary_ridge(double lambda);
    static Penalty shrinkage(double delta);
    static Penalty custom(Matrix k);

    PenaltyKind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    double delta() const { return delta_; }

    /// Materializes the k x k penalty matrix. phi is only consulted for the
    /// shrinkage kind and must then be positive definite.
    Matrix materialize(const Matrix& x, const Matrix& phi,
                       const Tolerances& tol = {}) const;

    /// Shorthand for kinds that do not involve phi (shrinkage uses phi = I).
    Matrix materialize(const Matrix& x, const Tolerances& tol = {}) const;

private:
    Penalty() = default;
    PenaltyKind kind_ = PenaltyKind::zero;
    double lambda_ = 0.0;
    double delta_ = 0.0;
    Matrix custom_;
};

/// One instance of the general linear model y = X beta + eps,
/// Cov(eps) = sigma^2 Omega. sigma2 is carried for simulation but cancels in
/// point estimation.
struct GlmInstance {
    Matrix x;
    std::optional<Vector> y;
    std::optional<double> sigma2;
    Matrix omega;

    void validate(const Tolerances& tol = {}) const;
};

/// The k x n operator H with beta_hat = H y for the estimator
/// (X^T Phi^{-1} X + K)^{-1} X^T Phi^{-1} y. All inverses are realized as
/// Cholesky solves.
Matrix gr_hat_operator(const Matrix& x, const Matrix& phi, const Matrix& k,
                       const Tolerances& tol = {});

Vector gr_estimate(const Matrix& x, const Matrix& phi, const Matrix& k,
                   const Vector& y, const Tolerances& tol = {});
Vector gr_estimate(const GlmInstance& inst, const Matrix& phi, const Matrix& k,
                   const Tolerances& tol = {});

struct CoincidenceResult {
    bool coincide = false;
    double residual = 0.0; // max-abs gap of the two hat operators, scaled
};

/// Exact brute-force oracle: the covariance-aware and covariance-free
/// estimators agree for every y iff their hat operators agree. The residual
/// is scaled by the max-abs norm of the covariance-free operator.
CoincidenceResult estimators_coincide(const Matrix& x, const Matrix& omega,
                                      const Matrix& k, const Tolerances& tol = {});

} // namespace gridge

#endif
