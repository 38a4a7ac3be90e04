#ifndef GRIDGE_TYPES_HPP
#define GRIDGE_TYPES_HPP

#include <Eigen/Dense>

#include "gridge/errors.hpp"

namespace gridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical cutoffs shared by every decomposition and matrix test.
///
/// rank_rtol is a relative singular-value cutoff. A value of 0 selects the
/// per-matrix default max(rows, cols) * machine epsilon, so the effective
/// cutoff is always strictly positive.
struct Tolerances {
    double rank_rtol = 0.0;
    double residual_atol = 1e-10;
    double psd_atol = 1e-10;

    double effective_rank_rtol(Index rows, Index cols) const;
    void validate() const;
};

/// Entrywise max-abs norm; 0 for empty matrices.
double max_abs(const Matrix& m);

/// Throws InvalidInputError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* name);

/// Stacks top over bottom; column counts must agree.
Matrix vstack(const Matrix& top, const Matrix& bottom);

} // namespace gridge

#endif
