#include "gridge/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridge/linalg.hpp"

namespace gridge {

namespace {

void check_square_pd_shapes(const Matrix& omega, const Matrix& x) {
    require_finite(omega, "omega");
    require_finite(x, "design matrix");
    if (omega.rows() != omega.cols()) {
        throw ShapeError("omega must be square");
    }
    if (omega.rows() != x.rows()) {
        throw ShapeError("omega and design matrix row counts differ");
    }
}

// max_abs(value) / max(1, max_abs(reference)): scale-free residual for
// matrix equalities whose right-hand side may be zero.
double scaled_residual(const Matrix& value, const Matrix& reference) {
    return max_abs(value) / std::max(1.0, max_abs(reference));
}

} // namespace

OmegaDecomposition decompose_omega(const Matrix& omega, const Matrix& x,
                                   const Tolerances& tol) {
    return decompose_omega_with(omega, x, null_space_basis(x, tol), tol);
}

OmegaDecomposition decompose_omega_with(const Matrix& omega, const Matrix& x,
                                        const Matrix& z, const Tolerances& tol) {
    tol.validate();
    check_square_pd_shapes(omega, x);
    require_finite(z, "null space basis");
    if (z.rows() != x.rows() || z.cols() != x.rows() - x.cols()) {
        throw ShapeError("null space basis must be n x (n-k)");
    }

    const Matrix xtx = x.transpose() * x;
    const Matrix ztz = z.transpose() * z;
    Eigen::LLT<Matrix> xtx_llt(xtx);
    Eigen::LLT<Matrix> ztz_llt(ztz);
    if (xtx_llt.info() != Eigen::Success || ztz_llt.info() != Eigen::Success) {
        throw RankDeficiencyError("decompose_omega: X or Z is rank deficient");
    }

    OmegaDecomposition d;
    d.z_used = z;
    // Gamma = (X^T X)^{-1} X^T Omega X (X^T X)^{-1}, and analogously Delta;
    // Xi = (X^T X)^{-1} X^T Omega Z (Z^T Z)^{-1}.
    const Matrix xt_omega = x.transpose() * omega;
    d.gamma = xtx_llt.solve(xtx_llt.solve(xt_omega * x).transpose());
    d.gamma = 0.5 * (d.gamma + d.gamma.transpose());
    const Matrix zt_omega = z.transpose() * omega;
    d.delta = ztz_llt.solve(ztz_llt.solve(zt_omega * z).transpose());
    d.delta = 0.5 * (d.delta + d.delta.transpose());
    d.xi = ztz_llt.solve((xtx_llt.solve(xt_omega * z)).transpose()).transpose();
    return d;
}

Matrix recompose_omega(const Matrix& x, const OmegaDecomposition& d) {
    const Matrix& z = d.z_used;
    Matrix out = x * d.gamma * x.transpose() + z * d.delta * z.transpose();
    const Matrix cross = x * d.xi * z.transpose();
    out += cross + cross.transpose();
    return out;
}

const char* decision_rule_name(DecisionRule rule) {
    switch (rule) {
    case DecisionRule::theorem1:
        return "theorem1";
    case DecisionRule::theorem2:
        return "theorem2";
    case DecisionRule::pd_shortcut:
        return "pd_shortcut";
    case DecisionRule::oracle:
        return "oracle";
    }
    return "unknown";
}

EquivalenceVerdict theorem1_check(const Matrix& omega, const Matrix& x,
                                  const Matrix& k, const Tolerances& tol) {
    return theorem1_check_with(omega, x, null_space_basis(x, tol), k, tol);
}

EquivalenceVerdict theorem1_check_with(const Matrix& omega, const Matrix& x,
                                       const Matrix& z, const Matrix& k,
                                       const Tolerances& tol) {
    tol.validate();
    check_square_pd_shapes(omega, x);
    require_finite(k, "penalty");
    if (k.rows() != x.cols() || k.cols() != x.cols()) {
        throw ShapeError("penalty must be k x k");
    }

    // Xi = 0 is tested as X^T Omega Z = 0, scaled against X^T Omega so the
    // verdict does not depend on the size of X, Omega or Z.
    const Matrix xt_omega = x.transpose() * omega;
    const double xi_residual = max_abs(xt_omega * z) / std::max(1.0, max_abs(xt_omega));

    const OmegaDecomposition d = decompose_omega_with(omega, x, z, tol);
    const Matrix cond4 = x.transpose() * x * d.gamma * k - k;
    const double cond4_residual = scaled_residual(cond4, k);

    EquivalenceVerdict v;
    v.fired_condition = DecisionRule::theorem1;
    v.residuals.emplace_back("xi_zero", xi_residual);
    v.residuals.emplace_back("xtx_gamma_k_minus_k", cond4_residual);
    v.equal = xi_residual <= tol.residual_atol && cond4_residual <= tol.residual_atol;
    return v;
}

EquivalenceVerdict theorem2_check(const Matrix& omega, const Matrix& x,
                                  const Matrix& k, const Tolerances& tol) {
    tol.validate();
    check_square_pd_shapes(omega, x);
    require_finite(k, "penalty");
    if (k.rows() != x.cols() || k.cols() != x.cols()) {
        throw ShapeError("penalty must be k x k");
    }

    const Matrix stacked_omega_x = vstack(omega * x, k);
    const Matrix stacked_x = vstack(x, k);
    const EqualityResult eq = col_space_equal(stacked_omega_x, stacked_x, tol);

    EquivalenceVerdict v;
    v.fired_condition = DecisionRule::theorem2;
    v.residuals.emplace_back("stacked_forward", eq.residual_forward);
    v.residuals.emplace_back("stacked_backward", eq.residual_backward);
    v.equal = eq.equal;
    if (eq.equal) {
        v.witness_g = eq.witness;
        v.witness_min_sv = eq.witness_min_sv;
        v.residuals.emplace_back("omega_x_minus_x_g",
                                 scaled_residual(omega * x - x * eq.witness, omega * x));
        v.residuals.emplace_back("k_minus_k_g", scaled_residual(k - k * eq.witness, k));
    }
    return v;
}

bool pd_shortcut_check(const Matrix& omega, const Matrix& x, const Tolerances& tol) {
    tol.validate();
    check_square_pd_shapes(omega, x);
    const double x_scale = max_abs(x);
    return max_abs(omega * x - x) <= tol.residual_atol * std::max(x_scale, 1e-300);
}

CrossValidationReport cross_validate(const Matrix& omega, const Matrix& x,
                                     const Matrix& k, const Tolerances& tol,
                                     const CrossValidationOptions& opts) {
    CrossValidationReport report;
    report.theorem1 = theorem1_check(omega, x, k, tol);
    report.theorem2 = theorem2_check(omega, x, k, tol);
    if (opts.include_oracle) {
        report.oracle = estimators_coincide(x, omega, k, tol);
    }

    report.agreed = report.theorem1.equal == report.theorem2.equal &&
                    (!report.oracle || report.oracle->coincide == report.theorem2.equal);
    if (report.agreed) {
        report.equal = report.theorem2.equal;
        return report;
    }

    // Collect the residuals that decided each checker and see whether the
    // disagreement sits inside the tolerance hysteresis band.
    std::vector<std::pair<std::string, double>> deciders;
    for (const auto& r : report.theorem1.residuals) {
        deciders.emplace_back("theorem1." + r.first, r.second);
    }
    for (const auto& r : report.theorem2.residuals) {
        deciders.emplace_back("theorem2." + r.first, r.second);
    }
    if (report.oracle) {
        deciders.emplace_back("oracle.hat_gap", report.oracle->residual);
    }

    const double hi = tol.residual_atol * opts.hysteresis;
    bool all_in_band = true;
    std::ostringstream msg;
    msg << "checker disagreement:";
    msg << " theorem1=" << (report.theorem1.equal ? "true" : "false");
    msg << " theorem2=" << (report.theorem2.equal ? "true" : "false");
    if (report.oracle) {
        msg << " oracle=" << (report.oracle->coincide ? "true" : "false");
    }
    for (const auto& [name, value] : deciders) {
        msg << " " << name << "=" << value;
        // Residuals well below the band are decisive "true" evidence and do
        // not make the disagreement borderline on their own.
        if (value > hi) {
            all_in_band = false;
        }
    }

    report.borderline = all_in_band;
    report.diagnostic = msg.str();
    if (!all_in_band) {
        throw InconsistencyError(report.diagnostic);
    }
    return report;
}

} // namespace gridge
