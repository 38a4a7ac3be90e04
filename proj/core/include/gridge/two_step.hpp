#ifndef GRIDGE_TWO_STEP_HPP
#define GRIDGE_TWO_STEP_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gridge/models.hpp"
#include "gridge/ridge.hpp"
#include "gridge/rng.hpp"
#include "gridge/types.hpp"

namespace gridge {

/// Draws one error vector with Cov = sigma2 * Omega(model). Autoregressive
/// errors are generated by solving (I - rho W) eps = e, moving-average ones
/// as (I + rho W) e; the remaining models factor Omega directly.
Vector sample_errors(const CovarianceModel& model, double sigma2, Index n,
                     SplitMixRng& rng);

struct RhoEstimate {
    double value = 0.0;
    bool degenerate = false; // residuals were numerically zero
    int evaluations = 0;
};

/// Step-1 estimator for the spatial coefficient: profiled Gaussian
/// quasi-log-likelihood of the least-squares residuals, minimized over
/// [-0.99, 0.99] by a grid scan plus golden-section refinement.
/// Deterministic for fixed input.
RhoEstimate estimate_rho(const Vector& y, const Matrix& x, const Matrix& w,
                         SpatialVariant variant);

/// Step-1 estimator for the cross-equation covariance: mean product of the
/// per-equation least-squares residuals, clamped inside the unit interval.
double estimate_sigma12(const Vector& y1, const Vector& y2, const Matrix& x1,
                        const Matrix& x2, const Tolerances& tol = {});

/// Step-1 estimator for the serial parameter: profiled quasi-likelihood over
/// the interval where I + theta A stays positive definite.
double estimate_theta(const Vector& y, const Matrix& x, const Matrix& a);

struct TwoStepResult {
    Vector beta_hat;
    Matrix omega_hat;
    std::map<std::string, double> fitted; // fitted unknown parameters, if any
};

/// Runs the matching Step-1 estimator for the model's unknown parameters,
/// builds Omega-hat and plugs it into the estimator. With no unknowns this
/// is exactly the known-Omega estimate.
TwoStepResult two_step_estimate(const CovarianceModel& model, const Vector& y,
                                const Matrix& x, const Matrix& k,
                                const Tolerances& tol = {});

struct McConfig {
    CovarianceModel model; // with true parameters
    Matrix x;              // stacked design (derived from the blocks for sur)
    Vector beta_true;
    double sigma2 = 1.0;
    Penalty penalty = Penalty::zero();
    long replications = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<double> sweep_grid; // optional values of rho/theta/sigma12
    Tolerances tol;

    void validate() const;
};

struct EstimatorStats {
    std::string name;
    double mse = 0.0;
    double mse_se = 0.0; // Monte Carlo standard error of the MSE estimate
    Vector bias;
    double mean_gap_to_cov_free = 0.0;
};

struct McReport {
    std::vector<EstimatorStats> estimators; // oracle, two_step, cov_free
    long replications = 0;
    long failures = 0;
    std::uint64_t seed = 0;
    double sweep_value = 0.0; // structured parameter used for this report
    bool has_sweep_value = false;
    double mean_omega_hat_cond = 0.0;
    double max_omega_hat_cond = 0.0;
    double wall_seconds = 0.0;
};

/// Seeded Monte Carlo comparison of the known-Omega, two-step and
/// covariance-free estimators. The report is bit-identical for a fixed
/// config across runs and thread counts: replication i uses substream
/// (seed, i) and results are reduced in replication order.
McReport run_monte_carlo(const McConfig& cfg);

/// One run per sweep value (the model's structured parameter is replaced);
/// a config without a grid yields a single report.
std::vector<McReport> run_sweep(const McConfig& cfg);

/// Plain-text key-value config. Matrix-valued keys hold file paths resolved
/// relative to the config file's directory; see the README for the key list.
McConfig load_mc_config(const std::string& path);

/// Machine-readable tab-separated report (17 significant digits, no
/// timing fields, byte-identical for a fixed config).
std::string machine_report(const std::vector<McReport>& reports);

/// Human-readable table (6 significant digits, includes wall time and the
/// condition numbers of the fitted covariance).
std::string human_report(const std::vector<McReport>& reports);

} // namespace gridge

#endif
