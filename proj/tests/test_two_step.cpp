#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <gridge/fixtures.hpp>
#include <gridge/linalg.hpp>
#include <gridge/models.hpp>
#include <gridge/ridge.hpp>
#include <gridge/spatial.hpp>
#include <gridge/two_step.hpp>

#include "test_helpers.hpp"

using namespace gridge;
using namespace gridge::testing;

namespace {

Matrix sample_covariance(const CovarianceModel& model, double sigma2, Index n,
                         std::uint64_t seed, long draws) {
    Matrix acc = Matrix::Zero(n, n);
    for (long i = 0; i < draws; ++i) {
        SplitMixRng rng = SplitMixRng::substream(seed, static_cast<std::uint64_t>(i));
        const Vector eps = sample_errors(model, sigma2, n, rng);
        acc += eps * eps.transpose();
    }
    return acc / static_cast<double>(draws);
}

// 3-sigma entrywise band for a Gaussian sample covariance estimate.
bool within_three_se(const Matrix& sample, const Matrix& truth, long draws) {
    for (Index i = 0; i < truth.rows(); ++i) {
        for (Index j = 0; j < truth.cols(); ++j) {
            const double variance =
                truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j);
            const double se = std::sqrt(variance / static_cast<double>(draws));
            if (std::abs(sample(i, j) - truth(i, j)) > 3.0 * se) {
                return false;
            }
        }
    }
    return true;
}

Matrix lattice_design(Index rows, Index cols) {
    Matrix x(rows * cols, 2);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            x(r * cols + c, 0) = 1.0;
            x(r * cols + c, 1) =
                static_cast<double>(c) / static_cast<double>(cols - 1) - 0.5;
        }
    }
    return x;
}

} // namespace

TEST_CASE("substreams are deterministic and decorrelated") {
    SplitMixRng a = SplitMixRng::substream(42, 7);
    SplitMixRng b = SplitMixRng::substream(42, 7);
    SplitMixRng c = SplitMixRng::substream(42, 8);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
    const double u = SplitMixRng::substream(1, 0).next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
}

TEST_CASE("sampler matches the target covariance") {
    constexpr long kDraws = 100000;

    SUBCASE("identity covariance") {
        const Matrix cov = sample_covariance(
            CovarianceModel(ExplicitModel{Matrix::Identity(3, 3)}), 1.0, 3, 101,
            kDraws);
        CHECK(within_three_se(cov, Matrix::Identity(3, 3), kDraws));
    }

    SUBCASE("moving average at rho 0 is the identity") {
        const Matrix w = row_normalize(grid_contiguity(2, 2)).w;
        const Matrix cov =
            sample_covariance(CovarianceModel(Sma1Model{w, 0.0}), 1.0, 4, 103, kDraws);
        CHECK(within_three_se(cov, Matrix::Identity(4, 4), kDraws));
    }

    SUBCASE("autoregressive chain matches the built covariance") {
        Matrix chain = Matrix::Zero(4, 4);
        for (Index i = 0; i + 1 < 4; ++i) {
            chain(i, i + 1) = 1.0;
            chain(i + 1, i) = 1.0;
        }
        const Matrix w = row_normalize(ContiguityMatrix(chain)).w;
        const CovarianceModel model(Sar1Model{w, 0.5});
        const Matrix cov = sample_covariance(model, 1.3, 4, 107, kDraws);
        CHECK(within_three_se(cov, 1.3 * build_omega(model), kDraws));
    }

    SUBCASE("two-equation cross covariance") {
        const Matrix x1 = Matrix::Ones(3, 1);
        const CovarianceModel model(SurModel{x1, x1, 0.6});
        const Matrix cov = sample_covariance(model, 1.0, 6, 109, kDraws);
        CHECK(within_three_se(cov, build_omega(model), kDraws));
    }
}

TEST_CASE("sampler input validation") {
    const Matrix w = row_normalize(grid_contiguity(2, 2)).w;
    SplitMixRng rng(1);
    CHECK_THROWS_AS(sample_errors(CovarianceModel(Sma1Model{w, std::nullopt}),
                                  1.0, 4, rng),
                    ModelDomainError);
    CHECK_THROWS_AS(sample_errors(CovarianceModel(Sma1Model{w, 0.5}), -1.0, 4, rng),
                    ModelDomainError);
    CHECK_THROWS_AS(sample_errors(CovarianceModel(Sma1Model{w, 0.5}), 1.0, 5, rng),
                    ShapeError);
}

TEST_CASE("estimate_rho near the truth on seeded data") {
    SUBCASE("no spatial correlation") {
        const Matrix w = row_normalize(grid_contiguity(10, 10)).w;
        const Matrix x = lattice_design(10, 10);
        Vector beta(2);
        beta << 1.0, 0.5;
        SplitMixRng rng = SplitMixRng::substream(2024, 0);
        const Vector eps = sample_errors(
            CovarianceModel(ExplicitModel{Matrix::Identity(100, 100)}), 1.0, 100, rng);
        const Vector y = x * beta + eps;
        for (auto variant : {SpatialVariant::sar, SpatialVariant::sma}) {
            const RhoEstimate est = estimate_rho(y, x, w, variant);
            CHECK_FALSE(est.degenerate);
            CHECK(std::abs(est.value) <= 0.15);
        }
    }

    SUBCASE("zero noise degenerates") {
        const Matrix w = row_normalize(grid_contiguity(3, 3)).w;
        const Matrix x = lattice_design(3, 3);
        Vector beta(2);
        beta << 2.0, -1.0;
        const Vector y = x * beta;
        const RhoEstimate est = estimate_rho(y, x, w, SpatialVariant::sar);
        CHECK(est.degenerate);
        CHECK(est.value == 0.0);
    }

    SUBCASE("strong autoregressive correlation on a 15x15 lattice") {
        const Matrix w = row_normalize(grid_contiguity(15, 15)).w;
        const Matrix x = lattice_design(15, 15);
        Vector beta(2);
        beta << 1.0, 0.5;
        const CovarianceModel truth(Sar1Model{w, 0.6});
        SplitMixRng rng = SplitMixRng::substream(2025, 0);
        const Vector eps = sample_errors(truth, 1.0, 225, rng);
        const Vector y = x * beta + eps;
        const RhoEstimate est = estimate_rho(y, x, w, SpatialVariant::sar);
        CHECK(est.value > 0.4);
        CHECK(est.value < 0.8);
    }
}

TEST_CASE("estimate_sigma12 moment estimator") {
    const Matrix x = Matrix::Ones(50, 1);
    SplitMixRng rng = SplitMixRng::substream(7, 0);
    Vector e1(50);
    Vector e2(50);
    for (Index i = 0; i < 50; ++i) {
        e1(i) = rng.next_gaussian();
        e2(i) = rng.next_gaussian();
    }

    SUBCASE("perfect positive correlation clamps below one") {
        const Vector y1 = x.col(0) + e1;
        const double s = estimate_sigma12(y1, y1, x, x);
        CHECK(s > 0.5);
        CHECK(s < 1.0);
    }

    SUBCASE("sign flip clamps toward minus one") {
        const Vector y1 = x.col(0) + e1;
        const Vector y2 = -y1;
        const double s = estimate_sigma12(y1, y2, x, x);
        CHECK(s < -0.5);
        CHECK(s > -1.0);
    }

    SUBCASE("independent errors stay near zero") {
        const Vector y1 = x.col(0) + e1;
        const Vector y2 = 2.0 * x.col(0) + e2;
        CHECK(std::abs(estimate_sigma12(y1, y2, x, x)) < 0.3);
    }
}

TEST_CASE("estimate_theta on seeded serial data") {
    // The design must not contain an intercept here: least-squares residuals
    // of an intercept model are orthogonal to the ones vector, which is the
    // only direction the intra-class structure acts on, leaving theta
    // unidentified (the profile becomes monotone).
    Matrix x(100, 1);
    for (Index i = 0; i < 100; ++i) {
        x(i, 0) = 0.5 + static_cast<double>(i) / 99.0;
    }
    Vector beta(1);
    beta << 1.0;

    SUBCASE("intra-class truth at 0.5, seeded") {
        // One effective degree of freedom drives the intra-class ratio, so
        // theta-hat is noisy by nature; the bound is specific to this seed.
        const Matrix a = serial_preset_matrix(SerialPreset::intra_class, 100);
        const CovarianceModel truth(SerialModel{a, 0.5});
        SplitMixRng rng = SplitMixRng::substream(36, 0);
        const Vector y = x * beta + sample_errors(truth, 1.0, 100, rng);
        const double theta = estimate_theta(y, x, a);
        CHECK(theta > 0.3);
        CHECK(theta < 0.7);
    }

    SUBCASE("intra-class white noise stays near the zero boundary, seeded") {
        const Matrix a = serial_preset_matrix(SerialPreset::intra_class, 100);
        SplitMixRng rng = SplitMixRng::substream(36, 1);
        const Vector y =
            x * beta + sample_errors(CovarianceModel(ExplicitModel{
                                         Matrix::Identity(100, 100)}),
                                     1.0, 100, rng);
        CHECK(std::abs(estimate_theta(y, x, a)) < 0.2);
    }

    SUBCASE("first-order preset has a rich spectrum and estimates tightly") {
        const Matrix a = serial_preset_matrix(SerialPreset::ar1, 100);
        for (std::uint64_t seed : {31, 32, 33}) {
            SplitMixRng rng = SplitMixRng::substream(seed, 2);
            const Vector y = x * beta +
                             sample_errors(CovarianceModel(SerialModel{a, 0.4}),
                                           1.0, 100, rng);
            const double theta = estimate_theta(y, x, a);
            CHECK(theta > 0.3);
            CHECK(theta < 0.55);
        }
    }

    SUBCASE("A = 0 is unidentifiable") {
        Vector y(4);
        y << 1.0, 2.0, 3.0, 4.0;
        CHECK_THROWS_AS(estimate_theta(y, Matrix::Ones(4, 1), Matrix::Zero(4, 4)),
                        ModelDomainError);
    }
}

TEST_CASE("two_step_estimate with no unknowns equals the direct estimate") {
    std::mt19937 gen(41);
    const Matrix x = random_full_rank(8, 2, gen);
    const Matrix omega = random_spd(8, gen);
    const Vector y = random_vector(8, gen);
    const Matrix k = 0.5 * Matrix::Identity(2, 2);
    const auto ts = two_step_estimate(CovarianceModel(ExplicitModel{omega}), y, x, k);
    CHECK(max_abs_diff(ts.beta_hat, gr_estimate(x, omega, k, y)) == 0.0);
    CHECK(ts.fitted.empty());
}

TEST_CASE("two-step inherits equality whenever the certified condition holds") {
    const auto f = nullspace_sma_fixture();
    SplitMixRng rng = SplitMixRng::substream(55, 3);
    const CovarianceModel truth(Sma1Model{f.w, 0.45});
    Vector beta(2);
    beta << 0.5, -1.0;
    for (int rep = 0; rep < 10; ++rep) {
        const Vector y = f.x * beta + sample_errors(truth, 1.0, 5, rng);
        const auto ts = two_step_estimate(CovarianceModel(Sma1Model{f.w, std::nullopt}),
                                          y, f.x, f.k);
        const Vector free = gr_estimate(f.x, Matrix::Identity(5, 5), f.k, y);
        // Equality holds at every admissible rho, hence at rho-hat too.
        CHECK((ts.beta_hat - free).norm() <= 1e-8);
        CHECK(ts.fitted.count("rho") == 1);
    }
}

TEST_CASE("two-step differs from the covariance-free estimate generically") {
    const auto f = sar_lattice_fixture();
    const CovarianceModel truth(Sar1Model{f.w, f.rho});
    SplitMixRng rng = SplitMixRng::substream(60, 0);
    const Vector y =
        f.x * f.beta_true + sample_errors(truth, 1.0, f.x.rows(), rng);
    const auto ts = two_step_estimate(CovarianceModel(Sar1Model{f.w, std::nullopt}),
                                      y, f.x, Matrix::Zero(3, 3));
    const Vector free =
        gr_estimate(f.x, Matrix::Identity(50, 50), Matrix::Zero(3, 3), y);
    CHECK((ts.beta_hat - free).norm() > 1e-6);
}

TEST_CASE("monte carlo is bit-identical across runs and thread counts") {
    const auto f = sar_lattice_fixture();
    McConfig cfg;
    cfg.model = Sar1Model{f.w, f.rho};
    cfg.x = f.x;
    cfg.beta_true = f.beta_true;
    cfg.penalty = Penalty::zero();
    cfg.replications = 40;
    cfg.seed = 97;
    cfg.threads = 1;

    const McReport serial_run = run_monte_carlo(cfg);
    cfg.threads = 4;
    const McReport threaded_run = run_monte_carlo(cfg);
    cfg.threads = 3;
    const McReport odd_run = run_monte_carlo(cfg);

    const std::string a = machine_report({serial_run});
    const std::string b = machine_report({threaded_run});
    const std::string c = machine_report({odd_run});
    CHECK(a == b);
    CHECK(a == c);
    CHECK(serial_run.failures == 0);
}

TEST_CASE("monte carlo stats are internally consistent") {
    McConfig cfg;
    cfg.model = ExplicitModel{Matrix::Identity(12, 12)};
    std::mt19937 gen(71);
    cfg.x = random_full_rank(12, 2, gen);
    cfg.beta_true = random_vector(2, gen);
    cfg.penalty = Penalty::ordinary_ridge(0.5);
    cfg.replications = 200;
    cfg.seed = 5;
    const McReport report = run_monte_carlo(cfg);

    REQUIRE(report.estimators.size() == 3);
    for (const auto& est : report.estimators) {
        // Variance nonnegativity: mse >= |bias|^2 up to numerical slack.
        CHECK(est.mse >= est.bias.squaredNorm() - 1e-9);
        CHECK(est.mse_se >= 0.0);
    }
    // With the identity truth the known-Omega and covariance-free estimators
    // are the same map, replication by replication.
    CHECK(report.estimators[0].mean_gap_to_cov_free == 0.0);
    CHECK(report.estimators[0].mse == report.estimators[2].mse);
    CHECK(report.mean_omega_hat_cond >= 1.0);
}

TEST_CASE("monte carlo equivalence transfer on the serial fixture") {
    const auto f = serial_intraclass_fixture();
    McConfig cfg;
    cfg.model = SerialModel{f.a, f.theta};
    cfg.x = f.x;
    cfg.beta_true = Vector::Ones(1);
    cfg.penalty = Penalty::zero();
    cfg.replications = 100;
    cfg.seed = 11;
    const McReport report = run_monte_carlo(cfg);
    CHECK(report.failures == 0);
    CHECK(report.estimators[1].mean_gap_to_cov_free <= 1e-8);
    CHECK(report.estimators[0].mean_gap_to_cov_free <= 1e-8);
}

TEST_CASE("sweep grids replace the structured parameter") {
    const auto f = nullspace_sma_fixture();
    McConfig cfg;
    cfg.model = Sma1Model{f.w, 0.3};
    cfg.x = f.x;
    cfg.beta_true = Vector::Ones(2);
    cfg.penalty = Penalty::custom(f.k);
    cfg.replications = 10;
    cfg.seed = 3;
    cfg.sweep_grid = {-0.5, 0.25, 0.75};
    const auto reports = run_sweep(cfg);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].sweep_value == -0.5);
    CHECK(reports[2].sweep_value == 0.75);
    for (const auto& r : reports) {
        CHECK(r.has_sweep_value);
        CHECK(r.estimators[1].mean_gap_to_cov_free <= 1e-8);
    }
}

TEST_CASE("config validation errors") {
    McConfig cfg;
    cfg.model = ExplicitModel{Matrix::Identity(4, 4)};
    cfg.x = Matrix::Ones(4, 1);
    cfg.beta_true = Vector::Ones(1);
    cfg.replications = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.replications = 5;
    cfg.beta_true = Vector::Ones(3);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.beta_true = Vector::Ones(1);
    cfg.sigma2 = -2.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
