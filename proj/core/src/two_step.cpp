#include "gridge/two_step.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "gridge/io.hpp"
#include "gridge/linalg.hpp"
#include "gridge/spatial.hpp"

namespace gridge {

namespace {

Vector gaussian_vector(Index n, SplitMixRng& rng) {
    Vector g(n);
    for (Index i = 0; i < n; ++i) {
        g(i) = rng.next_gaussian();
    }
    return g;
}

Vector ols_residual(const Vector& y, const Matrix& x) {
    if (y.size() != x.rows()) {
        throw ShapeError("response length does not match the design");
    }
    return y - x * x.householderQr().solve(y);
}

// Grid scan followed by golden-section refinement on the bracketing cell.
double grid_golden_minimize(const std::function<double(double)>& g, double lo,
                            double hi, int* evaluations) {
    constexpr int kGridPoints = 49;
    constexpr int kMaxIterations = 200;
    constexpr double kXTol = 1e-9;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);

    int evals = 0;
    auto eval = [&](double x) {
        ++evals;
        const double v = g(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    int best = 0;
    double best_value = std::numeric_limits<double>::max();
    std::vector<double> xs(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / (kGridPoints - 1);
        const double v = eval(xs[i]);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    double a = xs[std::max(best - 1, 0)];
    double b = xs[std::min(best + 1, kGridPoints - 1)];

    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    int iterations = 0;
    while (b - a > kXTol) {
        if (++iterations > kMaxIterations) {
            std::ostringstream trace;
            trace << "1-d search did not converge: interval [" << a << ", " << b
                  << "] after " << iterations << " iterations, " << evals
                  << " evaluations";
            throw EstimationError(trace.str());
        }
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    if (evaluations != nullptr) {
        *evaluations = evals;
    }
    return 0.5 * (a + b);
}

constexpr double kTiny = 1e-300;

} // namespace

Vector sample_errors(const CovarianceModel& model, double sigma2, Index n,
                     SplitMixRng& rng) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw ModelDomainError("sigma2 must be positive");
    }
    validate_model(model);
    const double scale = std::sqrt(sigma2);

    if (const auto* m = std::get_if<Sar1Model>(&model)) {
        if (!m->rho) {
            throw ModelDomainError("cannot sample: rho is unknown");
        }
        if (n != m->w.rows()) {
            throw ShapeError("sample size does not match the weight matrix");
        }
        const Vector e = scale * gaussian_vector(n, rng);
        const Matrix factor = Matrix::Identity(n, n) - (*m->rho) * m->w;
        Eigen::FullPivLU<Matrix> lu(factor);
        if (!lu.isInvertible()) {
            throw SingularSystemError("I - rho W is singular");
        }
        return lu.solve(e);
    }

    if (const auto* m = std::get_if<Sma1Model>(&model)) {
        if (!m->rho) {
            throw ModelDomainError("cannot sample: rho is unknown");
        }
        if (n != m->w.rows()) {
            throw ShapeError("sample size does not match the weight matrix");
        }
        const Vector e = scale * gaussian_vector(n, rng);
        return e + (*m->rho) * (m->w * e);
    }

    if (const auto* m = std::get_if<SurModel>(&model)) {
        if (!m->sigma12) {
            throw ModelDomainError("cannot sample: sigma12 is unknown");
        }
        const Index obs = m->x1.rows();
        if (n != 2 * obs) {
            throw ShapeError("sample size must be 2m for the two-equation model");
        }
        const double s = *m->sigma12;
        const Vector e1 = gaussian_vector(obs, rng);
        const Vector e2 = gaussian_vector(obs, rng);
        Vector eps(n);
        eps.head(obs) = scale * e1;
        eps.tail(obs) = scale * (s * e1 + std::sqrt(1.0 - s * s) * e2);
        return eps;
    }

    // explicit / rao / serial: factor sigma2 * Omega directly.
    const Matrix omega = build_omega(model);
    if (n != omega.rows()) {
        throw ShapeError("sample size does not match omega");
    }
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) {
        throw ModelDomainError("omega is not positive definite");
    }
    return scale * (Matrix(llt.matrixL()) * gaussian_vector(n, rng));
}

RhoEstimate estimate_rho(const Vector& y, const Matrix& x, const Matrix& w,
                         SpatialVariant variant) {
    require_finite(x, "design matrix");
    require_finite(w, "weight matrix");
    if (y.size() != x.rows() || w.rows() != w.cols() || w.rows() != x.rows()) {
        throw ShapeError("estimate_rho: inconsistent shapes");
    }
    const Index n = x.rows();
    const Vector r = ols_residual(y, x);

    RhoEstimate out;
    if (r.squaredNorm() <= 1e-20 * std::max(1.0, y.squaredNorm())) {
        out.degenerate = true;
        return out;
    }

    // log|det(I -/+ rho W)| through the eigenvalues of W, computed once.
    Eigen::EigenSolver<Matrix> es(w);
    if (es.info() != Eigen::Success) {
        throw EstimationError("eigenvalue computation for W failed");
    }
    const Eigen::VectorXcd lambda = es.eigenvalues();

    std::function<double(double)> profile;
    if (variant == SpatialVariant::sar) {
        const double rr = r.squaredNorm();
        const Vector wr = w * r;
        const double r_wr = r.dot(wr);
        const double wr_wr = wr.squaredNorm();
        profile = [=](double rho) {
            const double quad = rr - 2.0 * rho * r_wr + rho * rho * wr_wr;
            double log_det = 0.0;
            for (Index i = 0; i < lambda.size(); ++i) {
                log_det += std::log(std::max(std::abs(1.0 - rho * lambda(i)), kTiny));
            }
            return n * std::log(std::max(quad / n, kTiny)) - 2.0 * log_det;
        };
    } else {
        const Matrix w_copy = w;
        const Vector r_copy = r;
        profile = [=](double rho) {
            const Matrix factor = Matrix::Identity(n, n) + rho * w_copy;
            Eigen::PartialPivLU<Matrix> lu(factor);
            const Vector t = lu.solve(r_copy);
            if (!t.allFinite()) {
                return std::numeric_limits<double>::max();
            }
            const double quad = t.squaredNorm();
            double log_det = 0.0;
            for (Index i = 0; i < lambda.size(); ++i) {
                log_det += std::log(std::max(std::abs(1.0 + rho * lambda(i)), kTiny));
            }
            return n * std::log(std::max(quad / n, kTiny)) + 2.0 * log_det;
        };
    }

    out.value = grid_golden_minimize(profile, -0.99, 0.99, &out.evaluations);
    return out;
}

double estimate_sigma12(const Vector& y1, const Vector& y2, const Matrix& x1,
                        const Matrix& x2, const Tolerances& tol) {
    tol.validate();
    if (y1.size() != x1.rows() || y2.size() != x2.rows() || x1.rows() != x2.rows()) {
        throw ShapeError("estimate_sigma12: inconsistent shapes");
    }
    const Vector r1 = ols_residual(y1, x1);
    const Vector r2 = ols_residual(y2, x2);
    const double m = static_cast<double>(x1.rows());
    const double raw = r1.dot(r2) / m;
    const double bound = 1.0 - tol.psd_atol;
    return std::clamp(raw, -bound, bound);
}

double estimate_theta(const Vector& y, const Matrix& x, const Matrix& a) {
    require_finite(a, "serial A");
    if (a.rows() != a.cols() || a.rows() != x.rows() || y.size() != x.rows()) {
        throw ShapeError("estimate_theta: inconsistent shapes");
    }
    if (max_abs(a - a.transpose()) > 1e-10 * std::max(1.0, max_abs(a))) {
        throw ModelDomainError("serial A must be symmetric");
    }
    if (max_abs(a) == 0.0) {
        throw ModelDomainError("theta is unidentifiable for A = 0");
    }

    const Index n = x.rows();
    const Vector r = ols_residual(y, x);
    if (r.squaredNorm() <= 1e-20 * std::max(1.0, y.squaredNorm())) {
        return 0.0;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
    const Vector lambda = es.eigenvalues();
    const double lambda_min = lambda.minCoeff();
    const double lambda_max = lambda.maxCoeff();

    // I + theta A stays pd for theta in (-1/lambda_max, -1/lambda_min),
    // with infinite ends when the corresponding eigenvalue sign is absent.
    double lo = lambda_max > 0.0 ? -1.0 / lambda_max : -1e3;
    double hi = lambda_min < 0.0 ? -1.0 / lambda_min : 1e3;
    const double margin = 1e-3 * (hi - lo);
    lo += margin;
    hi -= margin;
    if (!(lo < hi)) {
        throw ModelDomainError("empty admissible interval for theta");
    }

    const double rr = r.squaredNorm();
    const double r_ar = r.dot(a * r);
    auto profile = [&](double theta) {
        const double quad = rr + theta * r_ar;
        if (quad <= 0.0) {
            return std::numeric_limits<double>::max();
        }
        double log_det = 0.0;
        for (Index i = 0; i < lambda.size(); ++i) {
            const double factor = 1.0 + theta * lambda(i);
            if (factor <= 0.0) {
                return std::numeric_limits<double>::max();
            }
            log_det += std::log(factor);
        }
        return n * std::log(std::max(quad / n, kTiny)) - log_det;
    };
    return grid_golden_minimize(profile, lo, hi, nullptr);
}

TwoStepResult two_step_estimate(const CovarianceModel& model, const Vector& y,
                                const Matrix& x, const Matrix& k,
                                const Tolerances& tol) {
    validate_model(model, tol);
    TwoStepResult out;

    if (const auto* m = std::get_if<RaoModel>(&model)) {
        if (m->x.rows() != x.rows() || m->x.cols() != x.cols() ||
            max_abs(m->x - x) != 0.0) {
            throw InvalidInputError("mixed-effects model design differs from the "
                                    "regression design");
        }
        if (m->delta_bar) {
            out.omega_hat = build_omega(model, tol);
        } else {
            // DeltaBar is not identifiable from a single sample: the
            // least-squares residual covariance confounds sigma2 (I + DeltaBar).
            // The plug-in uses DeltaBar = 0; whenever the DeltaBar-free
            // equality condition holds, the choice does not affect beta_hat.
            const Index n = x.rows();
            Matrix omega = Matrix::Identity(n, n) + x * m->gamma_bar * x.transpose();
            out.omega_hat = 0.5 * (omega + omega.transpose());
            out.fitted["delta_bar_scale"] = 0.0;
        }
    } else if (const auto* m = std::get_if<SurModel>(&model)) {
        const Index obs = m->x1.rows();
        if (y.size() != 2 * obs || x.rows() != 2 * obs) {
            throw ShapeError("stacked system must have 2m rows");
        }
        if (m->sigma12) {
            out.omega_hat = build_omega(model, tol);
        } else {
            const double s12 = estimate_sigma12(y.head(obs), y.tail(obs), m->x1,
                                                m->x2, tol);
            SurModel fitted = *m;
            fitted.sigma12 = s12;
            out.omega_hat = build_omega(CovarianceModel(fitted), tol);
            out.fitted["sigma12"] = s12;
        }
    } else if (const auto* m = std::get_if<Sar1Model>(&model)) {
        if (m->rho) {
            out.omega_hat = build_omega(model, tol);
        } else {
            const RhoEstimate rho = estimate_rho(y, x, m->w, SpatialVariant::sar);
            Sar1Model fitted = *m;
            fitted.rho = rho.value;
            out.omega_hat = build_omega(CovarianceModel(fitted), tol);
            out.fitted["rho"] = rho.value;
            out.fitted["rho_degenerate"] = rho.degenerate ? 1.0 : 0.0;
        }
    } else if (const auto* m = std::get_if<Sma1Model>(&model)) {
        if (m->rho) {
            out.omega_hat = build_omega(model, tol);
        } else {
            const RhoEstimate rho = estimate_rho(y, x, m->w, SpatialVariant::sma);
            Sma1Model fitted = *m;
            fitted.rho = rho.value;
            out.omega_hat = build_omega(CovarianceModel(fitted), tol);
            out.fitted["rho"] = rho.value;
            out.fitted["rho_degenerate"] = rho.degenerate ? 1.0 : 0.0;
        }
    } else if (const auto* m = std::get_if<SerialModel>(&model)) {
        if (m->theta) {
            out.omega_hat = build_omega(model, tol);
        } else {
            const double theta = estimate_theta(y, x, m->a);
            SerialModel fitted = *m;
            fitted.theta = theta;
            out.omega_hat = build_omega(CovarianceModel(fitted), tol);
            out.fitted["theta"] = theta;
        }
    } else {
        out.omega_hat = build_omega(model, tol);
    }

    out.beta_hat = gr_estimate(x, out.omega_hat, k, y, tol);
    return out;
}

void McConfig::validate() const {
    tol.validate();
    validate_model(model, tol);
    if (replications < 1) {
        throw ConfigError("replications must be >= 1");
    }
    if (threads < 1) {
        throw ConfigError("threads must be >= 1");
    }
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw ConfigError("sigma2 must be positive");
    }
    const Matrix omega = build_omega(model, tol); // all parameters must be known
    if (omega.rows() != x.rows()) {
        throw ConfigError("design row count does not match omega");
    }
    if (const auto* m = std::get_if<RaoModel>(&model)) {
        if (m->x.rows() != x.rows() || m->x.cols() != x.cols() ||
            max_abs(m->x - x) != 0.0) {
            throw ConfigError("mixed-effects model design differs from the "
                              "regression design");
        }
    }
    if (beta_true.size() != x.cols()) {
        throw ConfigError("beta length does not match the design column count");
    }
    if (numerical_rank(x, tol) != x.cols()) {
        throw ConfigError("design matrix is rank deficient");
    }
}

namespace {

CovarianceModel erase_estimable_parameter(const CovarianceModel& model) {
    CovarianceModel erased = model;
    if (auto* m = std::get_if<RaoModel>(&erased)) {
        m->delta_bar.reset();
    } else if (auto* m = std::get_if<SurModel>(&erased)) {
        m->sigma12.reset();
    } else if (auto* m = std::get_if<Sar1Model>(&erased)) {
        m->rho.reset();
    } else if (auto* m = std::get_if<Sma1Model>(&erased)) {
        m->rho.reset();
    } else if (auto* m = std::get_if<SerialModel>(&erased)) {
        m->theta.reset();
    }
    return erased;
}

struct ReplicationResult {
    Vector err_oracle;
    Vector err_two_step;
    Vector err_cov_free;
    double gap_oracle = 0.0;
    double gap_two_step = 0.0;
    double omega_hat_cond = 0.0;
    bool failed = false;
};

double spd_condition_number(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return hi / lo;
}

// Neumaier-compensated accumulator; reductions run in replication order, so
// results do not depend on the thread count.
class CompensatedSum {
public:
    void add(double value) {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value)) {
            compensation_ += (sum_ - t) + value;
        } else {
            compensation_ += (value - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

} // namespace

McReport run_monte_carlo(const McConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();

    const Index n = cfg.x.rows();
    const Index p = cfg.x.cols();
    const Matrix k = cfg.penalty.materialize(cfg.x, cfg.tol);
    const Matrix omega_true = build_omega(cfg.model, cfg.tol);
    const Matrix h_oracle = gr_hat_operator(cfg.x, omega_true, k, cfg.tol);
    const Matrix h_free =
        gr_hat_operator(cfg.x, Matrix::Identity(n, n), k, cfg.tol);
    const CovarianceModel erased = erase_estimable_parameter(cfg.model);

    const long reps = cfg.replications;
    std::vector<ReplicationResult> results(static_cast<std::size_t>(reps));

    auto worker = [&](long begin, long end) {
        for (long i = begin; i < end; ++i) {
            ReplicationResult& slot = results[static_cast<std::size_t>(i)];
            try {
                SplitMixRng rng = SplitMixRng::substream(
                    cfg.seed, static_cast<std::uint64_t>(i));
                const Vector eps =
                    sample_errors(cfg.model, cfg.sigma2, n, rng);
                const Vector y = cfg.x * cfg.beta_true + eps;
                const Vector beta_oracle = h_oracle * y;
                const Vector beta_free = h_free * y;
                const TwoStepResult ts =
                    two_step_estimate(erased, y, cfg.x, k, cfg.tol);
                slot.err_oracle = beta_oracle - cfg.beta_true;
                slot.err_two_step = ts.beta_hat - cfg.beta_true;
                slot.err_cov_free = beta_free - cfg.beta_true;
                slot.gap_oracle = (beta_oracle - beta_free).norm();
                slot.gap_two_step = (ts.beta_hat - beta_free).norm();
                slot.omega_hat_cond = spd_condition_number(ts.omega_hat);
            } catch (const std::exception&) {
                slot.failed = true;
            }
        }
    };

    const int threads = static_cast<int>(
        std::min<long>(cfg.threads, std::max<long>(reps, 1)));
    if (threads <= 1) {
        worker(0, reps);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (reps + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const long begin = t * chunk;
            const long end = std::min<long>(begin + chunk, reps);
            if (begin < end) {
                pool.emplace_back(worker, begin, end);
            }
        }
        for (auto& thread : pool) {
            thread.join();
        }
    }

    McReport report;
    report.replications = reps;
    report.seed = cfg.seed;

    constexpr int kEstimators = 3;
    const char* names[kEstimators] = {"oracle", "two_step", "cov_free"};
    std::vector<CompensatedSum> sq(kEstimators), sq2(kEstimators), gap(kEstimators);
    std::vector<std::vector<CompensatedSum>> bias(
        kEstimators, std::vector<CompensatedSum>(static_cast<std::size_t>(p)));
    CompensatedSum cond_sum;
    double cond_max = 0.0;
    long ok = 0;

    for (const ReplicationResult& r : results) {
        if (r.failed) {
            ++report.failures;
            continue;
        }
        ++ok;
        const Vector* errs[kEstimators] = {&r.err_oracle, &r.err_two_step,
                                           &r.err_cov_free};
        const double gaps[kEstimators] = {r.gap_oracle, r.gap_two_step, 0.0};
        for (int e = 0; e < kEstimators; ++e) {
            const double q = errs[e]->squaredNorm();
            sq[e].add(q);
            sq2[e].add(q * q);
            gap[e].add(gaps[e]);
            for (Index j = 0; j < p; ++j) {
                bias[e][static_cast<std::size_t>(j)].add((*errs[e])(j));
            }
        }
        cond_sum.add(r.omega_hat_cond);
        cond_max = std::max(cond_max, r.omega_hat_cond);
    }

    if (ok == 0) {
        throw EstimationError("all " + std::to_string(reps) +
                              " replications failed");
    }

    for (int e = 0; e < kEstimators; ++e) {
        EstimatorStats stats;
        stats.name = names[e];
        const double count = static_cast<double>(ok);
        stats.mse = sq[e].value() / count;
        if (ok > 1) {
            const double variance =
                std::max(0.0, (sq2[e].value() - sq[e].value() * sq[e].value() / count) /
                                  (count - 1.0));
            stats.mse_se = std::sqrt(variance / count);
        }
        stats.bias = Vector(p);
        for (Index j = 0; j < p; ++j) {
            stats.bias(j) = bias[e][static_cast<std::size_t>(j)].value() / count;
        }
        stats.mean_gap_to_cov_free = gap[e].value() / count;
        report.estimators.push_back(std::move(stats));
    }
    report.mean_omega_hat_cond = cond_sum.value() / static_cast<double>(ok);
    report.max_omega_hat_cond = cond_max;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
}

namespace {

void set_sweep_value(CovarianceModel& model, double value) {
    if (auto* m = std::get_if<Sar1Model>(&model)) {
        m->rho = value;
    } else if (auto* m = std::get_if<Sma1Model>(&model)) {
        m->rho = value;
    } else if (auto* m = std::get_if<SerialModel>(&model)) {
        m->theta = value;
    } else if (auto* m = std::get_if<SurModel>(&model)) {
        m->sigma12 = value;
    } else {
        throw ConfigError("sweep grids apply to sar1, sma1, serial and sur models");
    }
}

} // namespace

std::vector<McReport> run_sweep(const McConfig& cfg) {
    std::vector<McReport> reports;
    if (cfg.sweep_grid.empty()) {
        reports.push_back(run_monte_carlo(cfg));
        return reports;
    }
    for (double value : cfg.sweep_grid) {
        McConfig point = cfg;
        set_sweep_value(point.model, value);
        McReport report = run_monte_carlo(point);
        report.sweep_value = value;
        report.has_sweep_value = true;
        reports.push_back(std::move(report));
    }
    return reports;
}

namespace {

struct KeyValueFile {
    std::map<std::string, std::string> entries;
    std::filesystem::path directory;

    bool has(const std::string& key) const { return entries.count(key) > 0; }

    std::string get(const std::string& key) const {
        auto it = entries.find(key);
        if (it == entries.end()) {
            throw ConfigError("missing required config key \"" + key + "\"");
        }
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = entries.find(key);
        return it == entries.end() ? fallback : it->second;
    }

    std::string resolve_path(const std::string& key) const {
        const std::filesystem::path p(get(key));
        return p.is_absolute() ? p.string() : (directory / p).string();
    }

    double get_double(const std::string& key) const {
        const std::string text = get(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument(text);
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key \"" + key + "\" is not a number: " + text);
        }
    }

    long get_long(const std::string& key) const {
        const double v = get_double(key);
        if (v != std::floor(v)) {
            throw ConfigError("config key \"" + key + "\" must be an integer");
        }
        return static_cast<long>(v);
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::istringstream in(get(key));
        std::vector<double> values;
        double v = 0.0;
        while (in >> v) {
            values.push_back(v);
        }
        if (!in.eof() || values.empty()) {
            throw ConfigError("config key \"" + key + "\" must hold numbers");
        }
        return values;
    }
};

const std::vector<std::string> kKnownKeys = {
    "model", "x", "x1", "x2", "omega", "w", "w_edges", "rho", "sigma12",
    "theta", "a", "a_preset", "gamma_bar", "delta_bar", "beta", "sigma2",
    "penalty", "replications", "seed", "threads", "grid", "rank_rtol",
    "residual_atol", "psd_atol"};

Penalty parse_penalty_spec(const std::string& spec, const KeyValueFile& file) {
    if (spec == "zero") {
        return Penalty::zero();
    }
    if (spec.rfind("ridge:", 0) == 0) {
        return Penalty::ordinary_ridge(std::stod(spec.substr(6)));
    }
    if (spec.rfind("shrink:", 0) == 0) {
        return Penalty::shrinkage(std::stod(spec.substr(7)));
    }
    const std::filesystem::path p(spec);
    const std::string path =
        p.is_absolute() ? p.string() : (file.directory / p).string();
    return Penalty::custom(read_matrix(path));
}

} // namespace

McConfig load_mc_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path + ": cannot open config file");
    }

    KeyValueFile file;
    file.directory = std::filesystem::path(path).parent_path();
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char ch : line) {
                blank = blank && std::isspace(static_cast<unsigned char>(ch));
            }
            if (blank) {
                continue;
            }
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected \"key = value\"");
        }
        auto trim = [](std::string s) {
            const auto first = s.find_first_not_of(" \t\r");
            const auto last = s.find_last_not_of(" \t\r");
            return first == std::string::npos ? std::string()
                                              : s.substr(first, last - first + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": empty key or value");
        }
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": unknown config key \"" + key + "\"");
        }
        file.entries[key] = value;
    }

    McConfig cfg;
    if (file.has("rank_rtol")) {
        cfg.tol.rank_rtol = file.get_double("rank_rtol");
    }
    if (file.has("residual_atol")) {
        cfg.tol.residual_atol = file.get_double("residual_atol");
    }
    if (file.has("psd_atol")) {
        cfg.tol.psd_atol = file.get_double("psd_atol");
    }

    const std::string model_kind = file.get("model");
    if (model_kind == "sur") {
        const Matrix x1 = read_matrix(file.resolve_path("x1"));
        const Matrix x2 = read_matrix(file.resolve_path("x2"));
        SurModel model{x1, x2, std::nullopt};
        if (file.has("sigma12")) {
            model.sigma12 = file.get_double("sigma12");
        }
        cfg.model = model;
        cfg.x = sur_design(x1, x2);
    } else {
        cfg.x = read_matrix(file.resolve_path("x"));
        if (model_kind == "explicit") {
            cfg.model = ExplicitModel{read_matrix(file.resolve_path("omega"))};
        } else if (model_kind == "rao") {
            RaoModel model;
            model.x = cfg.x;
            const Index p = cfg.x.cols();
            const Index n = cfg.x.rows();
            model.gamma_bar = file.has("gamma_bar")
                                  ? read_matrix(file.resolve_path("gamma_bar"))
                                  : Matrix::Zero(p, p);
            model.delta_bar = file.has("delta_bar")
                                  ? read_matrix(file.resolve_path("delta_bar"))
                                  : Matrix::Zero(n - p, n - p);
            cfg.model = model;
        } else if (model_kind == "sar1" || model_kind == "sma1") {
            Matrix w;
            if (file.has("w_edges")) {
                w = row_normalize(read_contiguity(file.resolve_path("w_edges"))).w;
            } else {
                w = read_matrix(file.resolve_path("w"));
            }
            std::optional<double> rho;
            if (file.has("rho")) {
                rho = file.get_double("rho");
            }
            if (model_kind == "sar1") {
                cfg.model = Sar1Model{w, rho};
            } else {
                cfg.model = Sma1Model{w, rho};
            }
        } else if (model_kind == "serial") {
            Matrix a;
            if (file.has("a_preset")) {
                const auto preset = serial_preset_from_name(file.get("a_preset"));
                if (!preset) {
                    throw ConfigError("unknown a_preset \"" + file.get("a_preset") +
                                      "\" (intra-class, ar1, circular)");
                }
                a = serial_preset_matrix(*preset, cfg.x.rows());
            } else {
                a = read_matrix(file.resolve_path("a"));
            }
            SerialModel model{a, std::nullopt};
            if (file.has("theta")) {
                model.theta = file.get_double("theta");
            }
            cfg.model = model;
        } else {
            throw ConfigError("unknown model kind \"" + model_kind + "\"");
        }
    }

    const std::vector<double> beta = file.get_doubles("beta");
    cfg.beta_true = Eigen::Map<const Vector>(beta.data(),
                                             static_cast<Index>(beta.size()));
    cfg.sigma2 = file.has("sigma2") ? file.get_double("sigma2") : 1.0;
    cfg.penalty = parse_penalty_spec(file.get_or("penalty", "zero"), file);
    cfg.replications = file.get_long("replications");
    const long seed = file.has("seed") ? file.get_long("seed") : 0;
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.threads = file.has("threads") ? static_cast<int>(file.get_long("threads")) : 1;
    if (file.has("grid")) {
        cfg.sweep_grid = file.get_doubles("grid");
    }
    cfg.validate();
    return cfg;
}

std::string machine_report(const std::vector<McReport>& reports) {
    std::ostringstream out;
    out << "# mc_report v1\n";
    if (!reports.empty()) {
        out << "# seed=" << reports.front().seed
            << " replications=" << reports.front().replications << "\n";
    }
    Index p = 0;
    if (!reports.empty() && !reports.front().estimators.empty()) {
        p = reports.front().estimators.front().bias.size();
    }
    out << "param\testimator\tfailures\tmse\tmse_se\tmean_gap";
    for (Index j = 0; j < p; ++j) {
        out << "\tbias_" << (j + 1);
    }
    out << "\n";
    for (const McReport& report : reports) {
        const std::string param =
            report.has_sweep_value ? format_g17(report.sweep_value) : "-";
        for (const EstimatorStats& est : report.estimators) {
            out << param << "\t" << est.name << "\t" << report.failures << "\t"
                << format_g17(est.mse) << "\t" << format_g17(est.mse_se) << "\t"
                << format_g17(est.mean_gap_to_cov_free);
            for (Index j = 0; j < est.bias.size(); ++j) {
                out << "\t" << format_g17(est.bias(j));
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string human_report(const std::vector<McReport>& reports) {
    std::ostringstream out;
    for (const McReport& report : reports) {
        out << "replications: " << report.replications
            << "   failures: " << report.failures << "   seed: " << report.seed;
        if (report.has_sweep_value) {
            out << "   param: " << format_g6(report.sweep_value);
        }
        out << "\n";
        out << "fitted-omega condition number: mean " << format_g6(report.mean_omega_hat_cond)
            << ", max " << format_g6(report.max_omega_hat_cond) << "\n";
        out << "wall time: " << format_g6(report.wall_seconds) << " s\n";
        out << "  estimator     mse           mse_se        mean_gap      |bias|\n";
        for (const EstimatorStats& est : report.estimators) {
            std::ostringstream row;
            row << "  " << est.name;
            for (std::size_t i = row.str().size(); i < 16; ++i) {
                row << " ";
            }
            auto cell = [&row](const std::string& text) {
                row << text;
                for (std::size_t i = text.size(); i < 14; ++i) {
                    row << " ";
                }
            };
            cell(format_g6(est.mse));
            cell(format_g6(est.mse_se));
            cell(format_g6(est.mean_gap_to_cov_free));
            cell(format_g6(est.bias.norm()));
            out << row.str() << "\n";
        }
        out << "\n";
    }
    return out.str();
}

} // namespace gridge
