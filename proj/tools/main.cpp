// gridge: general ridge estimators in the general linear model, with
// checkers that decide whether the covariance-aware estimator coincides
// with the covariance-free one.
//
// Exit codes: 0 = computed (whatever the verdict), 1 = usage error,
// 2 = numerical or validation error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <gridge/equivalence.hpp>
#include <gridge/fixtures.hpp>
#include <gridge/io.hpp>
#include <gridge/linalg.hpp>
#include <gridge/models.hpp>
#include <gridge/ridge.hpp>
#include <gridge/spatial.hpp>
#include <gridge/two_step.hpp>

namespace {

using namespace gridge;

constexpr int kExitComputed = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const std::string& key, const std::string& value) {
    std::cout << key << " = " << value << "\n";
}

void emit(const std::string& key, bool value) {
    emit(key, std::string(value ? "true" : "false"));
}

void emit(const std::string& key, double value) {
    emit(key, format_g17(value));
}

Matrix load_matrix_file(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw UsageError(path + ": no such file");
    }
    return read_matrix(path);
}

Vector load_vector_file(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw UsageError(path + ": no such file");
    }
    return read_vector(path);
}

/// K flag: zero | ridge:<lambda> | shrink:<delta> | <file>.
Penalty parse_penalty(const std::string& spec) {
    if (spec == "zero") {
        return Penalty::zero();
    }
    try {
        if (spec.rfind("ridge:", 0) == 0) {
            return Penalty::ordinary_ridge(std::stod(spec.substr(6)));
        }
        if (spec.rfind("shrink:", 0) == 0) {
            return Penalty::shrinkage(std::stod(spec.substr(7)));
        }
    } catch (const std::invalid_argument&) {
        throw UsageError("cannot parse penalty flag \"" + spec + "\"");
    }
    return Penalty::custom(load_matrix_file(spec));
}

struct ModelSpec {
    std::string kind;
    std::vector<std::string> args; // colon-separated tail
};

ModelSpec parse_model_flag(const std::string& flag) {
    ModelSpec spec;
    std::size_t pos = flag.find(':');
    spec.kind = flag.substr(0, pos);
    while (pos != std::string::npos) {
        const std::size_t next = flag.find(':', pos + 1);
        spec.args.push_back(flag.substr(pos + 1, next == std::string::npos
                                                     ? std::string::npos
                                                     : next - pos - 1));
        pos = next;
    }
    return spec;
}

struct CheckerInputs {
    Matrix x;
    CovarianceModel model = ExplicitModel{};
    std::optional<Matrix> omega; // present when the model is fully known
};

struct ParameterFlags {
    std::optional<double> rho;
    std::optional<double> sigma12;
    std::optional<double> theta;
};

CheckerInputs assemble_model(const ModelSpec& spec, const std::optional<std::string>& x_path,
                             const ParameterFlags& params, const Tolerances& tol) {
    CheckerInputs inputs;
    auto need_x = [&]() -> Matrix {
        if (!x_path) {
            throw UsageError("--X is required for this model");
        }
        return load_matrix_file(*x_path);
    };

    if (spec.kind == "explicit") {
        if (spec.args.size() != 1) {
            throw UsageError("expected --model explicit:<file|identity>");
        }
        inputs.x = need_x();
        const Matrix omega =
            spec.args[0] == "identity"
                ? Matrix(Matrix::Identity(inputs.x.rows(), inputs.x.rows()))
                : load_matrix_file(spec.args[0]);
        inputs.model = ExplicitModel{omega};
        inputs.omega = build_omega(inputs.model, tol);
        return inputs;
    }
    if (spec.kind == "rao") {
        if (spec.args.empty() || spec.args.size() > 2) {
            throw UsageError("expected --model rao:<gamma_bar_file>[:<delta_bar_file>]");
        }
        inputs.x = need_x();
        RaoModel model;
        model.x = inputs.x;
        model.gamma_bar = load_matrix_file(spec.args[0]);
        if (spec.args.size() == 2) {
            model.delta_bar = load_matrix_file(spec.args[1]);
        }
        inputs.model = model;
        if (model.delta_bar) {
            inputs.omega = build_omega(inputs.model, tol);
        }
        return inputs;
    }
    if (spec.kind == "sur") {
        if (spec.args.size() != 2) {
            throw UsageError("expected --model sur:<x1_file>:<x2_file>");
        }
        SurModel model;
        model.x1 = load_matrix_file(spec.args[0]);
        model.x2 = load_matrix_file(spec.args[1]);
        model.sigma12 = params.sigma12;
        inputs.x = sur_design(model.x1, model.x2);
        inputs.model = model;
        if (model.sigma12) {
            inputs.omega = build_omega(inputs.model, tol);
        }
        return inputs;
    }
    if (spec.kind == "sar1" || spec.kind == "sma1") {
        if (spec.args.size() != 1) {
            throw UsageError("expected --model " + spec.kind + ":<w_file>");
        }
        inputs.x = need_x();
        const Matrix w = load_matrix_file(spec.args[0]);
        if (spec.kind == "sar1") {
            inputs.model = Sar1Model{w, params.rho};
        } else {
            inputs.model = Sma1Model{w, params.rho};
        }
        if (params.rho) {
            inputs.omega = build_omega(inputs.model, tol);
        }
        return inputs;
    }
    if (spec.kind == "serial") {
        if (spec.args.size() != 1) {
            throw UsageError("expected --model serial:<a_file|intra-class|ar1|circular>");
        }
        inputs.x = need_x();
        Matrix a;
        if (const auto preset = serial_preset_from_name(spec.args[0])) {
            a = serial_preset_matrix(*preset, inputs.x.rows());
        } else {
            a = load_matrix_file(spec.args[0]);
        }
        inputs.model = SerialModel{a, params.theta};
        if (params.theta) {
            inputs.omega = build_omega(inputs.model, tol);
        }
        return inputs;
    }
    throw UsageError("unknown model kind \"" + spec.kind +
                     "\" (explicit, rao, sur, sar1, sma1, serial)");
}

void emit_condition(const std::string& prefix, const ConditionVerdict& verdict) {
    emit(prefix + ".holds", verdict.holds);
    for (const auto& [name, value] : verdict.residuals) {
        emit(prefix + ".residual." + name, value);
    }
}

void emit_verdict(const EquivalenceVerdict& verdict) {
    emit("equal", verdict.equal);
    emit("fired_condition", std::string(decision_rule_name(verdict.fired_condition)));
    for (const auto& [name, value] : verdict.residuals) {
        emit("residual." + name, value);
    }
    if (verdict.witness_min_sv) {
        emit("witness.min_singular_value", *verdict.witness_min_sv);
    }
}

/// Parameter-free verdicts that apply to the model family, printed next to
/// the concrete-parameter decision.
void emit_family_conditions(const CheckerInputs& inputs, const Matrix& k,
                            const ParameterFlags& params, bool all_rho,
                            const Tolerances& tol) {
    if (const auto* m = std::get_if<RaoModel>(&inputs.model)) {
        emit_condition("cor1", cor1_check(inputs.x, m->gamma_bar, k, tol));
        emit("cor1.note", std::string("holds means equality for every delta_bar"));
    } else if (const auto* m = std::get_if<SurModel>(&inputs.model)) {
        const auto verdict = cor2_check(m->x1, m->x2, tol);
        emit_condition("cor2", verdict);
        if (!verdict.holds) {
            emit("cor2.note",
                 std::string("condition not established; supply --sigma12 for a "
                             "concrete-parameter decision"));
        }
    } else if (const auto* m = std::get_if<Sar1Model>(&inputs.model)) {
        emit_condition("cor3", cor3_check(m->w, inputs.x, k, tol));
        if (all_rho) {
            emit_condition("cor4",
                           cor4_condition_iii(m->w, inputs.x, k, SpatialVariant::sar, tol));
            emit("cor4.note", std::string("holds certifies every admissible rho"));
        }
        if (params.rho && *params.rho != 0.0) {
            emit_condition("lemma1",
                           lemma1_check(m->w, inputs.x, k, *params.rho, tol));
        }
    } else if (const auto* m = std::get_if<Sma1Model>(&inputs.model)) {
        emit_condition("cor3", cor3_check(m->w, inputs.x, k, tol));
        if (all_rho) {
            emit_condition("cor4",
                           cor4_condition_iii(m->w, inputs.x, k, SpatialVariant::sma, tol));
            emit("cor4.note", std::string("holds certifies every admissible rho"));
        }
        if (params.rho && *params.rho != 0.0) {
            emit_condition("lemma1",
                           lemma1_check(m->w, inputs.x, k, *params.rho, tol));
        }
    } else if (const auto* m = std::get_if<SerialModel>(&inputs.model)) {
        emit_condition("cor5", cor5_check(m->a, inputs.x, k, tol));
        emit("cor5.note", std::string("holds means equality for every admissible theta"));
    }
}

void run_method(const std::string& method, const CheckerInputs& inputs,
                const Matrix& k, bool verify, const Tolerances& tol) {
    if (!inputs.omega) {
        emit("equal", std::string("undetermined"));
        emit("note", std::string("model parameters unknown; only the "
                                 "parameter-free conditions above apply"));
        return;
    }
    const Matrix& omega = *inputs.omega;
    if (method == "thm1") {
        emit_verdict(theorem1_check(omega, inputs.x, k, tol));
    } else if (method == "thm2") {
        emit_verdict(theorem2_check(omega, inputs.x, k, tol));
    } else if (method == "oracle") {
        const auto r = estimators_coincide(inputs.x, omega, k, tol);
        emit("equal", r.coincide);
        emit("fired_condition", std::string("oracle"));
        emit("residual.hat_gap", r.residual);
    } else if (method == "auto") {
        CrossValidationOptions opts;
        opts.include_oracle = verify;
        const auto report = cross_validate(omega, inputs.x, k, tol, opts);
        emit_verdict(report.theorem2);
        emit("crosscheck.theorem1", report.theorem1.equal);
        if (report.oracle) {
            emit("crosscheck.oracle", report.oracle->coincide);
            emit("crosscheck.oracle_residual", report.oracle->residual);
        }
        emit("crosscheck.agreed", report.agreed);
        if (!report.agreed) {
            emit("crosscheck.borderline", report.borderline);
            emit("crosscheck.diagnostic", report.diagnostic);
        }
    } else {
        throw UsageError("unknown --method \"" + method +
                         "\" (thm1, thm2, oracle, auto)");
    }
}

const std::vector<std::string> kDemoNames = {
    "counterexample", "rao-zero-gamma", "sur-orthogonal", "sar-lattice",
    "serial-intraclass"};

struct DemoFiles {
    CheckerInputs inputs;
    Matrix k;
    ParameterFlags params;
};

std::string demo_path(const std::string& dir, const std::string& name,
                      const std::string& file) {
    return (std::filesystem::path(dir) / (name + "_" + file)).string();
}

DemoFiles materialize_demo(const std::string& name, const std::string& dir,
                           bool write_files, const Tolerances& tol) {
    DemoFiles demo;
    auto put = [&](const std::string& file, const Matrix& m) {
        if (write_files) {
            write_matrix(demo_path(dir, name, file), m);
        }
    };

    if (name == "counterexample") {
        const auto inst = counterexample_instance();
        put("w.txt", inst.w);
        put("x.txt", inst.x);
        put("k.txt", inst.k);
        demo.inputs.x = inst.x;
        demo.inputs.model = Sma1Model{inst.w, inst.rho};
        demo.inputs.omega = build_omega(demo.inputs.model, tol);
        demo.k = inst.k;
        demo.params.rho = inst.rho;
        return demo;
    }
    if (name == "rao-zero-gamma") {
        const auto f = rao_zero_gamma_fixture();
        put("x.txt", f.x);
        put("gamma_bar.txt", f.gamma_bar);
        put("delta_bar.txt", f.delta_bar);
        put("k.txt", f.k);
        demo.inputs.x = f.x;
        demo.inputs.model = RaoModel{f.x, f.gamma_bar, f.delta_bar};
        demo.inputs.omega = build_omega(demo.inputs.model, tol);
        demo.k = f.k;
        return demo;
    }
    if (name == "sur-orthogonal") {
        const auto f = sur_shared_design_fixture();
        put("x1.txt", f.x1);
        put("x2.txt", f.x2);
        put("k.txt", f.k);
        demo.inputs.x = sur_design(f.x1, f.x2);
        demo.inputs.model = SurModel{f.x1, f.x2, std::nullopt};
        demo.k = f.k;
        return demo;
    }
    if (name == "sar-lattice") {
        const auto f = sar_lattice_fixture();
        put("w.txt", f.w);
        put("x.txt", f.x);
        if (write_files) {
            std::ofstream cfg(demo_path(dir, name, "sim.cfg"));
            cfg << "# spatial autoregressive lattice simulation\n"
                << "model = sar1\n"
                << "w = " << name << "_w.txt\n"
                << "x = " << name << "_x.txt\n"
                << "rho = " << format_g17(f.rho) << "\n"
                << "beta = 1 0.5 -0.25\n"
                << "sigma2 = 1\n"
                << "penalty = zero\n"
                << "replications = 500\n"
                << "seed = 20240817\n"
                << "threads = 1\n";
        }
        demo.inputs.x = f.x;
        demo.inputs.model = Sar1Model{f.w, f.rho};
        demo.inputs.omega = build_omega(demo.inputs.model, tol);
        demo.k = Matrix::Zero(3, 3);
        demo.params.rho = f.rho;
        return demo;
    }
    if (name == "serial-intraclass") {
        const auto f = serial_intraclass_fixture();
        put("a.txt", f.a);
        put("x.txt", f.x);
        put("k.txt", f.k);
        if (write_files) {
            std::ofstream cfg(demo_path(dir, name, "sim.cfg"));
            cfg << "# serial correlation simulation, equality holds at every theta\n"
                << "model = serial\n"
                << "a = " << name << "_a.txt\n"
                << "x = " << name << "_x.txt\n"
                << "theta = " << format_g17(f.theta) << "\n"
                << "beta = 1\n"
                << "sigma2 = 1\n"
                << "penalty = zero\n"
                << "replications = 500\n"
                << "seed = 20240817\n"
                << "threads = 1\n";
        }
        demo.inputs.x = f.x;
        demo.inputs.model = SerialModel{f.a, f.theta};
        demo.inputs.omega = build_omega(demo.inputs.model, tol);
        demo.k = f.k;
        demo.params.theta = f.theta;
        return demo;
    }
    std::string names;
    for (const auto& n : kDemoNames) {
        names += (names.empty() ? "" : ", ") + n;
    }
    throw UsageError("unknown demo \"" + name + "\"; available: " + names);
}

void print_demo_expectations(const std::string& name) {
    if (name == "counterexample") {
        emit("expect.equal", true);
        emit("expect.cor3.holds", false);
        emit("expect.note",
             std::string("omega(rho) fixes the design exactly at rho = "
                         "-2cos(2pi/5), so both estimators coincide, while "
                         "W X != 0 keeps the one-shot inclusion from firing"));
        emit("rho", -2.0 * std::cos(2.0 * std::acos(-1.0) / 5.0));
    } else if (name == "rao-zero-gamma") {
        emit("expect.equal", true);
        emit("expect.note",
             std::string("with no design-aligned random effect the equality "
                         "holds for every penalty and every delta_bar"));
    } else if (name == "sur-orthogonal") {
        emit("expect.gap", 0.0);
        emit("expect.note",
             std::string("shared design with orthonormal columns and zero "
                         "penalty: the estimators coincide for every sigma12; "
                         "the three-product condition itself cannot fire on "
                         "nonzero full-rank designs and reports not established"));
    } else if (name == "sar-lattice") {
        emit("expect.equal", false);
        emit("expect.note",
             std::string("generic lattice instance; the covariance-aware and "
                         "covariance-free estimators differ"));
    } else if (name == "serial-intraclass") {
        emit("expect.cor5.holds", true);
        emit("expect.note",
             std::string("A maps the ones design onto itself, so with zero "
                         "penalty the equality holds for every admissible theta"));
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"general ridge estimators and estimator-equivalence checkers"};
    app.require_subcommand(1);

    Tolerances tol;
    app.add_option("--rank-rtol", tol.rank_rtol,
                   "relative singular value cutoff (0 = auto)");
    app.add_option("--residual-atol", tol.residual_atol,
                   "absolute residual cutoff for matrix equality tests");
    app.add_option("--psd-atol", tol.psd_atol,
                   "eigenvalue cutoff for definiteness tests");

    // ---- check ----
    auto* check = app.add_subcommand("check", "decide estimator equivalence");
    std::string check_x;
    std::string check_k = "zero";
    std::string check_model;
    std::string method = "auto";
    std::string demo_name;
    bool verify = false;
    bool all_rho = false;
    ParameterFlags params;
    double rho_flag = 0.0;
    double sigma12_flag = 0.0;
    double theta_flag = 0.0;
    auto* opt_x = check->add_option("--X", check_x, "design matrix file");
    check->add_option("--K", check_k, "penalty: zero | ridge:l | shrink:d | file");
    auto* opt_model = check->add_option(
        "--model", check_model,
        "explicit:<file|identity> | rao:<g>[:<d>] | sur:<x1>:<x2> | "
        "sar1:<w> | sma1:<w> | serial:<a|preset>");
    check->add_option("--method", method, "thm1 | thm2 | oracle | auto");
    auto* opt_rho = check->add_option("--rho", rho_flag, "spatial coefficient");
    auto* opt_s12 = check->add_option("--sigma12", sigma12_flag, "cross covariance");
    auto* opt_theta = check->add_option("--theta", theta_flag, "serial coefficient");
    check->add_flag("--verify", verify, "cross-check the verdict with the oracle");
    check->add_flag("--all-rho", all_rho,
                    "run the every-admissible-rho condition (sar1/sma1)");
    check->add_option("--demo", demo_name, "use a built-in fixture instead of files");

    // ---- estimate ----
    auto* estimate = app.add_subcommand("estimate", "compute the estimator");
    std::string est_y;
    std::string est_x;
    std::string est_k = "zero";
    std::string est_model;
    bool two_step = false;
    estimate->add_option("--y", est_y, "response vector file")->required();
    auto* est_opt_x = estimate->add_option("--X", est_x, "design matrix file");
    estimate->add_option("--K", est_k, "penalty: zero | ridge:l | shrink:d | file");
    estimate->add_option("--model", est_model, "model spec (see check)")->required();
    estimate->add_flag("--two-step", two_step,
                       "estimate unknown parameters before plugging in");
    estimate->add_option("--rho", rho_flag, "spatial coefficient");
    estimate->add_option("--sigma12", sigma12_flag, "cross covariance");
    estimate->add_option("--theta", theta_flag, "serial coefficient");

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo comparison");
    std::string config_path;
    std::string out_prefix;
    simulate->add_option("--config", config_path, "key-value config file")->required();
    simulate->add_option("--out", out_prefix, "output prefix")->required();

    // ---- demo ----
    auto* demo = app.add_subcommand("demo", "materialize a named fixture");
    std::string demo_which;
    std::string demo_dir = ".";
    demo->add_option("--name", demo_which, "fixture name")->required();
    demo->add_option("--dir", demo_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitComputed : kExitUsage;
    }

    try {
        tol.validate();
        if (check->parsed()) {
            if (opt_rho->count() > 0) {
                params.rho = rho_flag;
            }
            if (opt_s12->count() > 0) {
                params.sigma12 = sigma12_flag;
            }
            if (opt_theta->count() > 0) {
                params.theta = theta_flag;
            }

            CheckerInputs inputs;
            Matrix k;
            if (!demo_name.empty()) {
                DemoFiles d = materialize_demo(demo_name, ".", false, tol);
                inputs = std::move(d.inputs);
                k = d.k;
                params = d.params;
                emit("demo", demo_name);
            } else {
                if (opt_model->count() == 0) {
                    throw UsageError("--model is required (or use --demo)");
                }
                const ModelSpec spec = parse_model_flag(check_model);
                inputs = assemble_model(
                    spec, opt_x->count() > 0 ? std::optional<std::string>(check_x)
                                             : std::nullopt,
                    params, tol);
                k = parse_penalty(check_k).materialize(inputs.x, tol);
            }
            emit("model", std::string(model_kind_name(inputs.model)));
            emit("method", method);
            emit_family_conditions(inputs, k, params, all_rho, tol);
            run_method(method, inputs, k, verify, tol);
            return kExitComputed;
        }

        if (estimate->parsed()) {
            ParameterFlags est_params;
            if (estimate->count("--rho") > 0) {
                est_params.rho = rho_flag;
            }
            if (estimate->count("--sigma12") > 0) {
                est_params.sigma12 = sigma12_flag;
            }
            if (estimate->count("--theta") > 0) {
                est_params.theta = theta_flag;
            }
            const ModelSpec spec = parse_model_flag(est_model);
            CheckerInputs inputs = assemble_model(
                spec,
                est_opt_x->count() > 0 ? std::optional<std::string>(est_x)
                                       : std::nullopt,
                est_params, tol);
            const Vector y = load_vector_file(est_y);
            const Matrix k = parse_penalty(est_k).materialize(inputs.x, tol);

            Vector beta;
            std::map<std::string, double> fitted;
            if (two_step) {
                TwoStepResult result = two_step_estimate(inputs.model, y, inputs.x, k, tol);
                beta = result.beta_hat;
                fitted = result.fitted;
            } else {
                if (!inputs.omega) {
                    throw UsageError(
                        "model parameters unknown; pass the parameter flag or --two-step");
                }
                beta = gr_estimate(inputs.x, *inputs.omega, k, y, tol);
            }
            for (Index i = 0; i < beta.size(); ++i) {
                emit("beta_hat." + std::to_string(i + 1), beta(i));
            }
            for (const auto& [name, value] : fitted) {
                emit("fitted." + name, value);
            }
            return kExitComputed;
        }

        if (simulate->parsed()) {
            if (!std::filesystem::exists(config_path)) {
                throw UsageError(config_path + ": no such file");
            }
            const McConfig cfg = load_mc_config(config_path);
            const auto reports = run_sweep(cfg);
            const std::string table_path = out_prefix + "_report.txt";
            const std::string machine_path = out_prefix + "_report.tsv";
            {
                std::ofstream table(table_path);
                table << human_report(reports);
                std::ofstream machine(machine_path);
                machine << machine_report(reports);
            }
            emit("seed", std::to_string(cfg.seed));
            emit("replications", std::to_string(cfg.replications));
            emit("runs", std::to_string(reports.size()));
            long failures = 0;
            for (const auto& r : reports) {
                failures += r.failures;
            }
            emit("failures", std::to_string(failures));
            emit("table", table_path);
            emit("machine", machine_path);
            return kExitComputed;
        }

        if (demo->parsed()) {
            std::filesystem::create_directories(demo_dir);
            materialize_demo(demo_which, demo_dir, true, tol);
            emit("demo", demo_which);
            emit("dir", demo_dir);
            print_demo_expectations(demo_which);
            return kExitComputed;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    return run_cli(argc, argv);
}
