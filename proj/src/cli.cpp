#include "xva/cli.hpp"

#include "xva/analytic.hpp"
#include "xva/config.hpp"
#include "xva/deep_bsde.hpp"
#include "xva/error.hpp"
#include "xva/gradcheck.hpp"
#include "xva/mc_linear.hpp"
#include "xva/numeric.hpp"
#include "xva/pde1d.hpp"
#include "xva/simulate.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace xva::cli {

namespace {

struct Estimate {
    double value = 0.0;
    double std = 0.0;
    double seconds = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

analytic::ConstParams const_params(const RunConfig& c) {
    analytic::ConstParams p;
    p.r = c.r;
    p.mu = c.mu;
    p.sigma = c.sigma;
    p.lambda = c.lambda;
    p.R = c.R;
    p.K = c.K;
    p.x0 = c.x0;
    p.T = c.T;
    p.d = c.d;
    return p;
}

Scheme scheme_of(const RunConfig& c) { return c.scheme == "exact" ? Scheme::gbm_exact : Scheme::euler; }

dbsde::TrainConfig train_config(const RunConfig& c) {
    dbsde::TrainConfig t;
    t.N = c.N;
    t.L = c.L;
    t.iters = c.iters;
    t.adam.lr = c.lr;
    t.seed = c.seed;
    t.scheme = scheme_of(c);
    t.early_stop = c.early_stop;
    t.min_iters = c.min_iters;
    t.arch = c.method == "dbsde-multifc" ? dbsde::Architecture::multi_fc : dbsde::Architecture::lstm;
    return t;
}

/// V / U for a nonnegative claim with constant parameters under each convention.
double linearized_factor(const RunConfig& c, const std::string& conv) {
    const double e = std::exp(-c.lambda * c.T);
    if (conv == "replacement") return std::exp(-(1.0 - c.R) * c.lambda * c.T);
    if (conv == "riskfree") return c.R * (1.0 - e) + e;
    return 1.0;
}

pde::ValueGrid pde_solution(const RunConfig& c, const std::string& conv) {
    const Dynamics dyn = c.dynamics();
    const Claim claim = c.claim();
    const HazardModel hazard = c.hazard();
    const pde::GridSpec grid = pde::GridSpec::for_gbm(c.mu, c.sigma, c.x0, c.T, c.J, c.Np);
    if (conv == "none") return pde::riskfree_value_solve(claim, dyn, grid);
    if (conv == "riskfree") return pde::riskfree_closeout_solve(claim, dyn, hazard, grid);
    pde::PicardOptions opts;
    opts.tol = c.tolerance;
    pde::PicardReport rep = hazard.investor ? pde::bilateral_picard_solve(claim, dyn, hazard, grid, opts)
                                            : pde::picard_solve(claim, dyn, hazard, grid, opts);
    if (!rep.converged)
        throw SolverError("picard: no convergence within " + std::to_string(rep.iterations) + " iterations");
    return std::move(*rep.solution);
}

Estimate from_summary(const dbsde::TrialSummary& s) { return {s.mean, s.std, s.total_seconds}; }

Estimate value_of(const RunConfig& c, const std::string& conv) {
    c.validate();
    const auto start = std::chrono::steady_clock::now();
    Estimate e;
    if (c.method == "analytic") {
        const auto p = const_params(c);
        const double U = analytic::gbm_put(p, 0.0, c.x0);
        e.value = conv == "none"       ? U
                  : conv == "riskfree" ? analytic::riskfree_closeout_value(p, U, 0.0)
                                       : analytic::replacement_value_nonneg(p, U, 0.0);
    } else if (c.method == "mc") {
        mc::McOptions opts;
        opts.scheme = scheme_of(c);
        const auto est = mc::estimate_riskfree_value(c.claim(), c.dynamics(), TimeGrid(c.T, c.N),
                                                     static_cast<std::size_t>(c.mc_paths), c.seed, opts);
        const double f = linearized_factor(c, conv);
        e.value = f * est.mean;
        e.std = f * est.std_error;
    } else if (c.method == "pde") {
        e.value = pde_solution(c, conv).value_at(0, c.x0);
    } else {
        const Dynamics dyn = c.dynamics();
        const Claim claim = c.claim();
        const HazardModel hazard = c.hazard();
        const auto tc = train_config(c);
        if (conv == "none") e = from_summary(dbsde::value_replacement(claim, dyn, hazard.without_default(), tc, c.M));
        else if (conv == "riskfree") e = from_summary(dbsde::value_riskfree_closeout(claim, dyn, hazard, tc, c.M));
        else e = from_summary(dbsde::value_replacement(claim, dyn, hazard, tc, c.M));
        return e;
    }
    e.seconds = seconds_since(start);
    return e;
}

struct CvaEstimate {
    Estimate riskfree;
    Estimate value;
    Estimate cva;
};

CvaEstimate cva_of(const RunConfig& c) {
    c.validate();
    require(c.convention != "none", "cva needs solver.closeout-convention = replacement or riskfree");
    if ((c.method == "dbsde" || c.method == "dbsde-multifc") && c.convention == "replacement") {
        const auto r = dbsde::cva_solve(c.claim(), c.dynamics(), c.hazard(), train_config(c), c.M);
        return {from_summary(r.riskfree), from_summary(r.replacement),
                {r.cva, r.cva_std, r.riskfree.total_seconds + r.replacement.total_seconds}};
    }
    CvaEstimate out;
    out.riskfree = value_of(c, "none");
    out.value = value_of(c, c.convention);
    out.cva.value = out.riskfree.value - out.value.value;
    if (c.method == "mc") out.cva.std = (1.0 - linearized_factor(c, c.convention)) * out.riskfree.std;
    else out.cva.std = std::hypot(out.riskfree.std, out.value.std);
    out.cva.seconds = out.riskfree.seconds + out.value.seconds;
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    f << text;
    if (!f) throw InvalidArgument("failed writing '" + path + "'");
}

/// Writes to `path`, or to `out` when path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) out << text;
    else write_file(path, text);
}

std::string fmt(double v) { return format_shortest(v); }

struct Figure1Options {
    double lambda_min = 0.01;
    double lambda_max = 0.4;
    int steps = 40;
    double R = 0.5;
    double T = 10.0;
    std::string out;
};

std::string figure1_csv(const RunConfig& c, const Figure1Options& o) {
    require(o.steps >= 2, "figure1: --steps must be at least 2");
    require(o.lambda_min >= 0.0 && o.lambda_max > o.lambda_min, "figure1: need 0 <= lambda-min < lambda-max");
    require(o.R >= 0.0 && o.R <= 1.0, "figure1: R must lie in [0, 1]");
    require(o.T > 0.0, "figure1: T must be positive");
    // Put with r = 0.05, sigma = 0.2, K = x0 = 1 under the pricing measure.
    const double r = 0.05, sigma = 0.2, x0 = 1.0, K = 1.0;
    const Dynamics dyn = Dynamics::gbm(1, r, sigma, x0);
    const Claim claim = Claim::basket_put(1, K, r, o.T, CloseoutFunction::recovery(o.R));
    const pde::GridSpec grid = pde::GridSpec::for_gbm(r, sigma, x0, o.T, c.J, c.Np);

    const int n = o.steps;
    std::vector<double> lambdas(n), exact(n), numeric(n);
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        lambdas[i] = o.lambda_min + (o.lambda_max - o.lambda_min) * i / (n - 1);
        try {
            exact[i] = analytic::figure1_relative_error(lambdas[i], o.R, o.T);
            pde::PicardOptions opts;
            opts.tol = c.tolerance;
            const auto curves = pde::cva_curves(claim, dyn, HazardModel::constant(lambdas[i]), grid, 1e-6, opts);
            const double pi = curves.cva.value_at(0, x0);
            const double pi0 = curves.cva_riskfree.value_at(0, x0);
            numeric[i] = pi > 0.0 ? (pi - pi0) / pi : 0.0;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (int i = 0; i < n; ++i) {
        if (errors[i].empty()) continue;
        throw SolverError("figure1: lambda = " + fmt(lambdas[i]) + ": " + errors[i]);
    }
    std::ostringstream csv;
    csv << "lambda,relative_error_analytic,relative_error_pde\n";
    for (int i = 0; i < n; ++i) csv << fmt(lambdas[i]) << ',' << fmt(exact[i]) << ',' << fmt(numeric[i]) << '\n';
    return csv.str();
}

struct ValidateOptions {
    std::string kind = "recovery";
    double R = 0.4;
    double pos_slope = 1.0;
    double neg_slope = 1.0;
    std::string side = "counterparty";
    std::size_t samples = 10000;
    double y_range = 10.0;
};

int validate_closeout_cmd(const RunConfig& c, const ValidateOptions& o, std::ostream& out) {
    CloseoutFunction f = CloseoutFunction::identity();
    const CloseoutSide side = o.side == "investor" ? CloseoutSide::investor : CloseoutSide::counterparty;
    if (o.kind == "recovery") f = CloseoutFunction::recovery(o.R);
    else if (o.kind == "investor") f = CloseoutFunction::investor_recovery(o.R);
    else if (o.kind == "identity") f = CloseoutFunction::identity(side);
    else f = CloseoutFunction(PiecewiseLinearCloseout{o.pos_slope, o.neg_slope}, side);
    require(o.samples >= 1, "validate-closeout: --samples must be positive");
    require(o.y_range > 0.0, "validate-closeout: --y-range must be positive");

    SampleBox box;
    box.t_max = c.T;
    box.x_min.assign(static_cast<std::size_t>(c.d), 0.0);
    box.x_max.assign(static_cast<std::size_t>(c.d), 2.0 * c.x0);
    box.y_min = -o.y_range;
    box.y_max = o.y_range;
    const CloseoutReport rep = validate_closeout(f, box, o.samples, c.seed);
    if (rep.ok()) {
        out << "closeout ok: " << o.samples << " samples, no violations\n";
        return exit_ok;
    }
    out << "closeout violates incentive compatibility: " << rep.violations.size() << " violations\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(rep.violations.size(), 10); ++i) {
        const auto& v = rep.violations[i];
        out << "  " << to_string(v.kind) << " t=" << fmt(v.t) << " y1=" << fmt(v.y1) << " y2=" << fmt(v.y2)
            << " lhs=" << fmt(v.lhs) << " rhs=" << fmt(v.rhs) << '\n';
    }
    return exit_invalid;
}

std::string summary_row(const RunConfig& c, const std::string& closeout, const Estimate& e, bool timings) {
    std::ostringstream s;
    dbsde::write_summary_csv(s, {{c.d, c.method, closeout, e.value, e.std, e.seconds}}, timings);
    return s.str();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Counterparty-risk valuation: analytic, Monte Carlo, finite-difference and deep BSDE solvers", "xva"};
    app.require_subcommand(1);

    std::string config_path;
    int workers = 0;
    std::string timings = "on";
    app.add_option("--config", config_path, "INI config file");
    app.add_option("--workers", workers, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--timings", timings, "write measured seconds (on) or 0 (off) in CSV output")
        ->check(CLI::IsMember({"on", "off"}));
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_options;
    for (const auto& key : config_keys()) flag_options[key] = app.add_option("--" + key, flag_values[key], "config key " + key);

    std::string out_path;
    auto* value_cmd = app.add_subcommand("value", "value the configured claim");
    value_cmd->add_option("--out", out_path, "summary CSV path");
    auto* cva_cmd = app.add_subcommand("cva", "risk-free value, pre-default value and CVA");
    cva_cmd->add_option("--out", out_path, "summary CSV path");

    Figure1Options f1;
    auto* fig_cmd = app.add_subcommand("figure1", "relative CVA underestimate of the risk-free closeout over lambda");
    fig_cmd->add_option("--lambda-min", f1.lambda_min);
    fig_cmd->add_option("--lambda-max", f1.lambda_max);
    fig_cmd->add_option("--steps", f1.steps);
    fig_cmd->add_option("--R", f1.R);
    fig_cmd->add_option("--T", f1.T);
    fig_cmd->add_option("--out", f1.out, "CSV path (stdout if omitted)");

    std::vector<int> dims{5};
    std::string table_method = "dbsde";
    std::string table_closeout = "replacement";
    std::string table_out;
    auto* table_cmd = app.add_subcommand("table", "value or CVA per dimension");
    table_cmd->add_option("--dims", dims)->delimiter(',');
    table_cmd->add_option("--method", table_method)
        ->check(CLI::IsMember({"analytic", "mc", "pde", "dbsde", "dbsde-multifc"}));
    table_cmd->add_option("--closeout", table_closeout)->check(CLI::IsMember({"replacement", "riskfree", "none", "cva"}));
    table_cmd->add_option("--out", table_out, "CSV path (stdout if omitted)");

    ValidateOptions vo;
    auto* val_cmd = app.add_subcommand("validate-closeout", "sample the incentive-compatibility conditions");
    val_cmd->add_option("--kind", vo.kind)->check(CLI::IsMember({"recovery", "investor", "identity", "linear"}));
    val_cmd->add_option("--R", vo.R);
    val_cmd->add_option("--pos-slope", vo.pos_slope);
    val_cmd->add_option("--neg-slope", vo.neg_slope);
    val_cmd->add_option("--side", vo.side)->check(CLI::IsMember({"counterparty", "investor"}));
    val_cmd->add_option("--samples", vo.samples);
    val_cmd->add_option("--y-range", vo.y_range);

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference checks of the tape gradients");

    std::size_t n_paths = 10;
    std::string paths_out;
    auto* paths_cmd = app.add_subcommand("paths", "simulate factor paths to CSV");
    paths_cmd->add_option("--paths", n_paths);
    paths_cmd->add_option("--out", paths_out, "CSV path (stdout if omitted)");

    std::string grid_out;
    auto* grid_cmd = app.add_subcommand("grid", "finite-difference value grid to CSV (d = 1)");
    grid_cmd->add_option("--out", grid_out, "CSV path (stdout if omitted)");

    for (auto* sub : {value_cmd, cva_cmd, fig_cmd, table_cmd, val_cmd, grad_cmd, paths_cmd, grid_cmd}) sub->fallthrough();

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_invalid;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        if (const char* env = std::getenv("XVA_SEED")) {
            try {
                set_key(cfg, "solver.seed", env);
            } catch (const InvalidArgument& e) {
                throw InvalidArgument(std::string("XVA_SEED: ") + e.what());
            }
        }
        for (const auto& key : config_keys())
            if (flag_options[key]->count() > 0) set_key(cfg, key, flag_values[key]);
        if (workers > 0) omp_set_num_threads(workers);
        const bool with_timings = timings == "on";

        if (value_cmd->parsed()) {
            const Estimate e = value_of(cfg, cfg.convention);
            out << "value " << fmt(e.value) << " std " << fmt(e.std) << " (method " << cfg.method << ", closeout "
                << cfg.convention << ", d " << cfg.d << ")\n";
            if (!out_path.empty()) write_file(out_path, summary_row(cfg, cfg.convention, e, with_timings));
        } else if (cva_cmd->parsed()) {
            const CvaEstimate e = cva_of(cfg);
            out << "riskfree_value " << fmt(e.riskfree.value) << " std " << fmt(e.riskfree.std) << '\n'
                << "predefault_value " << fmt(e.value.value) << " std " << fmt(e.value.std) << '\n'
                << "cva " << fmt(e.cva.value) << " std " << fmt(e.cva.std) << " (method " << cfg.method
                << ", closeout " << cfg.convention << ", d " << cfg.d << ")\n";
            if (!out_path.empty()) {
                std::ostringstream csv;
                dbsde::write_summary_csv(csv,
                                         {{cfg.d, cfg.method, "none", e.riskfree.value, e.riskfree.std, e.riskfree.seconds},
                                          {cfg.d, cfg.method, cfg.convention, e.value.value, e.value.std, e.value.seconds},
                                          {cfg.d, cfg.method, "cva-" + cfg.convention, e.cva.value, e.cva.std, e.cva.seconds}},
                                         with_timings);
                write_file(out_path, csv.str());
            }
        } else if (fig_cmd->parsed()) {
            emit(f1.out, figure1_csv(cfg, f1), out);
        } else if (table_cmd->parsed()) {
            require(!dims.empty(), "table: --dims must list at least one dimension");
            std::ostringstream csv;
            csv << "dim,value,std,seconds\n";
            for (int d : dims) {
                RunConfig c = cfg;
                c.d = d;
                c.method = table_method;
                Estimate e;
                if (table_closeout == "cva") {
                    if (c.convention == "none") c.convention = "replacement";
                    e = cva_of(c).cva;
                } else {
                    c.convention = table_closeout;
                    e = value_of(c, table_closeout);
                }
                csv << d << ',' << fmt(e.value) << ',' << fmt(e.std) << ',' << fmt(with_timings ? e.seconds : 0.0) << '\n';
            }
            emit(table_out, csv.str(), out);
        } else if (val_cmd->parsed()) {
            return validate_closeout_cmd(cfg, vo, out);
        } else if (grad_cmd->parsed()) {
            bool ok = true;
            for (const auto& r : gradcheck::run_all(cfg.seed)) {
                out << r.name << " relative_error " << fmt(r.relative_error) << " tolerance " << fmt(r.tolerance)
                    << (r.passed() ? " PASS" : " FAIL") << '\n';
                ok = ok && r.passed();
            }
            return ok ? exit_ok : exit_solver;
        } else if (paths_cmd->parsed()) {
            RunConfig c = cfg;
            c.method = "mc";
            c.validate();
            require(n_paths >= 1, "paths: --paths must be positive");
            const TimeGrid grid(cfg.T, cfg.N);
            const PathBatch batch = simulate(scheme_of(cfg), cfg.dynamics(), grid, n_paths, cfg.seed);
            std::ostringstream csv;
            write_paths_csv(csv, batch, grid);
            emit(paths_out, csv.str(), out);
        } else if (grid_cmd->parsed()) {
            RunConfig c = cfg;
            c.method = "pde";
            c.validate();
            std::ostringstream csv;
            pde_solution(c, c.convention).write_csv(csv);
            emit(grid_out, csv.str(), out);
        }
        return exit_ok;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return exit_solver;
    } catch (const std::exception& e) {
        err << "solver failure: " << e.what() << '\n';
        return exit_solver;
    }
}

} // namespace xva::cli
