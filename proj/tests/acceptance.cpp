// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (all when none are given)

#include "xva/analytic.hpp"
#include "xva/deep_bsde.hpp"
#include "xva/gradcheck.hpp"
#include "xva/mc_linear.hpp"
#include "xva/numeric.hpp"
#include "xva/pde1d.hpp"
#include "xva/rng.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace xva;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// r = 0.05, sigma = 0.2, K = x0 = 1, T = 10, R = 0.5, lambda = 0.3.
struct TenYearPut {
    Dynamics dyn = Dynamics::gbm(1, 0.05, 0.2, 1.0);
    Claim claim = Claim::basket_put(1, 1.0, 0.05, 10.0, CloseoutFunction::recovery(0.5));
    HazardModel hazard = HazardModel::constant(0.3);
    pde::GridSpec grid = pde::GridSpec::for_gbm(0.05, 0.2, 1.0, 10.0, 2000, 2000);
};

// ---------------------------------------------------------------- 1
Outcome cva_gap_point() {
    const auto t0 = std::chrono::steady_clock::now();
    const double e = analytic::figure1_relative_error(0.3, 0.5, 10.0);
    const TenYearPut f;
    const Claim claim = f.claim;
    double max_gap = 0.0;
    std::vector<double> gaps(40);
    std::vector<double> pde_vals(40);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < 40; ++i) {
        const double lambda = 0.01 + i * (0.39 / 39.0);
        const pde::CvaCurves c = pde::cva_curves(claim, f.dyn, HazardModel::constant(lambda), f.grid);
        const double x0 = 1.0;
        const double pi = c.cva.value_at(0, x0), pi0 = c.cva_riskfree.value_at(0, x0);
        pde_vals[i] = (pi - pi0) / pi;
        gaps[i] = std::abs(pde_vals[i] - analytic::figure1_relative_error(lambda, 0.5, 10.0));
    }
    for (int i = 0; i < 40; ++i) max_gap = std::max(max_gap, gaps[i]);
    const double pde_at_03 = pde_vals[29];
    const double secs = since(t0);
    const bool pass = std::abs(e - 0.38849) <= 1e-4 && std::abs(pde_at_03 - e) < 2e-3 && max_gap < 2e-3 && secs < 30.0;
    return {pass, "analytic e(0.3) = " + num(e) + " (target 0.38849 +- 1e-4), pde e(0.3) = " + num(pde_at_03) +
                      ", max |analytic - pde| over 40 lambdas = " + num(max_gap) + " (< 2e-3), " + num(secs) +
                      " s (< 30 s)"};
}

// ---------------------------------------------------------------- 2
double ordering_violation(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const pde::GridSpec& grid) {
    const pde::CvaCurves c = pde::cva_curves(claim, dyn, hazard, grid, 1e-6);
    const pde::SandwichBounds b = pde::sandwich_bounds(claim, dyn, hazard, grid, c.V);
    double w = 0.0;
    w = std::max(w, pde::max_excess(b.lower, c.V));
    w = std::max(w, pde::max_excess(c.V, c.V0));
    w = std::max(w, pde::max_excess(c.V0, c.U));
    w = std::max(w, pde::max_excess(c.cva_riskfree, c.cva));
    for (double v : c.cva_riskfree.values()) w = std::max(w, -v);
    return w;
}

Outcome unilateral_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const TenYearPut f;
    double worst = ordering_violation(f.claim, f.dyn, f.hazard, f.grid);
    CounterRng rng(20240517);
    for (int i = 0; i < 5; ++i) {
        const double r = 0.08 * rng.uniform(0, i, 0), mu = 0.1 * rng.uniform(0, i, 1);
        const double sigma = 0.1 + 0.3 * rng.uniform(0, i, 2), lambda = 0.05 + 0.45 * rng.uniform(0, i, 3);
        const double R = 0.9 * rng.uniform(0, i, 4), T = 0.5 + 4.5 * rng.uniform(0, i, 5);
        const double x0 = 0.7 + 0.6 * rng.uniform(0, i, 6);
        const Claim claim = Claim::basket_put(1, 1.0, r, T, CloseoutFunction::recovery(R));
        const pde::GridSpec grid = pde::GridSpec::for_gbm(mu, sigma, x0, T, 1000, 1000);
        worst = std::max(worst, ordering_violation(claim, Dynamics::gbm(1, mu, sigma, x0), HazardModel::constant(lambda), grid));
    }
    const double secs = since(t0);
    return {worst <= 1e-6 && secs < 120.0, "ten-year put + 5 random draws: largest ordering violation " +
                                               num(worst) + " (<= 1e-6), " + num(secs) + " s (< 120 s)"};
}

// ---------------------------------------------------------------- 3
Outcome picard_behaviour() {
    const auto t0 = std::chrono::steady_clock::now();
    const TenYearPut f;
    pde::ValueGrid V1(f.grid);
    pde::PicardOptions opts;
    opts.observer = [&](int k, const pde::ValueGrid& g) {
        if (k == 1) V1 = g;
    };
    const pde::PicardReport rep = pde::picard_solve(f.claim, f.dyn, f.hazard, f.grid, opts);
    const pde::ValueGrid V0 = pde::riskfree_closeout_solve(f.claim, f.dyn, f.hazard, f.grid);
    const double v1_gap = pde::sup_norm_diff(V1, V0);
    bool decreasing = true;
    for (std::size_t k = 1; k < rep.sup_norm_deltas.size(); ++k) decreasing &= rep.sup_norm_deltas[k] < rep.sup_norm_deltas[k - 1];
    const pde::ValueGrid again = pde::picard_step(f.claim, f.dyn, f.hazard, f.grid, *rep.solution);
    const double residual = pde::sup_norm_diff(again, *rep.solution);
    const double secs = since(t0);
    return {rep.converged && v1_gap < 1e-10 && decreasing && residual < 1e-8 && secs < 60.0,
            "|V^1 - V0| = " + num(v1_gap) + " (< 1e-10), " + std::to_string(rep.iterations) + " iterations, deltas " +
                (decreasing ? "strictly decreasing" : "NOT decreasing") + ", fixed-point residual " + num(residual) +
                " (< 1e-8), " + num(secs) + " s (< 60 s)"};
}

// ---------------------------------------------------------------- 4
Outcome bilateral_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    const double tol = 1e-6;
    const Dynamics dyn = Dynamics::gbm(1, 0.05, 0.2, 1.0);
    Claim claim = Claim::forward(1, 1.0, 0.05, 5.0, CloseoutFunction::recovery(0.4));
    claim.investor_closeout = CloseoutFunction::investor_recovery(0.3);
    const HazardModel hazard = HazardModel::constant(0.2, 0.1);
    const pde::GridSpec grid = pde::GridSpec::for_gbm(0.05, 0.2, 1.0, 5.0, 2000, 2000);
    const pde::PicardReport uni = pde::picard_solve(claim, dyn, hazard, grid);
    const pde::SandwichBounds b = pde::sandwich_bounds(claim, dyn, hazard, grid, *uni.solution);

    double decrease = 0.0, above_I = 0.0;
    std::optional<pde::ValueGrid> prev;
    pde::PicardOptions opts;
    opts.monotonicity_tol = tol;
    opts.observer = [&](int, const pde::ValueGrid& g) {
        if (prev) decrease = std::max(decrease, pde::max_excess(*prev, g));
        above_I = std::max(above_I, pde::max_excess(g, b.upper));
        prev = g;
    };
    const pde::PicardReport rep = pde::bilateral_picard_solve(claim, dyn, hazard, grid, *uni.solution, opts);
    const double below_psi0 = pde::max_excess(*rep.initial, *rep.solution);
    double vmin = 0.0, vmax = 0.0;
    for (double v : rep.solution->slice(0)) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const bool sign_change = vmin < 0.0 && vmax > 0.0;
    const double secs = since(t0);
    return {rep.converged && sign_change && decrease <= tol && below_psi0 <= tol && above_I <= tol && secs < 120.0,
            "forward payoff (values in [" + num(vmin) + ", " + num(vmax) + "]), " + std::to_string(rep.iterations) +
                " iterations: max decrease " + num(decrease) + ", max (Psi0 - Psi) " + num(below_psi0) +
                ", max (Psi^k - I) " + num(above_I) + " (all <= 1e-6), " + num(secs) + " s (< 120 s)"};
}

// ---------------------------------------------------------------- 5
Outcome reduced_form() {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(5150);
    double worst = 0.0;
    std::string zs;
    for (int i = 0; i < 5; ++i) {
        analytic::ConstParams p;
        p.lambda = 0.05 + 0.45 * rng.uniform(0, i, 0);
        p.R = 0.9 * rng.uniform(0, i, 1);
        p.sigma = 0.1 + 0.3 * rng.uniform(0, i, 2);
        p.x0 = 0.6 + 0.6 * rng.uniform(0, i, 3);
        p.T = 0.5 + 2.5 * rng.uniform(0, i, 4);
        const Claim c = Claim::basket_put(1, p.K, p.r, p.T, CloseoutFunction::recovery(p.R));
        const Dynamics dyn = Dynamics::gbm(1, p.mu, p.sigma, p.x0);
        const HazardModel h = HazardModel::constant(p.lambda);
        const Field Z([p](double t, StateView x) { return p.R * analytic::gbm_put(p, t, x[0]); });
        const TimeGrid g(p.T, 100);
        const auto a = mc::estimate_predefault_value(c, dyn, h, Z, g, 100000, 100 + i);
        const auto b = mc::estimate_by_default_sampling(c, dyn, h, Z, g, 100000, 100 + i);
        const double z = std::abs(a.mean - b.mean) / std::hypot(a.std_error, b.std_error);
        worst = std::max(worst, z);
        zs += (zs.empty() ? "" : " ") + num(z);
    }
    const double secs = since(t0);
    return {worst <= 3.0 && secs < 60.0, "|reduced form - default sampling| / combined SE per configuration: " + zs +
                                             " (all <= 3), L = 1e5, " + num(secs) + " s (< 60 s)"};
}

// ---------------------------------------------------------------- 6-8, 10
struct Basket {
    int d;
    Dynamics dyn;
    Claim claim;
    HazardModel hazard = HazardModel::constant(0.1);
    explicit Basket(int dim)
        : d(dim), dyn(Dynamics::gbm(dim, 0.05, 0.2, 0.8)), claim(Claim::basket_put(dim, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4))) {}
};

std::string trial_list(const dbsde::TrialSummary& s) {
    std::string out;
    for (double v : s.values) out += (out.empty() ? "" : " ") + num(v);
    return out;
}

std::map<int, dbsde::TrialSummary> replacement_trials;

const dbsde::TrialSummary& replacement_d(int d) {
    auto it = replacement_trials.find(d);
    if (it != replacement_trials.end()) return it->second;
    const Basket b(d);
    dbsde::TrainConfig cfg;
    return replacement_trials[d] = dbsde::value_replacement(b.claim, b.dyn, b.hazard, cfg, 5);
}

Outcome dbsde_values() {
    const Basket b5(5);
    const auto u = mc::estimate_riskfree_value(b5.claim, b5.dyn, TimeGrid(1.0, 100), 1000000, 7);
    const double oracle = std::exp(-0.06) * u.mean;
    const dbsde::TrialSummary& s5 = replacement_d(5);
    const dbsde::TrialSummary& s10 = replacement_d(10);
    const double e5p = std::abs(s5.mean / 0.7285 - 1), e5o = std::abs(s5.mean / oracle - 1);
    const double e10 = std::abs(s10.mean / 1.4548 - 1);
    const bool pass = s5.failures.empty() && s10.failures.empty() && e5p <= 0.01 && e5o <= 0.01 && e10 <= 0.01 &&
                      s5.total_seconds <= 1800 && s10.total_seconds <= 1800;
    return {pass, "d=5: " + num(s5.mean) + " +- " + num(s5.std) + " [" + trial_list(s5) + "], vs 0.7285 " +
                      num(100 * e5p) + "%, vs e^-0.06 U_MC = " + num(oracle) + " (U_MC " + num(u.mean) + " +- " +
                      num(u.std_error) + ") " + num(100 * e5o) + "%, " + num(s5.total_seconds) + " s; d=10: " +
                      num(s10.mean) + " +- " + num(s10.std) + " vs 1.4548 " + num(100 * e10) + "%, " +
                      num(s10.total_seconds) + " s (1% each, <= 1800 s per dimension)"};
}

Outcome dbsde_cva() {
    const Basket b(5);
    dbsde::TrainConfig cfg;
    const auto t0 = std::chrono::steady_clock::now();
    const dbsde::TrialSummary& repl = replacement_d(5);
    const dbsde::TrialSummary rf = dbsde::value_replacement(b.claim, b.dyn, b.hazard.without_default(), cfg, 5);
    std::vector<double> diff;
    for (std::size_t i = 0; i < rf.values.size() && i < repl.values.size(); ++i) diff.push_back(rf.values[i] - repl.values[i]);
    const double cva = rf.mean - repl.mean;
    const double rel = std::abs(cva / 0.04487 - 1);
    const double secs = since(t0) + repl.total_seconds;
    return {rf.failures.empty() && rf.seeds == repl.seeds && rel <= 0.10 && secs <= 3600,
            "cva = " + num(rf.mean) + " - " + num(repl.mean) + " = " + num(cva) + " (paired trial std " +
                num(diff.size() >= 2 ? sample_stats(diff).std_dev : 0.0) + "), vs 0.04487 " + num(100 * rel) +
                "% (<= 10%), " + num(secs) + " s (<= 3600 s)"};
}

Outcome pipeline_timing() {
    const Basket b(5);
    dbsde::TrainConfig cfg;
    cfg.iters = 300;
    cfg.early_stop = false;
    cfg.seed = 300;
    const dbsde::TrialSummary repl = dbsde::value_replacement(b.claim, b.dyn, b.hazard, cfg, 2);
    const dbsde::TrialSummary rf = dbsde::value_riskfree_closeout(b.claim, b.dyn, b.hazard, cfg, 2);
    const double ratio = rf.total_seconds / repl.total_seconds;
    return {ratio >= 1.8, "risk-free-closeout pipeline " + num(rf.total_seconds) + " s vs replacement " +
                              num(repl.total_seconds) + " s at 300 iterations per network, 2 trials: ratio " + num(ratio) +
                              " (>= 1.8)"};
}

Outcome gradient_checks() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = gradcheck::run_all(0);
    double worst_prim = 0.0, rollout = 0.0;
    bool ok = true;
    std::string failed;
    for (const auto& r : results) {
        ok = ok && r.passed();
        if (!r.passed()) failed += " " + r.name;
        if (r.name.rfind("rollout", 0) == 0) rollout = r.relative_error;
        else worst_prim = std::max(worst_prim, r.relative_error);
    }
    const double secs = since(t0);
    return {ok && secs < 30.0, std::to_string(results.size()) + " cases, worst primitive/LSTM relative error " +
                                   num(worst_prim) + " (< 1e-5), rollout d=1 N=4 L=2 " + num(rollout) + " (< 1e-4), " +
                                   num(secs) + " s (< 30 s)" + (failed.empty() ? "" : ", failed:" + failed)};
}

Outcome trial_spread() {
    const Basket b(5);
    dbsde::TrainConfig cfg;
    cfg.iters = 1500;
    cfg.early_stop = false;
    cfg.seed = 1000;
    const dbsde::TrialSummary lstm = dbsde::value_replacement(b.claim, b.dyn, b.hazard, cfg, 10);
    const dbsde::TrialSummary fc = dbsde::train_multifc_baseline(b.claim, b.dyn, b.hazard, cfg, 10);
    const double ratio = lstm.std / fc.std;
    const double gap = std::abs(lstm.mean - fc.mean) / fc.mean;
    return {lstm.failures.empty() && fc.failures.empty() && ratio <= 1.1,
            "1500 iterations each, 10 trials: single-LSTM " + num(lstm.mean) + " +- " + num(lstm.std) + ", multi-FC " +
                num(fc.mean) + " +- " + num(fc.std) + ", spread ratio " + num(ratio) + " (<= 1.1); mean gap " +
                num(100 * gap) + "%, multi-FC vs 0.7378 " + num(100 * std::abs(fc.mean / 0.7378 - 1)) + "%"};
}

// ---------------------------------------------------------------- 11
std::string run_cli(const std::string& args, const fs::path& out_file, const fs::path& stdout_file) {
    fs::remove(out_file);
    const std::string cmd = std::string(XVA_CLI_PATH) + " --workers 1 --timings off " + args + " > " + stdout_file.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream f(fs::exists(out_file) ? out_file : stdout_file, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return "rc=" + std::to_string(rc) + "\n" + ss.str();
}

Outcome reproducibility() {
    const fs::path dir = fs::temp_directory_path() / "xva_acceptance";
    fs::create_directories(dir);
    const fs::path csv = dir / "out.csv", log = dir / "stdout.txt";
    const std::vector<std::string> commands = {
        "figure1 --steps 6 --out " + csv.string(),
        "--solver.method mc --model.d 5 --solver.mc_paths 20000 value --out " + csv.string(),
        "--solver.method pde --solver.J 400 --solver.Np 400 cva --out " + csv.string(),
        "--model.d 3 --solver.N 20 paths --paths 25 --out " + csv.string(),
        "--solver.J 200 --solver.Np 100 grid --out " + csv.string(),
        "--solver.iters 40 --solver.N 20 --solver.M 2 table --dims 2 --method dbsde --out " + csv.string(),
        "--solver.iters 40 --solver.N 20 --solver.M 2 --solver.method dbsde --model.d 2 cva --out " +
            csv.string(),
    };
    int same = 0;
    std::string bad;
    for (const auto& c : commands) {
        const std::string a = run_cli(c, csv, log), b = run_cli(c, csv, log);
        if (a == b && a.rfind("rc=0\n", 0) == 0) ++same;
        else bad += " [" + c.substr(0, c.find(" --out")) + "]";
    }
    return {same == static_cast<int>(commands.size()),
            std::to_string(same) + "/" + std::to_string(commands.size()) +
                " commands byte-identical on rerun with --workers 1 --timings off" + (bad.empty() ? "" : ", differing:" + bad)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"relative CVA gap", cva_gap_point},
        {"unilateral ordering", unilateral_ordering},
        {"Picard behaviour", picard_behaviour},
        {"bilateral suite", bilateral_suite},
        {"reduced-form validation", reduced_form},
        {"deep BSDE values", dbsde_values},
        {"deep BSDE CVA", dbsde_cva},
        {"pipeline timing ratio", pipeline_timing},
        {"gradient checks", gradient_checks},
        {"trial spread", trial_spread},
        {"reproducibility", reproducibility},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << id << ' ' << (o.pass ? "PASS" : "FAIL") << " [" << criteria[i].first << "] "
                  << o.detail << " {" << num(since(t0)) << " s}" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
