#include "xva/pde1d.hpp"

#include "xva/error.hpp"
#include "xva/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace xva::pde {

GridSpec GridSpec::for_gbm(double mu, double sigma, double x0, double T, int J, int Np) {
    require(x0 > 0.0 && sigma > 0.0 && T > 0.0, "grid: GBM domain needs x0 > 0, sigma > 0, T > 0");
    require(J >= 4 && Np >= 1, "grid: need J >= 4 and Np >= 1");
    const double raw = x0 * std::exp((mu + 6.0 * sigma) * std::sqrt(T) + mu * T);
    const int j0 = std::max(1, static_cast<int>(std::floor(J * x0 / raw)));
    return GridSpec{0.0, x0 * J / j0, J, T, Np};
}

void GridSpec::validate() const {
    require(J >= 4, "grid: need at least 4 space intervals");
    require(Np >= 1, "grid: need at least one time step");
    require(x_max > x_min, "grid: x_max must exceed x_min");
    require(T > 0.0, "grid: T must be positive");
}

ValueGrid::ValueGrid(const GridSpec& spec) : spec_(spec) {
    spec_.validate();
    values_.assign((static_cast<std::size_t>(spec.Np) + 1) * (static_cast<std::size_t>(spec.J) + 1), 0.0);
}

double ValueGrid::value_at(int n, double x) const {
    require(n >= 0 && n <= spec_.Np, "value_at: time index out of range");
    require(x >= spec_.x_min && x <= spec_.x_max, "value_at: x outside the grid");
    const double s = (x - spec_.x_min) / spec_.dx();
    const int j = static_cast<int>(std::lround(s));
    if (std::abs(s - j) < 1e-12) return at(n, j);
    const int lo = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, spec_.J - 3);
    double v = 0.0;
    for (int i = 0; i < 4; ++i) {
        double w = 1.0;
        for (int q = 0; q < 4; ++q)
            if (q != i) w *= (s - (lo + q)) / static_cast<double>(i - q);
        v += w * at(n, lo + i);
    }
    return v;
}

void ValueGrid::write_csv(std::ostream& out) const {
    out << "t,x,value\n";
    for (int n = 0; n <= spec_.Np; ++n)
        for (int j = 0; j <= spec_.J; ++j)
            out << format_17g(spec_.t(n)) << ',' << format_17g(spec_.x(j)) << ',' << format_17g(at(n, j)) << '\n';
}

double sup_norm_diff(const ValueGrid& a, const ValueGrid& b) {
    require(a.values().size() == b.values().size(), "sup_norm_diff: grid shapes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double max_excess(const ValueGrid& a, const ValueGrid& b) {
    require(a.values().size() == b.values().size(), "max_excess: grid shapes differ");
    double m = -INFINITY;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, a.values()[i] - b.values()[i]);
    return m;
}

namespace {

/// Tridiagonal matrix factorised for repeated Thomas solves.
struct Factorised {
    std::vector<double> sub_scaled;
    std::vector<double> inv_pivot;
    std::vector<double> super_scaled;

    void factor(const std::vector<double>& lower, const std::vector<double>& diag, const std::vector<double>& upper,
                std::size_t n) {
        sub_scaled.resize(n);
        inv_pivot.resize(n);
        super_scaled.resize(n);
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pivot = diag[i] - (i > 0 ? lower[i] * prev : 0.0);
            if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("finite differences: singular tridiagonal system");
            inv_pivot[i] = 1.0 / pivot;
            sub_scaled[i] = i > 0 ? lower[i] * inv_pivot[i] : 0.0;
            prev = (i + 1 < n ? upper[i] : 0.0) * inv_pivot[i];
            super_scaled[i] = prev;
        }
    }

    void solve(std::span<double> rhs) const {
        const std::size_t n = inv_pivot.size();
        double* __restrict r = rhs.data();
        const double* __restrict ip = inv_pivot.data();
        const double* __restrict lo = sub_scaled.data();
        const double* __restrict up = super_scaled.data();
        for (std::size_t i = 0; i < n; ++i) r[i] *= ip[i];
        double carry = r[0];
        for (std::size_t i = 1; i < n; ++i) r[i] = carry = r[i] - lo[i] * carry;
        carry = r[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) r[i] = carry = r[i] - up[i] * carry;
    }
};

/// Spatial operator rows: (L u)_j = lo_j u_{j-1} + mid_j u_j + hi_j u_{j+1}.
struct Operator {
    std::vector<double> lo, mid, hi;

    void build(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& k,
               const GridSpec& g, UpperBoundary upper) {
        const int J = g.J;
        const double dx = g.dx();
        const double idx2 = 1.0 / (dx * dx);
        const double i2dx = 0.5 / dx;
        lo.assign(J + 1, 0.0);
        mid.assign(J + 1, 0.0);
        hi.assign(J + 1, 0.0);
        mid[0] = -k[0];
        for (int j = 1; j < J; ++j) {
            if (!(a[j] > 0.0)) throw InvalidArgument("finite differences: diffusion coefficient must be positive inside the domain (a_min <= 0 at x = " + std::to_string(g.x(j)) + ")");
            lo[j] = a[j] * idx2 - b[j] * i2dx;
            mid[j] = -2.0 * a[j] * idx2 - k[j];
            hi[j] = a[j] * idx2 + b[j] * i2dx;
        }
        if (upper == UpperBoundary::frozen) {
            mid[J] = -k[J];
        } else {
            // Eliminate u_J = 2 u_{J-1} - u_{J-2} from row J-1.
            lo[J - 1] -= hi[J - 1];
            mid[J - 1] += 2.0 * hi[J - 1];
            hi[J - 1] = 0.0;
        }
    }
};

} // namespace

namespace {

/// Fills `out`; with `compare` set, returns the sup-norm distance to it.
double solve_into(const CauchyProblem& problem, const GridSpec& grid, ThetaScheme scheme, ValueGrid& out,
                  const ValueGrid* compare = nullptr) {
    grid.validate();
    require(static_cast<bool>(problem.coefficients) && static_cast<bool>(problem.terminal),
            "finite differences: coefficients and terminal condition are required");
    require(problem.upper == UpperBoundary::frozen || problem.upper == UpperBoundary::linear,
            "finite differences: unsupported boundary condition");
    require(scheme.theta >= 0.5 && scheme.theta <= 1.0, "finite differences: theta must lie in [1/2, 1]");
    require(scheme.implicit_startup_steps >= 0, "finite differences: negative startup step count");

    const int J = grid.J;
    const int Np = grid.Np;
    const double dt = grid.dt();
    const auto cols = static_cast<std::size_t>(J) + 1;
    const bool linear_top = problem.upper == UpperBoundary::linear;
    const std::size_t unknowns = linear_top ? cols - 1 : cols;

    std::vector<double> xs(cols);
    for (int j = 0; j <= J; ++j) xs[j] = grid.x(j);

    double distance = 0.0;
    {
        auto last = out.slice(Np);
        for (int j = 0; j <= J; ++j) last[j] = problem.terminal(xs[j]);
        if (compare) {
            const auto c = compare->slice(Np);
            for (int j = 0; j <= J; ++j) distance = std::max(distance, std::abs(last[j] - c[j]));
        }
    }

    std::vector<double> a(cols), b(cols), k(cols);
    Operator op_new, op_old;  // at t_n (implicit part) and t_{n+1} (explicit part)
    auto eval_operator = [&](double t, Operator& op) {
        problem.coefficients(t, xs, a, b, k);
        op.build(a, b, k, grid, problem.upper);
    };

    std::vector<double> g_new(cols, 0.0), g_old(cols, 0.0);
    auto eval_source = [&](int n, std::vector<double>& g) {
        if (problem.source) problem.source(n, grid.t(n), xs, g);
    };

    eval_operator(grid.t(Np), op_old);
    eval_source(Np, g_old);
    if (problem.time_homogeneous) op_new = op_old;

    std::vector<double> lower(cols), diag(cols), upper(cols);
    Factorised factor;
    double factored_theta = -1.0;

    for (int n = Np - 1; n >= 0; --n) {
        const int step = Np - 1 - n;
        const double th = step < scheme.implicit_startup_steps ? 1.0 : scheme.theta;
        if (!problem.time_homogeneous) eval_operator(grid.t(n), op_new);
        eval_source(n, g_new);

        if (!problem.time_homogeneous || th != factored_theta) {
            for (std::size_t j = 0; j < unknowns; ++j) {
                lower[j] = -th * dt * op_new.lo[j];
                diag[j] = 1.0 - th * dt * op_new.mid[j];
                upper[j] = -th * dt * op_new.hi[j];
            }
            factor.factor(lower, diag, upper, unknowns);
            factored_theta = th;
        }

        const auto u_old = out.slice(n + 1);
        const auto u = out.slice(n);
        double* __restrict rhs = u.data();
        const double ex = (1.0 - th) * dt;
        const double wn = dt * th, wo = dt * (1.0 - th);
        rhs[0] = u_old[0] + ex * (op_old.mid[0] * u_old[0] + op_old.hi[0] * u_old[1]) + wn * g_new[0] + wo * g_old[0];
        const std::size_t inner = std::min(unknowns, cols - 1);
        for (std::size_t j = 1; j < inner; ++j) {
            const double lu = op_old.lo[j] * u_old[j - 1] + op_old.mid[j] * u_old[j] + op_old.hi[j] * u_old[j + 1];
            rhs[j] = u_old[j] + ex * lu + wn * g_new[j] + wo * g_old[j];
        }
        if (inner < unknowns)
            rhs[J] = u_old[J] + ex * (op_old.lo[J] * u_old[J - 1] + op_old.mid[J] * u_old[J]) + wn * g_new[J] + wo * g_old[J];
        factor.solve(std::span<double>(rhs, unknowns));
        if (linear_top) u[J] = 2.0 * u[J - 1] - u[J - 2];
        double probe = 0.0;
        if (compare) {
            const auto c = compare->slice(n);
            for (std::size_t j = 0; j < cols; ++j) {
                probe += u[j] * 0.0;
                distance = std::max(distance, std::abs(u[j] - c[j]));
            }
        } else {
            for (std::size_t j = 0; j < cols; ++j) probe += u[j] * 0.0;
        }
        if (probe != 0.0)
            throw SolverError("finite differences: non-finite value at time index " + std::to_string(n));

        if (!problem.time_homogeneous) std::swap(op_old, op_new);
        std::swap(g_old, g_new);
    }
    return distance;
}

} // namespace

ValueGrid solve_linear_cauchy(const CauchyProblem& problem, const GridSpec& grid, ThetaScheme scheme) {
    ValueGrid out(grid);
    solve_into(problem, grid, scheme, out);
    return out;
}

namespace {

UpperBoundary default_upper(const Claim& claim, const FdOptions& fd) {
    if (fd.upper) return *fd.upper;
    return claim.kind == PayoffKind::basket_put ? UpperBoundary::frozen : UpperBoundary::linear;
}

void require_one_dimensional(const Dynamics& dyn) {
    require(dyn.dim() == 1, "finite differences: dynamics must be one-dimensional (d = 1)");
}

bool homogeneous(const Dynamics& dyn, const Claim& claim, const HazardModel& hazard, bool with_investor) {
    bool h = dyn.time_homogeneous() && claim.discount.constant_value().has_value() &&
             hazard.counterparty.constant_value().has_value();
    if (with_investor) h = h && hazard.investor && hazard.investor->constant_value().has_value();
    return h;
}

/// a = sigma^2 / 2, b = mu from the 1-D dynamics and k = r + extra discount.
CauchyProblem::CoefficientRow coefficient_row(const Dynamics& dyn, const Claim& claim,
                                              std::function<double(double, StateView)> extra_discount) {
    return [&dyn, &claim, extra_discount](double t, std::span<const double> xs, std::span<double> a,
                                          std::span<double> b, std::span<double> k) {
        const GbmSpec* g = dyn.gbm_spec();
        std::vector<double> sig(static_cast<std::size_t>(dyn.noise_dim()));
        double mu = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            StateView x(&xs[j], 1);
            if (g) {
                const double s = g->sigma[0] * xs[j];
                a[j] = 0.5 * s * s;
                b[j] = g->mu[0] * xs[j];
            } else {
                dyn.drift(t, x, std::span<double>(&mu, 1));
                dyn.diffusion(t, x, sig);
                double s2 = 0.0;
                for (double s : sig) s2 += s * s;
                a[j] = 0.5 * s2;
                b[j] = mu;
            }
            k[j] = claim.discount(t, x) + (extra_discount ? extra_discount(t, x) : 0.0);
        }
    };
}

std::function<double(double)> terminal_of(const Claim& claim) {
    return [&claim](double x) { return claim.payoff(StateView(&x, 1)); };
}

} // namespace

CauchyProblem riskfree_problem(const Claim& claim, const Dynamics& dyn, const FdOptions& fd) {
    require_one_dimensional(dyn);
    CauchyProblem p;
    p.coefficients = coefficient_row(dyn, claim, nullptr);
    if (!(claim.cashflow.constant_value() && *claim.cashflow.constant_value() == 0.0)) {
        p.source = [&claim](int, double t, std::span<const double> xs, std::span<double> out) {
            for (std::size_t j = 0; j < xs.size(); ++j) out[j] = claim.cashflow(t, StateView(&xs[j], 1));
        };
    }
    p.terminal = terminal_of(claim);
    p.time_homogeneous = dyn.time_homogeneous() && claim.discount.constant_value().has_value();
    p.upper = default_upper(claim, fd);
    return p;
}

ValueGrid riskfree_value_solve(const Claim& claim, const Dynamics& dyn, const GridSpec& grid, const FdOptions& fd) {
    return solve_linear_cauchy(riskfree_problem(claim, dyn, fd), grid, fd.scheme);
}

namespace {

/// One Picard sweep into `out`; returns sup |out - previous|.
double picard_step_into(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                        const ValueGrid& previous, const FdOptions& fd, ValueGrid& out) {
    require_one_dimensional(dyn);
    CauchyProblem p;
    p.coefficients = coefficient_row(dyn, claim, [&hazard](double t, StateView x) { return hazard.counterparty(t, x); });
    const auto& c0 = claim.cashflow.constant_value();
    const auto& lambda0 = hazard.counterparty.constant_value();
    const auto& lin = claim.closeout.piecewise_linear();
    if (c0 && lambda0 && lin) {
        const double c = *c0, lp = *lambda0 * lin->pos_slope, ln = *lambda0 * lin->neg_slope;
        p.source = [&previous, c, lp, ln](int n, double, std::span<const double>, std::span<double> out) {
            const auto prev = previous.slice(n);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = c + (prev[j] >= 0.0 ? lp : ln) * prev[j];
        };
    } else {
        p.source = [&](int n, double t, std::span<const double> xs, std::span<double> out) {
            const auto prev = previous.slice(n);
            for (std::size_t j = 0; j < xs.size(); ++j) {
                StateView x(&xs[j], 1);
                out[j] = claim.cashflow(t, x) + hazard.counterparty(t, x) * claim.closeout(t, x, prev[j]);
            }
        };
    }
    p.terminal = terminal_of(claim);
    p.time_homogeneous = homogeneous(dyn, claim, hazard, false);
    p.upper = default_upper(claim, fd);
    return solve_into(p, grid, fd.scheme, out, &previous);
}

} // namespace

ValueGrid picard_step(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                      const ValueGrid& previous, const FdOptions& fd) {
    ValueGrid out(grid);
    picard_step_into(claim, dyn, hazard, grid, previous, fd, out);
    return out;
}

PicardReport picard_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                          const PicardOptions& opts) {
    require(opts.tol > 0.0 && opts.max_iter >= 1, "picard: need tol > 0 and max_iter >= 1");
    PicardReport report;
    ValueGrid prev = riskfree_value_solve(claim, dyn, grid, opts.fd);
    report.initial = prev;
    if (opts.observer) opts.observer(0, prev);
    if (opts.keep_iterates) report.iterates.push_back(prev);

    int rising = 0;
    ValueGrid next(grid);
    for (int k = 1; k <= opts.max_iter; ++k) {
        const double delta = picard_step_into(claim, dyn, hazard, grid, prev, opts.fd, next);
        if (!report.sup_norm_deltas.empty() && delta > report.sup_norm_deltas.back()) ++rising;
        else rising = 0;
        report.sup_norm_deltas.push_back(delta);
        report.iterations = k;
        if (opts.observer) opts.observer(k, next);
        if (opts.keep_iterates) report.iterates.push_back(next);
        std::swap(prev, next);
        if (delta < opts.tol) {
            report.converged = true;
            break;
        }
        if (rising >= 3)
            throw SolverError("picard: sup-norm change increased for 3 consecutive iterations (iteration " +
                              std::to_string(k) + ", delta " + format_shortest(delta) + ")");
    }
    report.solution = std::move(prev);
    return report;
}

ValueGrid riskfree_closeout_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                  const GridSpec& grid, const FdOptions& fd) {
    const ValueGrid U = riskfree_value_solve(claim, dyn, grid, fd);
    return picard_step(claim, dyn, hazard, grid, U, fd);
}

namespace {

ValueGrid difference(const ValueGrid& a, const ValueGrid& b) {
    ValueGrid out(a.spec());
    for (int n = 0; n <= a.spec().Np; ++n) {
        auto o = out.slice(n);
        auto x = a.slice(n);
        auto y = b.slice(n);
        for (std::size_t j = 0; j < o.size(); ++j) o[j] = x[j] - y[j];
    }
    return out;
}

double min_value(const ValueGrid& g) {
    return *std::min_element(g.values().begin(), g.values().end());
}

} // namespace

CvaCurves cva_curves(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                     double tol, const PicardOptions& opts) {
    ValueGrid V1(grid);
    PicardOptions o = opts;
    o.keep_iterates = false;
    o.observer = [&](int k, const ValueGrid& g) {
        if (k == 1) V1 = g;
        if (opts.observer) opts.observer(k, g);
    };
    PicardReport rep = picard_solve(claim, dyn, hazard, grid, o);
    if (rep.iterations < 1) throw SolverError("cva_curves: Picard iteration produced no iterate");
    ValueGrid U = std::move(*rep.initial);
    ValueGrid V = std::move(*rep.solution);
    ValueGrid cva = difference(U, V);
    ValueGrid cva0 = difference(U, V1);

    const double neg = -min_value(cva0);
    if (neg > tol) throw SolverError("cva_curves: risk-free-closeout CVA negative by " + format_shortest(neg));
    const double excess = max_excess(cva0, cva);
    if (excess > tol)
        throw SolverError("cva_curves: risk-free-closeout CVA exceeds replacement CVA by " + format_shortest(excess));
    return CvaCurves{std::move(U), std::move(V), std::move(V1), std::move(cva), std::move(cva0), rep.iterations};
}

namespace {

ValueGrid bilateral_step(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                         const ValueGrid& reference, const FdOptions& fd) {
    CauchyProblem p;
    p.coefficients = coefficient_row(dyn, claim, [&hazard](double t, StateView x) {
        return hazard.counterparty(t, x) + (*hazard.investor)(t, x);
    });
    p.source = [&](int n, double t, std::span<const double> xs, std::span<double> out) {
        const auto ref = reference.slice(n);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            StateView x(&xs[j], 1);
            out[j] = claim.cashflow(t, x) + hazard.counterparty(t, x) * claim.closeout(t, x, ref[j]) +
                     (*hazard.investor)(t, x) * (*claim.investor_closeout)(t, x, ref[j]);
        }
    };
    p.terminal = terminal_of(claim);
    p.time_homogeneous = homogeneous(dyn, claim, hazard, true);
    p.upper = default_upper(claim, fd);
    return solve_linear_cauchy(p, grid, fd.scheme);
}

void require_bilateral(const Claim& claim, const HazardModel& hazard) {
    require(claim.investor_closeout.has_value(), "bilateral: claim has no investor closeout");
    require(hazard.investor.has_value(), "bilateral: hazard model has no investor intensity");
    require(claim.closeout.side() == CloseoutSide::counterparty, "bilateral: f must be a counterparty closeout");
    require(claim.investor_closeout->side() == CloseoutSide::investor, "bilateral: fbar must be an investor closeout");
}

} // namespace

PicardReport bilateral_picard_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                    const GridSpec& grid, const ValueGrid& unilateral_value,
                                    const PicardOptions& opts) {
    require_one_dimensional(dyn);
    require_bilateral(claim, hazard);
    require(opts.tol > 0.0 && opts.max_iter >= 1, "picard: need tol > 0 and max_iter >= 1");

    PicardReport report;
    ValueGrid psi0 = bilateral_step(claim, dyn, hazard, grid, unilateral_value, opts.fd);
    report.initial = psi0;
    if (opts.observer) opts.observer(0, psi0);
    if (opts.keep_iterates) report.iterates.push_back(psi0);

    ValueGrid prev = psi0;
    for (int k = 1; k <= opts.max_iter; ++k) {
        ValueGrid next = bilateral_step(claim, dyn, hazard, grid, prev, opts.fd);
        const double drop = max_excess(prev, next);
        if (drop > opts.monotonicity_tol)
            throw SolverError("bilateral picard: iterate " + std::to_string(k) + " decreased by " +
                              format_shortest(drop));
        const double delta = sup_norm_diff(next, prev);
        report.sup_norm_deltas.push_back(delta);
        report.iterations = k;
        if (opts.observer) opts.observer(k, next);
        if (opts.keep_iterates) report.iterates.push_back(next);
        std::swap(prev, next);
        if (delta < opts.tol) {
            report.converged = true;
            break;
        }
    }
    const double below = max_excess(psi0, prev);
    if (below > opts.monotonicity_tol)
        throw SolverError("bilateral picard: limit falls below the benchmark by " + format_shortest(below));
    report.solution = std::move(prev);
    return report;
}

PicardReport bilateral_picard_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                    const GridSpec& grid, const PicardOptions& opts) {
    require_bilateral(claim, hazard);
    PicardOptions uni = opts;
    uni.observer = nullptr;
    uni.keep_iterates = false;
    const PicardReport v = picard_solve(claim, dyn, hazard, grid, uni);
    return bilateral_picard_solve(claim, dyn, hazard, grid, *v.solution, opts);
}

SandwichBounds sandwich_bounds(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                               const GridSpec& grid, const ValueGrid& unilateral_value, const FdOptions& fd) {
    require_one_dimensional(dyn);
    const UpperBoundary upper = default_upper(claim, fd);
    const bool homog = dyn.time_homogeneous() && claim.discount.constant_value().has_value();

    CauchyProblem lower_problem;
    lower_problem.coefficients = coefficient_row(dyn, claim, nullptr);
    lower_problem.source = [&](int, double t, std::span<const double> xs, std::span<double> out) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
            StateView x(&xs[j], 1);
            out[j] = -std::abs(claim.cashflow(t, x)) + hazard.counterparty(t, x) * claim.closeout(t, x, 0.0);
        }
    };
    lower_problem.terminal = [&claim](double x) { return -std::abs(claim.payoff(StateView(&x, 1))); };
    lower_problem.time_homogeneous = homog;
    lower_problem.upper = upper;

    CauchyProblem upper_problem;
    upper_problem.coefficients = coefficient_row(dyn, claim, nullptr);
    upper_problem.source = [&](int n, double t, std::span<const double> xs, std::span<double> out) {
        const auto v = unilateral_value.slice(n);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            StateView x(&xs[j], 1);
            double g = claim.cashflow(t, x);
            if (hazard.investor && claim.investor_closeout)
                g += (*hazard.investor)(t, x) * ((*claim.investor_closeout)(t, x, v[j]) - v[j]);
            out[j] = g;
        }
    };
    upper_problem.terminal = terminal_of(claim);
    upper_problem.time_homogeneous = homog;
    upper_problem.upper = upper;

    return SandwichBounds{solve_linear_cauchy(lower_problem, grid, fd.scheme),
                          solve_linear_cauchy(upper_problem, grid, fd.scheme)};
}

} // namespace xva::pde
