#pragma once

#include "xva/model.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace xva::pde {

/// Uniform space-time lattice [x_min, x_max] x [0, T] with J+1 by Np+1 nodes.
struct GridSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    int J = 100;
    double T = 1.0;
    int Np = 100;

    /// Truncated domain [0, x0 e^{(mu + 6 sigma) sqrt(T) + mu T}] for a GBM factor,
    /// stretched slightly so that x0 falls exactly on a node.
    static GridSpec for_gbm(double mu, double sigma, double x0, double T, int J, int Np);

    double dx() const noexcept { return (x_max - x_min) / J; }
    double dt() const noexcept { return T / Np; }
    double x(int j) const noexcept { return j == J ? x_max : x_min + j * dx(); }
    double t(int n) const noexcept { return n == Np ? T : n * dt(); }
    void validate() const;
};

/// Values on a GridSpec, row-major in (time, space).
class ValueGrid {
public:
    explicit ValueGrid(const GridSpec& spec);

    const GridSpec& spec() const noexcept { return spec_; }
    double at(int n, int j) const noexcept { return values_[index(n, j)]; }
    double& at(int n, int j) noexcept { return values_[index(n, j)]; }
    std::span<const double> slice(int n) const noexcept { return {values_.data() + index(n, 0), columns()}; }
    std::span<double> slice(int n) noexcept { return {values_.data() + index(n, 0), columns()}; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Cubic Lagrange interpolation in x on time slice n.
    double value_at(int n, double x) const;

    /// CSV `t,x,value`, 17 significant digits.
    void write_csv(std::ostream& out) const;

private:
    std::size_t columns() const noexcept { return static_cast<std::size_t>(spec_.J) + 1; }
    std::size_t index(int n, int j) const noexcept { return static_cast<std::size_t>(n) * columns() + j; }

    GridSpec spec_;
    std::vector<double> values_;
};

/// sup |a - b| over the whole grid.
double sup_norm_diff(const ValueGrid& a, const ValueGrid& b);
/// max(a - b) over the grid; <= tol means a <= b + tol everywhere.
double max_excess(const ValueGrid& a, const ValueGrid& b);

enum class UpperBoundary {
    /// No diffusion or convection at x_max: the node is only discounted and fed by the source.
    /// Gives u = 0 for put-like payoffs.
    frozen,
    /// Zero second derivative (u linear near x_max), for payoffs with linear growth.
    linear,
};

/// Backward Cauchy problem du/dt + a u_xx + b u_x - k u + g = 0, u(T, .) = phi.
/// The lower node x_min is treated as absorbing (only -k u + g act there),
/// which is exact when a and b vanish at x_min, as for GBM at 0.
struct CauchyProblem {
    using CoefficientRow = std::function<void(double t, std::span<const double> x, std::span<double> a,
                                              std::span<double> b, std::span<double> k)>;
    using SourceRow = std::function<void(int n, double t, std::span<const double> x, std::span<double> out)>;

    CoefficientRow coefficients;
    SourceRow source;  // empty means g = 0
    std::function<double(double x)> terminal;
    bool time_homogeneous = false;
    UpperBoundary upper = UpperBoundary::linear;
};

struct ThetaScheme {
    double theta = 0.5;
    /// Fully implicit steps taken first from maturity (Rannacher smoothing).
    int implicit_startup_steps = 2;
};

ValueGrid solve_linear_cauchy(const CauchyProblem& problem, const GridSpec& grid, ThetaScheme scheme = {});

struct FdOptions {
    ThetaScheme scheme;
    /// Defaults to frozen for put payoffs, linear otherwise.
    std::optional<UpperBoundary> upper;
};

struct PicardOptions {
    double tol = 1e-8;
    int max_iter = 200;
    bool keep_iterates = false;
    /// Called with (k, V^k) for k >= 0 as iterates are produced.
    std::function<void(int, const ValueGrid&)> observer;
    /// Bilateral only: allowed decrease between successive iterates.
    double monotonicity_tol = 1e-6;
    FdOptions fd;
};

struct PicardReport {
    std::vector<ValueGrid> iterates;  // only when keep_iterates
    std::vector<double> sup_norm_deltas;
    bool converged = false;
    int iterations = 0;
    std::optional<ValueGrid> initial;   // V^0 (or Psi^0)
    std::optional<ValueGrid> solution;  // last iterate
};

/// Cauchy problem of the risk-free value U.
CauchyProblem riskfree_problem(const Claim& claim, const Dynamics& dyn, const FdOptions& fd = {});

ValueGrid riskfree_value_solve(const Claim& claim, const Dynamics& dyn, const GridSpec& grid, const FdOptions& fd = {});

/// One Picard step: the linear solve with source c + lambda f(., previous) and discount r + lambda.
ValueGrid picard_step(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                      const ValueGrid& previous, const FdOptions& fd = {});

/// Replacement-closeout value V as the limit of the Picard iterates started from U.
PicardReport picard_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                          const PicardOptions& opts = {});

/// Risk-free-closeout value V0: U first, then one linear solve with recovery f(., U).
ValueGrid riskfree_closeout_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                  const GridSpec& grid, const FdOptions& fd = {});

struct CvaCurves {
    ValueGrid U;
    ValueGrid V;
    ValueGrid V0;
    ValueGrid cva;            // U - V
    ValueGrid cva_riskfree;   // U - V0
    int picard_iterations = 0;
};

/// U, V, V0 and both CVAs. Throws SolverError unless 0 <= Pi0 <= Pi within tol everywhere.
CvaCurves cva_curves(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const GridSpec& grid,
                     double tol = 1e-6, const PicardOptions& opts = {});

/// Bilateral replacement value Psi, iterated from the benchmark Psi0 built on the
/// unilateral V. Throws SolverError if the iterates fail to increase (within
/// opts.monotonicity_tol) or the limit falls below Psi0.
PicardReport bilateral_picard_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                    const GridSpec& grid, const ValueGrid& unilateral_value,
                                    const PicardOptions& opts = {});
PicardReport bilateral_picard_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                    const GridSpec& grid, const PicardOptions& opts = {});

struct SandwichBounds {
    ValueGrid lower;  // J: below every unilateral iterate
    ValueGrid upper;  // I: above every bilateral iterate
};

/// J solves the risk-free-discounted problem with source -|c| + lambda f(., 0) and terminal -|phi|;
/// I uses source c + lambda_bar (fbar(., V) - V) and terminal phi, with V the converged unilateral value.
SandwichBounds sandwich_bounds(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                               const GridSpec& grid, const ValueGrid& unilateral_value, const FdOptions& fd = {});

} // namespace xva::pde
