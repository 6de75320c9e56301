#pragma once

#include "ldpspde/noise.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/prm.hpp"
#include "ldpspde/triple.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ldp {

/// ℓ(r) = r log r - r + 1, with ℓ(0) = 1.
double ell(double r);
/// ℓ'(r) = log r
double ell_prime(double r);

/// L_T(g) = Σ_cells ℓ(g_cell) ν(mark cell) |time cell|
double cost_lt(const Control& g, const MarkSpace& marks);
/// Overload checking that the control covers [0, T].
double cost_lt(const Control& g, const MarkSpace& marks, double horizon);

/// L_T(g) ≤ N
bool check_sn_membership(const Control& g, double N, const MarkSpace& marks, double horizon);

/// Bounds [lo, hi] that every cell value of a control with L_T ≤ M must lie in,
/// given the smallest positive cell measure; lo is 0 when M ≥ that measure.
std::pair<double, double> level_set_interval(double M, double min_cell_measure);

/// Terminal event A ⊆ H written as {x : s(x) ≤ 0}.
///
/// Predicate grammar:
///   XT>=a   XT<=a        first coordinate (d = 1 only)
///   XT[k]>=a  XT[k]<=a   coordinate k, 1-based
///   |XT|>=r  |XT|<=r     H-norm
///   all                  the whole space
class TerminalTarget {
public:
    enum class Kind { All, CoordGe, CoordLe, NormGe, NormLe };

    static TerminalTarget parse(const std::string& text);
    static TerminalTarget all() { return TerminalTarget(Kind::All, 0, 0.0); }
    static TerminalTarget coord_ge(std::size_t k, double a) { return TerminalTarget(Kind::CoordGe, k, a); }
    static TerminalTarget coord_le(std::size_t k, double a) { return TerminalTarget(Kind::CoordLe, k, a); }
    static TerminalTarget norm_ge(double r) { return TerminalTarget(Kind::NormGe, 0, r); }
    static TerminalTarget norm_le(double r) { return TerminalTarget(Kind::NormLe, 0, r); }

    Kind kind() const { return kind_; }
    std::size_t coordinate() const { return coord_; }
    double threshold() const { return threshold_; }

    /// s(x); A = {s ≤ 0}.
    double slack(std::span<const double> x) const;
    /// ∂s/∂x
    void slack_gradient(std::span<const double> x, std::span<double> out) const;
    bool contains(std::span<const double> x) const { return slack(x) <= 0.0; }
    /// Shrinks the set by `delta` (interior surrogate); negative delta inflates it (closure surrogate).
    TerminalTarget shifted(double delta) const;
    void validate(std::size_t dim) const;
    std::string to_string() const;

private:
    TerminalTarget(Kind k, std::size_t coord, double threshold)
        : kind_(k), coord_(coord), threshold_(threshold) {}
    Kind kind_;
    std::size_t coord_;
    double threshold_;
};

/// Full path target φ: s = (1/T) ∫ ‖X_t - φ(t)‖²_H dt - tol², on the solver grid.
struct PathTarget {
    std::function<void(double t, std::span<double> out)> phi;
    double tol = 1e-3;
};

struct RateProblem {
    TripleSpec spec;
    DriftOperator op;
    NoiseModel model;
    HVector x0;
    double horizon = 1.0;
    std::optional<TerminalTarget> target{};
    std::optional<PathTarget> path{};
    std::size_t time_cells = 1;
    ZPartition partition = ZPartition::single();
    double dt = 1e-3;
    double level_cap = std::numeric_limits<double>::infinity();  // N of S^N

    void validate() const;
    Control make_control(double value = 1.0) const;
};

struct TraceRow {
    int outer = 0;
    int inner_iterations = 0;
    double penalty = 0.0;
    double multiplier = 0.0;
    double cost = 0.0;
    double gap = 0.0;
    double projected_gradient = 0.0;
};

struct RateResult {
    Control g = Control::constant(1.0, 1.0);
    double cost = 0.0;              // L_T(g*); +inf for the infeasible surrogate
    double achieved_cost = 0.0;     // L_T of the returned control even when infeasible
    double gap = 0.0;               // max(0, s) at the returned control
    double grid_step = 0.0;         // brute force only: one-step cost tolerance
    bool feasible = false;
    bool converged = false;
    bool used_fallback = false;
    double adjoint_check_error = 0.0;
    std::string status;
    HVector terminal;
    std::vector<TraceRow> trace;

    /// key,value rows
    std::string to_csv() const;
    std::string trace_csv() const;
};

struct OptimizerOptions {
    double floor = 1e-8;
    double g_upper = 50.0;
    double gap_tol = 1e-6;
    double grad_tol = 1e-6;
    int max_outer = 25;
    int max_inner = 400;
    double penalty0 = 10.0;
    double penalty_growth = 10.0;
    double penalty_max = 1e12;
    double adjoint_check_tol = 1e-4;
    std::uint64_t check_seed = 7;
    std::optional<Control> initial;
};

/// Augmented-Lagrangian value of the constraint s ≤ 0 added to L_T:
///   L_T(g) + ((max(0, λ + ρ s))² - λ²) / (2ρ),
/// s evaluated on the skeleton terminal state (or path). When grad is nonempty
/// it receives the exact gradient of the discretized objective w.r.t. the
/// control cell values (discrete adjoint of the implicit-Euler skeleton).
double penalized_objective(const RateProblem& problem, std::span<const double> values,
                           double multiplier, double penalty, std::span<double> grad = {});

/// Constraint value s(𝒢⁰(ν_T^g)) for the given cell values.
double constraint_slack(const RateProblem& problem, std::span<const double> values,
                        HVector* terminal = nullptr);

RateResult minimize_rate(const RateProblem& problem, const OptimizerOptions& opts = {});

/// Exhaustive tensor-grid search over cell values in [lo, g_hi] (1 always
/// included); at most 3 cells.
RateResult brute_force_rate(const RateProblem& problem, int grid_points, double g_hi,
                            double lo = 1e-3);

}  // namespace ldp
