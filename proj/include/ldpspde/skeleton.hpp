#pragma once

#include "ldpspde/noise.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/prm.hpp"
#include "ldpspde/triple.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ldp {

/// Solution of the skeleton equation
///   dX/dt = 𝒜(t, X) + ∫ f(t, X, z)(g(t, z) - 1) ν(dz),   X(0) = x,
/// on a uniform time grid, with the cumulative drift part Y and control part Z.
struct SkeletonSolution {
    std::size_t dim = 0;
    std::vector<double> times;
    std::vector<double> values;   // times.size() × dim
    std::vector<double> y_path;   // ∫₀ᵗ 𝒜(s, X_s) ds
    std::vector<double> z_path;   // ∫₀ᵗ∫ f(s, X_s, z)(g - 1) ν(dz) ds
    double v_alpha_integral = 0.0;  // ∫₀ᵀ ‖X‖_V^α dt
    /// max over coarse grid times of ‖X_dt - X_{dt/2}‖_H; NaN when not computed.
    double richardson_gap = std::numeric_limits<double>::quiet_NaN();
    /// 2 X_{dt/2} - X_dt on this grid (second order); empty when not computed.
    std::vector<double> extrapolated;

    std::size_t size() const { return times.size(); }
    std::span<const double> at(std::size_t i) const { return {values.data() + i * dim, dim}; }
    std::span<const double> terminal() const { return at(size() - 1); }
    /// Linear interpolation of X (and optionally Y, Z) at time t.
    void interpolate(double t, std::span<double> x, std::span<double> y = {},
                     std::span<double> z = {}) const;
    /// sup over the grid of ‖X - other‖_H, other interpolated at this grid's times.
    double sup_distance(const SkeletonSolution& other) const;
};

/// Implicit-Euler skeleton solve on [0, g.horizon()] with the continuous-step
/// kernel shared with the SPDE solver. With richardson = true the problem is
/// re-solved at dt/2 and the two-resolution gap recorded.
SkeletonSolution solve_skeleton(const TripleSpec& spec, const DriftOperator& op,
                                const NoiseModel& model, std::span<const double> x0,
                                const Control& g, double dt, bool richardson = true);

struct ConvergenceRow {
    double parameter = 0.0;     // n for control sequences, ε for ε-ladders
    double control_gap = 0.0;   // weak (cell-measure) distance of g_n to g
    double strong_gap = 0.0;    // sup-norm distance of g_n to g
    double value = 0.0;         // sup-gap of the solutions (squared for ε-ladders)
    double value_se = 0.0;
    double m_gap = 0.0;
    double z_gap = 0.0;
    double y_gap = 0.0;
    std::size_t samples = 1;
};

struct ConvergenceTable {
    std::string label;
    std::vector<ConvergenceRow> rows;
    bool monotone = false;   // value non-increasing along the rows
    bool verdict = false;

    std::string to_csv() const;
};

/// Weak distance between controls on a common mark partition:
///   sup_t max_cell |∫₀ᵗ∫_cell (a - b) ν(dz) ds|,
/// exact because the cumulative measures are piecewise linear between knots.
double control_measure_gap(const Control& a, const Control& b, const MarkSpace& marks);
/// sup |a - b| evaluated on the union of both grids.
double control_sup_gap(const Control& a, const Control& b);

/// sup_t ‖X^{0,g_n} - X^{0,g}‖_H for each control of the sequence. The verdict
/// requires the gaps to be non-increasing (up to `slack` relative) and the last
/// gap to be at most `final_tol` or below the first.
ConvergenceTable continuity_in_control(const TripleSpec& spec, const DriftOperator& op,
                                       const NoiseModel& model, std::span<const double> x0,
                                       const std::vector<Control>& g_seq, const Control& g_limit,
                                       double dt, double slack = 1e-9);

/// Gronwall audit of two skeleton solutions from x0 and x0 + perturbation·direction
/// (direction normalized; empty means the normalized all-ones vector). Returns
///   max_t ‖ΔX_t‖²_H / (exp(∫₀ᵗ (K_s + ρ(X_s) + 2∫ G_f |g - 1| ν(dz)) ds) ‖ΔX_0‖²_H),
/// which the monotonicity structure keeps at or below 1 up to O(dt).
double uniqueness_audit(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                        std::span<const double> x0, const Control& g, double dt,
                        double perturbation, std::span<const double> direction = {});

/// t, x_1..x_d, norm_h, norm_v
void write_skeleton_csv(std::ostream& os, const SkeletonSolution& sol, const TripleSpec& spec);

}  // namespace ldp
