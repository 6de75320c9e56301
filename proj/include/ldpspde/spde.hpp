#pragma once

#include "ldpspde/noise.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/prm.hpp"
#include "ldpspde/skeleton.hpp"
#include "ldpspde/triple.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace ldp {

/// Jump-adapted record of an H-valued càdlàg trajectory.
///
/// Point i holds the value at times[i]; jump points additionally carry the
/// left limit, so the path is right-continuous with left limits by
/// construction. The M/Z/Y component paths are recorded alongside.
struct CadlagPath {
    std::size_t dim = 0;
    std::vector<double> times;
    std::vector<char> is_jump;
    std::vector<double> values;       // post-jump (right) values
    std::vector<double> left_limits;  // equals values at non-jump points
    std::vector<double> m_path, z_path, y_path;

    std::size_t size() const { return times.size(); }
    std::span<const double> at(std::size_t i) const { return {values.data() + i * dim, dim}; }
    std::span<const double> left_at(std::size_t i) const { return {left_limits.data() + i * dim, dim}; }
};

struct SolveOptions {
    double horizon = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    bool record_path = false;
    /// Exponents p of the energy integrals ∫ ‖X‖_H^{p-2} ‖X‖_V^α dt to accumulate.
    std::vector<double> moment_p = {2.0};
    /// When set, sup-gaps of X, Y and Z against this skeleton solution are monitored.
    const SkeletonSolution* reference = nullptr;
    double event_cap = kDefaultEventCap;
};

struct SolveReport {
    CadlagPath path;              // empty unless record_path
    HVector terminal;
    double sup_h_norm = 0.0;
    std::vector<double> moment_p;
    std::vector<double> energy;   // aligned with moment_p
    double v_alpha_integral = 0.0;
    double sup_m_sq = 0.0;        // sup_t ‖M_t‖²_H
    double sup_gap_sq = 0.0;      // sup_t ‖X_t - X^{0,g}_t‖²_H (needs a reference)
    double sup_z_gap_sq = 0.0;
    double sup_y_gap_sq = 0.0;
    double reconstruction_error = 0.0;  // sup_t ‖X_t - (x + Y_t + Z_t + M_t)‖_H
    std::size_t jumps = 0;
    bool blew_up = false;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    double log_density = 0.0;     // log ℰ^ε_T of the driving stream (controlled solves)
};

/// Solves dX = 𝒜(t, X) dt + ε ∫ f(t, X₋, z) Ñ^{ε⁻¹}(dz, dt), X₀ = x0.
///
/// Semi-implicit Euler between jumps (stiff diagonal implicit, remainder and
/// compensator explicit), the deterministic grid refined with the exact jump
/// times, and X ← X + ε f(t, X₋, z) applied atomically at each event.
SolveReport solve_spde(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                       std::span<const double> x0, double eps, const SolveOptions& opts);

/// Controlled equation driven by N^{ε⁻¹g}: adds ∫ f (g - 1) ν(dz) dt and compensates
/// at rate g ν. With g ≡ 1 and the same seed this reproduces solve_spde exactly.
/// The report's log_density holds log ℰ^ε_T of the sampled stream.
SolveReport solve_controlled_spde(const TripleSpec& spec, const DriftOperator& op,
                                  const NoiseModel& model, std::span<const double> x0, double eps,
                                  const Control& g, const SolveOptions& opts);

struct MomentReport {
    double p = 2.0;
    std::size_t samples = 0;
    double sup_moment = 0.0;        // E sup_t ‖X‖_H^p
    double sup_moment_se = 0.0;
    double energy = 0.0;            // E ∫ ‖X‖_H^{p-2} ‖X‖_V^α dt
    double energy_se = 0.0;
    double v_integral_moment = 0.0; // E (∫ ‖X‖_V^α dt)^{p/2}
    std::size_t blowups = 0;
};

/// Ensemble moments at exponent p; p must be one of the reports' moment_p.
MomentReport monitor_moments(std::span<const SolveReport> reports, double p);

/// Stability of a moment across an ε-ladder.
struct MomentLadder {
    std::vector<double> eps;
    std::vector<MomentReport> moments;
    double relative_spread = 0.0;  // (max - min) / min of sup_moment
    bool grows_as_eps_shrinks = false;  // strictly increasing toward small ε
};

MomentLadder moment_ladder(std::vector<double> eps, std::vector<MomentReport> moments);

/// t, jump, x_1..x_d, norm_h, m_norm, z_norm, y_norm
void write_path_csv(std::ostream& os, const CadlagPath& path, const TripleSpec& spec);

}  // namespace ldp
