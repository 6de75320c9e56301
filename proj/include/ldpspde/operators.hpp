#pragma once

#include "ldpspde/conditions.hpp"
#include "ldpspde/triple.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ldp {

/// Constants (θ, α, β, C) of the coercivity, growth and ρ-growth conditions.
struct DriftConstants {
    double theta = 1.0;
    double alpha = 2.0;
    double beta = 0.0;
    double C = 1.0;
};

using TimeRate = std::function<double(double t)>;
using StateMap = std::function<void(double t, std::span<const double> v, std::span<double> out)>;
/// out = (∂R/∂v)(t, v)ᵀ w
using StateVjp = std::function<void(double t, std::span<const double> v,
                                    std::span<const double> w, std::span<double> out)>;
using LocalRate = std::function<double(std::span<const double> v)>;

/// Locally monotone drift 𝒜(t, v) = -S v + R(t, v).
///
/// S is a nonnegative diagonal (the stiff linear part, integrated implicitly)
/// and R is the remainder, integrated explicitly. K and F are the time rates
/// of the monotonicity, coercivity and growth conditions; rho is the local
/// monotonicity rate ρ(v).
class DriftOperator {
public:
    struct Parts {
        std::string name;
        std::vector<double> stiff;
        StateMap remainder;       // empty: R ≡ 0
        StateVjp remainder_vjp;   // empty with nonempty remainder: central differences
        DriftConstants constants;
        TimeRate K;
        TimeRate F;
        LocalRate rho;            // empty: ρ ≡ 0
    };

    explicit DriftOperator(Parts parts);

    const std::string& name() const { return parts_.name; }
    std::size_t dim() const { return parts_.stiff.size(); }
    std::span<const double> stiff() const { return parts_.stiff; }
    const DriftConstants& constants() const { return parts_.constants; }
    bool has_remainder() const { return static_cast<bool>(parts_.remainder); }

    double K(double t) const { return parts_.K(t); }
    double F(double t) const { return parts_.F(t); }
    double rho(std::span<const double> v) const { return parts_.rho ? parts_.rho(v) : 0.0; }

    /// out = 𝒜(t, v), in V*-coordinates.
    void apply(double t, std::span<const double> v, std::span<double> out) const;
    HVector apply(double t, std::span<const double> v) const;

    /// out = R(t, v); zero when there is no remainder.
    void remainder(double t, std::span<const double> v, std::span<double> out) const;
    /// out = (∂R/∂v)ᵀ w.
    void remainder_vjp(double t, std::span<const double> v, std::span<const double> w,
                       std::span<double> out) const;

    /// Copy with replaced constants; validated like a fresh construction.
    DriftOperator with_constants(const DriftConstants& c) const;
    DriftOperator with_rates(TimeRate K, TimeRate F) const;

private:
    Parts parts_;
};

/// Optional overrides for the built-in operators' time rates.
struct RateOverrides {
    double K = 0.0;  // added to the operator's own monotonicity rate
    double F = 1.0;
};

/// 𝒜(t,v) = -a Λ v with Λ = diag(μ_k). θ = 2a, α = 2, β = 0, C = a², ρ ≡ 0.
DriftOperator builtin_linear(const TripleSpec& spec, double a, RateOverrides rates = {});

/// 𝒜(t,v) = -a Λ v - c v^{⊙p} for odd p ≥ 3 and c ≥ 0 (coordinatewise power).
/// β = 2p - 2. With a = 0 the coercivity constant falls back to F / max μ_k,
/// which is valid in any finite Galerkin dimension.
DriftOperator builtin_reaction_diffusion(const TripleSpec& spec, double a, double c,
                                         int odd_power, RateOverrides rates = {});

/// Galerkin coefficients of u·∂ₓu in the Dirichlet sine basis e_k = √(2/π) sin(kx) on (0, π).
///
/// B(v)_k = Σ_{i,j} T_{kij} v_i v_j with T_{kij} = ∫ e_i (∂ₓe_j) e_k dx. Only the
/// O(d²) nonzero entries (j = |i - k| or j = i + k) are stored.
class ConvectionTensor {
public:
    struct Entry {
        std::size_t k, i, j;
        double value;
    };

    static ConvectionTensor dirichlet_sine(std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::span<const Entry> entries() const { return entries_; }

    /// out = B(v, v)
    void apply(std::span<const double> v, std::span<double> out) const;
    /// out = (∂B(v,v)/∂v)ᵀ w
    void vjp(std::span<const double> v, std::span<const double> w, std::span<double> out) const;

private:
    std::size_t dim_ = 0;
    std::vector<Entry> entries_;
};

/// 𝒜(t,v) = -a Λ v - B(v, v). Requires μ_k = k² and a tensor of matching dimension.
/// α = 2, β = 2, ρ(v) = c_B ‖v‖_V² with c_B = √(2d/π)/2 and the same c_B added to K.
DriftOperator builtin_burgers(const TripleSpec& spec, double a, const ConvectionTensor& tensor,
                              RateOverrides rates = {});

/// (t, v₁, v₂) ↦ ∫ ‖f(t,v₁,z) - f(t,v₂,z)‖²_H ν(dz)
using NoiseLipschitzTerm =
    std::function<double(double t, std::span<const double> v1, std::span<const double> v2)>;

struct ConditionCheckOptions {
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    double horizon = 1.0;
    double radius_min = 1e-2;
    double radius_max = 1e2;
    NoiseLipschitzTerm noise_term;  // empty: zero
};

/// Sampled falsification of hemicontinuity, local monotonicity, coercivity and
/// growth, plus the ρ growth bound. Rows: H1, H2, H3, H4, rho-growth.
ConditionReport check_conditions(const DriftOperator& op, const TripleSpec& spec,
                                 const ConditionCheckOptions& opts);

/// Trapezoid integral of a time rate over [t0, t1].
double integrate_rate(const TimeRate& rate, double t0, double t1, int panels = 1024);

}  // namespace ldp
