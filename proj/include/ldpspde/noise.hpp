#pragma once

#include "ldpspde/conditions.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/rng.hpp"
#include "ldpspde/triple.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ldp {

inline constexpr std::size_t kNoAtom = std::numeric_limits<std::size_t>::max();

/// A point of the mark space. Discrete marks carry their atom index;
/// marks drawn from a density carry kNoAtom.
struct Mark {
    std::size_t atom = kNoAtom;
    double value = 0.0;
};

struct Atom {
    double value;
    double mass;
};

/// A quadrature node of ∫ h(z) ν(dz).
struct QuadNode {
    Mark mark;
    double weight;
};

/// Composite Simpson panels used by every quadrature in the library.
inline constexpr int kSimpsonPanels = 1024;

double simpson(const std::function<double(double)>& f, double a, double b,
               int panels = kSimpsonPanels);

/// Finite-mass intensity measure ν on the mark space 𝕏.
class MarkSpace {
public:
    enum class Kind { finite_discrete, interval_density };

    /// ν = Σ massᵢ δ_{valueᵢ}; every mass must be > 0.
    static MarkSpace discrete(std::vector<Atom> atoms);
    /// ν(dz) = density(z) dz on [lo, hi].
    static MarkSpace density(std::function<double(double)> density, double lo, double hi);

    Kind kind() const { return kind_; }
    std::span<const Atom> atoms() const { return atoms_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double density_at(double z) const { return density_(z); }

    /// ν(𝕏)
    double total_mass() const { return total_; }

    /// Nodes and weights integrating exactly over atoms, or by Simpson over [lo, hi].
    std::span<const QuadNode> quadrature() const { return nodes_; }
    /// Simpson nodes over [a, b] ∩ [lo, hi]; atoms whose value lies in [a, b) for discrete spaces.
    std::vector<QuadNode> quadrature(double a, double b) const;

    /// A mark distributed as ν / ν(𝕏). For densities the law is the
    /// panelwise-linear interpolation of the Simpson CDF.
    Mark sample(PhiloxRng& rng) const;

private:
    MarkSpace() = default;

    Kind kind_ = Kind::finite_discrete;
    std::vector<Atom> atoms_;
    std::function<double(double)> density_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double total_ = 0.0;
    std::vector<double> cdf_;   // cumulative mass by atom, or at panel edges
    std::vector<QuadNode> nodes_;
};

/// ν(𝕏). Throws ValidationError on zero mass.
double nu_total(const MarkSpace& marks);

using JumpCoefficient =
    std::function<void(double t, std::span<const double> v, const Mark& z, std::span<double> out)>;
/// out = (∂f/∂v)(t, v, z)ᵀ w
using JumpCoefficientVjp = std::function<void(double t, std::span<const double> v, const Mark& z,
                                              std::span<const double> w, std::span<double> out)>;
using MarkRate = std::function<double(double t, const Mark& z)>;

/// Jump coefficient f(t, v, z) with its growth and Lipschitz majorants.
struct NoiseModel {
    std::string name;
    MarkSpace marks;
    std::size_t dim = 0;
    JumpCoefficient f{};
    JumpCoefficientVjp f_vjp{};  // empty: central differences
    MarkRate L_f{};             // ‖f(t,v,z)‖_H ≤ L_f(t,z)(1 + ‖v‖_H)
    MarkRate G_f{};             // ‖f(t,v₁,z) - f(t,v₂,z)‖_H ≤ G_f(t,z)‖v₁ - v₂‖_H
    double eta0 = 1.0;
    double p_exponent = 4.0;
    bool null = false;         // f ≡ 0; solvers then skip jump sampling entirely

    void eval(double t, std::span<const double> v, const Mark& z, std::span<double> out) const;
    void vjp(double t, std::span<const double> v, const Mark& z, std::span<const double> w,
             std::span<double> out) const;
};

/// f ≡ 0
NoiseModel zero_noise(MarkSpace marks, std::size_t dim);
/// f(t, v, z) = σ(z) v; L_f = G_f = |σ(z)|.
NoiseModel multiplicative_noise(MarkSpace marks, std::size_t dim,
                                std::function<double(const Mark&)> sigma);
/// f(t, v, z) = c(z); L_f = ‖c(z)‖_H, G_f = 0.
NoiseModel additive_noise(MarkSpace marks, std::size_t dim,
                          std::function<void(const Mark&, std::span<double>)> vector);

/// Υ = (2β(α-1)(α+η₀)/α) ∨ (4(α-1)(α+η₀)/α) ∨ 4 ∨ (β+2)
double upsilon(double alpha, double beta, double eta0);

/// ∫ ‖f(t, v, z)‖²_H ν(dz)
double noise_integral_l2(const NoiseModel& model, const TripleSpec& spec, double t,
                         std::span<const double> v);

/// (t, v₁, v₂) ↦ ∫ ‖f(t,v₁,z) - f(t,v₂,z)‖²_H ν(dz), for check_conditions.
NoiseLipschitzTerm noise_lipschitz_term(const NoiseModel& model);

/// Default δ grid for the exponential-integrability class.
std::vector<double> default_delta_grid();

struct HpResult {
    bool member = false;
    double largest_delta = 0.0;
    std::vector<double> deltas;
    std::vector<double> integrals;  // ∫∫ exp(δ h^p) ν(dz) dt; +inf when not finite
    std::vector<bool> finite;
};

/// Membership of h in 𝓗_p: ∫₀ᵀ∫ exp(δ h(t,z)^p) ν(dz) dt < ∞ for some δ in the grid.
HpResult check_class_hp(const MarkRate& h, const MarkSpace& marks, double p,
                        const std::vector<double>& delta_grid, double horizon = 1.0);

struct NoiseCheckOptions {
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    double horizon = 1.0;
    double alpha = 2.0;
    double beta = 0.0;
    double theta = 1.0;
    double gamma = 0.0;           // γ of the second-moment bound
    TimeRate F;                   // F_t of the second-moment bound; empty: 1
    TimeRate G;                   // G_t of the (β+2)-moment bound; empty: 1
    std::vector<double> delta_grid = default_delta_grid();
    double radius_min = 1e-2;
    double radius_max = 1e2;
};

/// Rows: H5-growth, H6-lipschitz, Lf-integrability, Lf-Hp, Gf-L2, Gf-H2,
/// p-exponent, noise-l2-bound, noise-moment-bound, gamma-margin.
ConditionReport check_h5_h6(const NoiseModel& model, const TripleSpec& spec,
                            const NoiseCheckOptions& opts);

}  // namespace ldp
