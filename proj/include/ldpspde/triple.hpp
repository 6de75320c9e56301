#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ldp {

/// Coordinates of an element of V, H or V* in the shared Galerkin basis.
using HVector = std::vector<double>;

/// Finite-dimensional Gelfand triple V ⊂ H ≅ H* ⊂ V* with diagonal Riesz weights.
///
/// With spectral weights μ_k > 0:
///   ‖v‖_H²  = Σ v_k²
///   ‖v‖_V²  = Σ μ_k v_k²
///   ‖v‖_V*² = Σ v_k² / μ_k
/// and the duality pairing ⟨u,v⟩_{V*,V} is the coordinate dot product, so it agrees
/// with the H inner product whenever both arguments lie in H.
///
/// alpha, beta and theta are the coercivity exponent, growth exponent and
/// coercivity constant of the drift that is paired with this triple.
class TripleSpec {
public:
    TripleSpec(std::vector<double> v_weights, double alpha = 2.0, double beta = 0.0,
               double theta = 1.0);

    /// μ_k = k², the eigenvalues of -∂ₓ² on (0, π) with Dirichlet conditions.
    static TripleSpec dirichlet_laplacian(std::size_t dim, double alpha = 2.0,
                                          double beta = 0.0, double theta = 1.0);

    std::size_t dim() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double theta() const { return theta_; }

    double norm_h(std::span<const double> v) const;
    double norm_v(std::span<const double> v) const;
    double norm_vstar(std::span<const double> v) const;
    double pairing(std::span<const double> u, std::span<const double> v) const;

    /// Throws ValidationError if v does not have dim() finite entries.
    void check(std::span<const double> v) const;

private:
    std::vector<double> weights_;
    double alpha_;
    double beta_;
    double theta_;
};

}  // namespace ldp
