#pragma once

#include "ldpspde/noise.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/prm.hpp"

#include <span>
#include <vector>

namespace ldp {

/// F_c(t, v) = ∫_{cell c} f(t, v, z) ν(dz) for every mark cell of a partition.
class CellIntegrals {
public:
    CellIntegrals(const NoiseModel& model, const ZPartition& partition);

    std::size_t cells() const { return quad_.size(); }
    std::size_t dim() const { return model_->dim; }
    bool null() const { return model_->null; }

    /// out has cells() × dim() entries, row c holding F_c(t, v).
    void evaluate(double t, std::span<const double> v, std::span<double> out,
                  std::span<double> scratch) const;
    /// out += Σ_c coeff_c (∂F_c/∂v)(t, v)ᵀ w
    void accumulate_vjp(double t, std::span<const double> v, std::span<const double> coeff,
                        std::span<const double> w, std::span<double> out,
                        std::span<double> scratch) const;

private:
    const NoiseModel* model_;
    std::vector<std::vector<QuadNode>> quad_;
};

/// Scratch buffers for drift_step; one per trajectory.
struct StepWorkspace {
    explicit StepWorkspace(std::size_t dim, std::size_t cells)
        : rem(dim), fz(dim), cell_f(dim * cells), total_coeff(cells) {}
    std::vector<double> rem;
    std::vector<double> fz;
    std::vector<double> cell_f;
    std::vector<double> total_coeff;
};

/// Increments of the drift, control and compensator parts over one step.
struct StepIncrements {
    std::span<double> y;  // h(-S x⁺ + R(t, x))
    std::span<double> z;  // h Σ_c control_coeff_c F_c(t, x)
    std::span<double> m;  // h Σ_c compensator_coeff_c F_c(t, x)
};

/// Semi-implicit Euler step of length h on [t, t + h]:
///
///   x⁺ = (I + hS)⁻¹ (x + h (R(t, x) + Σ_c (control_coeff_c + compensator_coeff_c) F_c(t, x)))
///
/// The skeleton uses control_coeff = ḡ - 1 with no compensator; the SPDE uses the
/// compensator coefficient -ḡ (controlled) or -1 (plain). An empty compensator
/// span means zero. On return ws.cell_f holds F_c(t, x) at the pre-step state.
void drift_step(const DriftOperator& op, const CellIntegrals& cells, double t, double h,
                std::span<const double> control_coeff, std::span<const double> compensator_coeff,
                std::span<double> x, StepWorkspace& ws, const StepIncrements* inc = nullptr);

/// Uniform time grid of ceil(T / dt) steps, the last one clipped to T.
std::vector<double> time_grid(double horizon, double dt);

}  // namespace ldp
