#include "ldpspde/kernel.hpp"

#include "ldpspde/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ldp {

CellIntegrals::CellIntegrals(const NoiseModel& model, const ZPartition& partition)
    : model_(&model), quad_(partition.cell_quadrature(model.marks)) {}

void CellIntegrals::evaluate(double t, std::span<const double> v, std::span<double> out,
                             std::span<double> scratch) const {
    const std::size_t d = v.size();
    std::fill(out.begin(), out.end(), 0.0);
    if (model_->null) return;
    for (std::size_t c = 0; c < quad_.size(); ++c) {
        double* row = out.data() + c * d;
        for (const auto& q : quad_[c]) {
            model_->f(t, v, q.mark, scratch);
            for (std::size_t k = 0; k < d; ++k) row[k] += q.weight * scratch[k];
        }
    }
}

void CellIntegrals::accumulate_vjp(double t, std::span<const double> v,
                                   std::span<const double> coeff, std::span<const double> w,
                                   std::span<double> out, std::span<double> scratch) const {
    if (model_->null) return;
    const std::size_t d = v.size();
    for (std::size_t c = 0; c < quad_.size(); ++c) {
        if (coeff[c] == 0.0) continue;
        for (const auto& q : quad_[c]) {
            model_->vjp(t, v, q.mark, w, scratch);
            const double s = coeff[c] * q.weight;
            for (std::size_t k = 0; k < d; ++k) out[k] += s * scratch[k];
        }
    }
}

void drift_step(const DriftOperator& op, const CellIntegrals& cells, double t, double h,
                std::span<const double> control_coeff, std::span<const double> compensator_coeff,
                std::span<double> x, StepWorkspace& ws, const StepIncrements* inc) {
    const std::size_t d = x.size();
    const std::size_t nc = cells.cells();
    const auto stiff = op.stiff();

    op.remainder(t, x, ws.rem);
    cells.evaluate(t, x, ws.cell_f, ws.fz);
    for (std::size_t c = 0; c < nc; ++c) {
        ws.total_coeff[c] = compensator_coeff.empty() ? control_coeff[c]
                                                      : control_coeff[c] + compensator_coeff[c];
    }

    if (inc) {
        for (std::size_t k = 0; k < d; ++k) {
            double zi = 0.0, mi = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                const double f = ws.cell_f[c * d + k];
                zi += control_coeff[c] * f;
                if (!compensator_coeff.empty()) mi += compensator_coeff[c] * f;
            }
            inc->z[k] = h * zi;
            inc->m[k] = h * mi;
        }
    }

    for (std::size_t k = 0; k < d; ++k) {
        double drift = ws.rem[k];
        for (std::size_t c = 0; c < nc; ++c) drift += ws.total_coeff[c] * ws.cell_f[c * d + k];
        const double x_new = (x[k] + h * drift) / (1.0 + h * stiff[k]);
        if (inc) inc->y[k] = h * (ws.rem[k] - stiff[k] * x_new);
        x[k] = x_new;
    }
}

std::vector<double> time_grid(double horizon, double dt) {
    require(horizon > 0.0 && std::isfinite(horizon), "time grid: horizon must be > 0");
    require(dt > 0.0 && dt <= horizon, "time grid: dt must satisfy 0 < dt <= T");
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = std::min(horizon, static_cast<double>(i) * dt);
    t.back() = horizon;
    return t;
}

}  // namespace ldp
