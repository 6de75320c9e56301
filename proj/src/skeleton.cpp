#include "ldpspde/skeleton.hpp"

#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"
#include "ldpspde/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ldp {

void SkeletonSolution::interpolate(double t, std::span<double> x, std::span<double> y,
                                   std::span<double> z) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - times.begin(), 1)) - 1;
    i = std::min(i, size() - 2);
    const double w = std::clamp((t - times[i]) / (times[i + 1] - times[i]), 0.0, 1.0);
    auto lerp = [&](const std::vector<double>& src, std::span<double> out) {
        if (out.empty()) return;
        for (std::size_t k = 0; k < dim; ++k) {
            out[k] = (1.0 - w) * src[i * dim + k] + w * src[(i + 1) * dim + k];
        }
    };
    lerp(values, x);
    lerp(y_path, y);
    lerp(z_path, z);
}

double SkeletonSolution::sup_distance(const SkeletonSolution& other) const {
    HVector buf(dim);
    double sup = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        other.interpolate(times[i], buf);
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) s += (values[i * dim + k] - buf[k]) * (values[i * dim + k] - buf[k]);
        sup = std::max(sup, std::sqrt(s));
    }
    return sup;
}

namespace {

SkeletonSolution integrate(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                           std::span<const double> x0, const Control& g, double dt) {
    const std::size_t d = spec.dim();
    const auto grid = time_grid(g.horizon(), dt);
    const CellIntegrals cells(model, g.partition());
    StepWorkspace ws(d, cells.cells());
    std::vector<double> gbar(cells.cells()), coeff(cells.cells());
    HVector x(x0.begin(), x0.end()), y(d, 0.0), z(d, 0.0), dy(d), dz(d), dm(d);
    const StepIncrements inc{dy, dz, dm};
    const double alpha = op.constants().alpha;

    SkeletonSolution sol;
    sol.dim = d;
    sol.times = grid;
    sol.values.reserve(grid.size() * d);
    sol.y_path.reserve(grid.size() * d);
    sol.z_path.reserve(grid.size() * d);
    auto push = [&] {
        sol.values.insert(sol.values.end(), x.begin(), x.end());
        sol.y_path.insert(sol.y_path.end(), y.begin(), y.end());
        sol.z_path.insert(sol.z_path.end(), z.begin(), z.end());
    };
    push();
    for (std::size_t n = 0; n + 1 < grid.size(); ++n) {
        const double t = grid[n], h = grid[n + 1] - grid[n];
        sol.v_alpha_integral += h * std::pow(spec.norm_v(x), alpha);
        g.time_average(t, t + h, gbar);
        for (std::size_t c = 0; c < gbar.size(); ++c) coeff[c] = gbar[c] - 1.0;
        drift_step(op, cells, t, h, coeff, {}, x, ws, &inc);
        for (std::size_t k = 0; k < d; ++k) {
            if (!std::isfinite(x[k])) {
                throw NumericalError("solve_skeleton: nonfinite state at t=" + format_double(t + h));
            }
            y[k] += dy[k];
            z[k] += dz[k];
        }
        push();
    }
    return sol;
}

void check_inputs(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                  std::span<const double> x0, const Control& g) {
    spec.check(x0);
    require(op.dim() == spec.dim(), "skeleton: operator/spec dimension mismatch");
    require(model.dim == spec.dim(), "skeleton: noise/spec dimension mismatch");
    g.partition().check(model.marks);
}

}  // namespace

SkeletonSolution solve_skeleton(const TripleSpec& spec, const DriftOperator& op,
                                const NoiseModel& model, std::span<const double> x0,
                                const Control& g, double dt, bool richardson) {
    check_inputs(spec, op, model, x0, g);
    SkeletonSolution sol = integrate(spec, op, model, x0, g, dt);
    if (richardson) {
        const SkeletonSolution fine = integrate(spec, op, model, x0, g, dt / 2.0);
        sol.richardson_gap = sol.sup_distance(fine);
        sol.extrapolated.resize(sol.values.size());
        HVector buf(sol.dim);
        for (std::size_t i = 0; i < sol.size(); ++i) {
            fine.interpolate(sol.times[i], buf);
            for (std::size_t k = 0; k < sol.dim; ++k) {
                sol.extrapolated[i * sol.dim + k] = 2.0 * buf[k] - sol.values[i * sol.dim + k];
            }
        }
    }
    return sol;
}

double control_measure_gap(const Control& a, const Control& b, const MarkSpace& marks) {
    require(a.partition() == b.partition(), "control_measure_gap: mark partitions differ");
    require(std::fabs(a.horizon() - b.horizon()) <= 1e-12 * a.horizon(),
            "control_measure_gap: horizons differ");
    const auto masses = a.partition().cell_masses(marks);
    const std::size_t nz = a.mark_cells();
    std::vector<double> knots(a.t_knots().begin(), a.t_knots().end());
    knots.insert(knots.end(), b.t_knots().begin(), b.t_knots().end());
    std::sort(knots.begin(), knots.end());
    std::vector<double> ga(nz), gb(nz), diff(nz, 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double t0 = knots[i], t1 = std::min(knots[i + 1], a.horizon());
        if (t1 <= t0) continue;
        a.time_average(t0, t1, ga);
        b.time_average(t0, t1, gb);
        for (std::size_t z = 0; z < nz; ++z) {
            diff[z] += (ga[z] - gb[z]) * masses[z] * (t1 - t0);
            worst = std::max(worst, std::fabs(diff[z]));
        }
    }
    return worst;
}

double control_sup_gap(const Control& a, const Control& b) {
    require(a.partition() == b.partition(), "control_sup_gap: mark partitions differ");
    std::vector<double> knots(a.t_knots().begin(), a.t_knots().end());
    knots.insert(knots.end(), b.t_knots().begin(), b.t_knots().end());
    std::sort(knots.begin(), knots.end());
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i + 1] <= knots[i]) continue;
        const double mid = 0.5 * (knots[i] + knots[i + 1]);
        const auto ta = a.time_cell(mid), tb = b.time_cell(mid);
        for (std::size_t z = 0; z < a.mark_cells(); ++z) {
            worst = std::max(worst, std::fabs(a.at(ta, z) - b.at(tb, z)));
        }
    }
    return worst;
}

ConvergenceTable continuity_in_control(const TripleSpec& spec, const DriftOperator& op,
                                       const NoiseModel& model, std::span<const double> x0,
                                       const std::vector<Control>& g_seq, const Control& g_limit,
                                       double dt, double slack) {
    check_inputs(spec, op, model, x0, g_limit);
    ConvergenceTable table;
    table.label = "skeleton-continuity";
    const SkeletonSolution limit = integrate(spec, op, model, x0, g_limit, dt);
    for (std::size_t n = 0; n < g_seq.size(); ++n) {
        const Control& g = g_seq[n];
        check_inputs(spec, op, model, x0, g);
        const SkeletonSolution sol = integrate(spec, op, model, x0, g, dt);
        ConvergenceRow row;
        row.parameter = static_cast<double>(n + 1);
        row.control_gap = control_measure_gap(g, g_limit, model.marks);
        row.strong_gap = control_sup_gap(g, g_limit);
        row.value = sol.sup_distance(limit);
        table.rows.push_back(row);
    }
    table.monotone = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const double prev = table.rows[i - 1].value;
        if (table.rows[i].value > prev * (1.0 + slack) + 1e-14) table.monotone = false;
    }
    const bool decays = table.rows.empty() || table.rows.back().value <= 1e-12 ||
                        table.rows.back().value < table.rows.front().value;
    table.verdict = table.monotone && decays;
    return table;
}

double uniqueness_audit(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                        std::span<const double> x0, const Control& g, double dt,
                        double perturbation, std::span<const double> direction) {
    check_inputs(spec, op, model, x0, g);
    require(perturbation >= 0.0, "uniqueness_audit: perturbation must be >= 0");
    const std::size_t d = spec.dim();
    HVector dir(direction.begin(), direction.end());
    if (dir.empty()) dir.assign(d, 1.0);
    require(dir.size() == d, "uniqueness_audit: direction dimension mismatch");
    const double dn = spec.norm_h(dir);
    require(dn > 0.0, "uniqueness_audit: direction must be nonzero");
    HVector x1(x0.begin(), x0.end());
    for (std::size_t k = 0; k < d; ++k) x1[k] += perturbation * dir[k] / dn;

    const SkeletonSolution a = integrate(spec, op, model, x0, g, dt);
    const SkeletonSolution b = integrate(spec, op, model, x1, g, dt);
    double gap0 = 0.0;
    for (std::size_t k = 0; k < d; ++k) gap0 += (a.values[k] - b.values[k]) * (a.values[k] - b.values[k]);
    if (gap0 == 0.0) return 0.0;

    const auto quad = g.partition().cell_quadrature(model.marks);
    std::vector<double> gbar(g.mark_cells());
    double log_bound = 0.0, worst = 0.0;
    for (std::size_t n = 0; n + 1 < a.size(); ++n) {
        const double t = a.times[n], h = a.times[n + 1] - t;
        g.time_average(t, t + h, gbar);
        double lip = 0.0;
        for (std::size_t c = 0; c < quad.size(); ++c) {
            double cell = 0.0;
            for (const auto& q : quad[c]) cell += q.weight * model.G_f(t, q.mark);
            lip += std::fabs(gbar[c] - 1.0) * cell;
        }
        log_bound += h * (op.K(t) + op.rho(a.at(n)) + 2.0 * lip);
        double gap = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = a.values[(n + 1) * d + k] - b.values[(n + 1) * d + k];
            gap += diff * diff;
        }
        worst = std::max(worst, gap / (std::exp(log_bound) * gap0));
    }
    return worst;
}

std::string ConvergenceTable::to_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"parameter", "control_gap", "strong_gap", "value", "value_se", "m_gap",
                       "z_gap", "y_gap", "samples"});
    for (const auto& r : rows) {
        write_csv_row(os, {format_double(r.parameter), format_double(r.control_gap),
                           format_double(r.strong_gap), format_double(r.value),
                           format_double(r.value_se), format_double(r.m_gap), format_double(r.z_gap),
                           format_double(r.y_gap), std::to_string(r.samples)});
    }
    return os.str();
}

void write_skeleton_csv(std::ostream& os, const SkeletonSolution& sol, const TripleSpec& spec) {
    std::vector<std::string> header{"t"};
    for (std::size_t k = 0; k < sol.dim; ++k) header.push_back("x" + std::to_string(k + 1));
    header.push_back("norm_h");
    header.push_back("norm_v");
    write_csv_row(os, header);
    std::vector<std::string> row;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        row.clear();
        row.push_back(format_double(sol.times[i]));
        for (double v : sol.at(i)) row.push_back(format_double(v));
        row.push_back(format_double(spec.norm_h(sol.at(i))));
        row.push_back(format_double(spec.norm_v(sol.at(i))));
        write_csv_row(os, row);
    }
}

}  // namespace ldp
