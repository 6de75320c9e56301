#include "ldpspde/spde.hpp"

#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"
#include "ldpspde/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ldp {

namespace {

double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double v_norm(std::span<const double> w, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += w[k] * v[k] * v[k];
    return std::sqrt(s);
}

SolveReport solve_impl(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                       std::span<const double> x0, double eps, const Control* g,
                       const SolveOptions& opts) {
    spec.check(x0);
    require(eps > 0.0 && std::isfinite(eps), "solve_spde: eps must be > 0");
    require(op.dim() == spec.dim() && model.dim == spec.dim(),
            "solve_spde: operator/noise/spec dimension mismatch");
    require(opts.horizon > 0.0 && opts.dt > 0.0 && opts.dt <= opts.horizon,
            "solve_spde: need 0 < dt <= T");
    for (double p : opts.moment_p) require(p >= 2.0, "solve_spde: moment exponents must be >= 2");
    if (g) {
        require(std::fabs(g->horizon() - opts.horizon) <= 1e-12 * opts.horizon,
                "solve_controlled_spde: control horizon differs from T");
        require(std::isfinite(g->max_value()), "solve_controlled_spde: control must be bounded");
        g->partition().check(model.marks);
    }
    if (opts.reference) {
        require(opts.reference->dim == spec.dim(), "solve_spde: reference dimension mismatch");
    }

    const std::size_t d = spec.dim();
    const ZPartition partition = g ? g->partition() : ZPartition::single();
    const CellIntegrals cells(model, partition);
    const std::size_t nc = cells.cells();
    StepWorkspace ws(d, nc);
    std::vector<double> gbar(nc, 1.0), control(nc, 0.0), compensator(nc, -1.0);

    JumpStream stream;
    stream.horizon = opts.horizon;
    if (!model.null) {
        stream = g ? sample_controlled_prm(model.marks, eps, *g, opts.seed, opts.stream, opts.event_cap)
                   : sample_prm(model.marks, eps, opts.horizon, opts.seed, opts.stream, opts.event_cap);
    }

    const auto grid = time_grid(opts.horizon, opts.dt);
    const auto weights = spec.weights();
    const double alpha = op.constants().alpha;

    SolveReport rep;
    rep.moment_p = opts.moment_p;
    rep.energy.assign(opts.moment_p.size(), 0.0);
    HVector x(x0.begin(), x0.end()), y(d, 0.0), z(d, 0.0), m(d, 0.0);
    HVector dy(d), dz(d), dm(d), fz(d), ref_x(d), ref_y(d), ref_z(d), left(d);
    const StepIncrements inc{dy, dz, dm};

    CadlagPath& path = rep.path;
    path.dim = d;
    auto record = [&](double t, bool jump, std::span<const double> left_limit) {
        const double n2 = sq_norm(x);
        rep.sup_h_norm = std::max(rep.sup_h_norm, std::sqrt(n2));
        rep.sup_m_sq = std::max(rep.sup_m_sq, sq_norm(m));
        double rec = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double r = x[k] - (x0[k] + y[k] + z[k] + m[k]);
            rec += r * r;
        }
        rep.reconstruction_error = std::max(rep.reconstruction_error, std::sqrt(rec));
        if (opts.reference) {
            opts.reference->interpolate(t, ref_x, ref_y, ref_z);
            double gx = 0.0, gy = 0.0, gz = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                gx += (x[k] - ref_x[k]) * (x[k] - ref_x[k]);
                gy += (y[k] - ref_y[k]) * (y[k] - ref_y[k]);
                gz += (z[k] - ref_z[k]) * (z[k] - ref_z[k]);
            }
            rep.sup_gap_sq = std::max(rep.sup_gap_sq, gx);
            rep.sup_y_gap_sq = std::max(rep.sup_y_gap_sq, gy);
            rep.sup_z_gap_sq = std::max(rep.sup_z_gap_sq, gz);
        }
        if (opts.record_path) {
            path.times.push_back(t);
            path.is_jump.push_back(jump ? 1 : 0);
            path.values.insert(path.values.end(), x.begin(), x.end());
            path.left_limits.insert(path.left_limits.end(), left_limit.begin(), left_limit.end());
            path.m_path.insert(path.m_path.end(), m.begin(), m.end());
            path.z_path.insert(path.z_path.end(), z.begin(), z.end());
            path.y_path.insert(path.y_path.end(), y.begin(), y.end());
        }
    };
    auto finite = [&] {
        return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
    };

    record(0.0, false, x);
    std::size_t next_event = 0;
    const auto& events = stream.events;
    double t = 0.0;
    for (std::size_t n = 1; n < grid.size() && !rep.blew_up; ++n) {
        const double t_grid = grid[n];
        while (t < t_grid && !rep.blew_up) {
            const bool event_first = next_event < events.size() && events[next_event].time < t_grid;
            const double t_next = event_first ? events[next_event].time : t_grid;
            const double h = t_next - t;
            if (h > 0.0) {
                const double nx = std::sqrt(sq_norm(x));
                const double vna = std::pow(v_norm(weights, x), alpha);
                rep.v_alpha_integral += h * vna;
                for (std::size_t i = 0; i < opts.moment_p.size(); ++i) {
                    rep.energy[i] += h * std::pow(nx, opts.moment_p[i] - 2.0) * vna;
                }
                if (g) {
                    g->time_average(t, t_next, gbar);
                    for (std::size_t c = 0; c < nc; ++c) {
                        control[c] = gbar[c] - 1.0;
                        compensator[c] = -gbar[c];
                    }
                }
                drift_step(op, cells, t, h, control, compensator, x, ws, &inc);
                for (std::size_t k = 0; k < d; ++k) {
                    y[k] += dy[k];
                    z[k] += dz[k];
                    m[k] += dm[k];
                }
                if (!finite()) {
                    rep.blew_up = true;
                    rep.blowup_time = t_next;
                    break;
                }
                if (!event_first) record(t_next, false, x);
            }
            t = t_next;
            while (next_event < events.size() && events[next_event].time <= t) {
                const auto& e = events[next_event++];
                left = x;
                model.eval(t, left, e.mark, fz);
                for (std::size_t k = 0; k < d; ++k) {
                    x[k] += eps * fz[k];
                    m[k] += eps * fz[k];
                }
                ++rep.jumps;
                if (!finite()) {
                    rep.blew_up = true;
                    rep.blowup_time = t;
                    break;
                }
                record(t, true, left);
            }
            if (event_first && t == t_grid && !rep.blew_up) record(t, false, x);
        }
    }
    rep.terminal = x;
    if (g && !model.null) rep.log_density = girsanov_log_density(stream, *g, eps, model.marks, opts.horizon);
    return rep;
}

}  // namespace

SolveReport solve_spde(const TripleSpec& spec, const DriftOperator& op, const NoiseModel& model,
                       std::span<const double> x0, double eps, const SolveOptions& opts) {
    return solve_impl(spec, op, model, x0, eps, nullptr, opts);
}

SolveReport solve_controlled_spde(const TripleSpec& spec, const DriftOperator& op,
                                  const NoiseModel& model, std::span<const double> x0, double eps,
                                  const Control& g, const SolveOptions& opts) {
    return solve_impl(spec, op, model, x0, eps, &g, opts);
}

MomentReport monitor_moments(std::span<const SolveReport> reports, double p) {
    require(!reports.empty(), "monitor_moments: empty ensemble");
    MomentReport mr;
    mr.p = p;
    double s1 = 0.0, s2 = 0.0, e1 = 0.0, e2 = 0.0, v1 = 0.0;
    for (const auto& r : reports) {
        const auto it = std::find(r.moment_p.begin(), r.moment_p.end(), p);
        require(it != r.moment_p.end(), "monitor_moments: exponent was not monitored by the solver");
        if (r.blew_up) {
            ++mr.blowups;
            continue;
        }
        const double sup = std::pow(r.sup_h_norm, p);
        const double en = r.energy[static_cast<std::size_t>(it - r.moment_p.begin())];
        s1 += sup;
        s2 += sup * sup;
        e1 += en;
        e2 += en * en;
        v1 += std::pow(r.v_alpha_integral, p / 2.0);
        ++mr.samples;
    }
    if (mr.samples == 0) throw NumericalError("monitor_moments: every trajectory blew up");
    const double n = static_cast<double>(mr.samples);
    mr.sup_moment = s1 / n;
    mr.energy = e1 / n;
    mr.v_integral_moment = v1 / n;
    if (mr.samples > 1) {
        mr.sup_moment_se = std::sqrt(std::max(0.0, (s2 / n - mr.sup_moment * mr.sup_moment) / (n - 1)));
        mr.energy_se = std::sqrt(std::max(0.0, (e2 / n - mr.energy * mr.energy) / (n - 1)));
    }
    return mr;
}

MomentLadder moment_ladder(std::vector<double> eps, std::vector<MomentReport> moments) {
    require(eps.size() == moments.size() && !eps.empty(), "moment_ladder: mismatched ladder");
    MomentLadder l;
    l.eps = std::move(eps);
    l.moments = std::move(moments);
    double lo = l.moments.front().sup_moment, hi = lo;
    for (const auto& m : l.moments) {
        lo = std::min(lo, m.sup_moment);
        hi = std::max(hi, m.sup_moment);
    }
    l.relative_spread = lo > 0.0 ? (hi - lo) / lo : (hi > 0.0 ? INFINITY : 0.0);
    // Ladder entries are ordered by decreasing ε; growth toward ε → 0 would
    // contradict a bound uniform in ε.
    l.grows_as_eps_shrinks = l.moments.size() > 1;
    for (std::size_t i = 1; i < l.moments.size(); ++i) {
        if (!(l.moments[i].sup_moment > l.moments[i - 1].sup_moment * 1.05)) l.grows_as_eps_shrinks = false;
    }
    return l;
}

void write_path_csv(std::ostream& os, const CadlagPath& path, const TripleSpec& spec) {
    std::vector<std::string> header{"t", "jump"};
    for (std::size_t k = 0; k < path.dim; ++k) header.push_back("x" + std::to_string(k + 1));
    for (const char* c : {"norm_h", "m_norm", "z_norm", "y_norm"}) header.emplace_back(c);
    write_csv_row(os, header);
    std::vector<std::string> row;
    const std::size_t d = path.dim;
    for (std::size_t i = 0; i < path.size(); ++i) {
        row.clear();
        row.push_back(format_double(path.times[i]));
        row.push_back(path.is_jump[i] ? "1" : "0");
        for (double v : path.at(i)) row.push_back(format_double(v));
        row.push_back(format_double(spec.norm_h(path.at(i))));
        for (const auto* comp : {&path.m_path, &path.z_path, &path.y_path}) {
            row.push_back(format_double(std::sqrt(sq_norm({comp->data() + i * d, d}))));
        }
        write_csv_row(os, row);
    }
}

}  // namespace ldp
