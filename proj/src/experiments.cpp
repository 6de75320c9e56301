#include "ldpspde/experiments.hpp"

#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace ldp {

void run_indexed(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i; !failed && (i = next.fetch_add(1)) < n;) job(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
            (void)w;
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::uint64_t trajectory_stream(std::uint64_t tag, std::size_t rung, std::size_t i) {
    return (tag << 56) | (static_cast<std::uint64_t>(rung) << 40) | static_cast<std::uint64_t>(i);
}

std::size_t trajectories_for(const RunConfig& run, std::size_t rung) {
    return run.trajectories.size() == 1 ? run.trajectories.front() : run.trajectories.at(rung);
}

std::size_t effective_threads(const RunConfig& run) { return run.strict_order ? 1 : run.threads; }

MeanSe mean_se(std::span<const double> x) {
    MeanSe r;
    if (x.empty()) return r;
    const double n = static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += v;
    r.mean = s / n;
    if (x.size() > 1) {
        double q = 0.0;
        for (double v : x) q += (v - r.mean) * (v - r.mean);
        r.se = std::sqrt(q / (n - 1.0) / n);
    }
    return r;
}

RateProblem build_rate_problem(const ExperimentConfig& cfg, const ModelBundle& m, const TerminalTarget& target) {
    RateProblem p{.spec = m.spec, .op = m.op, .model = m.noise, .x0 = m.x0};
    p.horizon = cfg.run.horizon;
    p.target = target;
    p.time_cells = cfg.rate.time_cells;
    p.partition = build_partition(cfg.control, m);
    p.dt = cfg.run.dt;
    return p;
}

OptimizerOptions build_optimizer_options(const ExperimentConfig& cfg) {
    OptimizerOptions o;
    o.floor = cfg.rate.floor;
    o.g_upper = cfg.rate.g_upper;
    o.gap_tol = cfg.rate.gap_tol;
    o.grad_tol = cfg.rate.grad_tol;
    o.max_outer = cfg.rate.max_outer;
    return o;
}

namespace {

double neg_eps_log(double eps, double p) { return p > 0.0 ? -eps * std::log(p) : std::nan(""); }

SolveOptions solve_options(const ExperimentConfig& cfg, std::uint64_t stream) {
    SolveOptions o;
    o.horizon = cfg.run.horizon;
    o.dt = cfg.run.dt;
    o.seed = cfg.run.seed;
    o.stream = stream;
    return o;
}

bool strictly_decreasing(const std::vector<ConvergenceRow>& rows, double ConvergenceRow::*field) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].*field < rows[i - 1].*field)) return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------- LDP

LdpTable experiment_ldp(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelBundle m = build_model(cfg.model, cfg.noise);
    const TerminalTarget target = TerminalTarget::parse(cfg.target.predicate);
    target.validate(m.spec.dim());
    const OptimizerOptions oo = build_optimizer_options(cfg);

    LdpTable table;
    table.target = target.to_string();
    const RateResult main = minimize_rate(build_rate_problem(cfg, m, target), oo);
    table.rate = main.cost;
    table.rate_interior = minimize_rate(build_rate_problem(cfg, m, target.shifted(cfg.target.margin)), oo).cost;
    table.rate_closure = minimize_rate(build_rate_problem(cfg, m, target.shifted(-cfg.target.margin)), oo).cost;
    table.g_star = main.g;
    const bool have_is = main.feasible && !m.noise.null;
    const std::size_t threads = effective_threads(cfg.run);

    for (std::size_t r = 0; r < cfg.run.eps.size(); ++r) {
        const double eps = cfg.run.eps[r];
        const std::size_t n = trajectories_for(cfg.run, r);
        LdpRow row;
        row.eps = eps;
        row.trajectories = n;

        std::vector<double> hit(n), weighted(have_is ? n : 0);
        run_indexed(n, threads, [&](std::size_t i) {
            const auto rep = solve_spde(m.spec, m.op, m.noise, m.x0, eps,
                                        solve_options(cfg, trajectory_stream(kTagNaive, r, i)));
            hit[i] = (!rep.blew_up && target.contains(rep.terminal)) ? 1.0 : 0.0;
        });
        if (have_is) {
            run_indexed(n, threads, [&](std::size_t i) {
                const auto rep = solve_controlled_spde(m.spec, m.op, m.noise, m.x0, eps, main.g,
                                                       solve_options(cfg, trajectory_stream(kTagImportance, r, i)));
                weighted[i] = (!rep.blew_up && target.contains(rep.terminal)) ? std::exp(rep.log_density) : 0.0;
            });
        }
        for (double h : hit) row.hits += h > 0.0;
        row.p_naive = static_cast<double>(row.hits) / static_cast<double>(n);
        row.se_naive = std::sqrt(row.p_naive * (1.0 - row.p_naive) / static_cast<double>(n));
        row.rate_naive = neg_eps_log(eps, row.p_naive);
        row.flagged = row.hits == 0;
        const bool naive_resolved = row.hits > 0 && (row.se_naive <= cfg.run.resolve_rel_se * row.p_naive);
        if (have_is) {
            const MeanSe is = mean_se(weighted);
            row.p_is = is.mean;
            row.se_is = is.se;
            row.rate_is = neg_eps_log(eps, row.p_is);
            const bool is_resolved = row.p_is > 0.0 && row.se_is <= cfg.run.resolve_rel_se * row.p_is;
            if (naive_resolved && is_resolved) {
                const double comb = std::sqrt(row.se_naive * row.se_naive + row.se_is * row.se_is);
                row.is_consistent = std::fabs(row.p_naive - row.p_is) <= 3.0 * comb;
            }
        } else {
            row.p_is = row.se_is = std::nan("");
            row.rate_is = std::nan("");
        }
        const bool use_is = have_is && !naive_resolved;
        row.source = use_is ? "is" : "naive";
        row.estimate = use_is ? row.p_is : row.p_naive;
        row.rate_estimate = neg_eps_log(eps, row.estimate);
        table.rows.push_back(row);
    }

    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
        if (std::isfinite(row.rate_estimate)) {
            xs.push_back(row.eps);
            ys.push_back(row.rate_estimate);
        }
    }
    if (xs.size() >= 2) {
        const MeanSe mx = mean_se(xs), my = mean_se(ys);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx.mean) * (ys[i] - my.mean);
            sxx += (xs[i] - mx.mean) * (xs[i] - mx.mean);
        }
        table.slope = sxy / sxx;
        table.extrapolated = my.mean - table.slope * mx.mean;
    } else {
        table.extrapolated = ys.empty() ? std::nan("") : ys.front();
    }
    if (std::isfinite(table.rate) && table.rate > 0.0) {
        table.relative_error = std::fabs(table.extrapolated - table.rate) / table.rate;
    } else {
        table.relative_error = std::isfinite(table.rate) ? std::fabs(table.extrapolated) : std::nan("");
    }
    const double tol = cfg.target.bracket_tol * (std::isfinite(table.rate) ? std::max(table.rate, 1e-12) : 0.0);
    table.bracket_ok = std::isfinite(table.extrapolated) && table.extrapolated >= table.rate_closure - tol &&
                       table.extrapolated <= table.rate_interior + tol;
    return table;
}

std::string LdpTable::to_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"eps", "trajectories", "hits", "p_naive", "se_naive", "rate_naive", "p_is", "se_is",
                       "rate_is", "estimate", "rate_estimate", "source", "flagged", "is_consistent"});
    for (const auto& r : rows) {
        write_csv_row(os, {format_double(r.eps), std::to_string(r.trajectories), std::to_string(r.hits),
                           format_double(r.p_naive), format_double(r.se_naive), format_double(r.rate_naive),
                           format_double(r.p_is), format_double(r.se_is), format_double(r.rate_is),
                           format_double(r.estimate), format_double(r.rate_estimate), r.source,
                           r.flagged ? "1" : "0", r.is_consistent ? "1" : "0"});
    }
    return os.str();
}

std::string LdpTable::summary_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"key", "value"});
    write_csv_row(os, {"target", target});
    write_csv_row(os, {"rate", format_double(rate)});
    write_csv_row(os, {"rate_interior", format_double(rate_interior)});
    write_csv_row(os, {"rate_closure", format_double(rate_closure)});
    write_csv_row(os, {"extrapolated", format_double(extrapolated)});
    write_csv_row(os, {"slope", format_double(slope)});
    write_csv_row(os, {"relative_error", format_double(relative_error)});
    write_csv_row(os, {"bracket_ok", bracket_ok ? "1" : "0"});
    return os.str();
}

// ---------------------------------------------------------------- convergence

ConvergenceTable experiment_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelBundle m = build_model(cfg.model, cfg.noise);
    const Control g = build_control(cfg.control, m, cfg.run.horizon);
    const SkeletonSolution ref = solve_skeleton(m.spec, m.op, m.noise, m.x0, g, cfg.run.dt, false);
    const std::size_t threads = effective_threads(cfg.run);

    ConvergenceTable table;
    table.label = "controlled-convergence";
    for (std::size_t r = 0; r < cfg.run.eps.size(); ++r) {
        const double eps = cfg.run.eps[r];
        const std::size_t n = trajectories_for(cfg.run, r);
        std::vector<double> gap(n), mg(n), zg(n), yg(n);
        run_indexed(n, threads, [&](std::size_t i) {
            SolveOptions o = solve_options(cfg, trajectory_stream(kTagConvergence, r, i));
            o.reference = &ref;
            const auto rep = solve_controlled_spde(m.spec, m.op, m.noise, m.x0, eps, g, o);
            if (rep.blew_up) throw NumericalError("experiment_convergence: trajectory blew up at eps=" + format_double(eps));
            gap[i] = rep.sup_gap_sq;
            mg[i] = rep.sup_m_sq;
            zg[i] = rep.sup_z_gap_sq;
            yg[i] = rep.sup_y_gap_sq;
        });
        ConvergenceRow row;
        row.parameter = eps;
        const MeanSe s = mean_se(gap);
        row.value = s.mean;
        row.value_se = s.se;
        row.m_gap = mean_se(mg).mean;
        row.z_gap = mean_se(zg).mean;
        row.y_gap = mean_se(yg).mean;
        row.samples = n;
        table.rows.push_back(row);
    }
    table.monotone = strictly_decreasing(table.rows, &ConvergenceRow::value);
    table.verdict = table.monotone && !table.rows.empty() && table.rows.back().value <= cfg.run.tolerance;
    return table;
}

ConvergenceTable experiment_skeleton_continuity(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelBundle m = build_model(cfg.model, cfg.noise);
    const ZPartition z = build_partition(cfg.control, m);
    const double c = cfg.control.value, T = cfg.run.horizon;
    std::vector<Control> seq;
    Control limit = Control::constant(T, 1.0, z);
    if (cfg.run.sequence == "strong") {
        for (std::size_t n = 1; n <= cfg.run.sequence_length; ++n) {
            seq.push_back(Control::constant(T, 1.0 + (c - 1.0) / static_cast<double>(n), z));
        }
    } else {
        limit = Control::constant(T, c, z);
        for (std::size_t n = 1; n <= cfg.run.sequence_length; ++n) {
            Control g = Control::uniform(T, 2 * n, z, c);
            for (std::size_t tc = 0; tc < g.time_cells(); ++tc) {
                for (std::size_t zc = 0; zc < g.mark_cells(); ++zc) g.at(tc, zc) = c * (tc % 2 == 0 ? 1.5 : 0.5);
            }
            seq.push_back(std::move(g));
        }
    }
    ConvergenceTable t = continuity_in_control(m.spec, m.op, m.noise, m.x0, seq, limit, cfg.run.dt);
    t.label = "skeleton-continuity-" + cfg.run.sequence;
    return t;
}

// ---------------------------------------------------------------- moments

MomentsTable experiment_moments(const ExperimentConfig& cfg) {
    cfg.validate();
    const ModelBundle m = build_model(cfg.model, cfg.noise);
    const Control g = build_control(cfg.control, m, cfg.run.horizon);
    std::vector<double> ps = cfg.run.moment_p;
    if (ps.empty()) {
        ps = {2.0};
        if (m.spec.beta() > 0.0) ps.push_back(m.spec.beta() + 2.0);
    }
    const std::size_t threads = effective_threads(cfg.run);
    std::vector<std::vector<MomentReport>> per_p(ps.size());
    for (std::size_t r = 0; r < cfg.run.eps.size(); ++r) {
        const double eps = cfg.run.eps[r];
        const std::size_t n = trajectories_for(cfg.run, r);
        std::vector<SolveReport> reps(n);
        run_indexed(n, threads, [&](std::size_t i) {
            SolveOptions o = solve_options(cfg, trajectory_stream(kTagMoments, r, i));
            o.moment_p = ps;
            reps[i] = solve_controlled_spde(m.spec, m.op, m.noise, m.x0, eps, g, o);
        });
        for (std::size_t k = 0; k < ps.size(); ++k) per_p[k].push_back(monitor_moments(reps, ps[k]));
    }
    MomentsTable t;
    t.p = ps;
    t.verdict = true;
    for (std::size_t k = 0; k < ps.size(); ++k) {
        t.ladders.push_back(moment_ladder(cfg.run.eps, per_p[k]));
        const auto& l = t.ladders.back();
        if (!(l.relative_spread < 0.25) || l.grows_as_eps_shrinks) t.verdict = false;
        for (const auto& mr : l.moments) {
            if (mr.blowups) t.verdict = false;
        }
    }
    return t;
}

std::string MomentsTable::to_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"p", "eps", "samples", "sup_moment", "sup_moment_se", "energy", "energy_se",
                       "v_integral_moment", "blowups", "relative_spread"});
    for (std::size_t k = 0; k < ladders.size(); ++k) {
        const auto& l = ladders[k];
        for (std::size_t i = 0; i < l.moments.size(); ++i) {
            const auto& mr = l.moments[i];
            write_csv_row(os, {format_double(p[k]), format_double(l.eps[i]), std::to_string(mr.samples),
                               format_double(mr.sup_moment), format_double(mr.sup_moment_se),
                               format_double(mr.energy), format_double(mr.energy_se),
                               format_double(mr.v_integral_moment), std::to_string(mr.blowups),
                               format_double(l.relative_spread)});
        }
    }
    return os.str();
}

}  // namespace ldp
