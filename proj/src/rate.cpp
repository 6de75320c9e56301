#include "ldpspde/rate.hpp"

#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"
#include "ldpspde/kernel.hpp"
#include "ldpspde/rng.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace ldp {

double ell(double r) {
    require(r >= 0.0 && !std::isnan(r), "ell: argument must be >= 0");
    if (r == 0.0) return 1.0;
    return r * std::log(r) - r + 1.0;
}

double ell_prime(double r) {
    require(r > 0.0, "ell_prime: argument must be > 0");
    return std::log(r);
}

double cost_lt(const Control& g, const MarkSpace& marks) {
    const auto meas = cell_measures(g, marks);
    const auto v = g.values();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i] >= 0.0, "cost_lt: control must be nonnegative");
        if (meas[i] > 0.0) s += ell(v[i]) * meas[i];
    }
    return s;
}

double cost_lt(const Control& g, const MarkSpace& marks, double horizon) {
    require(std::fabs(g.horizon() - horizon) <= 1e-12 * horizon, "cost_lt: control horizon differs from T");
    return cost_lt(g, marks);
}

bool check_sn_membership(const Control& g, double N, const MarkSpace& marks, double horizon) {
    require(N >= 0.0, "check_sn_membership: N must be >= 0");
    return cost_lt(g, marks, horizon) <= N;
}

std::pair<double, double> level_set_interval(double M, double min_cell_measure) {
    require(M >= 0.0 && min_cell_measure > 0.0, "level_set_interval: need M >= 0 and a positive cell measure");
    const double level = M / min_cell_measure;
    auto bisect = [&](double a, double b) {
        // ℓ - level changes sign on [a, b]
        const bool inc = ell(b) > ell(a);
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            if ((ell(m) > level) == inc) b = m; else a = m;
        }
        return inc ? b : a;
    };
    double hi = 2.0;
    while (ell(hi) < level) hi *= 2.0;
    hi = bisect(1.0, hi);
    const double lo = level >= 1.0 ? 0.0 : bisect(0.0, 1.0);
    return {lo, hi};
}

// ---------------------------------------------------------------- targets

TerminalTarget TerminalTarget::parse(const std::string& text) {
    std::string s;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    }
    if (s == "all") return all();
    const auto bad = [&] { return ValidationError("target: cannot parse predicate '" + text + "'"); };
    const auto op_pos = s.find_first_of("<>");
    if (op_pos == std::string::npos || op_pos + 1 >= s.size() || s[op_pos + 1] != '=') throw bad();
    const bool ge = s[op_pos] == '>';
    const std::string lhs = s.substr(0, op_pos);
    const double value = parse_double(s.substr(op_pos + 2), "target threshold");
    if (!std::isfinite(value)) throw bad();
    if (lhs == "XT") return ge ? coord_ge(0, value) : coord_le(0, value);
    if (lhs == "|XT|") {
        require(value >= 0.0, "target: norm radius must be >= 0");
        return ge ? norm_ge(value) : norm_le(value);
    }
    if (lhs.size() > 4 && lhs.starts_with("XT[") && lhs.back() == ']') {
        const std::string idx = lhs.substr(3, lhs.size() - 4);
        if (idx.empty() || !std::all_of(idx.begin(), idx.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) throw bad();
        const std::size_t k = std::stoul(idx);
        require(k >= 1, "target: coordinates are 1-based");
        TerminalTarget t = ge ? coord_ge(k - 1, value) : coord_le(k - 1, value);
        t.coord_ = k - 1;
        return t;
    }
    throw bad();
}

double TerminalTarget::slack(std::span<const double> x) const {
    switch (kind_) {
        case Kind::All: return -1.0;
        case Kind::CoordGe: return threshold_ - x[coord_];
        case Kind::CoordLe: return x[coord_] - threshold_;
        case Kind::NormGe:
        case Kind::NormLe: {
            const double n = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
            return kind_ == Kind::NormGe ? threshold_ - n : n - threshold_;
        }
    }
    return 0.0;
}

void TerminalTarget::slack_gradient(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    switch (kind_) {
        case Kind::All: return;
        case Kind::CoordGe: out[coord_] = -1.0; return;
        case Kind::CoordLe: out[coord_] = 1.0; return;
        case Kind::NormGe:
        case Kind::NormLe: {
            const double n = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
            if (n == 0.0) return;
            const double s = kind_ == Kind::NormGe ? -1.0 / n : 1.0 / n;
            for (std::size_t k = 0; k < x.size(); ++k) out[k] = s * x[k];
            return;
        }
    }
}

TerminalTarget TerminalTarget::shifted(double delta) const {
    TerminalTarget t = *this;
    switch (kind_) {
        case Kind::All: break;
        case Kind::CoordGe:
        case Kind::NormGe: t.threshold_ += delta; break;
        case Kind::CoordLe:
        case Kind::NormLe: t.threshold_ -= delta; break;
    }
    if (t.kind_ == Kind::NormGe || t.kind_ == Kind::NormLe) t.threshold_ = std::max(0.0, t.threshold_);
    return t;
}

void TerminalTarget::validate(std::size_t dim) const {
    if (kind_ == Kind::CoordGe || kind_ == Kind::CoordLe) {
        require(coord_ < dim, "target: coordinate index exceeds the dimension");
    }
}

std::string TerminalTarget::to_string() const {
    const std::string v = format_double(threshold_);
    const std::string xk = "XT[" + std::to_string(coord_ + 1) + "]";
    switch (kind_) {
        case Kind::All: return "all";
        case Kind::CoordGe: return xk + ">=" + v;
        case Kind::CoordLe: return xk + "<=" + v;
        case Kind::NormGe: return "|XT|>=" + v;
        case Kind::NormLe: return "|XT|<=" + v;
    }
    return {};
}

// ---------------------------------------------------------------- problem

void RateProblem::validate() const {
    spec.check(x0);
    require(op.dim() == spec.dim() && model.dim == spec.dim(), "rate: operator/noise/spec dimension mismatch");
    require(horizon > 0.0 && std::isfinite(horizon), "rate: horizon must be > 0");
    require(dt > 0.0 && dt <= horizon, "rate: need 0 < dt <= T");
    require(time_cells >= 1, "rate: at least one time cell");
    require(target.has_value() != path.has_value(), "rate: exactly one of a terminal or a path target");
    if (target) target->validate(spec.dim());
    if (path) require(static_cast<bool>(path->phi) && path->tol >= 0.0, "rate: path target needs phi and tol >= 0");
    require(level_cap >= 0.0, "rate: level cap must be >= 0");
    partition.check(model.marks);
}

Control RateProblem::make_control(double value) const {
    return Control::uniform(horizon, time_cells, partition, value);
}

namespace {

/// Forward skeleton sweep on the problem grid, keeping every state for the adjoint.
class SkeletonSweep {
public:
    explicit SkeletonSweep(const RateProblem& p)
        : p_(p), g_(p.make_control()), cells_(p.model, p.partition),
          grid_(time_grid(p.horizon, p.dt)), ws_(p.spec.dim(), cells_.cells()),
          gbar_(cells_.cells()), coeff_(cells_.cells()), states_(grid_.size() * p.spec.dim()),
          phi_(p.path ? grid_.size() * p.spec.dim() : 0) {
        const std::size_t d = p.spec.dim();
        if (p.path) {
            for (std::size_t n = 0; n < grid_.size(); ++n) p.path->phi(grid_[n], {phi_.data() + n * d, d});
        }
    }

    const Control& control() const { return g_; }

    double run(std::span<const double> values) {
        std::copy(values.begin(), values.end(), g_.values().begin());
        const std::size_t d = p_.spec.dim();
        std::copy(p_.x0.begin(), p_.x0.end(), states_.begin());
        for (std::size_t n = 0; n + 1 < grid_.size(); ++n) {
            const double t = grid_[n], h = grid_[n + 1] - t;
            std::copy_n(states_.begin() + n * d, d, states_.begin() + (n + 1) * d);
            g_.time_average(t, t + h, gbar_);
            for (std::size_t c = 0; c < gbar_.size(); ++c) coeff_[c] = gbar_[c] - 1.0;
            drift_step(p_.op, cells_, t, h, coeff_, {}, {states_.data() + (n + 1) * d, d}, ws_);
        }
        for (double v : terminal()) {
            if (!std::isfinite(v)) throw NumericalError("rate: skeleton state became nonfinite");
        }
        return slack();
    }

    std::span<const double> terminal() const {
        const std::size_t d = p_.spec.dim();
        return {states_.data() + (grid_.size() - 1) * d, d};
    }

    double slack() const {
        if (p_.target) return p_.target->slack(terminal());
        const std::size_t d = p_.spec.dim();
        double s = 0.0;
        for (std::size_t n = 0; n + 1 < grid_.size(); ++n) {
            const double h = grid_[n + 1] - grid_[n];
            for (std::size_t k = 0; k < d; ++k) {
                const double e = states_[(n + 1) * d + k] - phi_[(n + 1) * d + k];
                s += h * e * e;
            }
        }
        return s / p_.horizon - p_.path->tol * p_.path->tol;
    }

    /// grad += scale · ∂s/∂values, for the state of the last run().
    void adjoint(double scale, std::span<double> grad) {
        const std::size_t d = p_.spec.dim();
        const std::size_t nc = cells_.cells();
        const std::size_t N = grid_.size() - 1;
        HVector lam(d, 0.0), y(d), tmp(d), fz(d);
        std::vector<double> frac(g_.time_cells());
        const auto stiff = p_.op.stiff();
        auto add_path_term = [&](std::size_t n) {
            if (!p_.path) return;
            const double h = grid_[n] - grid_[n - 1];
            for (std::size_t k = 0; k < d; ++k) {
                lam[k] += 2.0 * h / p_.horizon * (states_[n * d + k] - phi_[n * d + k]);
            }
        };
        if (p_.target) {
            p_.target->slack_gradient(terminal(), lam);
        } else {
            add_path_term(N);
        }
        for (std::size_t n = N; n-- > 0;) {
            const double t = grid_[n], h = grid_[n + 1] - t;
            const std::span<const double> x{states_.data() + n * d, d};
            for (std::size_t k = 0; k < d; ++k) y[k] = lam[k] / (1.0 + h * stiff[k]);
            g_.time_average(t, t + h, gbar_);
            for (std::size_t c = 0; c < nc; ++c) coeff_[c] = gbar_[c] - 1.0;
            cells_.evaluate(t, x, ws_.cell_f, ws_.fz);
            std::fill(frac.begin(), frac.end(), 0.0);
            g_.overlap_fractions(t, t + h, frac);
            for (std::size_t c = 0; c < nc; ++c) {
                const double fy = std::inner_product(y.begin(), y.end(), ws_.cell_f.begin() + c * d, 0.0);
                for (std::size_t tc = 0; tc < frac.size(); ++tc) {
                    if (frac[tc] != 0.0) grad[tc * nc + c] += scale * h * frac[tc] * fy;
                }
            }
            p_.op.remainder_vjp(t, x, y, tmp);
            cells_.accumulate_vjp(t, x, coeff_, y, tmp, fz);
            for (std::size_t k = 0; k < d; ++k) lam[k] = y[k] + h * tmp[k];
            if (n > 0) add_path_term(n);
        }
    }

private:
    const RateProblem& p_;
    Control g_;
    CellIntegrals cells_;
    std::vector<double> grid_;
    StepWorkspace ws_;
    std::vector<double> gbar_, coeff_;
    std::vector<double> states_;
    std::vector<double> phi_;
};

double cost_and_grad(std::span<const double> values, std::span<const double> meas, std::span<double> grad) {
    double c = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        c += ell(values[i]) * meas[i];
        if (!grad.empty()) grad[i] = values[i] > 0.0 ? std::log(values[i]) * meas[i] : 0.0;
    }
    return c;
}

double al_term(double s, double lambda, double rho) {
    const double m = std::max(0.0, lambda + rho * s);
    return (m * m - lambda * lambda) / (2.0 * rho);
}

struct Objective {
    const RateProblem& problem;
    SkeletonSweep sweep;
    std::vector<double> meas;
    double lambda = 0.0;
    double rho = 1.0;
    long evaluations = 0;

    explicit Objective(const RateProblem& p)
        : problem(p), sweep(p), meas(cell_measures(sweep.control(), p.model.marks)) {}

    double operator()(std::span<const double> v, std::span<double> grad) {
        ++evaluations;
        double f = cost_and_grad(v, meas, grad);
        const double s = sweep.run(v);
        f += al_term(s, lambda, rho);
        if (!grad.empty()) {
            const double m = std::max(0.0, lambda + rho * s);
            if (m > 0.0) sweep.adjoint(m, grad);
        }
        return f;
    }
};

double projected_gradient_norm(std::span<const double> x, std::span<const double> g, double lo, double hi) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::fabs(std::clamp(x[i] - g[i], lo, hi) - x[i]));
    return r;
}

/// Spectral projected gradient with a nonmonotone Armijo search on [lo, hi]^n.
int spg(Objective& obj, std::vector<double>& x, double lo, double hi, double tol, int max_iter, double& pg) {
    const std::size_t n = x.size();
    for (double& v : x) v = std::clamp(v, lo, hi);
    std::vector<double> g(n), xn(n), gn(n), d(n);
    double f = obj(x, g);
    std::deque<double> history{f};
    pg = projected_gradient_norm(x, g, lo, hi);
    double step = pg > 0.0 ? std::clamp(1.0 / pg, 1e-10, 1e10) : 1.0;
    int it = 0;
    for (; it < max_iter && pg > tol; ++it) {
        for (std::size_t i = 0; i < n; ++i) d[i] = std::clamp(x[i] - step * g[i], lo, hi) - x[i];
        const double gd = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
        if (gd >= 0.0) break;
        const double fmax = *std::max_element(history.begin(), history.end());
        double t = 1.0, fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = std::clamp(x[i] + t * d[i], lo, hi);
            try {
                fn = obj(xn, gn);
            } catch (const NumericalError&) {
                fn = INFINITY;
            }
            if (std::isfinite(fn) && fn <= fmax + 1e-4 * t * gd) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double si = xn[i] - x[i], yi = gn[i] - g[i];
            ss += si * si;
            sy += si * yi;
        }
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : 1e10;
        x.swap(xn);
        g.swap(gn);
        f = fn;
        history.push_back(f);
        if (history.size() > 10) history.pop_front();
        pg = projected_gradient_norm(x, g, lo, hi);
    }
    return it;
}

struct NmContext {
    Objective* obj;
    double lo, hi;
    std::vector<double> buf;
};

double nm_eval(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<NmContext*>(params);
    for (std::size_t i = 0; i < ctx->buf.size(); ++i) ctx->buf[i] = std::clamp(gsl_vector_get(v, i), ctx->lo, ctx->hi);
    try {
        return (*ctx->obj)(ctx->buf, {});
    } catch (const NumericalError&) {
        return GSL_POSINF;
    }
}

int nelder_mead(Objective& obj, std::vector<double>& x, double lo, double hi, int max_iter) {
    const std::size_t n = x.size();
    NmContext ctx{&obj, lo, hi, std::vector<double>(n)};
    gsl_multimin_function fn{&nm_eval, n, &ctx};
    gsl_vector* start = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(start, i, x[i]);
        gsl_vector_set(step, i, 0.1 * std::max(0.1, x[i]));
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, start, step);
    int it = 0;
    for (; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s) != 0) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) == GSL_SUCCESS) break;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(gsl_vector_get(s->x, i), lo, hi);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(start);
    return it;
}

double adjoint_check(Objective& obj, std::span<const double> x0, double lo, double hi, std::uint64_t seed) {
    const std::size_t n = x0.size();
    PhiloxRng rng(seed, 0);
    std::vector<double> x(n), dir(n), g(n), dummy;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::clamp(x0[i] * (0.8 + 0.4 * rng.uniform()), std::max(lo, 1e-3), hi);
        dir[i] = rng.uniform() - 0.5;
    }
    obj(x, g);
    const double ad = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    const double h = 1e-6;
    std::vector<double> xp(x), xm(x);
    for (std::size_t i = 0; i < n; ++i) {
        xp[i] += h * dir[i];
        xm[i] -= h * dir[i];
    }
    const double fd = (obj(xp, dummy) - obj(xm, dummy)) / (2.0 * h);
    return std::fabs(fd - ad) / std::max({std::fabs(fd), std::fabs(ad), 1e-8});
}

}  // namespace

double penalized_objective(const RateProblem& problem, std::span<const double> values,
                           double multiplier, double penalty, std::span<double> grad) {
    problem.validate();
    require(penalty > 0.0, "penalized_objective: penalty must be > 0");
    Objective obj(problem);
    require(values.size() == obj.meas.size(), "penalized_objective: wrong number of cell values");
    require(grad.empty() || grad.size() == values.size(), "penalized_objective: gradient size mismatch");
    obj.lambda = multiplier;
    obj.rho = penalty;
    return obj(values, grad);
}

double constraint_slack(const RateProblem& problem, std::span<const double> values, HVector* terminal) {
    problem.validate();
    SkeletonSweep sweep(problem);
    require(values.size() == sweep.control().cells(), "constraint_slack: wrong number of cell values");
    const double s = sweep.run(values);
    if (terminal) terminal->assign(sweep.terminal().begin(), sweep.terminal().end());
    return s;
}

RateResult minimize_rate(const RateProblem& problem, const OptimizerOptions& opts) {
    problem.validate();
    require(opts.floor > 0.0 && opts.g_upper > 1.0, "minimize_rate: need floor > 0 and g_upper > 1");
    require(opts.penalty0 > 0.0 && opts.penalty_growth > 1.0, "minimize_rate: bad penalty schedule");
    Objective obj(problem);
    const std::size_t n = obj.meas.size();
    std::vector<double> x(n, 1.0);
    if (opts.initial) {
        require(opts.initial->cells() == n && opts.initial->partition() == problem.partition,
                "minimize_rate: initial control does not match the problem grid");
        x.assign(opts.initial->values().begin(), opts.initial->values().end());
    }
    const double lo = opts.floor, hi = opts.g_upper;

    RateResult res;
    obj.lambda = 1.0;
    obj.rho = opts.penalty0;
    res.adjoint_check_error = adjoint_check(obj, x, lo, hi, opts.check_seed);
    res.used_fallback = !(res.adjoint_check_error <= opts.adjoint_check_tol);

    obj.lambda = 0.0;
    double s_prev = INFINITY, pg = 0.0;
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        int inner = 0;
        if (res.used_fallback) {
            inner = nelder_mead(obj, x, lo, hi, 20 * opts.max_inner);
            std::vector<double> g(n);
            obj(x, g);
            pg = projected_gradient_norm(x, g, lo, hi);
        } else {
            inner = spg(obj, x, lo, hi, opts.grad_tol, opts.max_inner, pg);
        }
        const double s = obj.sweep.run(x);
        TraceRow row{outer, inner, obj.rho, obj.lambda, cost_and_grad(x, obj.meas, {}), std::max(0.0, s), pg};
        res.trace.push_back(row);
        const bool feasible = s <= opts.gap_tol;
        const bool settled = obj.lambda == 0.0 ? s <= opts.gap_tol : std::fabs(s) <= opts.gap_tol;
        if (feasible && settled && pg <= opts.grad_tol) {
            res.converged = true;
            break;
        }
        obj.lambda = std::max(0.0, obj.lambda + obj.rho * s);
        if (s > opts.gap_tol && s > 0.25 * s_prev) obj.rho *= opts.penalty_growth;
        s_prev = std::max(0.0, s);
        if (obj.rho > opts.penalty_max) break;
    }

    const double s = obj.sweep.run(x);
    res.terminal.assign(obj.sweep.terminal().begin(), obj.sweep.terminal().end());
    res.g = problem.make_control();
    std::copy(x.begin(), x.end(), res.g.values().begin());
    res.achieved_cost = cost_and_grad(x, obj.meas, {});
    res.gap = std::max(0.0, s);
    res.feasible = s <= opts.gap_tol && res.achieved_cost <= problem.level_cap;
    res.cost = res.feasible ? res.achieved_cost : INFINITY;
    if (!res.feasible) {
        res.converged = false;
        res.status = s > opts.gap_tol ? "infeasible" : "outside-level-set";
    } else {
        res.status = res.converged ? "converged" : "not-converged";
    }
    return res;
}

RateResult brute_force_rate(const RateProblem& problem, int grid_points, double g_hi, double lo) {
    problem.validate();
    SkeletonSweep sweep(problem);
    const std::size_t n = sweep.control().cells();
    if (n > 3) throw ValidationError("brute_force_rate: at most 3 control cells (got " + std::to_string(n) + ")");
    require(grid_points >= 2, "brute_force_rate: need at least 2 grid points");
    require(lo >= 0.0 && g_hi > lo, "brute_force_rate: need 0 <= lo < g_hi");
    std::vector<double> axis(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) axis[i] = lo + (g_hi - lo) * i / (grid_points - 1);
    if (lo < 1.0 && g_hi > 1.0 && std::find(axis.begin(), axis.end(), 1.0) == axis.end()) {
        axis.insert(std::upper_bound(axis.begin(), axis.end(), 1.0), 1.0);
    }
    const auto meas = cell_measures(sweep.control(), problem.model.marks);
    const std::size_t m = axis.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= m;

    std::vector<std::size_t> idx(n), best_idx;
    std::vector<double> v(n);
    double best = INFINITY;
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            idx[i] = r % m;
            r /= m;
            v[i] = axis[idx[i]];
            c += ell(v[i]) * meas[i];
        }
        if (c >= best) continue;
        double s;
        try {
            s = sweep.run(v);
        } catch (const NumericalError&) {
            continue;
        }
        if (s <= 0.0) {
            best = c;
            best_idx = idx;
        }
    }

    RateResult res;
    res.g = problem.make_control();
    res.converged = true;
    if (best_idx.empty()) {
        res.feasible = false;
        res.cost = INFINITY;
        res.achieved_cost = INFINITY;
        res.status = "infeasible";
        return res;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = axis[best_idx[i]];
    std::copy(v.begin(), v.end(), res.g.values().begin());
    const double s = sweep.run(v);
    res.terminal.assign(sweep.terminal().begin(), sweep.terminal().end());
    res.feasible = true;
    res.cost = res.achieved_cost = best;
    res.gap = std::max(0.0, s);
    res.status = "feasible";
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = best_idx[i];
        const double here = ell(axis[k]);
        if (k > 0) res.grid_step = std::max(res.grid_step, meas[i] * std::fabs(ell(axis[k - 1]) - here));
        if (k + 1 < m) res.grid_step = std::max(res.grid_step, meas[i] * std::fabs(ell(axis[k + 1]) - here));
    }
    return res;
}

std::string RateResult::to_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"key", "value"});
    write_csv_row(os, {"status", status});
    write_csv_row(os, {"cost", format_double(cost)});
    write_csv_row(os, {"achieved_cost", format_double(achieved_cost)});
    write_csv_row(os, {"gap", format_double(gap)});
    write_csv_row(os, {"feasible", feasible ? "1" : "0"});
    write_csv_row(os, {"converged", converged ? "1" : "0"});
    write_csv_row(os, {"used_fallback", used_fallback ? "1" : "0"});
    write_csv_row(os, {"adjoint_check_error", format_double(adjoint_check_error)});
    write_csv_row(os, {"grid_step", format_double(grid_step)});
    for (std::size_t k = 0; k < terminal.size(); ++k) {
        write_csv_row(os, {"terminal_" + std::to_string(k + 1), format_double(terminal[k])});
    }
    return os.str();
}

std::string RateResult::trace_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"outer", "inner_iterations", "penalty", "multiplier", "cost", "gap", "projected_gradient"});
    for (const auto& r : trace) {
        write_csv_row(os, {std::to_string(r.outer), std::to_string(r.inner_iterations), format_double(r.penalty),
                           format_double(r.multiplier), format_double(r.cost), format_double(r.gap),
                           format_double(r.projected_gradient)});
    }
    return os.str();
}

}  // namespace ldp
