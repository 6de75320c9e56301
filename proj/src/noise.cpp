#include "ldpspde/noise.hpp"

#include "ldpspde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ldp {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    require(panels >= 1, "simpson: panels must be >= 1");
    if (b <= a) return 0.0;
    const int n = 2 * panels;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

namespace {

/// Simpson nodes over [a, b] with weights multiplied by the density.
std::vector<QuadNode> simpson_nodes(const std::function<double(double)>& density, double a,
                                    double b, int panels) {
    std::vector<QuadNode> nodes;
    if (b <= a) return nodes;
    const int n = 2 * panels;
    const double h = (b - a) / n;
    nodes.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double z = (i == n) ? b : a + i * h;
        const double c = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double w = c * h / 3.0 * density(z);
        if (w != 0.0) nodes.push_back({Mark{kNoAtom, z}, w});
    }
    return nodes;
}

/// Simpson nodes in t over [0, T]: (t, weight).
std::vector<std::pair<double, double>> time_nodes(double horizon) {
    std::vector<std::pair<double, double>> out;
    const int n = 2 * kSimpsonPanels;
    const double h = horizon / n;
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double c = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        out.emplace_back(i == n ? horizon : i * h, c * h / 3.0);
    }
    return out;
}

/// ∫₀ᵀ∫ g(t, z) ν(dz) dt
double integrate_nu_T(const std::function<double(double, const Mark&)>& g, const MarkSpace& marks,
                      double horizon) {
    double s = 0.0;
    for (const auto& [t, wt] : time_nodes(horizon)) {
        double inner = 0.0;
        for (const auto& q : marks.quadrature()) inner += q.weight * g(t, q.mark);
        s += wt * inner;
    }
    return s;
}

}  // namespace

MarkSpace MarkSpace::discrete(std::vector<Atom> atoms) {
    require(!atoms.empty(), "MarkSpace: at least one atom required");
    MarkSpace m;
    m.kind_ = Kind::finite_discrete;
    m.atoms_ = std::move(atoms);
    double cum = 0.0;
    for (std::size_t i = 0; i < m.atoms_.size(); ++i) {
        const auto& a = m.atoms_[i];
        require(std::isfinite(a.value), "MarkSpace: atom values must be finite");
        require(std::isfinite(a.mass) && a.mass > 0.0, "MarkSpace: atom masses must be > 0");
        cum += a.mass;
        m.cdf_.push_back(cum);
        m.nodes_.push_back({Mark{i, a.value}, a.mass});
    }
    m.total_ = cum;
    m.lo_ = std::min_element(m.atoms_.begin(), m.atoms_.end(),
                             [](auto& x, auto& y) { return x.value < y.value; })->value;
    m.hi_ = std::max_element(m.atoms_.begin(), m.atoms_.end(),
                             [](auto& x, auto& y) { return x.value < y.value; })->value;
    return m;
}

MarkSpace MarkSpace::density(std::function<double(double)> density, double lo, double hi) {
    require(static_cast<bool>(density), "MarkSpace: density function required");
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
            "MarkSpace: density support must be a bounded interval lo < hi");
    MarkSpace m;
    m.kind_ = Kind::interval_density;
    m.density_ = std::move(density);
    m.lo_ = lo;
    m.hi_ = hi;
    m.nodes_ = simpson_nodes(m.density_, lo, hi, kSimpsonPanels);
    for (const auto& q : m.nodes_) {
        require(std::isfinite(q.weight) && q.weight >= 0.0, "MarkSpace: density must be finite and >= 0");
    }
    const double h = (hi - lo) / kSimpsonPanels;
    m.cdf_.assign(kSimpsonPanels + 1, 0.0);
    for (int i = 0; i < kSimpsonPanels; ++i) {
        const double a = lo + i * h, b = (i + 1 == kSimpsonPanels) ? hi : a + h;
        m.cdf_[i + 1] = m.cdf_[i] + simpson(m.density_, a, b, 1);
    }
    m.total_ = m.cdf_.back();
    require(std::isfinite(m.total_) && m.total_ > 0.0, "MarkSpace: total mass must be finite and > 0");
    return m;
}

std::vector<QuadNode> MarkSpace::quadrature(double a, double b) const {
    if (kind_ == Kind::finite_discrete) {
        std::vector<QuadNode> out;
        for (const auto& q : nodes_) {
            if (q.mark.value >= a && q.mark.value < b) out.push_back(q);
        }
        return out;
    }
    return simpson_nodes(density_, std::max(a, lo_), std::min(b, hi_), kSimpsonPanels);
}

Mark MarkSpace::sample(PhiloxRng& rng) const {
    const double target = rng.uniform() * total_;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    if (kind_ == Kind::finite_discrete) {
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                             atoms_.size() - 1);
        return Mark{i, atoms_[i].value};
    }
    std::size_t panel = static_cast<std::size_t>(it - cdf_.begin());
    panel = std::clamp<std::size_t>(panel, 1, cdf_.size() - 1) - 1;
    const double h = (hi_ - lo_) / kSimpsonPanels;
    const double mass = cdf_[panel + 1] - cdf_[panel];
    const double frac = mass > 0.0 ? (target - cdf_[panel]) / mass : 0.5;
    return Mark{kNoAtom, std::min(hi_, lo_ + (static_cast<double>(panel) + frac) * h)};
}

double nu_total(const MarkSpace& marks) {
    const double m = marks.total_mass();
    if (!(m > 0.0)) throw ValidationError("nu_total: zero total mass");
    return m;
}

void NoiseModel::eval(double t, std::span<const double> v, const Mark& z,
                      std::span<double> out) const {
    if (null) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    f(t, v, z, out);
}

void NoiseModel::vjp(double t, std::span<const double> v, const Mark& z,
                     std::span<const double> w, std::span<double> out) const {
    if (null) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (f_vjp) {
        f_vjp(t, v, z, w, out);
        return;
    }
    const std::size_t d = v.size();
    HVector vp(v.begin(), v.end()), fp(d), fm(d);
    for (std::size_t l = 0; l < d; ++l) {
        const double h = 1e-6 * (1.0 + std::fabs(v[l]));
        vp[l] = v[l] + h;
        f(t, vp, z, fp);
        vp[l] = v[l] - h;
        f(t, vp, z, fm);
        vp[l] = v[l];
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += w[k] * (fp[k] - fm[k]);
        out[l] = s / (2.0 * h);
    }
}

NoiseModel zero_noise(MarkSpace marks, std::size_t dim) {
    NoiseModel m{.name = "zero", .marks = std::move(marks), .dim = dim};
    m.f = [](double, std::span<const double>, const Mark&, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    m.f_vjp = [](double, std::span<const double>, const Mark&, std::span<const double>,
                 std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    m.L_f = [](double, const Mark&) { return 0.0; };
    m.G_f = [](double, const Mark&) { return 0.0; };
    m.null = true;
    return m;
}

NoiseModel multiplicative_noise(MarkSpace marks, std::size_t dim,
                                std::function<double(const Mark&)> sigma) {
    NoiseModel m{.name = "multiplicative", .marks = std::move(marks), .dim = dim};
    m.f = [sigma](double, std::span<const double> v, const Mark& z, std::span<double> out) {
        const double s = sigma(z);
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = s * v[k];
    };
    m.f_vjp = [sigma](double, std::span<const double>, const Mark& z, std::span<const double> w,
                      std::span<double> out) {
        const double s = sigma(z);
        for (std::size_t k = 0; k < w.size(); ++k) out[k] = s * w[k];
    };
    m.L_f = [sigma](double, const Mark& z) { return std::fabs(sigma(z)); };
    m.G_f = m.L_f;
    return m;
}

NoiseModel additive_noise(MarkSpace marks, std::size_t dim,
                          std::function<void(const Mark&, std::span<double>)> vector) {
    NoiseModel m{.name = "additive", .marks = std::move(marks), .dim = dim};
    m.f = [vector](double, std::span<const double>, const Mark& z, std::span<double> out) {
        vector(z, out);
    };
    m.f_vjp = [](double, std::span<const double>, const Mark&, std::span<const double>,
                 std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    m.L_f = [vector, dim](double, const Mark& z) {
        HVector c(dim);
        vector(z, c);
        return std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
    };
    m.G_f = [](double, const Mark&) { return 0.0; };
    return m;
}

double upsilon(double alpha, double beta, double eta0) {
    const double base = (alpha - 1.0) * (alpha + eta0) / alpha;
    return std::max({2.0 * beta * base, 4.0 * base, 4.0, beta + 2.0});
}

double noise_integral_l2(const NoiseModel& model, const TripleSpec& spec, double t,
                         std::span<const double> v) {
    spec.check(v);
    if (model.null) return 0.0;
    HVector fz(spec.dim());
    double s = 0.0;
    for (const auto& q : model.marks.quadrature()) {
        model.f(t, v, q.mark, fz);
        s += q.weight * std::inner_product(fz.begin(), fz.end(), fz.begin(), 0.0);
    }
    if (!std::isfinite(s)) throw NumericalError("noise_integral_l2: nonfinite coefficient");
    return s;
}

NoiseLipschitzTerm noise_lipschitz_term(const NoiseModel& model) {
    return [&model](double t, std::span<const double> v1, std::span<const double> v2) {
        if (model.null) return 0.0;
        HVector f1(v1.size()), f2(v1.size());
        double s = 0.0;
        for (const auto& q : model.marks.quadrature()) {
            model.f(t, v1, q.mark, f1);
            model.f(t, v2, q.mark, f2);
            for (std::size_t k = 0; k < f1.size(); ++k) s += q.weight * (f1[k] - f2[k]) * (f1[k] - f2[k]);
        }
        return s;
    };
}

std::vector<double> default_delta_grid() { return {1e-3, 1e-2, 1e-1, 1.0}; }

HpResult check_class_hp(const MarkRate& h, const MarkSpace& marks, double p,
                        const std::vector<double>& delta_grid, double horizon) {
    require(p > 0.0, "check_class_hp: p must be > 0");
    require(horizon > 0.0, "check_class_hp: horizon must be > 0");
    HpResult r;
    for (double delta : delta_grid) {
        require(delta > 0.0, "check_class_hp: delta grid entries must be > 0");
        const double value = integrate_nu_T(
            [&](double t, const Mark& z) { return std::exp(delta * std::pow(h(t, z), p)); }, marks,
            horizon);
        const bool ok = std::isfinite(value);
        r.deltas.push_back(delta);
        r.integrals.push_back(ok ? value : std::numeric_limits<double>::infinity());
        r.finite.push_back(ok);
        if (ok) {
            r.member = true;
            r.largest_delta = std::max(r.largest_delta, delta);
        }
    }
    return r;
}

namespace {

double slack(double lhs, double rhs) {
    return (rhs - lhs) / (1.0 + std::fabs(lhs) + std::fabs(rhs));
}

struct Worst {
    ConditionResult r;
    double tol;
    Worst(std::string name, double tol_) : tol(tol_) {
        r.condition = std::move(name);
        r.margin = std::numeric_limits<double>::infinity();
    }
    void observe(double s, std::span<const double> witness) {
        ++r.samples;
        if (!std::isfinite(s)) s = -std::numeric_limits<double>::infinity();
        if (s < r.margin) {
            r.margin = s;
            r.witness.assign(witness.begin(), witness.end());
            r.witness_norm = std::sqrt(std::inner_product(witness.begin(), witness.end(),
                                                          witness.begin(), 0.0));
        }
        if (s < -tol) r.pass = false;
    }
};

ConditionResult hp_row(std::string name, const HpResult& hp) {
    ConditionResult r;
    r.condition = std::move(name);
    r.pass = hp.member;
    r.margin = hp.member ? hp.largest_delta : -1.0;
    r.samples = hp.deltas.size();
    std::ostringstream note;
    note << "largest admissible delta " << hp.largest_delta;
    r.note = note.str();
    return r;
}

}  // namespace

ConditionReport check_h5_h6(const NoiseModel& model, const TripleSpec& spec,
                            const NoiseCheckOptions& opts) {
    require(opts.samples >= 1, "check_h5_h6: samples must be >= 1");
    require(model.dim == spec.dim(), "check_h5_h6: noise/spec dimension mismatch");
    const std::size_t d = spec.dim();
    const TimeRate F = opts.F ? opts.F : TimeRate([](double) { return 1.0; });
    const TimeRate G = opts.G ? opts.G : TimeRate([](double) { return 1.0; });
    const double ups = upsilon(opts.alpha, opts.beta, model.eta0);

    PhiloxRng rng(opts.seed, 0x4E01);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double lr0 = std::log(opts.radius_min), lr1 = std::log(opts.radius_max);
    auto draw = [&]() {
        HVector u(d);
        double n2 = 0.0;
        for (auto& x : u) {
            x = normal(rng);
            n2 += x * x;
        }
        const double r = std::exp(lr0 + (lr1 - lr0) * rng.uniform());
        for (auto& x : u) x *= n2 > 0.0 ? r / std::sqrt(n2) : 0.0;
        return u;
    };

    Worst growth("H5-growth", opts.tol), lipschitz("H6-lipschitz", opts.tol),
        l2bound("noise-l2-bound", opts.tol), moment("noise-moment-bound", opts.tol);
    const auto& nodes = model.marks.quadrature();
    HVector f1(d), f2(d);
    for (std::size_t n = 0; n < opts.samples; ++n) {
        const double t = opts.horizon * rng.uniform();
        const HVector v1 = draw(), v2 = draw();
        const Mark z = model.marks.sample(rng);

        model.eval(t, v1, z, f1);
        model.eval(t, v2, z, f2);
        const double nf1 = std::sqrt(std::inner_product(f1.begin(), f1.end(), f1.begin(), 0.0));
        const double nh1 = spec.norm_h(v1);
        growth.observe(slack(nf1, model.L_f(t, z) * (1.0 + nh1)), v1);
        double diff2 = 0.0, gap2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            diff2 += (f1[k] - f2[k]) * (f1[k] - f2[k]);
            gap2 += (v1[k] - v2[k]) * (v1[k] - v2[k]);
        }
        lipschitz.observe(slack(std::sqrt(diff2), model.G_f(t, z) * std::sqrt(gap2)), v1);

        double int2 = 0.0, intb = 0.0;
        for (const auto& q : nodes) {
            model.eval(t, v1, q.mark, f1);
            const double nf = std::sqrt(std::inner_product(f1.begin(), f1.end(), f1.begin(), 0.0));
            int2 += q.weight * nf * nf;
            intb += q.weight * std::pow(nf, opts.beta + 2.0);
        }
        l2bound.observe(
            slack(int2, F(t) * (1.0 + nh1 * nh1) + opts.gamma * std::pow(spec.norm_v(v1), opts.alpha)),
            v1);
        moment.observe(slack(intb, G(t) * (1.0 + std::pow(nh1, opts.beta + 2.0))), v1);
    }

    ConditionReport report;
    report.rows.push_back(std::move(growth.r));
    report.rows.push_back(std::move(lipschitz.r));

    {
        ConditionResult r;
        r.condition = "Lf-integrability";
        std::ostringstream note;
        bool ok = true;
        for (double q : {2.0, 4.0, opts.beta + 2.0, ups, ups / 2.0}) {
            const double v = integrate_nu_T(
                [&](double t, const Mark& z) { return std::pow(model.L_f(t, z), q); }, model.marks,
                opts.horizon);
            ok = ok && std::isfinite(v);
            note << "L" << q << "=" << v << " ";
        }
        r.pass = ok;
        r.margin = ok ? 0.0 : -std::numeric_limits<double>::infinity();
        r.samples = 5;
        r.note = note.str();
        report.rows.push_back(std::move(r));
    }
    report.rows.push_back(hp_row(
        "Lf-Hp", check_class_hp(model.L_f, model.marks, model.p_exponent, opts.delta_grid, opts.horizon)));
    {
        ConditionResult r;
        r.condition = "Gf-L2";
        const double v = integrate_nu_T(
            [&](double t, const Mark& z) { return std::pow(model.G_f(t, z), 2.0); }, model.marks,
            opts.horizon);
        r.pass = std::isfinite(v);
        r.margin = r.pass ? 0.0 : -std::numeric_limits<double>::infinity();
        r.samples = 1;
        report.rows.push_back(std::move(r));
    }
    report.rows.push_back(
        hp_row("Gf-H2", check_class_hp(model.G_f, model.marks, 2.0, opts.delta_grid, opts.horizon)));
    {
        ConditionResult r;
        r.condition = "p-exponent";
        r.margin = model.p_exponent - ups;
        r.pass = r.margin >= 0.0;
        r.samples = 1;
        std::ostringstream note;
        note << "upsilon " << ups;
        r.note = note.str();
        report.rows.push_back(std::move(r));
    }
    report.rows.push_back(std::move(l2bound.r));
    report.rows.push_back(std::move(moment.r));
    {
        ConditionResult r;
        r.condition = "gamma-margin";
        const double cap = opts.beta > 0.0 ? opts.theta / (2.0 * opts.beta)
                                           : std::numeric_limits<double>::infinity();
        r.margin = cap - opts.gamma;
        r.pass = r.margin > 0.0;
        r.samples = 1;
        report.rows.push_back(std::move(r));
    }
    return report;
}

}  // namespace ldp
