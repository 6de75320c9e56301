#include "ldpspde/operators.hpp"

#include "ldpspde/errors.hpp"
#include "ldpspde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <numbers>
#include <random>

namespace ldp {

bool ConditionReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
}

const ConditionResult& ConditionReport::at(std::string_view condition) const {
    for (const auto& r : rows) {
        if (r.condition == condition) return r;
    }
    throw ValidationError("no condition row named " + std::string(condition));
}

DriftOperator::DriftOperator(Parts parts) : parts_(std::move(parts)) {
    require(!parts_.stiff.empty(), "DriftOperator: dimension must be positive");
    for (double s : parts_.stiff) {
        require(std::isfinite(s) && s >= 0.0, "DriftOperator: stiff diagonal must be >= 0");
    }
    const auto& c = parts_.constants;
    require(c.theta > 0.0, "DriftOperator: theta must be > 0");
    require(c.alpha > 1.0, "DriftOperator: alpha must be > 1");
    require(c.beta >= 0.0, "DriftOperator: beta must be >= 0");
    require(c.C > 0.0, "DriftOperator: C must be > 0");
    if (!parts_.K) parts_.K = [](double) { return 0.0; };
    if (!parts_.F) parts_.F = [](double) { return 1.0; };
}

void DriftOperator::remainder(double t, std::span<const double> v, std::span<double> out) const {
    if (parts_.remainder) {
        parts_.remainder(t, v, out);
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
}

void DriftOperator::apply(double t, std::span<const double> v, std::span<double> out) const {
    require(v.size() == dim() && out.size() == dim(), "DriftOperator::apply: dimension mismatch");
    remainder(t, v, out);
    for (std::size_t k = 0; k < v.size(); ++k) out[k] -= parts_.stiff[k] * v[k];
}

HVector DriftOperator::apply(double t, std::span<const double> v) const {
    HVector out(dim());
    apply(t, v, out);
    return out;
}

void DriftOperator::remainder_vjp(double t, std::span<const double> v, std::span<const double> w,
                                  std::span<double> out) const {
    if (!parts_.remainder) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (parts_.remainder_vjp) {
        parts_.remainder_vjp(t, v, w, out);
        return;
    }
    const std::size_t d = v.size();
    HVector vp(v.begin(), v.end()), rp(d), rm(d);
    for (std::size_t l = 0; l < d; ++l) {
        const double h = 1e-6 * (1.0 + std::fabs(v[l]));
        vp[l] = v[l] + h;
        parts_.remainder(t, vp, rp);
        vp[l] = v[l] - h;
        parts_.remainder(t, vp, rm);
        vp[l] = v[l];
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += w[k] * (rp[k] - rm[k]);
        out[l] = s / (2.0 * h);
    }
}

DriftOperator DriftOperator::with_constants(const DriftConstants& c) const {
    Parts p = parts_;
    p.constants = c;
    return DriftOperator(std::move(p));
}

DriftOperator DriftOperator::with_rates(TimeRate K, TimeRate F) const {
    Parts p = parts_;
    p.K = std::move(K);
    p.F = std::move(F);
    return DriftOperator(std::move(p));
}

namespace {

std::vector<double> scaled_weights(const TripleSpec& spec, double a) {
    std::vector<double> s(spec.weights().begin(), spec.weights().end());
    for (double& x : s) x *= a;
    return s;
}

TimeRate constant_rate(double value) {
    return [value](double) { return value; };
}

}  // namespace

DriftOperator builtin_linear(const TripleSpec& spec, double a, RateOverrides rates) {
    require(a > 0.0, "builtin_linear: a must be > 0");
    DriftOperator::Parts p;
    p.name = "linear";
    p.stiff = scaled_weights(spec, a);
    p.constants = {2.0 * a, 2.0, 0.0, a * a};
    p.K = constant_rate(rates.K);
    p.F = constant_rate(rates.F);
    return DriftOperator(std::move(p));
}

DriftOperator builtin_reaction_diffusion(const TripleSpec& spec, double a, double c,
                                         int odd_power, RateOverrides rates) {
    require(a >= 0.0, "builtin_reaction_diffusion: a must be >= 0");
    require(c >= 0.0, "builtin_reaction_diffusion: c must be >= 0 (dissipative sign)");
    require(odd_power >= 3 && odd_power % 2 == 1,
            "builtin_reaction_diffusion: power must be an odd integer >= 3");
    const auto w = spec.weights();
    const double mu_min = *std::min_element(w.begin(), w.end());
    const double mu_max = *std::max_element(w.begin(), w.end());
    const int power = odd_power;

    DriftOperator::Parts p;
    p.name = "reaction-diffusion";
    p.stiff = scaled_weights(spec, a);
    p.remainder = [c, power](double, std::span<const double> v, std::span<double> out) {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = -c * std::pow(v[k], power);
    };
    p.remainder_vjp = [c, power](double, std::span<const double> v, std::span<const double> w,
                                 std::span<double> out) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            out[k] = -c * power * std::pow(v[k], power - 1) * w[k];
        }
    };
    const double theta = a > 0.0 ? 2.0 * a : rates.F / mu_max;
    const double growth = std::max(a * a, c * c / (mu_min * mu_min));
    p.constants = {theta, 2.0, 2.0 * power - 2.0, 2.0 * std::max(growth, 1e-12)};
    p.K = constant_rate(rates.K);
    p.F = constant_rate(rates.F);
    return DriftOperator(std::move(p));
}

ConvectionTensor ConvectionTensor::dirichlet_sine(std::size_t dim) {
    require(dim >= 1, "ConvectionTensor: dimension must be positive");
    ConvectionTensor t;
    t.dim_ = dim;
    // ∫₀^π sin(ix) cos(jx) sin(kx) dx = (π/4)[δ(j = i-k) + δ(j = k-i) - δ(j = i+k)]
    // for i, j, k ≥ 1; the e_k normalization contributes (2/π)^{3/2} and ∂ₓ a factor j.
    const double c3 = std::pow(2.0 / std::numbers::pi, 1.5) * std::numbers::pi / 4.0;
    for (std::size_t k = 1; k <= dim; ++k) {
        for (std::size_t i = 1; i <= dim; ++i) {
            auto add = [&](std::size_t j, double sign) {
                if (j >= 1 && j <= dim) {
                    t.entries_.push_back({k - 1, i - 1, j - 1, sign * c3 * static_cast<double>(j)});
                }
            };
            if (i > k) add(i - k, 1.0);
            if (k > i) add(k - i, 1.0);
            add(i + k, -1.0);
        }
    }
    return t;
}

void ConvectionTensor::apply(std::span<const double> v, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& e : entries_) out[e.k] += e.value * v[e.i] * v[e.j];
}

void ConvectionTensor::vjp(std::span<const double> v, std::span<const double> w,
                           std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& e : entries_) {
        const double c = e.value * w[e.k];
        out[e.i] += c * v[e.j];
        out[e.j] += c * v[e.i];
    }
}

DriftOperator builtin_burgers(const TripleSpec& spec, double a, const ConvectionTensor& tensor,
                              RateOverrides rates) {
    require(a > 0.0, "builtin_burgers: a must be > 0");
    require(tensor.dim() == spec.dim(), "builtin_burgers: tensor/spec dimension mismatch");
    const auto w = spec.weights();
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double n = static_cast<double>(k + 1);
        require(std::fabs(w[k] - n * n) <= 1e-12 * n * n,
                "builtin_burgers: spec weights must be the Dirichlet Laplacian eigenvalues k^2");
    }
    const double d = static_cast<double>(spec.dim());
    // ‖∂ₓv‖_∞ ≤ √(2d/π)‖v‖_V; splitting s·x ≤ c_B x² + c_B with c_B = s/2.
    const double s = std::sqrt(2.0 * d / std::numbers::pi);
    const double c_b = s / 2.0;

    DriftOperator::Parts p;
    p.name = "burgers";
    p.stiff = scaled_weights(spec, a);
    auto shared = std::make_shared<ConvectionTensor>(tensor);
    p.remainder = [shared](double, std::span<const double> v, std::span<double> out) {
        shared->apply(v, out);
        for (double& x : out) x = -x;
    };
    p.remainder_vjp = [shared](double, std::span<const double> v, std::span<const double> wv,
                               std::span<double> out) {
        shared->vjp(v, wv, out);
        for (double& x : out) x = -x;
    };
    auto weights = std::vector<double>(w.begin(), w.end());
    p.rho = [c_b, weights](std::span<const double> v) {
        double n2 = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) n2 += weights[k] * v[k] * v[k];
        return c_b * n2;
    };
    p.constants = {2.0 * a, 2.0, 2.0, 2.0 * std::max(a * a, 2.0 * d / std::numbers::pi)};
    p.K = constant_rate(rates.K + c_b);
    p.F = constant_rate(rates.F);
    return DriftOperator(std::move(p));
}

double integrate_rate(const TimeRate& rate, double t0, double t1, int panels) {
    if (t1 <= t0) return 0.0;
    const double h = (t1 - t0) / panels;
    double s = 0.5 * (rate(t0) + rate(t1));
    for (int i = 1; i < panels; ++i) s += rate(t0 + i * h);
    return s * h;
}

namespace {

struct Sampler {
    PhiloxRng rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    double log_rmin, log_rmax;

    Sampler(std::uint64_t seed, const ConditionCheckOptions& o)
        : rng(seed, 0x5A11), log_rmin(std::log(o.radius_min)), log_rmax(std::log(o.radius_max)) {}

    HVector vector(std::size_t d) {
        HVector u(d);
        double n2 = 0.0;
        for (auto& x : u) {
            x = normal(rng);
            n2 += x * x;
        }
        const double r = std::exp(log_rmin + (log_rmax - log_rmin) * rng.uniform());
        const double scale = n2 > 0.0 ? r / std::sqrt(n2) : 0.0;
        for (auto& x : u) x *= scale;
        return u;
    }
};

double normalized_slack(double lhs, double rhs) {
    return (rhs - lhs) / (1.0 + std::fabs(lhs) + std::fabs(rhs));
}

/// Tracks the worst slack of one condition.
struct Tracker {
    ConditionResult r;
    double tol;

    Tracker(std::string name, double tol_) : tol(tol_) {
        r.condition = std::move(name);
        r.margin = std::numeric_limits<double>::infinity();
    }

    void observe(double slack, const TripleSpec& spec, std::span<const double> witness) {
        ++r.samples;
        if (!std::isfinite(slack)) {
            if (r.pass || std::isfinite(r.margin)) {
                r.pass = false;
                r.margin = -std::numeric_limits<double>::infinity();
                r.witness.assign(witness.begin(), witness.end());
                r.witness_norm = std::sqrt(std::inner_product(witness.begin(), witness.end(),
                                                              witness.begin(), 0.0));
                r.note = "nonfinite operator output";
            }
            return;
        }
        if (slack < r.margin) {
            r.margin = slack;
            r.witness.assign(witness.begin(), witness.end());
            r.witness_norm = spec.norm_h(witness);
        }
        if (slack < -tol) r.pass = false;
    }
};

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ConditionReport check_conditions(const DriftOperator& op, const TripleSpec& spec,
                                 const ConditionCheckOptions& opts) {
    require(opts.samples >= 1, "check_conditions: samples must be >= 1");
    require(op.dim() == spec.dim(), "check_conditions: operator/spec dimension mismatch");
    require(opts.tol > 0.0, "check_conditions: tol must be > 0");
    const std::size_t d = spec.dim();
    const auto& c = op.constants();
    Sampler sampler(opts.seed, opts);

    Tracker h1("H1", opts.tol), h2("H2", opts.tol), h3("H3", opts.tol), h4("H4", opts.tol),
        rho("rho-growth", opts.tol);
    h1.r.margin = opts.tol;

    HVector a1(d), a2(d), probe(d);
    auto phi = [&](double t, const HVector& v1, const HVector& v2, const HVector& v, double s) {
        for (std::size_t k = 0; k < d; ++k) probe[k] = v1[k] + s * v2[k];
        op.apply(t, probe, a1);
        return std::inner_product(a1.begin(), a1.end(), v.begin(), 0.0);
    };

    for (std::size_t n = 0; n < opts.samples; ++n) {
        const double t = opts.horizon * sampler.rng.uniform();
        const HVector v1 = sampler.vector(d);
        const HVector v2 = sampler.vector(d);
        const HVector v = sampler.vector(d);

        // Hemicontinuity: bisect the grid interval of s ∈ [-1, 1] with the largest
        // change; a continuous function's change vanishes, a jump keeps its size.
        double worst_jump = 0.0;
        bool finite = true;
        double sa = -1.0, fa = phi(t, v1, v2, v, sa), best = -1.0;
        double lo = sa, hi = sa, flo = fa, fhi = fa;
        for (int i = 1; i <= 16; ++i) {
            const double sb = -1.0 + 0.125 * i, fb = phi(t, v1, v2, v, sb);
            if (!std::isfinite(fb)) finite = false;
            if (std::fabs(fb - fa) > best) {
                best = std::fabs(fb - fa);
                lo = sa, hi = sb, flo = fa, fhi = fb;
            }
            sa = sb, fa = fb;
        }
        if (!std::isfinite(flo)) finite = false;
        for (int i = 0; i < 40 && finite; ++i) {
            const double sm = 0.5 * (lo + hi), fm = phi(t, v1, v2, v, sm);
            if (!std::isfinite(fm)) finite = false;
            if (std::fabs(fm - flo) >= std::fabs(fhi - fm)) hi = sm, fhi = fm;
            else lo = sm, flo = fm;
        }
        if (finite) worst_jump = std::fabs(fhi - flo) / (1.0 + std::fabs(flo));
        ++h1.r.samples;
        if (!finite) {
            h1.observe(std::numeric_limits<double>::quiet_NaN(), spec, v1);
        } else if (opts.tol - worst_jump < h1.r.margin) {
            h1.r.margin = opts.tol - worst_jump;
            h1.r.witness = v1;
            h1.r.witness_norm = spec.norm_h(v1);
            if (h1.r.margin < 0.0) h1.r.pass = false;
        }

        // Local monotonicity.
        op.apply(t, v1, a1);
        op.apply(t, v2, a2);
        if (!all_finite(a1) || !all_finite(a2)) {
            h2.observe(std::numeric_limits<double>::quiet_NaN(), spec, all_finite(a1) ? v2 : v1);
        } else {
            double lhs = 0.0, gap2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double w = v1[k] - v2[k];
                lhs += 2.0 * (a1[k] - a2[k]) * w;
                gap2 += w * w;
            }
            if (opts.noise_term) lhs += opts.noise_term(t, v1, v2);
            const double rhs = (op.K(t) + op.rho(v2)) * gap2;
            h2.observe(normalized_slack(lhs, rhs), spec, v1);
        }

        // Coercivity and growth at v1.
        if (all_finite(a1)) {
            const double nh = spec.norm_h(v1), nv = spec.norm_v(v1);
            const double lhs3 = 2.0 * std::inner_product(a1.begin(), a1.end(), v1.begin(), 0.0) +
                                c.theta * std::pow(nv, c.alpha);
            const double rhs3 = op.F(t) * (1.0 + nh * nh);
            h3.observe(normalized_slack(lhs3, rhs3), spec, v1);

            const double lhs4 = std::pow(spec.norm_vstar(a1), c.alpha / (c.alpha - 1.0));
            const double rhs4 = (op.F(t) + c.C * std::pow(nv, c.alpha)) * (1.0 + std::pow(nh, c.beta));
            h4.observe(normalized_slack(lhs4, rhs4), spec, v1);
        } else {
            h3.observe(std::numeric_limits<double>::quiet_NaN(), spec, v1);
            h4.observe(std::numeric_limits<double>::quiet_NaN(), spec, v1);
        }

        const double nh = spec.norm_h(v), nv = spec.norm_v(v);
        rho.observe(normalized_slack(op.rho(v),
                                     c.C * (1.0 + std::pow(nv, c.alpha)) * (1.0 + std::pow(nh, c.beta))),
                    spec, v);
    }

    ConditionReport report;
    for (auto* tr : {&h1, &h2, &h3, &h4, &rho}) report.rows.push_back(std::move(tr->r));
    return report;
}

}  // namespace ldp
