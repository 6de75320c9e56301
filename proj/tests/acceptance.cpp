// Acceptance suite: one PASS/FAIL line per criterion.

#include "ldpspde/cli.hpp"
#include "ldpspde/errors.hpp"
#include "ldpspde/experiments.hpp"
#include "ldpspde/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace ldp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig scalar_config() {
    ExperimentConfig c;
    c.run.threads = threads();
    return c;
}

// Two-sided Kolmogorov tail Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²).
double kolmogorov_tail(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(s, 0.0, 1.0);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
    }
    const double ne = double(a.size()) * b.size() / (a.size() + b.size());
    return kolmogorov_tail((std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d);
}

double ks_exponential(std::vector<double> a, double rate) {
    std::sort(a.begin(), a.end());
    double d = 0.0;
    const double n = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double F = 1.0 - std::exp(-rate * a[i]);
        d = std::max({d, std::fabs((i + 1) / n - F), std::fabs(F - i / n)});
    }
    return kolmogorov_tail((std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d);
}

// P(N ≥ k) for N ~ Poisson(mu)
double poisson_tail(int k, double mu) {
    double term = std::exp(-mu), cdf = 0.0;
    for (int i = 0; i < k; ++i) {
        cdf += term;
        term *= mu / (i + 1);
    }
    // sum the tail directly when it is tiny
    double tail = 0.0;
    for (int i = k; i < k + 400; ++i) {
        tail += term;
        term *= mu / (i + 1);
    }
    return tail > 0.0 ? tail : 1.0 - cdf;
}

// ---------------------------------------------------------------- 1

Outcome ell_suite() {
    bool ok = ell(1.0) == 0.0 && ell(0.0) == 1.0 && std::fabs(ell(2.0) - (2.0 * std::log(2.0) - 1.0)) <= 1e-12;
    PhiloxRng rng(1, 0);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const double a = 20.0 * rng.uniform(), b = 20.0 * rng.uniform(), w = rng.uniform();
        if (ell(w * a + (1 - w) * b) > w * ell(a) + (1 - w) * ell(b) + 1e-12) ++violations;
    }
    const auto marks = MarkSpace::discrete({{1.0, 0.7}});
    double worst = 0.0;
    for (double c : {0.0, 0.3, 1.0, 2.5, 9.0}) {
        for (double T : {0.5, 1.0, 3.0}) {
            const double got = cost_lt(Control::constant(T, c), marks, T);
            worst = std::max(worst, std::fabs(got - T * 0.7 * ell(c)));
        }
    }
    ok = ok && violations == 0 && worst <= 1e-12;
    return {ok, "convexity violations=" + std::to_string(violations) + " factorization err=" + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 2

Outcome condition_checkers() {
    const TripleSpec s = TripleSpec::dirichlet_laplacian(8);
    const DriftOperator op = builtin_linear(s, 1.0);
    double min_margin = INFINITY;
    bool all = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ConditionCheckOptions o;
        o.seed = seed;
        o.samples = 1000;
        const auto rep = check_conditions(op, s, o);
        for (const char* h : {"H1", "H2", "H3", "H4"}) {
            const auto& r = rep.at(h);
            all = all && r.pass && r.margin > 0.0;
            min_margin = std::min(min_margin, r.margin);
        }
    }
    DriftConstants inflated = op.constants();
    inflated.theta *= 5.0;
    ConditionCheckOptions o;
    o.seed = 1;
    const auto bad = check_conditions(op.with_constants(inflated), s, o).at("H3");
    const bool witnessed = !bad.pass && bad.margin < 0.0 && bad.witness.size() == 8 && bad.witness_norm > 0.0;
    return {all && witnessed, "min H1-H4 margin=" + fmt("%.3g", min_margin) + " inflated-theta H3 margin=" +
                                  fmt("%.3g", bad.margin) + " witness |v|=" + fmt("%.3g", bad.witness_norm)};
}

// ---------------------------------------------------------------- 3

Outcome skeleton_accuracy() {
    const auto m = build_model(ModelConfig{}, NoiseConfig{});
    const double c = 3.0, exact = std::exp(c - 2.0);
    const auto sol = solve_skeleton(m.spec, m.op, m.noise, m.x0, Control::constant(1.0, c), 1e-4);
    const double rel = std::fabs(sol.extrapolated.back() - exact) / exact;
    std::vector<double> gaps;
    for (double dt : {8e-3, 4e-3, 2e-3, 1e-3}) {
        gaps.push_back(solve_skeleton(m.spec, m.op, m.noise, m.x0, Control::constant(1.0, c), dt).richardson_gap);
    }
    bool order = true;
    std::string ratios;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        const double r = gaps[i - 1] / gaps[i];
        order = order && r >= 1.7 && r <= 2.3;
        ratios += fmt(" %.3f", r);
    }
    return {rel <= 1e-6 && order, "closed-form rel err=" + fmt("%.2e", rel) + " richardson ratios" + ratios};
}

// ---------------------------------------------------------------- 4

Outcome rate_oracle() {
    struct Case {
        std::string name, target;
        std::size_t time_cells;
        bool atoms;
        int grid;
        double g_hi;
    };
    const std::vector<Case> cases = {
        {"1 cell XT>=1.5", "XT>=1.5", 1, false, 1000, 10.0},
        {"2 atom cells XT<=0.2", "XT<=0.2", 1, true, 300, 5.0},
        {"3 time cells XT>=2", "XT>=2", 3, false, 40, 6.0},
    };
    bool ok = true;
    std::string detail;
    for (const auto& k : cases) {
        ExperimentConfig cfg = scalar_config();
        if (k.atoms) {
            cfg.noise.atoms = {1.0, -0.5};
            cfg.noise.masses = {1.0, 0.5};
            cfg.control.partition = "atoms";
        }
        cfg.rate.time_cells = k.time_cells;
        const auto m = build_model(cfg.model, cfg.noise);
        const auto p = build_rate_problem(cfg, m, TerminalTarget::parse(k.target));
        const auto r = minimize_rate(p, build_optimizer_options(cfg));
        const auto b = brute_force_rate(p, k.grid, k.g_hi);
        const double diff = std::fabs(r.cost - b.cost);
        const bool pass = r.feasible && b.feasible && diff <= std::max(0.02 * b.cost, b.grid_step);
        ok = ok && pass;
        detail += "[" + k.name + ": opt=" + fmt("%.5f", r.cost) + " brute=" + fmt("%.5f", b.cost) +
                  " step=" + fmt("%.2e", b.grid_step) + "] ";
    }

    ExperimentConfig cfg = scalar_config();
    cfg.noise.atoms = {1.0, -0.5};
    cfg.noise.masses = {1.0, 0.5};
    cfg.control.partition = "atoms";
    cfg.rate.time_cells = 3;
    const auto m = build_model(cfg.model, cfg.noise);
    const auto p = build_rate_problem(cfg, m, TerminalTarget::parse("XT>=1.5"));
    PhiloxRng rng(5, 0);
    std::vector<double> x(6), grad(6);
    for (auto& v : x) v = 0.3 + 3.0 * rng.uniform();
    const double lambda = 0.5, rho = 20.0;
    penalized_objective(p, x, lambda, rho, grad);
    double worst = 0.0;
    for (int dir = 0; dir < 20; ++dir) {
        std::vector<double> u(6), xp = x, xm = x;
        double norm = 0.0;
        for (auto& v : u) {
            v = 2.0 * rng.uniform() - 1.0;
            norm += v * v;
        }
        double ad = 0.0;
        const double h = 1e-6;
        for (std::size_t i = 0; i < 6; ++i) {
            u[i] /= std::sqrt(norm);
            ad += grad[i] * u[i];
            xp[i] += h * u[i];
            xm[i] -= h * u[i];
        }
        const double fd = (penalized_objective(p, xp, lambda, rho) - penalized_objective(p, xm, lambda, rho)) / (2 * h);
        worst = std::max(worst, std::fabs(fd - ad) / std::max(std::fabs(fd), 1e-8));
    }
    ok = ok && worst <= 1e-5;
    return {ok, detail + "adjoint max rel err=" + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 5

Outcome controlled_prm() {
    const auto marks = MarkSpace::discrete({{1.0, 1.0}, {-1.0, 0.5}});
    const double eps = 0.1, T = 1.0, c = 2.5;
    const int seeds = 10000;
    const double mu = c * T * marks.total_mass() / eps;
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) sum += sample_controlled_prm(marks, eps, Control::constant(T, c), 17, s).events.size();
    const double z_const = (sum / seeds - mu) / std::sqrt(mu / seeds);

    // genuine thinning against a dominating rate of 3
    Control g({0.0, 0.5, 1.0}, ZPartition::single(), {0.5, 3.0});
    const double mu_g = (0.5 * 0.5 + 0.5 * 3.0) * marks.total_mass() / eps;
    double sum_g = 0.0;
    for (int s = 0; s < seeds; ++s) sum_g += sample_controlled_prm(marks, eps, g, 18, s).events.size();
    const double z_thin = (sum_g / seeds - mu_g) / std::sqrt(mu_g / seeds);

    // first arrivals are exponential up to a truncation at T of mass e^{-15}
    std::vector<double> thinned, plain;
    for (int s = 0; s < seeds; ++s) {
        const auto a = thin_prm(marks, eps, Control::constant(T, 1.0), 19, s).kept;
        const auto b = sample_prm(marks, eps, T, 19, seeds + s);
        if (!a.events.empty()) thinned.push_back(a.events.front().time);
        if (!b.events.empty()) plain.push_back(b.events.front().time);
    }
    const double p_two = ks_two_sample(thinned, plain);
    const double rate = marks.total_mass() / eps;
    const double p_exp = ks_exponential(thinned, rate);
    const bool ok = std::fabs(z_const) <= 3.0 && std::fabs(z_thin) <= 3.0 && p_two > 0.01 && p_exp > 0.01;
    return {ok, "z(g=c)=" + fmt("%.2f", z_const) + " z(thinned)=" + fmt("%.2f", z_thin) + " KS p(first arrival thinned vs plain)=" +
                    fmt("%.3f", p_two) + " KS p(vs exponential)=" + fmt("%.3f", p_exp)};
}

// ---------------------------------------------------------------- 6

Outcome girsanov_identity() {
    const auto cfg = scalar_config();
    const auto m = build_model(cfg.model, cfg.noise);
    const double eps = 0.2;
    const std::size_t n = 100000;
    const Control g = Control::constant(1.0, 1.5);
    auto phi = [](double x) { return std::min(x, 1.0); };
    std::vector<double> naive(n), is(n);
    SolveOptions o;
    o.dt = cfg.run.dt;
    o.seed = 31;
    run_indexed(n, threads(), [&](std::size_t i) {
        SolveOptions oi = o;
        oi.stream = trajectory_stream(kTagNaive, 0, i);
        naive[i] = phi(solve_spde(m.spec, m.op, m.noise, m.x0, eps, oi).terminal[0]);
        oi.stream = trajectory_stream(kTagImportance, 0, i);
        const auto r = solve_controlled_spde(m.spec, m.op, m.noise, m.x0, eps, g, oi);
        is[i] = phi(r.terminal[0]) * std::exp(r.log_density);
    });
    const MeanSe a = mean_se(naive), b = mean_se(is);
    const double comb = std::sqrt(a.se * a.se + b.se * b.se);
    const double z = std::fabs(a.mean - b.mean) / comb;
    return {z <= 3.0, "E_naive=" + fmt("%.5f", a.mean) + " E_IS=" + fmt("%.5f", b.mean) + " |diff|/se=" + fmt("%.2f", z)};
}

// ---------------------------------------------------------------- 7, 8

ConvergenceTable convergence_table() {
    ExperimentConfig cfg = scalar_config();
    cfg.control.value = 1.5;
    cfg.run.trajectories = {10000};
    return experiment_convergence(cfg);
}

Outcome convergence(const ConvergenceTable& t, double ConvergenceRow::*field, const char* what) {
    bool dec = true;
    std::string vals;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (i) dec = dec && t.rows[i].*field < t.rows[i - 1].*field;
        vals += fmt(" %.4g", t.rows[i].*field);
    }
    const double reduction = t.rows.front().*field / t.rows.back().*field;
    return {dec && reduction >= 4.0, std::string(what) + ":" + vals + " reduction=" + fmt("%.2f", reduction)};
}

// ---------------------------------------------------------------- 9

Outcome ldp_asymptotics() {
    ExperimentConfig cfg = scalar_config();
    cfg.target.predicate = "XT>=1.5";
    const LdpTable t = experiment_ldp(cfg);
    const auto m = build_model(cfg.model, cfg.noise);
    const double oracle = brute_force_rate(build_rate_problem(cfg, m, TerminalTarget::parse("XT>=1.5")), 1000, 10.0).cost;
    const double rel = std::fabs(t.extrapolated - oracle) / oracle;
    const std::size_t n = t.rows.size();
    const bool is_small = n >= 2 && t.rows[n - 1].source == "is" && t.rows[n - 2].source == "is";
    std::string rows;
    for (const auto& r : t.rows) {
        // X_T = e^{-2} (1 + ε)^N with N ~ Poisson(1/ε)
        const int k = static_cast<int>(std::ceil((2.0 + std::log(1.5)) / std::log1p(r.eps) - 1e-12));
        rows += " eps=" + fmt("%.2g", r.eps) + ":" + r.source + " p=" + fmt("%.3e", r.estimate) + " (poisson " +
                fmt("%.3e", poisson_tail(k, 1.0 / r.eps)) + ")";
    }
    return {rel <= 0.2 && is_small,
            "I(A) brute=" + fmt("%.5f", oracle) + " optimizer=" + fmt("%.5f", t.rate) + " extrapolated=" +
                fmt("%.5f", t.extrapolated) + " rel err=" + fmt("%.3f", rel) + rows};
}

// ---------------------------------------------------------------- 10

Outcome moment_stability(const std::string& model, std::size_t dim, std::size_t trajectories) {
    ExperimentConfig cfg;
    cfg.model.name = model;
    cfg.model.dim = dim;
    cfg.noise.sigma = 0.3;
    cfg.run.trajectories = {trajectories};
    cfg.run.threads = threads();
    const MomentsTable t = experiment_moments(cfg);
    std::string d = model + " d=" + std::to_string(dim);
    for (std::size_t k = 0; k < t.p.size(); ++k) d += " p=" + fmt("%g", t.p[k]) + " spread=" + fmt("%.3f", t.ladders[k].relative_spread);
    return {t.verdict, d};
}

// ---------------------------------------------------------------- 11

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ldpspde");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

Outcome reproducibility(const fs::path& root) {
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "repro.ini";
    std::ofstream(cfg) << "[model]\nname = linear\ndim = 4\n\n[target]\npredicate = XT[1]>=0.9\n\n"
                          "[control]\nvalue = 1.5\n\n[run]\neps = 0.4, 0.2\ntrajectories = 400\ndt = 0.005\n"
                          "threads = 4\n\n[rate]\ngrid_points = 30\ngrid_hi = 4\n";
    bool ok = true;
    std::size_t files = 0;
    for (const char* cmd : {"simulate", "skeleton", "rate", "verify-ldp", "verify-convergence", "check-conditions"}) {
        const fs::path a = root / (std::string(cmd) + "-a"), b = root / (std::string(cmd) + "-b");
        const int ra = run_cli({cmd, "--config", cfg.string(), "--strict-order", "--out", a.string()});
        const int rb = run_cli({cmd, "--config", cfg.string(), "--strict-order", "--out", b.string()});
        if (ra != 0 || rb != 0) {
            ok = false;
            continue;
        }
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
        for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
        for (const auto& n : names) {
            ++files;
            if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) ok = false;
        }
    }
    return {ok, std::to_string(files) + " files compared across 6 subcommands"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    std::string out = "acceptance-runs";
    std::vector<int> only;
    app.add_option("--out", out, "scratch directory");
    app.add_option("--only", only, "criteria to run");
    CLI11_PARSE(app, argc, argv);

    int failures = 0;
    auto want = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
    auto report = [&](int k, const char* name, double limit_s, const std::function<Outcome()>& fn) {
        if (!want(k)) return;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs < limit_s;
        failures += !pass;
        std::printf("criterion %2d %-28s %s  %s  [%.1fs, limit %.0fs]\n", k, name, pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs, limit_s);
        std::fflush(stdout);
    };

    report(1, "ell and L_T", 1, ell_suite);
    report(2, "condition checkers", 10, condition_checkers);
    report(3, "skeleton accuracy", 10, skeleton_accuracy);
    report(4, "rate oracle agreement", 300, rate_oracle);
    report(5, "controlled PRM", 60, controlled_prm);
    report(6, "girsanov identity", 300, girsanov_identity);
    if (want(7) || want(8)) {
        const auto t0 = std::chrono::steady_clock::now();
        ConvergenceTable table;
        std::string error;
        try {
            table = convergence_table();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double shared = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto from_table = [&](double ConvergenceRow::*field, const char* what) {
            return [&, field, what] {
                if (!error.empty()) return Outcome{false, "exception: " + error};
                Outcome o = convergence(table, field, what);
                o.pass = o.pass && shared < 600.0;
                o.detail += " shared runtime=" + fmt("%.1fs", shared);
                return o;
            };
        };
        report(7, "convergence surrogate", 600, from_table(&ConvergenceRow::value, "E sup gap^2"));
        report(8, "martingale decay", 600, from_table(&ConvergenceRow::m_gap, "E sup |M|^2"));
    }
    report(9, "LDP asymptotics", 1800, ldp_asymptotics);
    report(10, "moment stability", 7800, [] {
        const auto t0 = std::chrono::steady_clock::now();
        const Outcome lin = moment_stability("linear", 8, 4000);
        const double lin_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const Outcome bur = moment_stability("burgers", 32, 2000);
        return Outcome{lin.pass && bur.pass && lin_s < 600.0,
                       lin.detail + " (" + fmt("%.1fs", lin_s) + "); " + bur.detail};
    });
    report(11, "reproducibility", 600, [&] { return reproducibility(fs::path(out) / "reproducibility"); });

    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
