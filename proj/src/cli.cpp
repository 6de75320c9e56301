#include "ldpspde/cli.hpp"

#include "ldpspde/config.hpp"
#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"
#include "ldpspde/experiments.hpp"
#include "ldpspde/models.hpp"
#include "ldpspde/rate.hpp"
#include "ldpspde/skeleton.hpp"
#include "ldpspde/spde.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace ldp {

namespace {

using Outputs = std::map<std::string, std::string>;

struct Flags {
    std::string command;
    std::string config;
    std::string model;
    std::string target;
    std::string out;
    std::string control;
    bool strict_order = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

std::string output_dir(const Flags& f, const ExperimentConfig& cfg) {
    if (!f.out.empty()) return f.out;
    if (!cfg.output.dir.empty()) return cfg.output.dir;
    if (const char* env = std::getenv("LDPSPDE_OUTPUT_DIR"); env && *env) return env;
    return "ldpspde-out";
}

std::string kv_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ostringstream os;
    write_csv_row(os, {"key", "value"});
    for (const auto& [k, v] : rows) write_csv_row(os, {k, v});
    return os.str();
}

Outputs run_check_conditions(const ExperimentConfig& cfg, const ModelBundle& m) {
    ConditionCheckOptions co;
    co.seed = cfg.run.seed;
    co.horizon = cfg.run.horizon;
    co.noise_term = noise_lipschitz_term(m.noise);
    ConditionReport rep = check_conditions(m.op, m.spec, co);
    NoiseCheckOptions no;
    no.seed = cfg.run.seed;
    no.horizon = cfg.run.horizon;
    no.samples = cfg.noise.hp_samples;
    no.alpha = m.spec.alpha();
    no.beta = m.spec.beta();
    no.theta = m.spec.theta();
    const ConditionReport noise = check_h5_h6(m.noise, m.spec, no);
    rep.rows.insert(rep.rows.end(), noise.rows.begin(), noise.rows.end());
    return {{"conditions.csv", rep.to_csv()}};
}

Outputs run_simulate(const ExperimentConfig& cfg, const ModelBundle& m, bool controlled) {
    SolveOptions o;
    o.horizon = cfg.run.horizon;
    o.dt = cfg.run.dt;
    o.seed = cfg.run.seed;
    o.stream = trajectory_stream(kTagSimulate, 0, 0);
    o.record_path = true;
    const double eps = cfg.run.eps.front();
    SolveReport rep;
    if (controlled) {
        const Control g = build_control(cfg.control, m, cfg.run.horizon);
        rep = solve_controlled_spde(m.spec, m.op, m.noise, m.x0, eps, g, o);
    } else {
        rep = solve_spde(m.spec, m.op, m.noise, m.x0, eps, o);
    }
    if (rep.blew_up) throw NumericalError("simulate: trajectory blew up at t=" + format_double(rep.blowup_time));
    std::ostringstream path;
    write_path_csv(path, rep.path, m.spec);
    return {{"path.csv", path.str()},
            {"summary.csv", kv_csv({{"eps", format_double(eps)},
                                    {"jumps", std::to_string(rep.jumps)},
                                    {"sup_h_norm", format_double(rep.sup_h_norm)},
                                    {"v_alpha_integral", format_double(rep.v_alpha_integral)},
                                    {"sup_m_sq", format_double(rep.sup_m_sq)},
                                    {"reconstruction_error", format_double(rep.reconstruction_error)},
                                    {"log_density", format_double(rep.log_density)}})}};
}

Outputs run_skeleton(const ExperimentConfig& cfg, const ModelBundle& m) {
    const Control g = build_control(cfg.control, m, cfg.run.horizon);
    const SkeletonSolution sol = solve_skeleton(m.spec, m.op, m.noise, m.x0, g, cfg.run.dt);
    std::ostringstream os;
    write_skeleton_csv(os, sol, m.spec);
    return {{"skeleton.csv", os.str()},
            {"summary.csv", kv_csv({{"richardson_gap", format_double(sol.richardson_gap)},
                                    {"v_alpha_integral", format_double(sol.v_alpha_integral)},
                                    {"terminal_norm_h", format_double(m.spec.norm_h(sol.terminal()))}})}};
}

Outputs run_rate(const ExperimentConfig& cfg, const ModelBundle& m) {
    const TerminalTarget target = TerminalTarget::parse(cfg.target.predicate);
    target.validate(m.spec.dim());
    const RateProblem p = build_rate_problem(cfg, m, target);
    p.validate();
    const RateResult r = minimize_rate(p, build_optimizer_options(cfg));
    std::ostringstream ctrl;
    write_control(ctrl, r.g);
    Outputs out{{"rate.csv", r.to_csv()}, {"trace.csv", r.trace_csv()}, {"control.txt", ctrl.str()}};
    if (cfg.rate.grid_points > 0) {
        const RateResult b = brute_force_rate(p, cfg.rate.grid_points, cfg.rate.grid_hi);
        out["brute_force.csv"] = b.to_csv();
    }
    return out;
}

Outputs run_verify_ldp(const ExperimentConfig& cfg) {
    const LdpTable t = experiment_ldp(cfg);
    std::ostringstream ctrl;
    write_control(ctrl, t.g_star);
    return {{"ldp.csv", t.to_csv()}, {"ldp_summary.csv", t.summary_csv()}, {"control.txt", ctrl.str()}};
}

Outputs run_verify_convergence(const ExperimentConfig& cfg) {
    return {{"convergence.csv", experiment_convergence(cfg).to_csv()},
            {"continuity.csv", experiment_skeleton_continuity(cfg).to_csv()},
            {"moments.csv", experiment_moments(cfg).to_csv()}};
}

std::string manifest(const Flags& f, const ExperimentConfig& cfg, const Outputs& out) {
    const std::string rendered = render_config(cfg);
    nlohmann::ordered_json j;
    j["tool"] = "ldpspde";
    j["version"] = kVersion;
    j["command"] = f.command;
    j["config_hash"] = fnv1a_hex(rendered);
    j["config"] = rendered;
    j["seed"] = cfg.run.seed;
    j["strict_order"] = cfg.run.strict_order;
    j["stream_map"] = "stream = tag << 56 | rung << 40 | trajectory";
    nlohmann::ordered_json rungs = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cfg.run.eps.size(); ++r) {
        rungs.push_back({{"rung", r}, {"eps", format_double(cfg.run.eps[r])},
                         {"trajectories", trajectories_for(cfg.run, r)}, {"seed", cfg.run.seed}});
    }
    j["rungs"] = rungs;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [name, body] : out) files[name] = fnv1a_hex(body);
    j["outputs"] = files;
    return j.dump(2) + "\n";
}

void write_outputs(const std::string& dir, const Outputs& out) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : out) {
        std::ofstream os(std::filesystem::path(dir) / name, std::ios::binary);
        os << body;
        if (!os) throw std::runtime_error("cannot write " + name);
    }
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Large-deviation verification harness for jump SPDEs"};
    app.require_subcommand(1);
    Flags f;
    const std::vector<std::string> commands = {"simulate", "skeleton", "rate", "verify-ldp", "verify-convergence",
                                               "check-conditions"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", f.config, "configuration file");
        sub->add_option("--model", f.model, "model name, overrides [model] name");
        sub->add_option("--target", f.target, "target predicate, overrides [target] predicate");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--control", f.control, "control grid file, overrides [control] file");
        sub->add_option("--seed", f.seed, "seed, overrides [run] seed");
        sub->add_option("--threads", f.threads, "worker threads, overrides [run] threads");
        sub->add_flag("--strict-order", f.strict_order, "single-threaded, fixed-order execution");
        sub->callback([&f, name] { f.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    ExperimentConfig cfg;
    Outputs out;
    std::string dir;
    try {
        if (!f.config.empty()) cfg = load_config(f.config);
        if (!f.model.empty()) cfg.model.name = f.model;
        if (!f.target.empty()) cfg.target.predicate = f.target;
        if (!f.control.empty()) cfg.control.file = f.control;
        if (f.seed) cfg.run.seed = *f.seed;
        if (f.threads) cfg.run.threads = *f.threads;
        if (f.strict_order) cfg.run.strict_order = true;
        cfg.validate();
        const ModelBundle m = build_model(cfg.model, cfg.noise);
        const bool controlled = !cfg.control.file.empty() || cfg.control.value != 1.0 || cfg.control.time_cells != 1;
        if (controlled || f.command == "skeleton" || f.command == "verify-convergence") {
            (void)build_control(cfg.control, m, cfg.run.horizon);
        }
        if (f.command == "rate" || f.command == "verify-ldp") {
            TerminalTarget::parse(cfg.target.predicate).validate(m.spec.dim());
        }
        dir = output_dir(f, cfg);

        if (f.command == "check-conditions") out = run_check_conditions(cfg, m);
        else if (f.command == "simulate") out = run_simulate(cfg, m, controlled);
        else if (f.command == "skeleton") out = run_skeleton(cfg, m);
        else if (f.command == "rate") out = run_rate(cfg, m);
        else if (f.command == "verify-ldp") out = run_verify_ldp(cfg);
        else out = run_verify_convergence(cfg);
        out["manifest.json"] = manifest(f, cfg, out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    try {
        write_outputs(dir, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cout << "wrote " << out.size() << " files to " << dir << "\n";
    return 0;
}

}  // namespace ldp
