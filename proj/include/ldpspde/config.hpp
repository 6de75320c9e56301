#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ldp {

struct ModelConfig {
    std::string name = "scalar-linear";  // scalar-linear | linear | reaction-diffusion | burgers
    std::size_t dim = 0;                 // 0: model default (1, 8, 8, 32)
    double a = 1.0;
    double c = 1.0;                      // reaction coefficient
    int power = 3;                       // reaction power (odd)
    std::vector<double> x0 = {1.0};      // one value v means x0_k = v / k²
};

struct NoiseConfig {
    std::string kind;                    // multiplicative | additive | zero | density; empty: model default
    double sigma = 1.0;
    std::vector<double> atoms = {1.0};   // mark values z; f scales with z
    std::vector<double> masses = {1.0};  // ν({z})
    std::size_t modes = 4;               // additive: forced modes
    double lo = 0.0, hi = 1.0;           // density: uniform marks on [lo, hi] with total mass masses[0]
    std::size_t hp_samples = 1000;
};

struct ControlConfig {
    double value = 1.0;
    std::size_t time_cells = 1;
    std::string partition = "single";    // single | atoms
    std::string file;                    // control grid file; overrides value
};

struct TargetConfig {
    std::string predicate = "all";
    double margin = 0.05;
    double bracket_tol = 0.2;            // relative
};

struct RunConfig {
    double horizon = 1.0;
    double dt = 1e-3;
    std::vector<double> eps = {0.4, 0.2, 0.1, 0.05};
    std::vector<std::size_t> trajectories = {100000, 100000, 100000, 400000};
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool strict_order = false;
    double tolerance = 1.0;              // convergence: final E sup gap² must not exceed this
    std::vector<double> moment_p;        // empty: {2, β + 2}
    std::string sequence = "strong";     // strong | two-scale
    std::size_t sequence_length = 6;
    double resolve_rel_se = 0.1;         // naive estimate counts as resolved below this relative SE
};

struct RateConfig {
    std::size_t time_cells = 1;
    double g_upper = 50.0;
    double floor = 1e-8;
    double gap_tol = 1e-6;
    double grad_tol = 1e-6;
    int max_outer = 25;
    int grid_points = 0;                 // > 0: also run the brute-force oracle
    double grid_hi = 10.0;
};

struct OutputConfig {
    std::string dir;                     // empty: $LDPSPDE_OUTPUT_DIR, then "ldpspde-out"
};

struct ExperimentConfig {
    ModelConfig model;
    NoiseConfig noise;
    ControlConfig control;
    TargetConfig target;
    RunConfig run;
    RateConfig rate;
    OutputConfig output;

    /// Invariants independent of the model: ladders, counts, ranges.
    void validate() const;
};

/// Parses `[section]` / `key = value` text. Unknown sections or keys, malformed
/// values and duplicates raise ValidationError naming the line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Canonical key = value rendering of every field; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a, hex.
std::string fnv1a_hex(const std::string& data);

}  // namespace ldp
