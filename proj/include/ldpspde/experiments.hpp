#pragma once

#include "ldpspde/config.hpp"
#include "ldpspde/models.hpp"
#include "ldpspde/rate.hpp"
#include "ldpspde/skeleton.hpp"
#include "ldpspde/spde.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ldp {

/// Runs job(i) for i in [0, n) on up to `threads` threads. Jobs write to their
/// own slot, so callers reduce in index order and get thread-count-independent results.
void run_indexed(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job);

/// Stream index of trajectory i on ladder rung `rung` for experiment `tag`.
std::uint64_t trajectory_stream(std::uint64_t tag, std::size_t rung, std::size_t i);

enum StreamTag : std::uint64_t { kTagNaive = 1, kTagImportance = 2, kTagConvergence = 3, kTagMoments = 4, kTagSimulate = 5 };

std::size_t trajectories_for(const RunConfig& run, std::size_t rung);
std::size_t effective_threads(const RunConfig& run);

/// Mean and standard error of a sample, reduced in index order.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_se(std::span<const double> x);

/// Rate problem for the config's target on the config's control grid.
RateProblem build_rate_problem(const ExperimentConfig& cfg, const ModelBundle& m, const TerminalTarget& target);
OptimizerOptions build_optimizer_options(const ExperimentConfig& cfg);

struct LdpRow {
    double eps = 0.0;
    std::size_t trajectories = 0;
    std::size_t hits = 0;
    double p_naive = 0.0, se_naive = 0.0, rate_naive = 0.0;
    double p_is = 0.0, se_is = 0.0, rate_is = 0.0;
    double estimate = 0.0;          // the estimate carried by this row
    double rate_estimate = 0.0;     // -ε log(estimate)
    std::string source;             // naive | is
    bool flagged = false;           // naive Monte Carlo saw no hits
    bool is_consistent = true;      // |naive - IS| ≤ 3 combined SE where both resolve
};

struct LdpTable {
    std::string target;
    double rate = 0.0;              // I(A)
    double rate_interior = 0.0;     // I(A shrunk by the margin)
    double rate_closure = 0.0;      // I(A inflated by the margin)
    std::vector<LdpRow> rows;
    double extrapolated = 0.0;      // intercept of the least-squares line of -ε log P̂ against ε
    double slope = 0.0;
    double relative_error = 0.0;    // |extrapolated - I| / I
    bool bracket_ok = false;
    Control g_star = Control::constant(1.0, 1.0);

    std::string to_csv() const;
    std::string summary_csv() const;
};

LdpTable experiment_ldp(const ExperimentConfig& cfg);

/// E sup_t ‖X̃^ε - X^{0,g}‖²_H over the ε-ladder, with M, Z, Y component gaps.
ConvergenceTable experiment_convergence(const ExperimentConfig& cfg);

/// Skeleton continuity along run.sequence:
///   strong     g_n = 1 + (c - 1)/n → 1
///   two-scale  g_n alternates c(1 ± 1/2) on 2n time cells → c
ConvergenceTable experiment_skeleton_continuity(const ExperimentConfig& cfg);

struct MomentsTable {
    std::vector<double> p;
    std::vector<MomentLadder> ladders;   // one per p
    bool verdict = false;                // every spread < 0.25 and no growth toward small ε
    std::string to_csv() const;
};

MomentsTable experiment_moments(const ExperimentConfig& cfg);

}  // namespace ldp
