#pragma once

#include "ldpspde/triple.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ldp {

/// Outcome of one sampled condition check.
///
/// Sampling cannot prove a condition that quantifies over all of V; `pass`
/// means "no violation found in `samples` draws". `margin` is the worst
/// normalized slack (rhs - lhs) / (1 + |lhs| + |rhs|) over the draws, so a
/// failure always comes with a negative margin and the offending sample.
struct ConditionResult {
    std::string condition;
    bool pass = true;
    double margin = 0.0;
    double witness_norm = 0.0;
    HVector witness;
    std::size_t samples = 0;
    std::string note;
};

struct ConditionReport {
    std::vector<ConditionResult> rows;

    bool all_pass() const;
    /// Throws ValidationError when no row has that name.
    const ConditionResult& at(std::string_view condition) const;
    /// condition,pass,margin,witness_norm
    std::string to_csv() const;
};

}  // namespace ldp
