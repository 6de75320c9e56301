#pragma once

#include "ldpspde/config.hpp"
#include "ldpspde/noise.hpp"
#include "ldpspde/operators.hpp"
#include "ldpspde/prm.hpp"
#include "ldpspde/triple.hpp"

#include <string>

namespace ldp {

/// Everything a solver needs about one model instance.
struct ModelBundle {
    std::string name;
    TripleSpec spec;
    DriftOperator op;
    NoiseModel noise;
    HVector x0;
};

/// Built-in models:
///   scalar-linear       d = 1, ẋ = -a x, f = σ z x on atoms z with masses m
///   linear              μ_k = k², 𝒜 = -aΛ, multiplicative noise by default
///   reaction-diffusion  μ_k = k², 𝒜 = -aΛ - c v^p, multiplicative noise by default
///   burgers             μ_k = k², 𝒜 = -aΛ - B(v,v), additive noise on the first modes
/// The operator's K is raised by ∫ G_f² ν so that (H2) holds with the noise term.
ModelBundle build_model(const ModelConfig& model, const NoiseConfig& noise);

/// Mark partition named by control.partition for the bundle's marks.
ZPartition build_partition(const ControlConfig& control, const ModelBundle& m);

/// Control from the [control] section (file, or a constant on time_cells cells).
Control build_control(const ControlConfig& control, const ModelBundle& m, double horizon);

}  // namespace ldp
