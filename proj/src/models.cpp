#include "ldpspde/models.hpp"

#include "ldpspde/errors.hpp"

#include <cmath>
#include <fstream>

namespace ldp {

namespace {

std::size_t default_dim(const std::string& name) {
    if (name == "scalar-linear") return 1;
    if (name == "burgers") return 32;
    return 8;
}

MarkSpace build_marks(const NoiseConfig& n) {
    if (n.kind == "density") {
        const double density = n.masses.front() / (n.hi - n.lo);
        return MarkSpace::density([density](double) { return density; }, n.lo, n.hi);
    }
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < n.atoms.size(); ++i) atoms.push_back({n.atoms[i], n.masses[i]});
    return MarkSpace::discrete(std::move(atoms));
}

NoiseModel build_noise(const NoiseConfig& n, const std::string& kind, std::size_t dim) {
    MarkSpace marks = build_marks(n);
    const double sigma = n.sigma;
    if (kind == "zero") return zero_noise(std::move(marks), dim);
    if (kind == "multiplicative" || kind == "density") {
        for (double z : n.atoms) require(sigma * z > -1.0, "noise: multiplicative jumps need 1 + σz > 0");
        if (kind == "density") require(sigma * n.lo > -1.0, "noise: multiplicative jumps need 1 + σz > 0");
        NoiseModel m = multiplicative_noise(std::move(marks), dim, [sigma](const Mark& z) { return sigma * z.value; });
        m.name = kind;
        return m;
    }
    if (kind == "additive") {
        const std::size_t modes = std::min(n.modes, dim);
        return additive_noise(std::move(marks), dim, [sigma, modes](const Mark& z, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t k = 0; k < modes; ++k) out[k] = sigma * z.value / static_cast<double>(k + 1);
        });
    }
    throw ValidationError("noise.kind: unknown kind '" + kind + "'");
}

double g_f_squared_mass(const NoiseModel& m) {
    double s = 0.0;
    for (const auto& q : m.marks.quadrature()) {
        const double g = m.G_f(0.0, q.mark);
        s += q.weight * g * g;
    }
    return s;
}

}  // namespace

ModelBundle build_model(const ModelConfig& mc, const NoiseConfig& nc) {
    const std::string& name = mc.name;
    require(name == "scalar-linear" || name == "linear" || name == "reaction-diffusion" || name == "burgers",
            "model.name: unknown model '" + name + "'");
    const std::size_t d = mc.dim ? mc.dim : default_dim(name);
    require(name != "scalar-linear" || d == 1, "model.dim: scalar-linear is one-dimensional");
    require(d <= 4096, "model.dim: dimension too large");

    std::vector<double> weights(d);
    for (std::size_t k = 0; k < d; ++k) weights[k] = name == "scalar-linear" ? 1.0 : double((k + 1) * (k + 1));
    const TripleSpec base(weights);

    std::string kind = nc.kind;
    if (kind.empty()) kind = name == "burgers" ? "additive" : "multiplicative";
    NoiseModel noise = build_noise(nc, kind, d);
    const RateOverrides rates{noise.null ? 0.0 : g_f_squared_mass(noise), 1.0};

    auto op = [&]() -> DriftOperator {
        if (name == "reaction-diffusion") return builtin_reaction_diffusion(base, mc.a, mc.c, mc.power, rates);
        if (name == "burgers") return builtin_burgers(base, mc.a, ConvectionTensor::dirichlet_sine(d), rates);
        return builtin_linear(base, mc.a, rates);
    }();
    const auto& k = op.constants();
    TripleSpec spec(weights, k.alpha, k.beta, k.theta);
    // L_f is bounded for every built-in noise, so it lies in 𝓗_p for every p.
    noise.p_exponent = std::max(noise.p_exponent, upsilon(k.alpha, k.beta, noise.eta0));

    HVector x0;
    if (mc.x0.size() == 1) {
        x0.resize(d);
        for (std::size_t i = 0; i < d; ++i) x0[i] = mc.x0[0] / double((i + 1) * (i + 1));
    } else {
        require(mc.x0.size() == d, "model.x0: give one value or one per coordinate");
        x0 = mc.x0;
    }
    spec.check(x0);
    return ModelBundle{name, std::move(spec), std::move(op), std::move(noise), std::move(x0)};
}

ZPartition build_partition(const ControlConfig& control, const ModelBundle& m) {
    if (control.partition == "single") return ZPartition::single();
    require(control.partition == "atoms", "control.partition must be single or atoms");
    require(m.noise.marks.kind() == MarkSpace::Kind::finite_discrete, "control.partition = atoms needs discrete marks");
    return ZPartition::per_atom(m.noise.marks.atoms().size());
}

Control build_control(const ControlConfig& control, const ModelBundle& m, double horizon) {
    if (!control.file.empty()) {
        std::ifstream in(control.file);
        if (!in) throw ValidationError("control.file: cannot open '" + control.file + "'");
        Control g = read_control(in);
        require(std::fabs(g.horizon() - horizon) <= 1e-12 * horizon, "control.file: horizon differs from run.horizon");
        g.partition().check(m.noise.marks);
        return g;
    }
    return Control::uniform(horizon, control.time_cells, build_partition(control, m), control.value);
}

}  // namespace ldp
