#include "ldpspde/triple.hpp"

#include "ldpspde/errors.hpp"

#include <cmath>
#include <string>

namespace ldp {

TripleSpec::TripleSpec(std::vector<double> v_weights, double alpha, double beta, double theta)
    : weights_(std::move(v_weights)), alpha_(alpha), beta_(beta), theta_(theta) {
    require(!weights_.empty(), "TripleSpec: dimension must be positive");
    for (double w : weights_) {
        require(std::isfinite(w) && w > 0.0, "TripleSpec: v_weights must be finite and > 0");
    }
    require(alpha_ > 1.0, "TripleSpec: alpha must be > 1");
    require(beta_ >= 0.0, "TripleSpec: beta must be >= 0");
    require(theta_ > 0.0, "TripleSpec: theta must be > 0");
}

TripleSpec TripleSpec::dirichlet_laplacian(std::size_t dim, double alpha, double beta,
                                           double theta) {
    std::vector<double> w(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const double n = static_cast<double>(k + 1);
        w[k] = n * n;
    }
    return TripleSpec(std::move(w), alpha, beta, theta);
}

void TripleSpec::check(std::span<const double> v) const {
    if (v.size() != weights_.size()) {
        throw ValidationError("dimension mismatch: expected " + std::to_string(weights_.size()) +
                              ", got " + std::to_string(v.size()));
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw ValidationError("vector has a nonfinite coordinate");
    }
}

double TripleSpec::norm_h(std::span<const double> v) const {
    check(v);
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double TripleSpec::norm_v(std::span<const double> v) const {
    check(v);
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += weights_[k] * v[k] * v[k];
    return std::sqrt(s);
}

double TripleSpec::norm_vstar(std::span<const double> v) const {
    check(v);
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * v[k] / weights_[k];
    return std::sqrt(s);
}

double TripleSpec::pairing(std::span<const double> u, std::span<const double> v) const {
    check(u);
    check(v);
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
    return s;
}

}  // namespace ldp
