#pragma once

#include "ldpspde/noise.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ldp {

/// One point of the augmented Poisson random measure on [0,T] × 𝕏 × [0,∞).
struct JumpEvent {
    double time;
    Mark mark;
    double aux_r;
};

/// Time-ordered jump record. Ties in time are ordered by atom index, then aux_r.
struct JumpStream {
    std::vector<JumpEvent> events;
    double intensity_scale = 1.0;
    double horizon = 0.0;
};

/// Partition of the mark space into control cells.
///
/// single: one cell for all of 𝕏. atoms: explicit atom → cell map for a
/// discrete space. edges: interval cells [e₀,e₁), …, [e_{n-1}, e_n] for a density
/// (values below e₀ fall in the first cell, above e_n in the last).
class ZPartition {
public:
    enum class Kind { single, atoms, edges };

    static ZPartition single();
    static ZPartition per_atom(std::size_t n_atoms);
    static ZPartition atom_cells(std::vector<std::size_t> atom_to_cell);
    static ZPartition intervals(std::vector<double> edges);

    Kind kind() const { return kind_; }
    std::size_t size() const { return n_cells_; }
    std::size_t cell_of(const Mark& z) const;
    std::span<const std::size_t> atom_map() const { return atom_cell_; }
    std::span<const double> edges() const { return edges_; }

    /// ν(cell) for every cell.
    std::vector<double> cell_masses(const MarkSpace& marks) const;
    /// Quadrature nodes of ν restricted to every cell.
    std::vector<std::vector<QuadNode>> cell_quadrature(const MarkSpace& marks) const;
    /// Throws ValidationError if the partition does not fit the mark space.
    void check(const MarkSpace& marks) const;

    bool operator==(const ZPartition&) const = default;

private:
    Kind kind_ = Kind::single;
    std::size_t n_cells_ = 1;
    std::vector<std::size_t> atom_cell_;
    std::vector<double> edges_;
};

/// Piecewise-constant nonnegative control g(t, z) on a time × mark-cell grid.
class Control {
public:
    Control(std::vector<double> t_knots, ZPartition z, std::vector<double> values);

    /// g ≡ value on [0, T] with the given mark partition.
    static Control constant(double horizon, double value, ZPartition z = ZPartition::single());
    /// Uniform time cells, all values equal to `value`.
    static Control uniform(double horizon, std::size_t time_cells, ZPartition z, double value);

    double horizon() const { return t_knots_.back(); }
    std::size_t time_cells() const { return t_knots_.size() - 1; }
    std::size_t mark_cells() const { return z_.size(); }
    std::size_t cells() const { return values_.size(); }
    std::span<const double> t_knots() const { return t_knots_; }
    const ZPartition& partition() const { return z_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double& at(std::size_t tc, std::size_t zc) { return values_[tc * z_.size() + zc]; }
    double at(std::size_t tc, std::size_t zc) const { return values_[tc * z_.size() + zc]; }
    /// g(t, z); right-continuous in t, with t = T mapped to the last cell.
    double operator()(double t, const Mark& z) const;
    std::size_t time_cell(double t) const;
    double max_value() const;
    double min_value() const;

    /// Fraction of [t0, t1] covered by each time cell, added into out (length time_cells()).
    void overlap_fractions(double t0, double t1, std::span<double> out) const;
    /// (1 / (t1 - t0)) ∫_{t0}^{t1} g(s, cell zc) ds for every mark cell.
    void time_average(double t0, double t1, std::span<double> out) const;

private:
    std::vector<double> t_knots_;
    ZPartition z_;
    std::vector<double> values_;
};

/// Cells of the dominating measure, per time cell: ν_T(cell) = ν(z-cell) × duration.
std::vector<double> cell_measures(const Control& g, const MarkSpace& marks);

inline constexpr double kDefaultEventCap = 1e8;

/// Poisson random measure with mean measure ε⁻¹ λ_T ⊗ ν.
JumpStream sample_prm(const MarkSpace& marks, double eps, double horizon, std::uint64_t seed,
                      std::uint64_t stream = 0, double event_cap = kDefaultEventCap);

struct ThinnedStreams {
    JumpStream kept;
    JumpStream rejected;
};

/// Thinning of a dominating PRM of intensity ε⁻¹ g_max λ_T ⊗ ν: each candidate
/// draws aux_r uniform on [0, g_max) and is kept iff aux_r < g(s, z).
/// With g ≡ 1 the kept stream is identical to sample_prm's.
ThinnedStreams thin_prm(const MarkSpace& marks, double eps, const Control& g, std::uint64_t seed,
                        std::uint64_t stream = 0, double event_cap = kDefaultEventCap);

/// Controlled random measure N^{ε⁻¹g}: the kept part of thin_prm.
JumpStream sample_controlled_prm(const MarkSpace& marks, double eps, const Control& g,
                                 std::uint64_t seed, std::uint64_t stream = 0,
                                 double event_cap = kDefaultEventCap);

/// log ℰ^ε_t for ϑ = 1/g:
///   Σ_{events ≤ t} log(1/g(sᵢ, zᵢ)) + ε⁻¹ ∫₀ᵗ∫ (g(s,z) - 1) ν(dz) ds.
/// The compensator is integrated exactly on the control's cell grid.
double girsanov_log_density(const JumpStream& stream, const Control& g, double eps,
                            const MarkSpace& marks, double t);

/// Clamps every cell into [1/n, n]; cells outside the compact set (in_compact[zc] == false)
/// are set to 1. An empty in_compact treats every mark cell as compact.
Control restrict_to_admissible(const Control& g, int n, const std::vector<bool>& in_compact = {});

/// Every cell value lies in [1/n, n].
bool is_admissible(const Control& g, int n);

void write_stream_csv(std::ostream& os, const JumpStream& s);
JumpStream read_stream_csv(std::istream& is, double horizon, double intensity_scale);

/// Text grid file:
///   ldpspde-control v1
///   t_knots: t0 t1 ...
///   z_partition: single | atoms c0 c1 ... | edges e0 e1 ...
///   values:
///   <time_cells rows of mark_cells values>
void write_control(std::ostream& os, const Control& g);
Control read_control(std::istream& is);

}  // namespace ldp
