#include "ldpspde/prm.hpp"

#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ldp {

ZPartition ZPartition::single() { return ZPartition{}; }

ZPartition ZPartition::per_atom(std::size_t n_atoms) {
    std::vector<std::size_t> map(n_atoms);
    for (std::size_t i = 0; i < n_atoms; ++i) map[i] = i;
    return atom_cells(std::move(map));
}

ZPartition ZPartition::atom_cells(std::vector<std::size_t> atom_to_cell) {
    require(!atom_to_cell.empty(), "ZPartition: atom map must not be empty");
    ZPartition z;
    z.kind_ = Kind::atoms;
    z.n_cells_ = *std::max_element(atom_to_cell.begin(), atom_to_cell.end()) + 1;
    std::vector<bool> used(z.n_cells_, false);
    for (auto c : atom_to_cell) used[c] = true;
    require(std::all_of(used.begin(), used.end(), [](bool b) { return b; }),
            "ZPartition: atom cells must be numbered 0..n-1 without gaps");
    z.atom_cell_ = std::move(atom_to_cell);
    return z;
}

ZPartition ZPartition::intervals(std::vector<double> edges) {
    require(edges.size() >= 2, "ZPartition: at least two edges required");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        require(edges[i] > edges[i - 1], "ZPartition: edges must be strictly increasing");
    }
    ZPartition z;
    z.kind_ = Kind::edges;
    z.n_cells_ = edges.size() - 1;
    z.edges_ = std::move(edges);
    return z;
}

std::size_t ZPartition::cell_of(const Mark& m) const {
    switch (kind_) {
        case Kind::single:
            return 0;
        case Kind::atoms:
            return atom_cell_[m.atom];
        case Kind::edges: {
            const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, m.value);
            return static_cast<std::size_t>(it - (edges_.begin() + 1));
        }
    }
    return 0;
}

void ZPartition::check(const MarkSpace& marks) const {
    if (kind_ == Kind::atoms) {
        require(marks.kind() == MarkSpace::Kind::finite_discrete,
                "ZPartition: atom partition requires a discrete mark space");
        require(atom_cell_.size() == marks.atoms().size(),
                "ZPartition: atom map size does not match the number of atoms");
    }
}

std::vector<std::vector<QuadNode>> ZPartition::cell_quadrature(const MarkSpace& marks) const {
    check(marks);
    std::vector<std::vector<QuadNode>> out(n_cells_);
    switch (kind_) {
        case Kind::single:
            out[0].assign(marks.quadrature().begin(), marks.quadrature().end());
            break;
        case Kind::atoms:
            for (const auto& q : marks.quadrature()) out[atom_cell_[q.mark.atom]].push_back(q);
            break;
        case Kind::edges:
            for (std::size_t c = 0; c < n_cells_; ++c) {
                const double a = c == 0 ? -std::numeric_limits<double>::infinity() : edges_[c];
                const double b = c + 1 == n_cells_ ? std::numeric_limits<double>::infinity() : edges_[c + 1];
                if (marks.kind() == MarkSpace::Kind::finite_discrete) {
                    out[c] = marks.quadrature(a, b);
                } else {
                    out[c] = marks.quadrature(std::max(a, marks.lo()), std::min(b, marks.hi()));
                }
            }
            break;
    }
    return out;
}

std::vector<double> ZPartition::cell_masses(const MarkSpace& marks) const {
    if (kind_ == Kind::single) return {marks.total_mass()};
    std::vector<double> m(n_cells_, 0.0);
    const auto quad = cell_quadrature(marks);
    for (std::size_t c = 0; c < n_cells_; ++c) {
        for (const auto& q : quad[c]) m[c] += q.weight;
    }
    return m;
}

Control::Control(std::vector<double> t_knots, ZPartition z, std::vector<double> values)
    : t_knots_(std::move(t_knots)), z_(std::move(z)), values_(std::move(values)) {
    require(t_knots_.size() >= 2, "Control: at least one time cell required");
    require(t_knots_.front() == 0.0, "Control: time knots must start at 0");
    for (std::size_t i = 1; i < t_knots_.size(); ++i) {
        require(t_knots_[i] > t_knots_[i - 1], "Control: time knots must be strictly increasing");
    }
    require(std::isfinite(t_knots_.back()), "Control: horizon must be finite");
    require(values_.size() == time_cells() * z_.size(),
            "Control: values must have time_cells x mark_cells entries");
    for (double v : values_) {
        require(std::isfinite(v) && v >= 0.0, "Control: values must be finite and >= 0");
    }
}

Control Control::constant(double horizon, double value, ZPartition z) {
    require(horizon > 0.0, "Control: horizon must be > 0");
    const std::size_t n = z.size();
    return Control({0.0, horizon}, std::move(z), std::vector<double>(n, value));
}

Control Control::uniform(double horizon, std::size_t time_cells, ZPartition z, double value) {
    require(horizon > 0.0 && time_cells >= 1, "Control: horizon > 0 and time_cells >= 1 required");
    std::vector<double> knots(time_cells + 1);
    for (std::size_t i = 0; i <= time_cells; ++i) {
        knots[i] = horizon * static_cast<double>(i) / static_cast<double>(time_cells);
    }
    knots.back() = horizon;
    const std::size_t n = time_cells * z.size();
    return Control(std::move(knots), std::move(z), std::vector<double>(n, value));
}

std::size_t Control::time_cell(double t) const {
    const auto it = std::upper_bound(t_knots_.begin(), t_knots_.end(), t);
    const auto idx = static_cast<std::ptrdiff_t>(it - t_knots_.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, time_cells() - 1));
}

double Control::operator()(double t, const Mark& z) const {
    return at(time_cell(t), z_.cell_of(z));
}

double Control::max_value() const { return *std::max_element(values_.begin(), values_.end()); }
double Control::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

void Control::overlap_fractions(double t0, double t1, std::span<double> out) const {
    const double len = t1 - t0;
    if (len <= 0.0) {
        out[time_cell(t0)] += 1.0;
        return;
    }
    for (std::size_t c = time_cell(t0); c < time_cells(); ++c) {
        const double a = std::max(t0, t_knots_[c]);
        const double b = std::min(t1, t_knots_[c + 1]);
        if (c + 1 == time_cells() && t1 > t_knots_[c + 1]) {
            out[c] += (t1 - a) / len;  // past the horizon: hold the last cell
            break;
        }
        if (b > a) out[c] += (b - a) / len;
        if (t_knots_[c + 1] >= t1) break;
    }
}

void Control::time_average(double t0, double t1, std::span<double> out) const {
    const std::size_t nz = z_.size();
    if (time_cells() == 1) {
        std::copy(values_.begin(), values_.end(), out.begin());
        return;
    }
    const std::size_t c0 = time_cell(t0);
    if (t1 <= t_knots_[c0 + 1] || c0 + 1 == time_cells()) {
        std::copy(values_.begin() + c0 * nz, values_.begin() + (c0 + 1) * nz, out.begin());
        return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    const double len = t1 - t0;
    for (std::size_t c = c0; c < time_cells(); ++c) {
        const double a = std::max(t0, t_knots_[c]);
        const double b = (c + 1 == time_cells()) ? t1 : std::min(t1, t_knots_[c + 1]);
        if (b > a) {
            const double w = (b - a) / len;
            for (std::size_t z = 0; z < nz; ++z) out[z] += w * values_[c * nz + z];
        }
        if (t_knots_[c + 1] >= t1) break;
    }
}

std::vector<double> cell_measures(const Control& g, const MarkSpace& marks) {
    const auto masses = g.partition().cell_masses(marks);
    std::vector<double> out(g.cells());
    for (std::size_t tc = 0; tc < g.time_cells(); ++tc) {
        const double dur = g.t_knots()[tc + 1] - g.t_knots()[tc];
        for (std::size_t zc = 0; zc < g.mark_cells(); ++zc) out[tc * g.mark_cells() + zc] = masses[zc] * dur;
    }
    return out;
}

namespace {

void sort_events(std::vector<JumpEvent>& ev) {
    std::sort(ev.begin(), ev.end(), [](const JumpEvent& a, const JumpEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.mark.atom != b.mark.atom) return a.mark.atom < b.mark.atom;
        return a.aux_r < b.aux_r;
    });
}

}  // namespace

ThinnedStreams thin_prm(const MarkSpace& marks, double eps, const Control& g, std::uint64_t seed,
                        std::uint64_t stream, double event_cap) {
    require(eps > 0.0 && std::isfinite(eps), "sample_prm: eps must be > 0");
    g.partition().check(marks);
    const double horizon = g.horizon();
    const double g_max = g.max_value();
    require(std::isfinite(g_max), "sample_controlled_prm: control must be bounded");
    ThinnedStreams out;
    out.kept.horizon = out.rejected.horizon = horizon;
    out.kept.intensity_scale = out.rejected.intensity_scale = g_max / eps;
    if (g_max == 0.0) return out;

    const double mean = g_max / eps * horizon * nu_total(marks);
    if (mean > event_cap) {
        throw ValidationError("expected event count " + format_double(mean) + " exceeds the cap " +
                              format_double(event_cap) + "; raise eps or shorten the horizon");
    }
    PhiloxRng rng(seed, stream);
    const auto count = poisson_draw(rng, mean);
    std::vector<JumpEvent> all;
    all.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double t = horizon * rng.uniform_pos();
        const Mark z = marks.sample(rng);
        const double r = g_max * rng.uniform();
        all.push_back({t, z, r});
    }
    sort_events(all);
    for (const auto& e : all) {
        (e.aux_r < g(e.time, e.mark) ? out.kept : out.rejected).events.push_back(e);
    }
    return out;
}

JumpStream sample_prm(const MarkSpace& marks, double eps, double horizon, std::uint64_t seed,
                      std::uint64_t stream, double event_cap) {
    auto s = thin_prm(marks, eps, Control::constant(horizon, 1.0), seed, stream, event_cap).kept;
    s.intensity_scale = 1.0 / eps;
    return s;
}

JumpStream sample_controlled_prm(const MarkSpace& marks, double eps, const Control& g,
                                 std::uint64_t seed, std::uint64_t stream, double event_cap) {
    return thin_prm(marks, eps, g, seed, stream, event_cap).kept;
}

double girsanov_log_density(const JumpStream& stream, const Control& g, double eps,
                            const MarkSpace& marks, double t) {
    require(eps > 0.0, "girsanov_log_density: eps must be > 0");
    double log_e = 0.0;
    for (const auto& e : stream.events) {
        if (e.time > t) break;
        const double gv = g(e.time, e.mark);
        if (!(gv > 0.0)) {
            throw ValidationError("girsanov_log_density: event at t=" + format_double(e.time) +
                                  " lies in a zero control cell");
        }
        log_e -= std::log(gv);
    }
    const auto masses = g.partition().cell_masses(marks);
    double comp = 0.0;
    for (std::size_t tc = 0; tc < g.time_cells(); ++tc) {
        const double a = g.t_knots()[tc];
        const double b = std::min(t, g.t_knots()[tc + 1]);
        if (b <= a) break;
        for (std::size_t zc = 0; zc < g.mark_cells(); ++zc) {
            comp += (g.at(tc, zc) - 1.0) * masses[zc] * (b - a);
        }
    }
    return log_e + comp / eps;
}

Control restrict_to_admissible(const Control& g, int n, const std::vector<bool>& in_compact) {
    require(n >= 1, "restrict_to_admissible: n must be >= 1");
    require(in_compact.empty() || in_compact.size() == g.mark_cells(),
            "restrict_to_admissible: compact flags must cover every mark cell");
    Control out = g;
    const double lo = 1.0 / n, hi = n;
    for (std::size_t tc = 0; tc < g.time_cells(); ++tc) {
        for (std::size_t zc = 0; zc < g.mark_cells(); ++zc) {
            double& v = out.at(tc, zc);
            v = (in_compact.empty() || in_compact[zc]) ? std::clamp(v, lo, hi) : 1.0;
        }
    }
    return out;
}

bool is_admissible(const Control& g, int n) {
    return g.min_value() >= 1.0 / n && g.max_value() <= n;
}

void write_stream_csv(std::ostream& os, const JumpStream& s) {
    write_csv_row(os, {"time", "atom", "mark", "aux_r"});
    for (const auto& e : s.events) {
        write_csv_row(os, {format_double(e.time),
                           e.mark.atom == kNoAtom ? std::string("-1") : std::to_string(e.mark.atom),
                           format_double(e.mark.value), format_double(e.aux_r)});
    }
}

JumpStream read_stream_csv(std::istream& is, double horizon, double intensity_scale) {
    JumpStream s;
    s.horizon = horizon;
    s.intensity_scale = intensity_scale;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_fields(line, ',');
        require(f.size() == 4, "stream csv: expected 4 fields per row");
        const double atom = parse_double(f[1], "atom");
        s.events.push_back({parse_double(f[0], "time"),
                            Mark{atom < 0 ? kNoAtom : static_cast<std::size_t>(atom),
                                 parse_double(f[2], "mark")},
                            parse_double(f[3], "aux_r")});
    }
    return s;
}

void write_control(std::ostream& os, const Control& g) {
    os << "ldpspde-control v1\n";
    os << "t_knots:";
    for (double t : g.t_knots()) os << ' ' << format_double(t);
    os << "\nz_partition:";
    switch (g.partition().kind()) {
        case ZPartition::Kind::single:
            os << " single";
            break;
        case ZPartition::Kind::atoms:
            os << " atoms";
            for (auto c : g.partition().atom_map()) os << ' ' << c;
            break;
        case ZPartition::Kind::edges:
            os << " edges";
            for (double e : g.partition().edges()) os << ' ' << format_double(e);
            break;
    }
    os << "\nvalues:\n";
    for (std::size_t tc = 0; tc < g.time_cells(); ++tc) {
        for (std::size_t zc = 0; zc < g.mark_cells(); ++zc) {
            if (zc) os << ' ';
            os << format_double(g.at(tc, zc));
        }
        os << '\n';
    }
}

Control read_control(std::istream& is) {
    std::string line;
    int lineno = 0;
    auto next = [&](std::string_view expect_prefix) {
        for (;;) {
            if (!std::getline(is, line)) {
                throw ValidationError("control file: unexpected end of input (line " +
                                      std::to_string(lineno) + ")");
            }
            ++lineno;
            if (!trim(line).empty()) break;
        }
        const auto t = trim(line);
        if (t.substr(0, expect_prefix.size()) != expect_prefix) {
            throw ValidationError("control file line " + std::to_string(lineno) + ": expected '" +
                                  std::string(expect_prefix) + "'");
        }
        return std::string(trim(t.substr(expect_prefix.size())));
    };
    next("ldpspde-control v1");
    std::vector<double> knots;
    {
        std::istringstream ss(next("t_knots:"));
        std::string tok;
        while (ss >> tok) knots.push_back(parse_double(tok, "t_knots"));
    }
    ZPartition z = ZPartition::single();
    {
        std::istringstream ss(next("z_partition:"));
        std::string kind, tok;
        ss >> kind;
        if (kind == "atoms") {
            std::vector<std::size_t> map;
            while (ss >> tok) map.push_back(static_cast<std::size_t>(parse_double(tok, "atom cell")));
            z = ZPartition::atom_cells(std::move(map));
        } else if (kind == "edges") {
            std::vector<double> edges;
            while (ss >> tok) edges.push_back(parse_double(tok, "edge"));
            z = ZPartition::intervals(std::move(edges));
        } else if (kind != "single") {
            throw ValidationError("control file line " + std::to_string(lineno) +
                                  ": unknown partition '" + kind + "'");
        }
    }
    next("values:");
    std::vector<double> values;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) values.push_back(parse_double(tok, "control value"));
    }
    return Control(std::move(knots), std::move(z), std::move(values));
}

}  // namespace ldp
