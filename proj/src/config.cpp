#include "ldpspde/config.hpp"

#include "ldpspde/csv.hpp"
#include "ldpspde/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ldp {

namespace {

struct Field {
    std::string section, key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

template <class T>
T parse_integer(const std::string& s, const std::string& what) {
    T v{};
    const auto t = trim(s);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) throw ValidationError(what + ": expected an integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s, const std::string& what) {
    const auto t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ValidationError(what + ": expected true/false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (const auto& f : split_fields(s, ',')) out.push_back(parse_double(f, what));
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

std::vector<Field> fields(ExperimentConfig& c) {
    std::vector<Field> f;
    auto str = [&](const char* sec, const char* key, std::string& ref) {
        f.push_back({sec, key, [&ref](const std::string& s) { ref = std::string(trim(s)); }, [&ref] { return ref; }});
    };
    auto dbl = [&](const char* sec, const char* key, double& ref) {
        const std::string what = std::string(sec) + "." + key;
        f.push_back({sec, key, [&ref, what](const std::string& s) { ref = parse_double(s, what); },
                     [&ref] { return format_double(ref); }});
    };
    auto list = [&](const char* sec, const char* key, std::vector<double>& ref) {
        const std::string what = std::string(sec) + "." + key;
        f.push_back({sec, key, [&ref, what](const std::string& s) { ref = parse_list(s, what); },
                     [&ref] { return join(ref); }});
    };
    auto size = [&](const char* sec, const char* key, std::size_t& ref) {
        const std::string what = std::string(sec) + "." + key;
        f.push_back({sec, key, [&ref, what](const std::string& s) { ref = parse_integer<std::size_t>(s, what); },
                     [&ref] { return std::to_string(ref); }});
    };
    auto integer = [&](const char* sec, const char* key, int& ref) {
        const std::string what = std::string(sec) + "." + key;
        f.push_back({sec, key, [&ref, what](const std::string& s) { ref = parse_integer<int>(s, what); },
                     [&ref] { return std::to_string(ref); }});
    };

    str("model", "name", c.model.name);
    size("model", "dim", c.model.dim);
    dbl("model", "a", c.model.a);
    dbl("model", "c", c.model.c);
    integer("model", "power", c.model.power);
    list("model", "x0", c.model.x0);

    str("noise", "kind", c.noise.kind);
    dbl("noise", "sigma", c.noise.sigma);
    list("noise", "atoms", c.noise.atoms);
    list("noise", "masses", c.noise.masses);
    size("noise", "modes", c.noise.modes);
    dbl("noise", "lo", c.noise.lo);
    dbl("noise", "hi", c.noise.hi);
    size("noise", "hp_samples", c.noise.hp_samples);

    dbl("control", "value", c.control.value);
    size("control", "time_cells", c.control.time_cells);
    str("control", "partition", c.control.partition);
    str("control", "file", c.control.file);

    str("target", "predicate", c.target.predicate);
    dbl("target", "margin", c.target.margin);
    dbl("target", "bracket_tol", c.target.bracket_tol);

    dbl("run", "horizon", c.run.horizon);
    dbl("run", "dt", c.run.dt);
    list("run", "eps", c.run.eps);
    f.push_back({"run", "trajectories",
                 [&c](const std::string& s) {
                     c.run.trajectories.clear();
                     for (const auto& x : split_fields(s, ',')) {
                         c.run.trajectories.push_back(parse_integer<std::size_t>(x, "run.trajectories"));
                     }
                 },
                 [&c] {
                     std::string s;
                     for (std::size_t i = 0; i < c.run.trajectories.size(); ++i) {
                         s += (i ? "," : "") + std::to_string(c.run.trajectories[i]);
                     }
                     return s;
                 }});
    f.push_back({"run", "seed", [&c](const std::string& s) { c.run.seed = parse_integer<std::uint64_t>(s, "run.seed"); },
                 [&c] { return std::to_string(c.run.seed); }});
    size("run", "threads", c.run.threads);
    f.push_back({"run", "strict_order", [&c](const std::string& s) { c.run.strict_order = parse_bool(s, "run.strict_order"); },
                 [&c] { return std::string(c.run.strict_order ? "true" : "false"); }});
    dbl("run", "tolerance", c.run.tolerance);
    list("run", "moment_p", c.run.moment_p);
    str("run", "sequence", c.run.sequence);
    size("run", "sequence_length", c.run.sequence_length);
    dbl("run", "resolve_rel_se", c.run.resolve_rel_se);

    size("rate", "time_cells", c.rate.time_cells);
    dbl("rate", "g_upper", c.rate.g_upper);
    dbl("rate", "floor", c.rate.floor);
    dbl("rate", "gap_tol", c.rate.gap_tol);
    dbl("rate", "grad_tol", c.rate.grad_tol);
    integer("rate", "max_outer", c.rate.max_outer);
    integer("rate", "grid_points", c.rate.grid_points);
    dbl("rate", "grid_hi", c.rate.grid_hi);

    str("output", "dir", c.output.dir);
    return f;
}

/// Line of `key` inside `[section]`, for error messages; 0 when not found.
unsigned long locate(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream is(text);
    std::string line, current;
    unsigned long n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto t = trim(line);
        if (t.empty() || t.front() == ';' || t.front() == '#') continue;
        if (t.front() == '[') {
            current = std::string(trim(t.substr(1, t.find(']') - 1)));
            continue;
        }
        const auto eq = t.find('=');
        if (current == section && eq != std::string_view::npos && trim(t.substr(0, eq)) == key) return n;
    }
    return 0;
}

}  // namespace

void ExperimentConfig::validate() const {
    require(!run.eps.empty(), "run.eps: the eps ladder is empty");
    for (std::size_t i = 0; i < run.eps.size(); ++i) {
        require(run.eps[i] > 0.0 && std::isfinite(run.eps[i]), "run.eps: entries must be positive");
        if (i) require(run.eps[i] < run.eps[i - 1], "run.eps: ladder must be strictly decreasing");
    }
    require(run.trajectories.size() == run.eps.size() || run.trajectories.size() == 1,
            "run.trajectories: give one count or one per eps");
    for (auto n : run.trajectories) require(n >= 1, "run.trajectories: counts must be >= 1");
    require(run.horizon > 0.0 && std::isfinite(run.horizon), "run.horizon must be > 0");
    require(run.dt > 0.0 && run.dt <= run.horizon, "run.dt must satisfy 0 < dt <= horizon");
    require(run.threads >= 1, "run.threads must be >= 1");
    for (double p : run.moment_p) require(p >= 2.0, "run.moment_p: exponents must be >= 2");
    require(run.sequence == "strong" || run.sequence == "two-scale", "run.sequence must be strong or two-scale");
    require(run.sequence_length >= 1, "run.sequence_length must be >= 1");
    require(run.resolve_rel_se > 0.0, "run.resolve_rel_se must be > 0");
    require(control.value >= 0.0 && std::isfinite(control.value), "control.value must be finite and >= 0");
    require(control.time_cells >= 1, "control.time_cells must be >= 1");
    require(control.partition == "single" || control.partition == "atoms", "control.partition must be single or atoms");
    require(target.margin >= 0.0, "target.margin must be >= 0");
    require(target.bracket_tol >= 0.0, "target.bracket_tol must be >= 0");
    require(rate.time_cells >= 1, "rate.time_cells must be >= 1");
    require(rate.g_upper > 1.0, "rate.g_upper must be > 1");
    require(rate.floor > 0.0 && rate.floor < 1.0, "rate.floor must lie in (0, 1)");
    require(rate.gap_tol > 0.0 && rate.grad_tol > 0.0, "rate tolerances must be > 0");
    require(rate.max_outer >= 1, "rate.max_outer must be >= 1");
    require(rate.grid_points >= 0, "rate.grid_points must be >= 0");
    require(rate.grid_hi > 1e-3, "rate.grid_hi must exceed 1e-3");
    require(noise.sigma >= 0.0 && std::isfinite(noise.sigma), "noise.sigma must be finite and >= 0");
    require(!noise.atoms.empty() && noise.atoms.size() == noise.masses.size(),
            "noise.atoms and noise.masses must have the same nonzero length");
    for (double m : noise.masses) require(m > 0.0 && std::isfinite(m), "noise.masses must be positive");
    require(noise.hi > noise.lo, "noise: need lo < hi");
    require(noise.modes >= 1, "noise.modes must be >= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    ExperimentConfig cfg;
    auto table = fields(cfg);
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ValidationError(source + ":" + std::to_string(locate(text, "", section)) +
                                  ": key '" + section + "' outside any section");
        }
        const bool known_section = std::any_of(table.begin(), table.end(), [&](const Field& f) { return f.section == section; });
        if (!known_section) throw ValidationError(source + ": unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            const unsigned long line = locate(text, section, key);
            const auto it = std::find_if(table.begin(), table.end(),
                                         [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == table.end()) {
                throw ValidationError(source + ":" + std::to_string(line) + ": unknown key '" + key + "' in [" + section + "]");
            }
            try {
                it->set(value.data());
            } catch (const ValidationError& e) {
                throw ValidationError(source + ":" + std::to_string(line) + ": " + e.what());
            }
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string render_config(const ExperimentConfig& cfg) {
    ExperimentConfig copy = cfg;
    std::string out, section;
    for (const auto& f : fields(copy)) {
        if (f.section != section) {
            if (!section.empty()) out += "\n";
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + " = " + f.get() + "\n";
    }
    return out;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ldp
