#include "ldpspde/csv.hpp"

#include "ldpspde/conditions.hpp"
#include "ldpspde/errors.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ldp {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::string_view what) {
    const auto t = trim(text);
    if (t == "inf" || t == "+inf") return INFINITY;
    if (t == "-inf") return -INFINITY;
    double x = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw ValidationError("cannot parse " + std::string(what) + " as a number: '" +
                              std::string(t) + "'");
    }
    return x;
}

std::vector<std::string> split_fields(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void write_csv_row(std::ostream& os, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << fields[i];
    }
    os << '\n';
}

void write_csv_row(std::ostream& os, std::initializer_list<std::string> fields) {
    write_csv_row(os, std::span<const std::string>(fields.begin(), fields.size()));
}

std::string ConditionReport::to_csv() const {
    std::ostringstream os;
    write_csv_row(os, {"condition", "pass", "margin", "witness_norm"});
    for (const auto& r : rows) {
        write_csv_row(os, {r.condition, r.pass ? "1" : "0", format_double(r.margin),
                           format_double(r.witness_norm)});
    }
    return os.str();
}

}  // namespace ldp
