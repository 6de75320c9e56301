#include <doctest.h>

#include "ldpspde/errors.hpp"
#include "ldpspde/prm.hpp"

#include <cmath>
#include <sstream>

using namespace ldp;

namespace {

MarkSpace two_atoms() { return MarkSpace::discrete({{1.0, 1.0}, {-1.0, 0.5}}); }

bool same(const JumpStream& a, const JumpStream& b) {
    if (a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        const auto& x = a.events[i];
        const auto& y = b.events[i];
        if (x.time != y.time || x.mark.atom != y.mark.atom || x.mark.value != y.mark.value || x.aux_r != y.aux_r) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("poisson count mean and time order") {
    const auto marks = two_atoms();
    const double eps = 0.1, T = 2.0;
    const double mean = T * marks.total_mass() / eps;  // 30
    double sum = 0.0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        const auto s = sample_prm(marks, eps, T, 11, r);
        for (std::size_t i = 1; i < s.events.size(); ++i) REQUIRE(s.events[i - 1].time <= s.events[i].time);
        for (const auto& e : s.events) {
            REQUIRE(e.time >= 0.0);
            REQUIRE(e.time <= T);
        }
        sum += s.events.size();
    }
    CHECK(std::fabs(sum / reps - mean) <= 4.0 * std::sqrt(mean / reps));
}

TEST_CASE("same seed and stream replays, different stream differs") {
    const auto marks = two_atoms();
    CHECK(same(sample_prm(marks, 0.2, 1.0, 3, 4), sample_prm(marks, 0.2, 1.0, 3, 4)));
    CHECK_FALSE(same(sample_prm(marks, 0.2, 1.0, 3, 4), sample_prm(marks, 0.2, 1.0, 3, 5)));
}

TEST_CASE("event cap") {
    CHECK_THROWS_AS(sample_prm(two_atoms(), 1e-6, 1.0, 1, 0, 1000.0), ValidationError);
}

TEST_CASE("unit control thinning reproduces the plain measure") {
    const auto marks = two_atoms();
    for (std::uint64_t stream = 0; stream < 20; ++stream) {
        const auto plain = sample_prm(marks, 0.1, 1.0, 9, stream);
        const auto ctl = sample_controlled_prm(marks, 0.1, Control::constant(1.0, 1.0), 9, stream);
        CHECK(same(plain, ctl));
    }
}

TEST_CASE("thinned count mean") {
    const auto marks = two_atoms();
    // g = 2 on [0, 0.5), 0.5 on [0.5, 1]; atom cells
    Control g({0.0, 0.5, 1.0}, ZPartition::per_atom(2), {2.0, 3.0, 0.5, 0.25});
    const double eps = 0.2;
    double expect = 0.0;
    for (std::size_t tc = 0; tc < 2; ++tc) {
        expect += 0.5 * (g.at(tc, 0) * 1.0 + g.at(tc, 1) * 0.5) / eps;
    }
    double sum = 0.0, rejected = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        const auto t = thin_prm(marks, eps, g, 21, r);
        for (const auto& e : t.kept.events) REQUIRE(e.aux_r < g(e.time, e.mark));
        for (const auto& e : t.rejected.events) REQUIRE(e.aux_r >= g(e.time, e.mark));
        sum += t.kept.events.size();
        rejected += t.rejected.events.size();
    }
    CHECK(std::fabs(sum / reps - expect) <= 4.0 * std::sqrt(expect / reps));
    CHECK(rejected > 0.0);
}

TEST_CASE("girsanov log density closed form") {
    const auto marks = two_atoms();
    Control g({0.0, 0.5, 1.0}, ZPartition::per_atom(2), {2.0, 3.0, 0.5, 0.25});
    JumpStream s;
    s.horizon = 1.0;
    s.events = {{0.1, Mark{0, 1.0}, 0.0}, {0.7, Mark{1, -1.0}, 0.0}};
    const double eps = 0.5;
    // compensator: Σ cells (g - 1) ν(z cell) |time cell|
    const double comp = 0.5 * ((2.0 - 1.0) * 1.0 + (3.0 - 1.0) * 0.5) + 0.5 * ((0.5 - 1.0) * 1.0 + (0.25 - 1.0) * 0.5);
    const double expect = -std::log(2.0) - std::log(0.25) + comp / eps;
    CHECK(girsanov_log_density(s, g, eps, marks, 1.0) == doctest::Approx(expect).epsilon(1e-13));
    // partial horizon stops at t
    const double part = -std::log(2.0) + 0.3 * ((2.0 - 1.0) * 1.0 + (3.0 - 1.0) * 0.5) / eps;
    CHECK(girsanov_log_density(s, g, eps, marks, 0.3) == doctest::Approx(part).epsilon(1e-13));
    CHECK(girsanov_log_density(s, Control::constant(1.0, 1.0), eps, marks, 1.0) == 0.0);
}

TEST_CASE("importance weights have unit mean") {
    const auto marks = MarkSpace::discrete({{1.0, 1.0}});
    const auto g = Control::constant(1.0, 2.0);
    const double eps = 0.5;
    double sum = 0.0, sq = 0.0;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) {
        const auto s = sample_controlled_prm(marks, eps, g, 33, r);
        const double w = std::exp(girsanov_log_density(s, g, eps, marks, 1.0));
        sum += w;
        sq += w * w;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / reps);
    CHECK(std::fabs(mean - 1.0) <= 4.0 * se);
}

TEST_CASE("control lookup and averages") {
    Control g({0.0, 0.25, 1.0}, ZPartition::single(), {2.0, 4.0});
    CHECK(g(0.0, Mark{}) == 2.0);
    CHECK(g(0.25, Mark{}) == 4.0);
    CHECK(g(1.0, Mark{}) == 4.0);
    double avg = 0.0;
    g.time_average(0.0, 0.5, std::span<double>(&avg, 1));
    CHECK(avg == doctest::Approx(3.0));
    std::vector<double> frac(2, 0.0);
    g.overlap_fractions(0.0, 0.5, frac);
    CHECK(frac[0] == doctest::Approx(0.5));
    CHECK(frac[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(Control({0.0, 1.0}, ZPartition::single(), {-1.0}), ValidationError);
    CHECK_THROWS_AS(Control({0.0, 1.0, 0.5}, ZPartition::single(), {1.0, 1.0}), ValidationError);
}

TEST_CASE("partitions") {
    const auto d = MarkSpace::density([](double) { return 2.0; }, 0.0, 1.0);
    const auto p = ZPartition::intervals({0.0, 0.25, 1.0});
    CHECK(p.size() == 2);
    CHECK(p.cell_of(Mark{kNoAtom, 0.1}) == 0);
    CHECK(p.cell_of(Mark{kNoAtom, 0.9}) == 1);
    const auto m = p.cell_masses(d);
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(m[1] == doctest::Approx(1.5));
    const auto a = ZPartition::atom_cells({1, 0, 1});
    CHECK(a.size() == 2);
    const auto masses = a.cell_masses(MarkSpace::discrete({{0.0, 1.0}, {1.0, 2.0}, {2.0, 4.0}}));
    CHECK(masses[0] == 2.0);
    CHECK(masses[1] == 5.0);
    CHECK_THROWS_AS(ZPartition::per_atom(3).check(two_atoms()), ValidationError);
}

TEST_CASE("control file round trip") {
    Control g({0.0, 0.3, 1.0}, ZPartition::atom_cells({0, 1}), {0.1, 2.5, 1.0 / 3.0, 7.0});
    std::stringstream ss;
    write_control(ss, g);
    const Control back = read_control(ss);
    CHECK(back.partition() == g.partition());
    REQUIRE(back.cells() == g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) CHECK(back.values()[i] == g.values()[i]);
    for (std::size_t i = 0; i < g.t_knots().size(); ++i) CHECK(back.t_knots()[i] == g.t_knots()[i]);

    std::istringstream bad("ldpspde-control v1\nt_knots: 0 1\nz_partition: single\nvalues:\nabc\n");
    CHECK_THROWS_AS(read_control(bad), ValidationError);
}

TEST_CASE("stream file round trip") {
    const auto s = sample_prm(two_atoms(), 0.1, 1.0, 5, 0);
    std::stringstream ss;
    write_stream_csv(ss, s);
    const auto back = read_stream_csv(ss, s.horizon, s.intensity_scale);
    CHECK(same(s, back));
}

TEST_CASE("admissible restriction") {
    Control g({0.0, 1.0}, ZPartition::per_atom(3), {0.01, 1.5, 100.0});
    CHECK_FALSE(is_admissible(g, 4));
    const auto r = restrict_to_admissible(g, 4);
    CHECK(r.values()[0] == 0.25);
    CHECK(r.values()[1] == 1.5);
    CHECK(r.values()[2] == 4.0);
    CHECK(is_admissible(r, 4));
    const auto c = restrict_to_admissible(g, 4, {true, true, false});
    CHECK(c.values()[2] == 1.0);
}
