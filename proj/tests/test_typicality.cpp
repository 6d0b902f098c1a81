#include <doctest.h>

#include <map>
#include <set>

#include "privkey/typicality.hpp"

using namespace privkey;

namespace {

SourceSpec paper_spec() { return SourceSpec({"a", "b", "c", "d"}, std::vector<Rational>(4, Rational(1, 4)), 9, Rational(7, 9)); }

SourceSpec binary(int n, const std::string& delta, const std::string& p0 = "1/2", const std::string& p1 = "1/2") {
    return SourceSpec::from_strings({"0", "1"}, {p0, p1}, n, delta);
}

// Membership by direct frequency comparison in exact arithmetic.
bool typical_oracle(const Seq& s, const SourceSpec& spec) {
    std::vector<int> c(spec.k(), 0);
    for (int x : s) ++c[x];
    for (int a = 0; a < spec.k(); ++a) {
        Rational dev = Rational(c[a], spec.n) - spec.probs[a];
        if (dev < 0) dev = -dev;
        if (dev > spec.delta * spec.probs[a]) return false;
    }
    return true;
}

std::vector<Seq> all_sequences(int n, int k) {
    std::vector<Seq> out;
    Seq s(n, 0);
    while (true) {
        out.push_back(s);
        int i = n - 1;
        while (i >= 0 && s[i] == k - 1) s[i--] = 0;
        if (i < 0) break;
        ++s[i];
    }
    return out;
}

}  // namespace

TEST_CASE("rational parsing") {
    CHECK(parse_rational("3/4") == Rational(3, 4));
    CHECK(parse_rational("0.25") == Rational(1, 4));
    CHECK(parse_rational("1e-3") == Rational(1, 1000));
    CHECK(parse_rational("7") == Rational(7));
    CHECK_THROWS(parse_rational("x"));
    CHECK_THROWS(parse_rational("1/0"));
    CHECK(rational_from_double(0.375) == Rational(3, 8));
}

TEST_CASE("sequence types") {
    auto spec = SourceSpec::from_strings({"a", "b"}, {"1/2", "1/2"}, 3, "1");
    auto t = sequence_type(spec.parse_sequence("aab"), spec);
    CHECK(t[0] == Rational(2, 3));
    CHECK(t[1] == Rational(1, 3));
    auto p = paper_spec();
    auto pt = sequence_type(p.parse_sequence("bccbdbaac"), p);
    CHECK(pt == std::vector<Rational>{Rational(2, 9), Rational(3, 9), Rational(3, 9), Rational(1, 9)});
    auto u = sequence_type(p.parse_sequence("abcdabcd") , SourceSpec(p.alphabet, p.probs, 8, p.delta));
    for (const auto& x : u) CHECK(x == Rational(1, 4));
    CHECK_THROWS(p.parse_sequence("abcx"));
}

TEST_CASE("typical set enumeration") {
    auto t = enumerate_typical_set(binary(2, "1/2"));
    REQUIRE(t.size() == 2);
    CHECK(t.spec.format_sequence(t.member(0)) == "01");
    CHECK(t.spec.format_sequence(t.member(1)) == "10");
    CHECK(t.mass == Rational(1, 2));

    auto skew = SourceSpec::from_strings({"0", "1"}, {"1/4", "3/4"}, 4, "3");
    CHECK(exactness_delta(skew) == Rational(3));
    auto full = enumerate_typical_set(skew);
    CHECK(full.size() == 16);
    CHECK(full.mass == Rational(1));

    auto p = paper_spec();
    CHECK(p.is_typical(p.parse_sequence("bccbdbaac")));
    CHECK(p.is_typical(p.parse_sequence("cbbccdadc")));
    CHECK_THROWS(enumerate_typical_set(SourceSpec::from_strings({"0", "1"}, {"1/2", "1/2"}, 30, "1/2")));
}

TEST_CASE("membership, mass and size agree with brute force") {
    for (const auto& spec : {binary(7, "1/3", "1/3", "2/3"), binary(10, "1/5"),
                             SourceSpec::from_strings({"a", "b", "c"}, {"1/2", "1/4", "1/4"}, 6, "1/2")}) {
        auto t = enumerate_typical_set(spec);
        std::set<Seq> members;
        Rational mass = 0;
        for (const auto& s : all_sequences(spec.n, spec.k()))
            if (typical_oracle(s, spec)) {
                members.insert(s);
                Rational p = 1;
                for (int x : s) p *= spec.probs[x];
                mass += p;
            }
        REQUIRE(t.size() == members.size());
        std::size_t i = 0;
        for (const auto& s : members) CHECK(t.member(i++) == s);
        CHECK(t.mass == mass);
        CHECK(typical_mass(spec) == mass);
        CHECK(typical_size(spec) == BigInt(members.size()));
    }
}

TEST_CASE("size bounds and mass trend") {
    for (int n = 1; n <= 14; ++n) {
        auto r = check_size_bounds(enumerate_typical_set(binary(n, "1/5")));
        CHECK(r.upperHolds);
    }
    auto r12 = check_size_bounds(enumerate_typical_set(binary(12, "1/2")));
    CHECK(r12.size <= std::exp2(12 * 1.5));
    CHECK(r12.upperHolds);
    // the count lattice makes the mass a sawtooth; within n = 0 mod 4 it rises
    Rational prev = 0;
    for (int n = 4; n <= 24; n += 4) {
        auto m = typical_mass(binary(n, "1/2"));
        CHECK(m >= prev);
        prev = m;
    }
    CHECK(typical_mass(binary(6, "1/2")) < typical_mass(binary(4, "1/2")));
    CHECK(typical_mass(binary(14, "1/5")) == Rational(4719, 8192));
}

TEST_CASE("mismatch count and L_max") {
    auto p = paper_spec();
    auto s = p.parse_sequence("bccbdbaac"), sHat = p.parse_sequence("cbbccdadc");
    CHECK(f_mismatch(s, s) == 0);
    CHECK(f_mismatch(s, sHat) == 4);
    CHECK(l_max(9, Rational(7, 9)) == 14);
    CHECK_THROWS(f_mismatch(s, Seq{0, 1}));
    for (int n = 1; n <= 8; ++n) {
        auto spec = binary(n, "1/4");
        auto t = enumerate_typical_set(spec);
        int worst = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = 0; j < t.size(); ++j) worst = std::max(worst, f_mismatch(t.member(i), t.member(j)));
        CHECK(worst <= l_max(n, spec.delta));
    }
}

TEST_CASE("permutation plan on the worked example") {
    auto p = paper_spec();
    auto s = p.parse_sequence("bccbdbaac"), sHat = p.parse_sequence("cbbccdadc");
    auto plan = build_permutation_plan(s, sHat, p);
    CHECK(plan.f == 4);
    CHECK(plan.m == 2);
    CHECK(plan.lMax == 14);
    int bots = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (plan.sCor[i] == kBot) ++bots;
        else CHECK(plan.sCor[i] == s[i]);
    }
    CHECK(bots == plan.m);
    for (int t = 0; t < plan.m; ++t) CHECK(plan.sErr[t] == sHat[plan.leftoverIdx[t]]);
    for (int t = plan.m; t < plan.lMax; ++t) CHECK(plan.sErr[t] == kBot);
    CHECK(plan.apply_to_layout() == plan.target_layout());
    // blocks with the inserted symbols put back reproduce s
    Seq rebuilt;
    for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
        rebuilt.insert(rebuilt.end(), plan.blocks[b].begin(), plan.blocks[b].end());
        if (b < plan.insertIdx.size()) rebuilt.push_back(s[plan.insertIdx[b]]);
    }
    CHECK(rebuilt == s);
}

TEST_CASE("permutation plan identity case and exhaustive layout") {
    auto spec = binary(6, "1/3");
    auto t = enumerate_typical_set(spec);
    auto same = build_permutation_plan(t.member(0), t.member(0), spec);
    CHECK(same.f == 0);
    CHECK(same.sCor == t.member(0));
    for (int x : same.sErr) CHECK(x == kBot);
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j) {
            auto plan = build_permutation_plan(t.member(i), t.member(j), spec);
            CHECK(plan.apply_to_layout() == plan.target_layout());
            std::set<int> d(plan.dest.begin(), plan.dest.end());
            CHECK(d.size() == plan.dest.size());
        }
    CHECK_THROWS(build_permutation_plan(Seq(6, 0), t.member(0), spec));
}

TEST_CASE("codec roundtrip and length") {
    auto empty = std::make_shared<const TypicalSet>(enumerate_typical_set(binary(2, "1/2", "1/4", "3/4")));
    CHECK_THROWS(Codec(empty));
    for (int n = 4; n <= 12; n += 2) {
        auto t = std::make_shared<const TypicalSet>(enumerate_typical_set(binary(n, "1/2", "1/4", "3/4")));
        Codec c(t);
        CHECK(c.encode(t->member(0)) == std::vector<int>(c.length(), 0));
        std::set<std::vector<int>> seen;
        for (std::size_t i = 0; i < t->size(); ++i) {
            auto cw = c.encode(t->member(i));
            REQUIRE(cw.has_value());
            CHECK(seen.insert(*cw).second);
            CHECK(c.decode(*cw) == t->member(i));
        }
        const double rate = t->spec.entropy_bits();
        CHECK(c.length() == static_cast<int>(std::ceil(n * (rate + c.eta()) - 1e-9)));
        CHECK(std::pow(2.0, c.length()) >= static_cast<double>(t->size()));
    }
    auto t = std::make_shared<const TypicalSet>(enumerate_typical_set(binary(4, "1/2")));
    Codec c(t, 0.0);
    CHECK(c.length() == 4);
    CHECK_FALSE(c.encode(Seq{0, 0, 0, 0}).has_value());
    CHECK_FALSE(c.decode(c.digits_of(c.codeword_count() - 1)).has_value());
    CHECK_THROWS(Codec(t, 0.5));
}

TEST_CASE("beta map on n=2 matches the digit-wise table") {
    auto t = std::make_shared<const TypicalSet>(enumerate_typical_set(binary(2, "1")));
    REQUIRE(t->size() == 4);
    Codec c(t, 0.0);
    REQUIRE(c.length() == 2);
    for (const auto& x : all_sequences(2, 2)) {
        BetaMap b(c, x);
        for (const auto& s : all_sequences(2, 2)) {
            Seq expect = {((x[0] - s[0]) % 2 + 2) % 2, ((x[1] - s[1]) % 2 + 2) % 2};
            CHECK(b.apply(s) == expect);
            CHECK(b.inverse(expect) == s);
        }
    }
}

TEST_CASE("beta map is a bijection for every announced word") {
    for (int n = 2; n <= 8; ++n) {
        auto t = std::make_shared<const TypicalSet>(enumerate_typical_set(binary(n, "1/2")));
        Codec c(t);
        for (std::uint64_t xr = 0; xr < c.codeword_count(); ++xr) {
            BetaMap b(c, c.digits_of(xr));
            std::set<std::uint64_t> img;
            for (std::uint64_t r = 0; r < c.codeword_count(); ++r) {
                const auto y = b.apply_rank(r);
                img.insert(y);
                CHECK(b.apply_rank(y) == r);
            }
            CHECK(img.size() == c.codeword_count());
            for (std::size_t i = 0; i < t->size(); ++i)
                if (auto y = b.apply(t->member(i))) CHECK(b.inverse(*y) == t->member(i));
        }
    }
}
