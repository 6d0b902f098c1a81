#include <doctest.h>

#include "oracles.hpp"
#include "privkey/dilution.hpp"
#include "privkey/verify.hpp"

using namespace privkey;

namespace {

Ensemble two_members() {
    auto g0 = verify_phase_state({0.5, 0.5});
    auto g1 = verify_phase_state({0.8, 0.2});
    return {{0.5, g0}, {0.5, g1}};
}

}  // namespace

TEST_CASE("two-member ensemble on 2x2") {
    auto e = two_members();
    // delta = 4 is the exactness threshold for (0.8, 0.2)
    auto r = formation_protocol_run(e, 2, Rational(1), {{Rational(1), -1.0}, {Rational(4), -1.0}});
    CHECK(r.exact);
    CHECK(r.mixtureDistance <= 1e-6);
    CHECK(r.rateWithinBound);
    CHECK(r.rate <= r.rateBound + 1e-12);
    CHECK(r.kfValue == doctest::Approx(0.5 * 1.0 + 0.5 * oracle::binary_entropy(0.2)));
    REQUIRE(r.lPlus.size() == 2);
    // l+ = ceil(n p (1 + delta0)) = ceil(2 * 0.5 * 2)
    CHECK(r.lPlus[0] == 2);
    CHECK(r.lPlus[1] == 2);
    CHECK(r.components.size() == 2);
    CHECK(r.successProbability > 0);
}

TEST_CASE("singleton ensemble reduces to one dilution run") {
    auto g = verify_phase_state({0.5, 0.5});
    auto r = formation_protocol_run({{1.0, g}}, 2, Rational(1), {{Rational(1), -1.0}});
    REQUIRE(r.components.size() == 1);
    auto single = run_protocol(ProtocolConfig::from_state(g, r.lPlus[0], Rational(1)));
    CHECK(r.components[0].keyBitsConsumed == doctest::Approx(single.keyBitsConsumed));
    CHECK(r.traceDistance <= 1e-8);
}

TEST_CASE("formation input validation") {
    auto e = two_members();
    Ensemble three = {{0.4, e[0].second}, {0.3, e[1].second}, {0.3, e[0].second}};
    CHECK_THROWS(formation_protocol_run(three, 2, Rational(1), std::vector<ComponentConfig>(3)));
    CHECK_THROWS(formation_protocol_run(e, 2, Rational(1), {ComponentConfig{}}));
    CHECK_THROWS(formation_protocol_run(e, 0, Rational(1), std::vector<ComponentConfig>(2)));
    CHECK_THROWS(formation_protocol_run(e, 8, Rational(1), std::vector<ComponentConfig>(2)));
}
