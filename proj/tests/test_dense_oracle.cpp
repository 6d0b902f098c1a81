#include <doctest.h>

#include "privkey/dense_oracle.hpp"
#include "privkey/verify.hpp"

using namespace privkey;

TEST_CASE("per-step dense application agrees with the symbolic records") {
    for (int n = 1; n <= 2; ++n) {
        auto cfg = ProtocolConfig::from_state(verify_flower_state({0.7, 0.3}), n, Rational(3));
        auto r = dense_oracle_run(cfg, OracleScope::per_step);
        CHECK_FALSE(r.steps.empty());
        for (const auto& s : r.steps) CHECK(s.maxDistance <= 1e-10);
        CHECK(r.ancillaRestored);
    }
}

TEST_CASE("end-to-end dense run reproduces the target") {
    for (int n = 1; n <= 2; ++n) {
        auto cfg = ProtocolConfig::from_state(verify_phase_state({0.5, 0.5}), n, Rational(1));
        auto r = dense_oracle_run(cfg, OracleScope::end_to_end);
        CHECK(r.distanceToTarget <= 1e-8);
        CHECK(r.distanceToSymbolic <= 1e-8);
        CHECK(r.abortMass == doctest::Approx(0).epsilon(1e-15));
        CHECK(r.ancillaRestored);
    }
    auto skew = ProtocolConfig::from_state(verify_phase_state({0.7, 0.3}), 2, Rational(3));
    CHECK(dense_oracle_run(skew, OracleScope::end_to_end).distanceToTarget <= 1e-8);
}

TEST_CASE("dense oracle exposes injected faults") {
    for (Fault f : {Fault::skip_tau2, Fault::wrong_tau1, Fault::skip_ipa_swap}) {
        auto cfg = ProtocolConfig::from_state(verify_flower_state({0.7, 0.3}), 2, Rational(3));
        cfg.fault = f;
        auto r = dense_oracle_run(cfg, OracleScope::per_step);
        double worst = 0;
        for (const auto& s : r.steps) worst = std::max(worst, s.maxDistance);
        CHECK((worst > 1e-6 || !r.ancillaRestored));
    }
}

TEST_CASE("ket distance") {
    SparseKet a{{{0}, cplx(1, 0)}}, b{{{1}, cplx(1, 0)}};
    CHECK(ket_distance(a, a) == doctest::Approx(0).epsilon(1e-15));
    CHECK(ket_distance(a, b) == doctest::Approx(1));
    SparseKet c{{{0}, cplx(std::sqrt(0.5), 0)}, {{1}, cplx(std::sqrt(0.5), 0)}};
    CHECK(ket_distance(a, c) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("capacity guards") {
    auto big = ProtocolConfig::from_state(verify_flower_state({0.7, 0.3}), 3, Rational(3));
    CHECK_THROWS(dense_oracle_run(big, OracleScope::per_step));
    auto shielded = ProtocolConfig::from_state(verify_flower_state({0.7, 0.3}), 2, Rational(3));
    CHECK_THROWS(dense_oracle_run(shielded, OracleScope::end_to_end));
    CHECK(oracle_scope_from_string("end_to_end") == OracleScope::end_to_end);
    CHECK_THROWS(oracle_scope_from_string("all"));
}
