#include <doctest.h>

#include "oracles.hpp"
#include "privkey/dilution.hpp"
#include "privkey/rng.hpp"
#include "privkey/verify.hpp"

using namespace privkey;

namespace {

RegisterState scalar_shield() { return RegisterState::pure(RegisterShape({1, 1}), Vec::Ones(1)); }

GeneralizedPrivateState bell_pbit() { return make_private_state(2, scalar_shield(), TwistingUnitary::trivial(2, 1), {1, 1}); }

DilutionReport run(const GeneralizedPrivateState& g, int n, Rational delta, Fault fault = Fault::none) {
    auto cfg = ProtocolConfig::from_state(g, n, delta);
    cfg.fault = fault;
    return run_protocol(cfg);
}

}  // namespace

TEST_CASE("twist words reduce and multiply in order") {
    TwistWord w;
    word_push(w, 1);
    word_push(w, 2);
    word_push(w, -2);
    CHECK(w == TwistWord{1});
    word_push(w, -1);
    CHECK(w.empty());
    Rng rng(3);
    TwistingUnitary tw({random_unitary(2, rng), random_unitary(2, rng)});
    TwistWord v{1, -2};
    Mat expect = tw.blocks[1].adjoint() * tw.blocks[0];
    CHECK((word_matrix(v, tw) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("resource private state") {
    auto cfg = ProtocolConfig::from_state(bell_pbit(), 1, Rational(1));
    ProtocolContext ctx(cfg);
    auto r = build_resource_state(ctx);
    CHECK(r.dn == 2);
    CHECK(r.L == 1);
    REQUIRE(r.labels.size() == 2);
    CHECK(r.labels[0] == Seq{0});
    CHECK(r.labels[1] == Seq{1});
    auto dense = r.dense(cfg.twist);
    Vec phi = make_max_entangled(2).ket();
    CHECK((dense.expanded().rho() - Mat(phi * phi.adjoint())).cwiseAbs().maxCoeff() < 1e-12);

    auto f = verify_flower_state({0.5, 0.5});
    auto fcfg = ProtocolConfig::from_state(f, 2, Rational(1));
    ProtocolContext fctx(fcfg);
    auto fr = build_resource_state(fctx).dense(fcfg.twist);
    CHECK(fr.dk() == static_cast<int>(fctx.dn));
    CHECK(check_strict_irreducibility(fr) != IrreducibilityVerdict::entangled_conditional);
}

TEST_CASE("target power matches a direct tensor product") {
    auto g = verify_phase_state({0.3, 0.7});
    Mat one = target_power(g, 1);
    CHECK((one - g.expanded().rho()).cwiseAbs().maxCoeff() < 1e-14);
    // two copies over (A1 B1 A'1 B'1 A2 B2 A'2 B'2) -> (A1 A2 B1 B2 A'1 A'2 B'1 B'2)
    Mat two = oracle::kron(one, one);
    const std::vector<int> one_dims = g.shape().dims;
    std::vector<int> dims = one_dims;
    dims.insert(dims.end(), one_dims.begin(), one_dims.end());
    Mat reordered = permute_matrix(two, dims, {0, 4, 1, 5, 2, 6, 3, 7});
    CHECK((target_power(g, 2) - reordered).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("exactness regime end to end") {
    auto r = run(bell_pbit(), 2, Rational(1));
    CHECK(r.traceDistanceToTarget <= 1e-8);
    CHECK(r.ancillaRestored);
    CHECK(r.xIndependent);
    CHECK(r.labelExact);
    CHECK(r.failureProbability == doctest::Approx(0).epsilon(1e-15));
    for (int n = 1; n <= 4; ++n) {
        auto f = run(verify_flower_state({0.7, 0.3}), n, Rational(3));
        CHECK(f.labelExact);
        CHECK(f.ancillaRestored);
        CHECK(f.xIndependent);
        CHECK(f.keyMatrixDistance >= 0);
        CHECK(f.keyMatrixDistance <= 1e-9);
        CHECK(f.typicalMass == doctest::Approx(1));
    }
    auto p = run(verify_phase_state({0.5, 0.25, 0.25}), 2, Rational(3));
    CHECK(p.keyMatrixDistance <= 1e-9);
    CHECK(p.traceDistanceToTarget <= 1e-8);
}

TEST_CASE("typical regime reports the abort branch and the closeness bound") {
    auto spec = SourceSpec({"0", "1"}, {Rational(1, 2), Rational(1, 2)}, 4, Rational(1, 2));
    auto r = run(verify_phase_state({0.5, 0.5}), 4, Rational(1, 2));
    const double eps = 1.0 - to_double(typical_mass(spec));
    CHECK(r.typicalMass == doctest::Approx(1 - eps));
    CHECK(r.failureProbability <= eps + 1e-12);
    CHECK(r.comparison.epsN == doctest::Approx(eps));
    CHECK(r.comparison.closenessHolds);
    CHECK(r.ancillaRestored);
    // overflow codewords are the only source of x dependence and wrong labels
    CHECK(r.overflowMass > 0);
    CHECK_FALSE(r.xIndependent);
    auto cfg = ProtocolConfig::from_state(verify_phase_state({0.5, 0.5}), 4, Rational(1, 2));
    ProtocolContext ctx(cfg);
    auto audit = audit_records(ctx, run_all_steps(ctx));
    CHECK(audit.mismatchMass == doctest::Approx(audit.overflowMass));
    CHECK(r.traceDistanceToTarget <= r.distanceToTypical + 2 * std::sqrt(eps) + 1e-9);
}

TEST_CASE("key and ebit accounting") {
    const double h = oracle::binary_entropy(0.25);
    for (int n = 4; n <= 8; ++n) {
        auto r = run(verify_phase_state({0.25, 0.75}), n, Rational(1, 2));
        const double rate = r.keyBitsConsumed / n;
        CHECK(rate >= h - 1e-12);
        CHECK(rate <= h + r.eta + 2.0 / n + 1e-12);
        CHECK(r.keyBitsConsumed == doctest::Approx(r.L * 1.0));
        CHECK(r.ebits.cells == 2 * l_max(n, Rational(1, 2)));
        CHECK(r.ebits.nominal == 2 * n);
    }
}

TEST_CASE("step sequence keeps branches and restores ancillas") {
    auto cfg = ProtocolConfig::from_state(verify_flower_state({0.5, 0.5}), 2, Rational(1));
    ProtocolContext ctx(cfg);
    std::vector<Step> seen;
    auto fin = run_all_steps(ctx, [&](Step s, const ProtocolState&) { seen.push_back(s); });
    CHECK(seen == all_steps());
    REQUIRE(fin.measured);
    CHECK(fin.outcomes.size() == ctx.dn);
    auto audit = audit_records(ctx, fin);
    CHECK(audit.ancillaRestored);
    CHECK(audit.labelExact);
    CHECK(audit.failures.empty());
    const PartyRegisters init = initial_party(ctx);
    for (const auto& o : fin.outcomes)
        for (const auto& rec : o.records) {
            CHECK(rec.alice.sHat == init.sHat);
            CHECK(rec.alice.sOut == init.sOut);
            CHECK(rec.bob.tele == init.tele);
        }
    CHECK(step_from_string(to_string(Step::PEC)) == Step::PEC);
    CHECK_THROWS(step_from_string("S7"));
}

TEST_CASE("injected faults are caught") {
    auto g = verify_flower_state({0.7, 0.3});
    for (Fault f : {Fault::skip_tau2, Fault::wrong_tau1, Fault::skip_ipa_swap}) {
        auto r = run(g, 2, Rational(3), f);
        const bool clean = r.labelExact && r.ancillaRestored && r.keyMatrixDistance >= 0 && r.keyMatrixDistance <= 1e-9;
        CHECK_FALSE(clean);
    }
    CHECK(fault_from_string("skip_tau2") == Fault::skip_tau2);
    CHECK_THROWS(fault_from_string("nonsense"));
}

TEST_CASE("configuration validation") {
    auto cfg = ProtocolConfig::from_state(bell_pbit(), 2, Rational(1));
    cfg.n = 0;
    CHECK_THROWS(run_protocol(cfg));
    auto empty = ProtocolConfig::from_state(verify_phase_state({0.25, 0.75}), 2, Rational(1, 2));
    CHECK_THROWS(run_protocol(empty));
    CHECK(backend_from_string("dense") == Backend::dense);
    CHECK_THROWS(backend_from_string("gpu"));
}
