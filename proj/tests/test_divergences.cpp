#include <doctest.h>

#include "oracles.hpp"
#include "privkey/divergences.hpp"
#include "privkey/rng.hpp"

using namespace privkey;

namespace {

Mat diag(const std::vector<double>& d) {
    Mat m = Mat::Zero(d.size(), d.size());
    for (size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Mat max_entangled_projector(int d) {
    Vec v = make_max_entangled(d).ket();
    return v * v.adjoint();
}

Mat bell_projector() { return max_entangled_projector(2); }

RegisterState scalar_shield() { return RegisterState::pure(RegisterShape({1, 1}), Vec::Ones(1)); }

Mat full_rank(int d, Rng& rng) {
    Mat r = random_density(d, rng).rho();
    return (0.9 * r + 0.1 * Mat::Identity(d, d) / double(d)).eval();
}

}  // namespace

TEST_CASE("relative entropy examples") {
    Rng rng(1);
    Mat r = full_rank(3, rng);
    CHECK(relative_entropy(r, r).value == doctest::Approx(0).epsilon(1e-12));
    CHECK(relative_entropy(diag({1, 0}), diag({0.5, 0.5})).value == doctest::Approx(1));
    auto inf = relative_entropy(diag({0.5, 0.5}), diag({1, 0}));
    CHECK(inf.infinite);
    for (int t = 0; t < 10; ++t) {
        Mat a = full_rank(4, rng), b = full_rank(4, rng);
        CHECK(std::abs(relative_entropy(a, b).value - oracle::relative_entropy(a, b)) < 1e-9);
    }
}

TEST_CASE("relative entropy to the ansatz equals the key entropy") {
    Rng rng(77);
    for (int t = 0; t < 10; ++t) {
        auto g = random_gsir(rng.integer(2, 3), 2, 1, rng);
        auto d = relative_entropy(g.expanded(), sigma_ansatz(g));
        CHECK_FALSE(d.infinite);
        CHECK(std::abs(d.value - oracle::shannon(g.key.coeffs)) < 1e-9);
    }
    auto f = make_flower_state(2, Mat::Identity(2, 2));
    CHECK(relative_entropy(f.expanded(), sigma_ansatz(f)).value == doctest::Approx(1).epsilon(1e-9));
}

TEST_CASE("sandwiched Renyi divergence") {
    Rng rng(2);
    Mat r = full_rank(3, rng);
    for (double a : {0.5, 0.9, 2.0}) CHECK(std::abs(sandwiched_renyi(r, r, a).value) < 1e-10);
    CHECK_THROWS(sandwiched_renyi(r, r, 1.0));
    for (int t = 0; t < 10; ++t) {
        Mat a = full_rank(4, rng), b = full_rank(4, rng);
        const double d = oracle::relative_entropy(a, b);
        const double lo = sandwiched_renyi(a, b, 0.999).value, hi = sandwiched_renyi(a, b, 1.001).value;
        CHECK(lo <= d + 1e-9);
        CHECK(hi >= d - 1e-9);
        CHECK(hi - lo < 1e-2);
        CHECK(sandwiched_renyi(a, b, 0.6).value <= sandwiched_renyi(a, b, 0.9).value + 1e-12);
    }
    CHECK(sandwiched_renyi(diag({0.5, 0.5}), diag({1, 0}), 2.0).infinite);
}

TEST_CASE("max and min relative entropy") {
    Rng rng(3);
    Mat r = full_rank(3, rng);
    CHECK(std::abs(max_relative_entropy(r, r).value) < 1e-10);
    CHECK(std::abs(min_relative_entropy(r, r).value) < 1e-10);
    CHECK(max_relative_entropy(diag({1, 0}), diag({0.5, 0.5})).value == doctest::Approx(1));
    for (int t = 0; t < 5; ++t) {
        Mat a = full_rank(3, rng), b = full_rank(3, rng);
        const double v = max_relative_entropy(a, b).value;
        CHECK(oracle::eigenvalues(Mat(std::pow(2.0, v) * b - a)).front() > -1e-9);
        CHECK(oracle::eigenvalues(Mat(std::pow(2.0, v - 0.01) * b - a)).front() < 0);
    }
    CHECK(max_relative_entropy(diag({0.5, 0.5}), diag({1, 0})).infinite);
    for (int d : {2, 3}) CHECK(min_relative_entropy(max_entangled_projector(d), dephased_max_entangled(d)).value ==
                               doctest::Approx(std::log2(d)));
}

TEST_CASE("hypothesis testing divergence") {
    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
        Mat a = random_density(4, rng, 2).rho(), b = full_rank(4, rng);
        CHECK(std::abs(hypothesis_testing_divergence(a, b, 0.0).value - min_relative_entropy(a, b).value) < 1e-9);
        double prev = -1;
        for (double e : {0.0, 0.1, 0.3, 0.6}) {
            const double v = hypothesis_testing_divergence(a, b, e).value;
            CHECK(v >= prev - 1e-9);
            prev = v;
        }
    }
    CHECK(hypothesis_testing_divergence(bell_projector(), dephased_max_entangled(2), 0.1).value ==
          doctest::Approx(1.0 - std::log2(0.9)).epsilon(1e-7));
    CHECK_THROWS(hypothesis_testing_divergence(bell_projector(), dephased_max_entangled(2), 1.0));
    CHECK_THROWS(hypothesis_testing_divergence(bell_projector(), dephased_max_entangled(2), -0.1));
}

TEST_CASE("Neyman-Pearson matches the classical greedy optimum on commuting pairs") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        auto p = random_probs(4, rng), q = random_probs(4, rng);
        const double eps = 0.4 * rng.uniform();
        auto test = neyman_pearson_test(diag(p), diag(q), eps);
        const double beta = oracle::classical_beta_greedy(p, q, eps);
        CHECK(std::abs(test.beta - beta) < 1e-9);
        CHECK(std::abs(test.primalBeta - beta) < 1e-9);
        CHECK(test.typeOne >= 1 - eps - 1e-9);
        CHECK(std::abs(test.result.value + std::log2(beta)) < 1e-9);
    }
}

TEST_CASE("data processing under partial trace") {
    Rng rng(6);
    for (int t = 0; t < 5; ++t) {
        Mat a = full_rank(8, rng), b = full_rank(8, rng);
        Mat ta = partial_trace_matrix(a, {2, 2, 2}, {0, 1}), tb = partial_trace_matrix(b, {2, 2, 2}, {0, 1});
        CHECK(relative_entropy(ta, tb).value <= relative_entropy(a, b).value + 1e-9);
        CHECK(hypothesis_testing_divergence(ta, tb, 0.1).value <= hypothesis_testing_divergence(a, b, 0.1).value + 1e-9);
        for (double al : {0.6, 2.0}) CHECK(sandwiched_renyi(ta, tb, al).value <= sandwiched_renyi(a, b, al).value + 1e-9);
    }
}

TEST_CASE("Devetak-Winter rate") {
    auto bell = make_private_state(2, scalar_shield(), TwistingUnitary::trivial(2, 1), {1, 1});
    CHECK(devetak_winter_rate(bell) == doctest::Approx(1).epsilon(1e-9));
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        auto g = random_gsir(rng.integer(2, 3), rng.integer(1, 2), rng.integer(1, 2), rng);
        CHECK(std::abs(devetak_winter_rate(g) - oracle::shannon(g.key.coeffs)) < 1e-8);
    }
    // classical correlations copied to E carry no key
    Vec ccc = Vec::Zero(8);
    ccc(0) = std::sqrt(0.3);
    ccc(7) = std::sqrt(0.7);
    auto rho = RegisterState::density(RegisterShape({2, 2, 2}), Mat(ccc * ccc.adjoint()));
    Vec e0 = Vec::Zero(2), e1 = Vec::Zero(2);
    e0(0) = e1(1) = 1.0;
    CHECK(std::abs(devetak_winter_rate(rho, {e0, e1})) < 1e-9);
}

TEST_CASE("key of formation for ensembles") {
    Rng rng(9);
    auto g = random_gsir(2, 2, 1, rng);
    auto target = alice_bob_form(g);
    CHECK(kf_ensemble_value({{1.0, g}}, target) == doctest::Approx(oracle::shannon(g.key.coeffs)).epsilon(1e-10));
    auto h = random_gsir(2, 1, 2, rng);
    Ensemble e1 = {{1.0, g}}, e2 = {{0.5, h}, {0.5, h}};
    auto prodT = product_target(target, {2, 2, 2, 1}, alice_bob_form(h), {2, 1, 2, 2});
    const double sum = kf_ensemble_value(e1, target) + kf_ensemble_value(e2, alice_bob_form(h));
    CHECK(std::abs(kf_ensemble_value(product_ensemble(e1, e2), prodT) - sum) < 1e-10);
    auto other = random_gsir(2, 2, 1, rng);
    CHECK_THROWS(kf_ensemble_value({{1.0, other}}, target));
}

TEST_CASE("dual certificate") {
    auto mixed = RegisterState::density(RegisterShape({2, 2}), Mat(Mat::Identity(4, 4) / 4.0));
    auto c = dual_certificate_value(2, mixed, 0.1);
    CHECK(c.value == doctest::Approx(0.45));
    CHECK(c.feasible);
    CHECK(dual_certificate_value(3, scalar_shield(), 1.0).value == doctest::Approx(0).epsilon(1e-15));
    auto bad = check_dual_certificate(2, scalar_shield(), 0.1, 1.0, Mat::Zero(4, 4));
    CHECK_FALSE(bad.feasible);
    CHECK(bad.maxViolation == doctest::Approx(0.5));
    // weak duality against the primal on SIR states
    Rng rng(10);
    for (int dk : {2, 3})
        for (int ds : {1, 2})
            for (double eps : {0.0, 0.1, 0.3}) {
                auto shield = RegisterState::density(RegisterShape({ds, 1}), random_density(ds, rng).rho());
                std::vector<Mat> blocks;
                for (int i = 0; i < dk; ++i) blocks.push_back(random_unitary(ds, rng));
                auto g = make_private_state(dk, shield, TwistingUnitary(blocks), {ds, 1});
                const double dh = hypothesis_testing_divergence(g.expanded(), sigma_ansatz(g), eps).value;
                CHECK(std::pow(2.0, -dh) >= (1 - eps) / dk - 1e-9);
                CHECK(dh <= std::log2(dk) - std::log2(1 - eps) + 1e-7);
            }
}

TEST_CASE("yield-cost bracket") {
    auto r0 = yield_cost_bounds(2, 0.0, 0.0);
    CHECK(r0.kcLower == doctest::Approx(1));
    CHECK(r0.kcUpper == doctest::Approx(1));
    auto r = yield_cost_bounds(2, 0.1, 0.1);
    CHECK(r.kcLower == doctest::Approx(1 + std::log2(0.9)));
    CHECK(r.kcLower == doctest::Approx(0.848).epsilon(1e-3));
    CHECK(r.correction == doctest::Approx(0.3219).epsilon(1e-4));
    for (const auto& b : r.checks) CHECK(b.satisfied);
    CHECK_THROWS(yield_cost_bounds(2, 0.5, 0.5));
}
