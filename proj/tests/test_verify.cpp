#include <doctest.h>

#include <atomic>

#include "oracles.hpp"
#include "privkey/rng.hpp"
#include "privkey/verify.hpp"

using namespace privkey;

TEST_CASE("vertex-enumeration beta matches the greedy optimum") {
    Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        auto p = random_probs(4, rng), q = random_probs(4, rng);
        const double eps = 0.5 * rng.uniform();
        CHECK(std::abs(classical_np_beta(p, q, eps) - oracle::classical_beta_greedy(p, q, eps)) < 1e-12);
    }
    CHECK(classical_np_beta({0.5, 0.5}, {0.5, 0.5}, 0.0) == doctest::Approx(1));
}

TEST_CASE("parallel_for_each covers every index once") {
    for (int jobs : {1, 2, 8}) {
        std::vector<std::atomic<int>> hits(100);
        parallel_for_each(100, jobs, [&](int i) { ++hits[i]; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS(parallel_for_each(10, 4, [](int i) {
        if (i == 7) throw std::runtime_error("boom");
    }));
}

TEST_CASE("seed derivation is scheduling independent") {
    CHECK(derive_seed(1, 5) == derive_seed(1, 5));
    CHECK(derive_seed(1, 5) != derive_seed(1, 6));
    CHECK(derive_seed(1, 5) != derive_seed(2, 5));
}

TEST_CASE("suite subsets pass and serialize") {
    VerifyOptions opt;
    opt.criteria = {7, 8, 9};
    auto s = run_verify_suite(opt);
    CHECK(s.passed());
    CHECK(s.criterion_passed(8));
    CHECK(s.failures().empty());
    for (const auto& c : s.checks) CHECK((c.criterion >= 7 && c.criterion <= 9));
    auto j = s.to_json();
    CHECK(j["checks"].size() == s.checks.size());
    CHECK(j["results"].size() == s.results.size());
    opt.jobs = 4;
    CHECK(run_verify_suite(opt).to_json().dump() == j.dump());
}

TEST_CASE("typical mass threshold is reported but informational") {
    VerifyOptions opt;
    opt.criteria = {11};
    auto s = run_verify_suite(opt);
    CHECK(s.passed());
    CHECK_FALSE(s.criterion_passed(11));
}

TEST_CASE("faults turn the dilution checks red") {
    VerifyOptions opt;
    opt.criteria = {5};
    opt.fault = Fault::skip_tau2;
    auto s = run_verify_suite(opt);
    CHECK_FALSE(s.passed());
    CHECK_FALSE(s.failures().empty());
}
