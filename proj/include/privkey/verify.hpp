#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "privkey/dilution.hpp"
#include "privkey/divergences.hpp"
#include "privkey/serialize.hpp"

namespace privkey {

struct VerifyOptions {
    std::uint64_t seed = 1;
    int jobs = 1;
    Fault fault = Fault::none;  // injected into every dilution run
    std::vector<int> criteria;  // empty: all
};

struct VerifyCheck {
    std::string name;
    int criterion = 0;
    double tolerance = 0.0;
    bool informational = false;  // reported, excluded from the verdict
};

struct VerifySuite {
    std::uint64_t seed = 0;
    std::vector<VerifyCheck> checks;
    std::vector<BoundReport> results;  // one per check

    bool passed() const;
    bool criterion_passed(int criterion) const;
    std::vector<std::string> failures() const;
    json to_json() const;
};

VerifySuite run_verify_suite(const VerifyOptions& opt);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; results are indexed, so scheduling never shows.
void parallel_for_each(int count, int jobs, const std::function<void(int)>& fn);

// Classical hypothesis-testing optimum min { t.q : t.p >= 1 - eps, 0 <= t <= 1 } by vertex enumeration.
double classical_np_beta(const std::vector<double>& p, const std::vector<double>& q, double epsilon);

// Configuration used by the dilution checks: flower shield with a non-Hermitian twist.
GeneralizedPrivateState verify_flower_state(const std::vector<double>& lambda);
// Scalar shield, twist blocks are phases.
GeneralizedPrivateState verify_phase_state(const std::vector<double>& lambda);

}  // namespace privkey
