#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "privkey/states.hpp"
#include "privkey/tensor.hpp"

namespace privkey {

enum class DivergenceMethod { closed_form, eigendecomposition, neyman_pearson, certificate };
std::string to_string(DivergenceMethod m);

struct DivergenceResult {
    double value = 0.0;
    bool infinite = false;
    DivergenceMethod method = DivergenceMethod::eigendecomposition;

    static DivergenceResult finite(double v, DivergenceMethod m) { return {v, false, m}; }
    static DivergenceResult infinity(DivergenceMethod m) { return {std::numeric_limits<double>::infinity(), true, m}; }
};

DivergenceResult relative_entropy(const Mat& rho, const Mat& sigma);
DivergenceResult relative_entropy(const RegisterState& rho, const RegisterState& sigma);
DivergenceResult sandwiched_renyi(const Mat& rho, const Mat& sigma, double alpha);
DivergenceResult sandwiched_renyi(const RegisterState& rho, const RegisterState& sigma, double alpha);
DivergenceResult max_relative_entropy(const Mat& rho, const Mat& sigma);
DivergenceResult max_relative_entropy(const RegisterState& rho, const RegisterState& sigma);
DivergenceResult min_relative_entropy(const Mat& rho, const Mat& sigma);
DivergenceResult min_relative_entropy(const RegisterState& rho, const RegisterState& sigma);

// Optimal test for the eps-hypothesis-testing divergence.
struct NeymanPearsonTest {
    DivergenceResult result;
    double beta = 0.0;       // inf Tr[Lambda sigma]
    double threshold = 0.0;  // optimal mu in Lambda = P(mu rho - sigma > 0) + c P(= 0)
    double fraction = 0.0;   // c
    Mat lambda;              // primal test
    double primalBeta = 0.0; // Tr[lambda sigma]
    double typeOne = 0.0;    // Tr[lambda rho]
};

NeymanPearsonTest neyman_pearson_test(const Mat& rho, const Mat& sigma, double epsilon);
DivergenceResult hypothesis_testing_divergence(const Mat& rho, const Mat& sigma, double epsilon);
DivergenceResult hypothesis_testing_divergence(const RegisterState& rho, const RegisterState& sigma, double epsilon);

// I(X;B) - I(X;E) after measuring subsystem 0 of rho over (A, B, E) in the given basis.
double devetak_winter_rate(const RegisterState& rhoABE, const std::vector<Vec>& basisA);
// Eve holds a purification of the expanded state; Alice measures A_key in {e_i}, Bob holds B_key B'.
double devetak_winter_rate(const GeneralizedPrivateState& g);

// Sum_k p_k S_{A_K}(gamma_k) for a validated ensemble of strictly irreducible members.
double kf_ensemble_value(const Ensemble& e, const RegisterState& target, double tol = 1e-9);

struct DualCertificate {
    double y = 0.0;
    Mat Y;
    double value = 0.0;
    bool feasible = false;
    double maxViolation = 0.0;  // largest eigenvalue of (y Phi+ - sigma_k) (x) rho - Y
};

// y = 1/d_k, Y = 0.
DualCertificate dual_certificate_value(int dk, const RegisterState& shield, double epsilon);
DualCertificate check_dual_certificate(int dk, const RegisterState& shield, double epsilon, double y, const Mat& Y);
// Dephased maximally entangled state (1/d) Sum |ii><ii|.
Mat dephased_max_entangled(int d);

struct BoundReport {
    std::string name;
    double lhs = 0.0, rhs = 0.0;
    bool satisfied = false;
    double slack = 0.0;  // rhs - lhs
    std::map<std::string, double> params;
};

BoundReport make_bound(std::string name, double lhs, double rhs, std::map<std::string, double> params = {},
                       double tol = 1e-9);

struct YieldCostReport {
    double correction = 0.0;  // log2 1/(1 - eps1 - eps2)
    double kcLower = 0.0, kcUpper = 0.0;
    std::vector<BoundReport> checks;
};

YieldCostReport yield_cost_bounds(int dk, double eps1, double eps2);

}  // namespace privkey
