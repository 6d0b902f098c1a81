#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "privkey/tensor.hpp"

namespace privkey {

struct SchmidtState {
    std::vector<double> coeffs;  // probabilities lambda_a; amplitudes are their square roots
    Mat basisA;                  // columns e_a
    Mat basisB;                  // columns f_a

    SchmidtState() = default;
    SchmidtState(std::vector<double> coeffs, Mat basisA, Mat basisB);
    static SchmidtState computational(std::vector<double> coeffs);
    static SchmidtState maximally_entangled(int d);

    int count() const { return static_cast<int>(coeffs.size()); }
    int dim_a() const { return static_cast<int>(basisA.rows()); }
    int dim_b() const { return static_cast<int>(basisB.rows()); }
    double entropy() const;
    Vec ket() const;  // over (A, B)
    bool is_computational() const;
};

struct TwistingUnitary {
    int controlDim = 0;
    std::vector<Mat> blocks;  // U_i on the shield A'B'

    TwistingUnitary() = default;
    TwistingUnitary(std::vector<Mat> blocks, double tol = 1e-9);
    static TwistingUnitary trivial(int dk, int shieldDim);
    int shield_dim() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().rows()); }
};

struct GeneralizedPrivateState {
    SchmidtState key;
    RegisterState shield;  // density over (A', B')
    TwistingUnitary twist;
    std::pair<int, int> shieldSplit{1, 1};

    int dk() const { return key.count(); }
    int dim_key_a() const { return key.dim_a(); }
    int dim_key_b() const { return key.dim_b(); }
    int ds_a() const { return shieldSplit.first; }
    int ds_b() const { return shieldSplit.second; }
    // Dense form over (A_key, B_key, A', B').
    RegisterState expanded() const;
    RegisterShape shape() const;
    // Conditional shield block U_i rho U_i^dagger.
    Mat conditional_block(int i) const;
};

enum class IrreducibilityVerdict { separable_certified, ppt_only, entangled_conditional };
std::string to_string(IrreducibilityVerdict v);

using Ensemble = std::vector<std::pair<double, GeneralizedPrivateState>>;

struct Behavior {
    int outA = 0, outB = 0, inX = 0, inY = 0;
    std::vector<double> table;  // index ((a*outB + b)*inX + x)*inY + y
    double operator()(int a, int b, int x, int y) const { return table[((a * outB + b) * inX + x) * inY + y]; }
    double& at(int a, int b, int x, int y) { return table[((a * outB + b) * inX + x) * inY + y]; }
    bool normalized(double tol = 1e-10) const;
    bool non_signaling(double tol = 1e-9) const;
    // CHSH value for binary inputs and outputs.
    double chsh() const;
};

RegisterState make_max_entangled(int d);
GeneralizedPrivateState make_private_state(int dk, const RegisterState& shield, const TwistingUnitary& twist,
                                           std::pair<int, int> shieldSplit);
GeneralizedPrivateState make_generalized_private_state(const SchmidtState& key, const RegisterState& shield,
                                                       const TwistingUnitary& twist, std::pair<int, int> shieldSplit);
GeneralizedPrivateState make_flower_state(int ds, const Mat& u);

Mat partial_transpose_b(const Mat& m, int dA, int dB);
bool is_ppt(const Mat& m, int dA, int dB, double tol = 1e-10);
IrreducibilityVerdict check_strict_irreducibility(const GeneralizedPrivateState& g);
RegisterState sigma_ansatz(const GeneralizedPrivateState& g);
GeneralizedPrivateState tensor_sir(const GeneralizedPrivateState& g1, const GeneralizedPrivateState& g2);
// Register permutation taking g1 (x) g2 to the layout of tensor_sir(g1, g2).
std::vector<int> tensor_sir_permutation();

Behavior behavior_from_realization(const RegisterState& rho, const std::vector<std::vector<Mat>>& measA,
                                   const std::vector<std::vector<Mat>>& measB);

// Expanded member reordered to (Alice total, Bob total) = (A_key A', B_key B').
RegisterState alice_bob_form(const GeneralizedPrivateState& g);
// Validates an ensemble against a target over (Alice total, Bob total).
void validate_ensemble(const Ensemble& e, const RegisterState& target, double tol = 1e-9);
long long ensemble_cap(const RegisterState& target);
Ensemble product_ensemble(const Ensemble& e1, const Ensemble& e2);
// Target of a product ensemble. fine = {A_key, A', B_key, B'} dims of each factor's (Alice, Bob) split.
RegisterState product_target(const RegisterState& t1, const std::array<int, 4>& fine1, const RegisterState& t2,
                             const std::array<int, 4>& fine2);
RegisterState ensemble_mixture(const Ensemble& e);

// Random instances for property tests.
struct Rng;
Mat random_unitary(int d, Rng& rng);
RegisterState random_density(int d, Rng& rng, int rank = -1);
std::vector<double> random_probs(int k, Rng& rng);
// GSIR instance: twist blocks are local unitaries or conditional product states keep blocks separable.
GeneralizedPrivateState random_gsir(int dk, int dsA, int dsB, Rng& rng);

}  // namespace privkey
