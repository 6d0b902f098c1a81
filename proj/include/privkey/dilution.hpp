#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "privkey/states.hpp"
#include "privkey/tensor.hpp"
#include "privkey/typicality.hpp"

namespace privkey {

enum class Backend { symbolic, dense };
std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

// Deliberate protocol faults for harness tests.
enum class Fault { none, skip_tau2, wrong_tau1, skip_ipa_swap };
std::string to_string(Fault f);
Fault fault_from_string(const std::string& s);

struct ProtocolConfig {
    SchmidtState key;
    RegisterState shieldBase;  // over (A', B')
    TwistingUnitary twist;
    std::pair<int, int> shieldSplit{1, 1};
    int n = 1;
    Rational delta = 1;
    double eta = -1.0;  // negative: smallest lossless value
    double epsilonBudget = 0.0;
    std::uint64_t seed = 0;
    Backend backend = Backend::symbolic;
    int maxEnumeratedOutcomes = 64;
    int sampledOutcomes = 16;
    int jobs = 1;
    Fault fault = Fault::none;

    static ProtocolConfig from_state(const GeneralizedPrivateState& g, int n, Rational delta);
    GeneralizedPrivateState single_copy() const;
};

// Derived quantities shared by every step.
struct ProtocolContext {
    ProtocolConfig cfg;
    SourceSpec spec;
    std::shared_ptr<const TypicalSet> typical;
    Codec codec;
    int k = 0;       // |A|
    int L = 0;       // code length in |A|-ary digits
    int lMax = 0;
    std::uint64_t dn = 0;
    Rational mass;   // exact N
    int dA = 1, dB = 1;
    double shieldPurity = 1.0;

    explicit ProtocolContext(const ProtocolConfig& cfg);
    bool typical_seq(const Seq& s) const { return spec.is_typical(s); }
    // U_beta on A^n: overflow-embedded involution, identity off the codeword image.
    Seq beta_extended(const std::vector<int>& x, const Seq& s) const;
    PermutationPlan plan(const Seq& s, const Seq& sHat) const { return build_permutation_plan(s, sHat, spec); }
};

struct ResourcePrivateState {
    std::uint64_t dn = 0;
    int L = 0;
    RegisterState shieldBase;
    std::pair<int, int> shieldSplit{1, 1};
    std::vector<Seq> labels;  // s(r); empty for overflow ranks (identity block)

    // Dense private state: key of dimension d_n, shield (A'_1..A'_n, B'_1..B'_n).
    GeneralizedPrivateState dense(const TwistingUnitary& twist) const;
};

ResourcePrivateState build_resource_state(const ProtocolContext& ctx);

// Reduced free-group word over {U_a}: +(a+1) is U_a, -(a+1) is U_a^dagger.
using TwistWord = std::vector<int>;
void word_push(TwistWord& w, int g);
Mat word_matrix(const TwistWord& w, const TwistingUnitary& twist);

enum class KeyKind { sequence, code, empty };

struct KeyRegister {
    KeyKind kind = KeyKind::sequence;
    Seq value;
    bool operator==(const KeyRegister&) const = default;
};

// One party's ancillas and shield slots; slots hold a copy id or -1 for bottom.
struct PartyRegisters {
    Seq sHat, sHat1, sOut;
    int counter = 1;
    std::vector<int> shield, shieldTilde, tele;
    bool operator==(const PartyRegisters&) const = default;
};

struct Record {
    double amp = 0.0;
    KeyRegister keyA;  // Alice's A''
    KeyRegister keyB;  // Bob's B
    PartyRegisters alice, bob;
    bool teleAtBob = false;
    std::vector<TwistWord> words;  // per shield copy
    bool operator==(const Record&) const = default;
};

struct OutcomeBranch {
    std::uint64_t xRank = 0;
    std::vector<int> x;
    double weight = 0.0;  // unconditional probability carried by this branch
    std::vector<Record> records;
};

struct ResourceTerm {
    std::uint64_t r = 0;
    double amp = 0.0;
    std::vector<TwistWord> words;
};

enum class Step { S1, S2, S3, S4, S5, S6, PA, PEC, IPA, S8 };
std::string to_string(Step s);
Step step_from_string(const std::string& s);
const std::vector<Step>& all_steps();

struct Ledger {
    long long teleportedCells = 0;
    long long classicalDigits = 0;  // announced x plus abort flag
};

struct ProtocolState {
    int stepsDone = 0;  // number of steps applied, in protocol order
    std::vector<std::pair<KeyRegister, double>> ancilla;
    std::vector<ResourceTerm> resource;
    bool xorApplied = false;
    double abortMass = 0.0;
    bool measured = false;
    bool outcomesEnumerated = true;
    std::vector<OutcomeBranch> outcomes;
    std::vector<std::string> structuralErrors;
    Ledger ledger;
};

ProtocolState initial_state(const ProtocolContext& ctx);
ProtocolState run_step(const ProtocolContext& ctx, const ProtocolState& state, Step step);

// Initial content of every ancilla for a party.
PartyRegisters initial_party(const ProtocolContext& ctx);
Record initial_record(const ProtocolContext& ctx);

struct EbitLedger {
    long long cells = 0;
    int cellDimA = 0, cellDimB = 0;
    long long qubitPairs = 0;
    long long nominal = 0;  // ceil(4 delta n)
};

struct Comparison {
    double dExact = 0.0;    // distance to gamma(psi)^{(x)n}
    double dTypical = 0.0;  // distance to the typical target with abort branch
    std::string method;     // key_matrix, dense, trivial_bound, structural_failure
    bool exact = true;      // false when the distances are upper bounds
    double epsN = 0.0;      // 1 - N
    double epsUsed = 0.0;   // 2 sqrt(1 - N)
    bool closenessHolds = false;
    std::vector<std::string> notes;
};

struct DilutionReport {
    int n = 0, L = 0, lMax = 0;
    std::uint64_t dn = 0;
    double eta = 0.0;
    double keyBitsConsumed = 0.0;
    double keyRate = 0.0;
    double entropy = 0.0;
    EbitLedger ebits;
    double traceDistanceToTarget = 0.0;
    double distanceToTypical = 0.0;
    Comparison comparison;
    bool ancillaRestored = false;
    bool xIndependent = false;
    bool labelExact = false;
    std::string copyArrangement;  // identity, consistent, s_dependent, broken
    double residualDistance = -1.0;  // dense distance when the arrangement is not the identity
    double keyMatrixDistance = -1.0;  // key-amplitude distance; set when labels are exact and ancillas restored
    double failureProbability = 0.0;
    double overflowMass = 0.0;
    double typicalMass = 0.0;
    std::uint64_t outcomesEvaluated = 0;
    bool outcomesEnumerated = true;
    std::vector<std::string> structuralErrors;
    std::string backend;
};

using StepObserver = std::function<void(Step, const ProtocolState&)>;

ProtocolState run_all_steps(const ProtocolContext& ctx, const StepObserver& observer = {});
DilutionReport run_protocol(const ProtocolConfig& cfg, const StepObserver& observer = {});
DilutionReport make_report(const ProtocolContext& ctx, const ProtocolState& finalState);

struct RecordAudit {
    bool labelExact = true;
    bool ancillaRestored = true;
    bool xIndependent = true;
    std::string copyArrangement = "identity";
    double overflowMass = 0.0;
    double mismatchMass = 0.0;  // weight of records whose labels are wrong, overflow included
    std::vector<std::string> failures;
};
RecordAudit audit_records(const ProtocolContext& ctx, const ProtocolState& s);

Comparison compare_to_target(const ProtocolContext& ctx, const ProtocolState& s);
// Distance computed on the key-amplitude matrix alone, ignoring which shield copy sits where.
Comparison key_matrix_comparison(const ProtocolContext& ctx, const ProtocolState& s);

// Formation protocol for a finite GSIR ensemble.
struct ComponentConfig {
    Rational delta = 1;
    double eta = -1.0;
};

struct FormationReport {
    int n = 0;
    Rational delta0;
    std::vector<int> lPlus;                   // ceil(n p_i + delta0 p_i n)
    std::vector<DilutionReport> components;   // one run per ensemble member
    double chargedKeyBits = 0.0;              // sum_i ceil(l_i (S_i + eta_i + 2 delta_i))
    double actualKeyBits = 0.0;               // sum_i L_i log2 |A_i|
    double rate = 0.0;                        // charged / n
    double rateBound = 0.0;
    bool rateWithinBound = false;
    double typeMass = 0.0;                    // exact mass of typical type sequences
    double traceDistance = 0.0;               // output vs rho^{(x)n}, failures counted as orthogonal
    double mixtureDistance = 0.0;             // success-conditioned, vs sum_s p_s/N0 (x)_t gamma_{s_t}
    double successProbability = 0.0;
    bool exact = true;
    double kfValue = 0.0;                     // sum_i p_i S(psi_i)
};

FormationReport formation_protocol_run(const Ensemble& e, int n, const Rational& delta0,
                                       const std::vector<ComponentConfig>& perComponent);

// Dense output of a symbolic run over (A_1..A_n, B_1..B_n, A'_1..A'_n, B'_1..B'_n) in target dimensions,
// with the abort mass and the weight found outside the target support reported separately.
struct ReconstructedOutput {
    Mat good;  // unnormalised
    std::vector<int> dims;
    double abortMass = 0.0;
    double leakage = 0.0;
};
ReconstructedOutput reconstruct_output(const ProtocolContext& ctx, const ProtocolState& s);

// gamma(psi)^{(x)n} reordered to (A_1..A_n, B_1..B_n, A'_1..A'_n, B'_1..B'_n).
Mat target_power(const GeneralizedPrivateState& g, int n);

}  // namespace privkey
