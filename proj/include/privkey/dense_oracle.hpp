#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "privkey/dilution.hpp"

namespace privkey {

enum class OracleScope { per_step, end_to_end };
std::string to_string(OracleScope s);
OracleScope oracle_scope_from_string(const std::string& s);

// Sparse ket over register tuples. Cells hold a symbol, kBot, or kEmptyCell.
using RegisterTuple = std::vector<int>;
using SparseKet = std::map<RegisterTuple, cplx>;
inline constexpr int kEmptyCell = -2;

struct StepDistance {
    Step step;
    double maxDistance = 0.0;  // over announced outcomes
};

struct DenseOracleReport {
    OracleScope scope = OracleScope::per_step;
    std::vector<StepDistance> steps;
    double distanceToTarget = -1.0;    // end_to_end only
    double distanceToSymbolic = -1.0;  // end_to_end only
    double abortMass = 0.0;
    bool ancillaRestored = true;
    std::size_t maxTerms = 0;
};

// Gate-level register layout shared by the oracle's state maps.
struct OracleLayout {
    int n = 0, L = 0, lMax = 0;
    int keyA = 0, keyB = 0, resA = 0, flag = 0, env = 0;
    struct Party {
        int sHat = 0, sHat1 = 0, sOut = 0, counter = 0, shield = 0, tilde = 0, tele = 0;
    } party[2];
    int size = 0;

    explicit OracleLayout(const ProtocolContext& ctx);
};

// Dense form of one outcome branch of a symbolic state (post-measurement steps).
SparseKet records_to_ket(const ProtocolContext& ctx, const OracleLayout& lay, const std::vector<Record>& records,
                         bool rotated);
// Faithful gate-level application of a post-measurement step to one branch.
SparseKet dense_step(const ProtocolContext& ctx, const OracleLayout& lay, const std::vector<int>& x,
                     const SparseKet& in, Step step);
// Trace distance between the pure (unnormalised) states.
double ket_distance(const SparseKet& a, const SparseKet& b);

DenseOracleReport dense_oracle_run(const ProtocolConfig& cfg, OracleScope scope);

}  // namespace privkey
