#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace privkey {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Seq = std::vector<int>;

// Marker for an empty cell in sequences over the alphabet plus bottom.
inline constexpr int kBot = -1;

// Parses "3/4", "0.25", "1e-3" or an integer into an exact rational.
Rational parse_rational(const std::string& text);
// Exact binary value of a double.
Rational rational_from_double(double x);
double to_double(const Rational& r);
std::string to_string(const Rational& r);

struct SourceSpec {
    std::vector<std::string> alphabet;
    std::vector<Rational> probs;
    int n = 1;
    Rational delta;

    SourceSpec() = default;
    SourceSpec(std::vector<std::string> alphabet, std::vector<Rational> probs, int n, Rational delta);
    static SourceSpec from_strings(std::vector<std::string> alphabet, const std::vector<std::string>& probs, int n,
                                   const std::string& delta);

    int k() const { return static_cast<int>(probs.size()); }
    std::vector<double> probs_double() const;
    double entropy_bits() const;  // H(lambda)
    // Count window lo_a <= |a(s)| <= hi_a implied by |count/n - lambda_a| <= delta*lambda_a.
    std::vector<std::pair<int, int>> count_window() const;
    bool is_typical(const Seq& s) const;
    int symbol_index(const std::string& sym) const;
    Seq parse_sequence(const std::string& text) const;
    std::string format_sequence(const Seq& s) const;
};

// Type of a sequence: counts / n.
std::vector<Rational> sequence_type(const Seq& s, const SourceSpec& spec);
std::vector<int> symbol_counts(const Seq& s, int k);

// Sequences are packed as base-|A| integers, most significant symbol first, so numeric order is lexicographic.
std::uint64_t pack(const Seq& s, int base);
Seq unpack(std::uint64_t code, int n, int base);

struct TypicalSet {
    SourceSpec spec;
    std::vector<std::uint32_t> members;  // sorted
    Rational mass;                       // exact N

    std::size_t size() const { return members.size(); }
    Seq member(std::size_t i) const { return unpack(members[i], spec.n, spec.k()); }
    // Lexicographic rank of s in T, or nullopt when s is atypical.
    std::optional<std::uint64_t> rank(const Seq& s) const;
    // The i-th atypical sequence in lexicographic order.
    Seq atypical(std::uint64_t i) const;
    double probability(const Seq& s) const;
};

inline constexpr double kEnumerationLimitLog2 = 24.0;

TypicalSet enumerate_typical_set(const SourceSpec& spec);
// Exact typical mass and size through type classes; no enumeration needed.
Rational typical_mass(const SourceSpec& spec);
BigInt typical_size(const SourceSpec& spec);
// delta >= max_a (1 - lambda_a) / lambda_a makes every sequence typical.
Rational exactness_delta(const SourceSpec& spec);

struct SizeBoundReport {
    int n = 0;
    double size = 0, lower = 0, upper = 0, mass = 0;
    bool upperHolds = false, lowerHolds = false;
};
SizeBoundReport check_size_bounds(const TypicalSet& t);

int f_mismatch(const Seq& s, const Seq& sHat);
int l_max(int n, const Rational& delta);

struct PermutationPlan {
    Seq s, sHat;
    int f = 0;   // sum_a ||a(s)| - |a(sHat)||
    int m = 0;   // insertion points, equal to f/2
    int lMax = 0;
    std::vector<Seq> blocks;      // m+1 contiguous blocks of s
    std::vector<int> insertIdx;   // i_1 < ... < i_m (0-based positions in s)
    std::vector<int> leftoverIdx; // j_1 < ... < j_m (0-based positions in sHat)
    std::vector<int> matchOf;     // matchOf[q] = position in s matched by sHat[q], or -1 for leftovers
    Seq sCor;                     // length n, kBot at insertion points
    Seq sErr;                     // length lMax
    // Register permutation over 2n + lMax positions: dest[src] is where position src moves.
    std::vector<int> dest;

    // Applies the permutation to the layout sHat || bot^(n+lMax).
    Seq apply_to_layout() const;
    // Expected layout bot^n || sCor || sErr.
    Seq target_layout() const;
};

PermutationPlan build_permutation_plan(const Seq& s, const Seq& sHat, const SourceSpec& spec);

class Codec {
public:
    Codec() = default;
    // eta < 0 selects the smallest eta making the codec lossless.
    explicit Codec(std::shared_ptr<const TypicalSet> typical, double eta = -1.0);

    const TypicalSet& typical() const { return *t_; }
    int base() const { return t_->spec.k(); }
    int length() const { return L_; }
    double eta() const { return eta_; }
    std::uint64_t codeword_count() const { return dn_; }

    std::vector<int> digits_of(std::uint64_t rank) const;
    std::uint64_t rank_of(const std::vector<int>& digits) const;

    std::optional<std::vector<int>> encode(const Seq& s) const;
    std::optional<Seq> decode(const std::vector<int>& cw) const;
    // Minimal code length for a lossless codec.
    static int min_length(std::size_t typicalSize, int base);
    // Extended decode: ranks past |T| map to atypical sequences in order.
    Seq decode_extended(std::uint64_t rank) const;
    std::optional<std::uint64_t> encode_extended(const Seq& s) const;

private:
    std::shared_ptr<const TypicalSet> t_;
    std::vector<std::uint32_t> overflow_;  // atypical sequences standing in for ranks >= |T|
    int L_ = 0;
    double eta_ = 0.0;
    std::uint64_t dn_ = 0;
};

std::vector<int> digits_sub(const std::vector<int>& a, const std::vector<int>& b, int base);
std::vector<int> digits_add(const std::vector<int>& a, const std::vector<int>& b, int base);
std::vector<int> digits_neg(const std::vector<int>& a, int base);

class BetaMap {
public:
    BetaMap(Codec codec, std::vector<int> x);
    const Codec& codec() const { return c_; }
    const std::vector<int>& x() const { return x_; }
    // C^-1 . R^-1 . (-) . X_- . C on typical s; nullopt when the image codeword has no typical preimage.
    std::optional<Seq> apply(const Seq& s) const;
    // C^-1 . X_+ . (-) . R . C on typical sHat.
    std::optional<Seq> inverse(const Seq& sHat) const;
    // Involution on the full codeword space, with overflow ranks embedded as atypical sequences.
    std::uint64_t apply_rank(std::uint64_t rank) const;

private:
    Codec c_;
    std::vector<int> x_;
};

}  // namespace privkey
