#include "privkey/typicality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace privkey {

namespace {

BigInt rat_floor(const Rational& r) {
    BigInt num = numerator(r), den = denominator(r);
    BigInt q = num / den;
    if (num < 0 && q * den != num) q -= 1;
    return q;
}

BigInt rat_ceil(const Rational& r) {
    BigInt num = numerator(r), den = denominator(r);
    BigInt q = num / den;
    if (num > 0 && q * den != num) q += 1;
    return q;
}

BigInt ipow(const BigInt& b, int e) {
    BigInt r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

Rational rpow(const Rational& b, int e) {
    Rational r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

BigInt factorial(int n) {
    BigInt r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// Calls fn(counts) for every count vector within the window that sums to n.
void for_each_type(const std::vector<std::pair<int, int>>& win, int n,
                   const std::function<void(const std::vector<int>&)>& fn) {
    const int k = static_cast<int>(win.size());
    std::vector<int> lo_suffix(k + 1, 0), hi_suffix(k + 1, 0);
    for (int a = k - 1; a >= 0; --a) {
        lo_suffix[a] = lo_suffix[a + 1] + win[a].first;
        hi_suffix[a] = hi_suffix[a + 1] + win[a].second;
    }
    std::vector<int> c(k, 0);
    std::function<void(int, int)> rec = [&](int a, int left) {
        if (a == k) {
            if (left == 0) fn(c);
            return;
        }
        for (int v = win[a].first; v <= win[a].second; ++v) {
            int rest = left - v;
            if (rest < lo_suffix[a + 1] || rest > hi_suffix[a + 1]) continue;
            c[a] = v;
            rec(a + 1, rest);
        }
    };
    rec(0, n);
}

}  // namespace

Rational parse_rational(const std::string& text) {
    std::string t;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) t.push_back(ch);
    if (t.empty()) throw std::invalid_argument("empty rational");
    auto slash = t.find('/');
    if (slash != std::string::npos) {
        Rational num = parse_rational(t.substr(0, slash));
        Rational den = parse_rational(t.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
        return num / den;
    }
    bool neg = false;
    size_t i = 0;
    if (t[i] == '+' || t[i] == '-') neg = t[i++] == '-';
    BigInt mant = 0;
    int scale = 0;
    bool digits = false, dot = false;
    for (; i < t.size(); ++i) {
        char ch = t[i];
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            mant = mant * 10 + (ch - '0');
            if (dot) ++scale;
            digits = true;
        } else if (ch == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!digits) throw std::invalid_argument("malformed number '" + text + "'");
    int exp10 = 0;
    if (i < t.size()) {
        if (t[i] != 'e' && t[i] != 'E') throw std::invalid_argument("malformed number '" + text + "'");
        try {
            size_t used = 0;
            exp10 = std::stoi(t.substr(i + 1), &used);
            if (used != t.size() - i - 1) throw std::invalid_argument("");
        } catch (...) {
            throw std::invalid_argument("malformed exponent in '" + text + "'");
        }
    }
    int e = exp10 - scale;
    Rational r = mant;
    if (e > 0) r *= Rational(ipow(10, e));
    if (e < 0) r /= Rational(ipow(10, -e));
    return neg ? -r : r;
}

Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
    int exp = 0;
    double m = std::frexp(x, &exp);
    // m * 2^53 is an exact integer
    BigInt mant = static_cast<long long>(std::ldexp(m, 53));
    exp -= 53;
    Rational r = mant;
    if (exp > 0) r *= Rational(ipow(2, exp));
    if (exp < 0) r /= Rational(ipow(2, -exp));
    return r;
}

double to_double(const Rational& r) { return static_cast<double>(r); }

std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << numerator(r);
    if (denominator(r) != 1) os << "/" << denominator(r);
    return os.str();
}

SourceSpec::SourceSpec(std::vector<std::string> a, std::vector<Rational> p, int n_, Rational d)
    : alphabet(std::move(a)), probs(std::move(p)), n(n_), delta(std::move(d)) {
    if (probs.empty()) throw std::invalid_argument("empty alphabet");
    if (alphabet.empty())
        for (int i = 0; i < k(); ++i) alphabet.push_back(std::to_string(i));
    if (alphabet.size() != probs.size()) throw std::invalid_argument("alphabet and probability counts differ");
    Rational total = 0;
    for (const auto& q : probs) {
        if (q <= 0) throw std::invalid_argument("probabilities must be positive");
        total += q;
    }
    if (abs(total - 1) > Rational(1, 1000000000000LL)) throw std::invalid_argument("probabilities must sum to 1");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (delta <= 0) throw std::invalid_argument("delta must be positive");
    std::vector<std::string> sorted = alphabet;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("alphabet symbols must be distinct");
}

SourceSpec SourceSpec::from_strings(std::vector<std::string> alphabet, const std::vector<std::string>& probs, int n,
                                    const std::string& delta) {
    std::vector<Rational> p;
    for (const auto& s : probs) p.push_back(parse_rational(s));
    return SourceSpec(std::move(alphabet), std::move(p), n, parse_rational(delta));
}

std::vector<double> SourceSpec::probs_double() const {
    std::vector<double> out;
    for (const auto& p : probs) out.push_back(to_double(p));
    return out;
}

double SourceSpec::entropy_bits() const {
    double h = 0;
    for (double p : probs_double()) h -= p * std::log2(p);
    return h;
}

std::vector<std::pair<int, int>> SourceSpec::count_window() const {
    std::vector<std::pair<int, int>> w;
    for (const auto& p : probs) {
        Rational lo = Rational(n) * p * (1 - delta);
        Rational hi = Rational(n) * p * (1 + delta);
        BigInt l = rat_ceil(lo), h = rat_floor(hi);
        int li = l < 0 ? 0 : static_cast<int>(l);
        int hi_i = h > n ? n : static_cast<int>(h);
        w.push_back({li, hi_i});
    }
    return w;
}

bool SourceSpec::is_typical(const Seq& s) const {
    if (static_cast<int>(s.size()) != n) return false;
    auto c = symbol_counts(s, k());
    auto w = count_window();
    for (int a = 0; a < k(); ++a)
        if (c[a] < w[a].first || c[a] > w[a].second) return false;
    return true;
}

int SourceSpec::symbol_index(const std::string& sym) const {
    auto it = std::find(alphabet.begin(), alphabet.end(), sym);
    if (it == alphabet.end()) throw std::invalid_argument("foreign symbol '" + sym + "'");
    return static_cast<int>(it - alphabet.begin());
}

Seq SourceSpec::parse_sequence(const std::string& text) const {
    Seq s;
    bool single = std::all_of(alphabet.begin(), alphabet.end(), [](const std::string& a) { return a.size() == 1; });
    if (text.find(',') == std::string::npos && single) {
        for (char ch : text)
            if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(symbol_index(std::string(1, ch)));
        return s;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) s.push_back(symbol_index(tok));
    return s;
}

std::string SourceSpec::format_sequence(const Seq& s) const {
    bool single = std::all_of(alphabet.begin(), alphabet.end(), [](const std::string& a) { return a.size() == 1; });
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (!single && i) out += ",";
        out += s[i] == kBot ? std::string("_") : alphabet.at(s[i]);
    }
    return out;
}

std::vector<int> symbol_counts(const Seq& s, int k) {
    std::vector<int> c(k, 0);
    for (int x : s) {
        if (x < 0 || x >= k) throw std::invalid_argument("foreign symbol in sequence");
        ++c[x];
    }
    return c;
}

std::vector<Rational> sequence_type(const Seq& s, const SourceSpec& spec) {
    if (s.empty()) throw std::invalid_argument("empty sequence");
    auto c = symbol_counts(s, spec.k());
    std::vector<Rational> t;
    for (int v : c) t.push_back(Rational(v, static_cast<long long>(s.size())));
    return t;
}

std::uint64_t pack(const Seq& s, int base) {
    std::uint64_t c = 0;
    for (int x : s) c = c * base + static_cast<std::uint64_t>(x);
    return c;
}

Seq unpack(std::uint64_t code, int n, int base) {
    Seq s(n);
    for (int i = n - 1; i >= 0; --i) {
        s[i] = static_cast<int>(code % base);
        code /= base;
    }
    return s;
}

std::optional<std::uint64_t> TypicalSet::rank(const Seq& s) const {
    if (static_cast<int>(s.size()) != spec.n) return std::nullopt;
    for (int x : s)
        if (x < 0 || x >= spec.k()) return std::nullopt;
    auto code = static_cast<std::uint32_t>(pack(s, spec.k()));
    auto it = std::lower_bound(members.begin(), members.end(), code);
    if (it == members.end() || *it != code) return std::nullopt;
    return static_cast<std::uint64_t>(it - members.begin());
}

Seq TypicalSet::atypical(std::uint64_t i) const {
    const std::uint64_t total = static_cast<std::uint64_t>(std::pow(spec.k(), spec.n) + 0.5);
    std::uint64_t seen = 0;
    size_t m = 0;
    for (std::uint64_t code = 0; code < total; ++code) {
        while (m < members.size() && members[m] < code) ++m;
        if (m < members.size() && members[m] == code) continue;
        if (seen++ == i) return unpack(code, spec.n, spec.k());
    }
    throw std::out_of_range("not enough atypical sequences");
}

double TypicalSet::probability(const Seq& s) const {
    auto p = spec.probs_double();
    double v = 1.0;
    for (int x : s) v *= p.at(x);
    return v;
}

TypicalSet enumerate_typical_set(const SourceSpec& spec) {
    if (spec.n * std::log2(static_cast<double>(spec.k())) > kEnumerationLimitLog2 + 1e-12)
        throw std::invalid_argument("typical set enumeration guard exceeded (|A|^n > 2^24)");
    TypicalSet t;
    t.spec = spec;
    auto win = spec.count_window();
    const int k = spec.k(), n = spec.n;
    std::vector<int> counts(k, 0);
    // depth-first in lexicographic order, pruning on the count window
    std::function<void(int, std::uint32_t)> rec = [&](int pos, std::uint32_t code) {
        if (pos == n) {
            t.members.push_back(code);
            return;
        }
        int left = n - pos - 1;
        for (int a = 0; a < k; ++a) {
            if (counts[a] + 1 > win[a].second) continue;
            ++counts[a];
            int need = 0;
            bool ok = true;
            for (int b = 0; b < k; ++b) {
                int deficit = win[b].first - counts[b];
                if (deficit > 0) need += deficit;
            }
            if (need > left) ok = false;
            if (ok) rec(pos + 1, code * k + a);
            --counts[a];
        }
    };
    rec(0, 0);
    t.mass = typical_mass(spec);
    return t;
}

Rational typical_mass(const SourceSpec& spec) {
    Rational mass = 0;
    BigInt nf = factorial(spec.n);
    for_each_type(spec.count_window(), spec.n, [&](const std::vector<int>& c) {
        BigInt mult = nf;
        Rational pr = 1;
        for (int a = 0; a < spec.k(); ++a) {
            mult /= factorial(c[a]);
            pr *= rpow(spec.probs[a], c[a]);
        }
        mass += Rational(mult) * pr;
    });
    return mass;
}

BigInt typical_size(const SourceSpec& spec) {
    BigInt size = 0;
    BigInt nf = factorial(spec.n);
    for_each_type(spec.count_window(), spec.n, [&](const std::vector<int>& c) {
        BigInt mult = nf;
        for (int a = 0; a < spec.k(); ++a) mult /= factorial(c[a]);
        size += mult;
    });
    return size;
}

Rational exactness_delta(const SourceSpec& spec) {
    Rational best = 0;
    for (const auto& p : spec.probs) best = std::max(best, Rational((1 - p) / p));
    return best;
}

SizeBoundReport check_size_bounds(const TypicalSet& t) {
    SizeBoundReport r;
    r.n = t.spec.n;
    double h = t.spec.entropy_bits();
    double d = to_double(t.spec.delta);
    double eta = d * h;
    r.size = static_cast<double>(t.size());
    r.upper = std::exp2(t.spec.n * (h + eta));
    r.lower = (1.0 - d) * std::exp2(t.spec.n * (h - eta));
    r.mass = to_double(t.mass);
    r.upperHolds = r.size <= r.upper * (1 + 1e-12);
    r.lowerHolds = r.size >= r.lower * (1 - 1e-12);
    return r;
}

int f_mismatch(const Seq& s, const Seq& sHat) {
    if (s.size() != sHat.size()) throw std::invalid_argument("sequence lengths differ");
    int k = 0;
    for (int x : s) k = std::max(k, x + 1);
    for (int x : sHat) k = std::max(k, x + 1);
    auto a = symbol_counts(s, k), b = symbol_counts(sHat, k);
    int f = 0;
    for (int i = 0; i < k; ++i) f += std::abs(a[i] - b[i]);
    return f;
}

int l_max(int n, const Rational& delta) { return static_cast<int>(rat_ceil(Rational(2) * delta * n)); }

Seq PermutationPlan::apply_to_layout() const {
    const int n = static_cast<int>(s.size());
    Seq in(2 * n + lMax, kBot);
    for (int q = 0; q < n; ++q) in[q] = sHat[q];
    Seq out(in.size(), kBot);
    for (size_t src = 0; src < in.size(); ++src) out[dest[src]] = in[src];
    return out;
}

Seq PermutationPlan::target_layout() const {
    const int n = static_cast<int>(s.size());
    Seq out(n, kBot);
    out.insert(out.end(), sCor.begin(), sCor.end());
    out.insert(out.end(), sErr.begin(), sErr.end());
    return out;
}

PermutationPlan build_permutation_plan(const Seq& s, const Seq& sHat, const SourceSpec& spec) {
    if (!spec.is_typical(s) || !spec.is_typical(sHat)) throw std::invalid_argument("plan requires typical sequences");
    const int n = spec.n, k = spec.k();
    PermutationPlan p;
    p.s = s;
    p.sHat = sHat;
    p.f = f_mismatch(s, sHat);
    p.m = p.f / 2;
    p.lMax = l_max(n, spec.delta);
    if (p.f > p.lMax) throw std::logic_error("mismatch exceeds L_max");

    // greedy left to right: t-th occurrence of a in sHat pairs with the t-th occurrence of a in s
    std::vector<std::vector<int>> occS(k), occH(k);
    for (int i = 0; i < n; ++i) occS[s[i]].push_back(i);
    for (int i = 0; i < n; ++i) occH[sHat[i]].push_back(i);
    p.matchOf.assign(n, -1);
    std::vector<char> matchedS(n, 0);
    for (int a = 0; a < k; ++a) {
        size_t common = std::min(occS[a].size(), occH[a].size());
        for (size_t t = 0; t < common; ++t) {
            p.matchOf[occH[a][t]] = occS[a][t];
            matchedS[occS[a][t]] = 1;
        }
    }
    for (int i = 0; i < n; ++i)
        if (!matchedS[i]) p.insertIdx.push_back(i);
    for (int q = 0; q < n; ++q)
        if (p.matchOf[q] < 0) p.leftoverIdx.push_back(q);
    if (static_cast<int>(p.insertIdx.size()) != p.m || static_cast<int>(p.leftoverIdx.size()) != p.m)
        throw std::logic_error("insertion and leftover counts disagree");

    p.blocks.assign(1, Seq{});
    for (int i = 0; i < n; ++i) {
        if (!matchedS[i]) p.blocks.emplace_back();
        else p.blocks.back().push_back(s[i]);
    }
    p.sCor = s;
    for (int i : p.insertIdx) p.sCor[i] = kBot;
    p.sErr.assign(p.lMax, kBot);
    for (int t = 0; t < p.m; ++t) p.sErr[t] = sHat[p.leftoverIdx[t]];

    const int total = 2 * n + p.lMax;
    p.dest.assign(total, -1);
    std::vector<char> isTarget(total, 0);
    for (int q = 0; q < n; ++q) {
        int d = p.matchOf[q] >= 0 ? n + p.matchOf[q] : -1;
        if (d < 0) {
            int t = static_cast<int>(std::find(p.leftoverIdx.begin(), p.leftoverIdx.end(), q) - p.leftoverIdx.begin());
            d = 2 * n + t;
        }
        p.dest[q] = d;
        isTarget[d] = 1;
    }
    int next = 0;
    for (int src = n; src < total; ++src) p.dest[src] = isTarget[src] ? next++ : src;
    return p;
}

int Codec::min_length(std::size_t typicalSize, int base) {
    int L = 0;
    std::uint64_t cap = 1;
    while (cap < typicalSize) {
        cap *= static_cast<std::uint64_t>(base);
        ++L;
    }
    return L;
}

Codec::Codec(std::shared_ptr<const TypicalSet> typical, double eta) : t_(std::move(typical)) {
    if (!t_) throw std::invalid_argument("codec needs a typical set");
    if (t_->size() == 0) throw std::invalid_argument("typical set is empty");
    const int base = t_->spec.k(), n = t_->spec.n;
    const double rate = t_->spec.entropy_bits() / std::log2(static_cast<double>(base));
    const int L0 = min_length(t_->size(), base);
    eta_ = eta < 0 ? std::max(0.0, static_cast<double>(L0) / n - rate) : eta;
    L_ = static_cast<int>(std::ceil(n * (rate + eta_) - 1e-9));
    if (L_ < L0) throw std::invalid_argument("codec is lossy: |A|^L < |T|");
    if (L_ > n) throw std::invalid_argument("code length exceeds n; lower eta");
    dn_ = 1;
    for (int i = 0; i < L_; ++i) dn_ *= static_cast<std::uint64_t>(base);
    std::uint64_t need = dn_ - t_->size();
    if (need > 0) {
        const std::uint64_t total = static_cast<std::uint64_t>(std::pow(base, n) + 0.5);
        size_t m = 0;
        for (std::uint64_t code = 0; code < total && overflow_.size() < need; ++code) {
            while (m < t_->members.size() && t_->members[m] < code) ++m;
            if (m < t_->members.size() && t_->members[m] == code) continue;
            overflow_.push_back(static_cast<std::uint32_t>(code));
        }
    }
}

std::vector<int> Codec::digits_of(std::uint64_t rank) const {
    std::vector<int> d(L_);
    for (int i = L_ - 1; i >= 0; --i) {
        d[i] = static_cast<int>(rank % base());
        rank /= base();
    }
    return d;
}

std::uint64_t Codec::rank_of(const std::vector<int>& digits) const {
    if (static_cast<int>(digits.size()) != L_) throw std::invalid_argument("codeword has wrong length");
    std::uint64_t r = 0;
    for (int x : digits) {
        if (x < 0 || x >= base()) throw std::invalid_argument("codeword digit out of range");
        r = r * base() + x;
    }
    return r;
}

std::optional<std::vector<int>> Codec::encode(const Seq& s) const {
    auto r = t_->rank(s);
    if (!r) return std::nullopt;
    return digits_of(*r);
}

std::optional<Seq> Codec::decode(const std::vector<int>& cw) const {
    auto r = rank_of(cw);
    if (r >= t_->size()) return std::nullopt;
    return t_->member(r);
}

Seq Codec::decode_extended(std::uint64_t rank) const {
    if (rank < t_->size()) return t_->member(rank);
    if (rank >= dn_) throw std::out_of_range("rank outside codeword space");
    return unpack(overflow_[rank - t_->size()], t_->spec.n, base());
}

std::optional<std::uint64_t> Codec::encode_extended(const Seq& s) const {
    if (auto r = t_->rank(s)) return r;
    auto code = static_cast<std::uint32_t>(pack(s, base()));
    auto it = std::find(overflow_.begin(), overflow_.end(), code);
    if (it == overflow_.end()) return std::nullopt;
    return t_->size() + static_cast<std::uint64_t>(it - overflow_.begin());
}

std::vector<int> digits_sub(const std::vector<int>& a, const std::vector<int>& b, int base) {
    if (a.size() != b.size()) throw std::invalid_argument("digit strings differ in length");
    std::vector<int> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = ((a[i] - b[i]) % base + base) % base;
    return r;
}

std::vector<int> digits_add(const std::vector<int>& a, const std::vector<int>& b, int base) {
    if (a.size() != b.size()) throw std::invalid_argument("digit strings differ in length");
    std::vector<int> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = (a[i] + b[i]) % base;
    return r;
}

std::vector<int> digits_neg(const std::vector<int>& a, int base) {
    std::vector<int> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = (base - a[i]) % base;
    return r;
}

BetaMap::BetaMap(Codec codec, std::vector<int> x) : c_(std::move(codec)), x_(std::move(x)) {
    if (static_cast<int>(x_.size()) != c_.length()) throw std::invalid_argument("announced codeword has wrong length");
    for (int d : x_)
        if (d < 0 || d >= c_.base()) throw std::invalid_argument("announced digit out of range");
}

std::optional<Seq> BetaMap::apply(const Seq& s) const {
    auto c = c_.encode(s);
    if (!c) throw std::invalid_argument("beta_x needs a typical sequence");
    auto shifted = digits_sub(*c, x_, c_.base());      // X_-
    auto rhat = digits_neg(shifted, c_.base());        // opposite digits: x (-) c
    return c_.decode(rhat);                            // R^-1 is the identity on digit strings
}

std::optional<Seq> BetaMap::inverse(const Seq& sHat) const {
    auto rhat = c_.encode(sHat);
    if (!rhat) throw std::invalid_argument("beta_x inverse needs a typical sequence");
    auto back = digits_neg(*rhat, c_.base());          // c (-) x
    auto c = digits_add(back, x_, c_.base());          // X_+
    return c_.decode(c);
}

std::uint64_t BetaMap::apply_rank(std::uint64_t rank) const {
    auto c = c_.digits_of(rank);
    return c_.rank_of(digits_sub(x_, c, c_.base()));
}

}  // namespace privkey
