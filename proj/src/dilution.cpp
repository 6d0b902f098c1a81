#include "privkey/dilution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "privkey/rng.hpp"

namespace privkey {

std::string to_string(Backend b) { return b == Backend::dense ? "dense" : "symbolic"; }

Backend backend_from_string(const std::string& s) {
    if (s == "symbolic") return Backend::symbolic;
    if (s == "dense") return Backend::dense;
    throw std::invalid_argument("unknown backend '" + s + "'");
}

std::string to_string(Fault f) {
    switch (f) {
        case Fault::none: return "none";
        case Fault::skip_tau2: return "skip_tau2";
        case Fault::wrong_tau1: return "wrong_tau1";
        case Fault::skip_ipa_swap: return "skip_ipa_swap";
    }
    return "none";
}

Fault fault_from_string(const std::string& s) {
    for (Fault f : {Fault::none, Fault::skip_tau2, Fault::wrong_tau1, Fault::skip_ipa_swap})
        if (to_string(f) == s) return f;
    throw std::invalid_argument("unknown fault '" + s + "'");
}

std::string to_string(Step s) {
    static const char* names[] = {"S1", "S2", "S3", "S4", "S5", "S6", "PA", "PEC", "IPA", "S8"};
    return names[static_cast<int>(s)];
}

Step step_from_string(const std::string& s) {
    for (Step st : all_steps())
        if (to_string(st) == s) return st;
    throw std::invalid_argument("unknown step '" + s + "'");
}

const std::vector<Step>& all_steps() {
    static const std::vector<Step> steps = {Step::S1, Step::S2, Step::S3, Step::S4,  Step::S5,
                                            Step::S6, Step::PA, Step::PEC, Step::IPA, Step::S8};
    return steps;
}

ProtocolConfig ProtocolConfig::from_state(const GeneralizedPrivateState& g, int n, Rational delta) {
    ProtocolConfig c;
    c.key = g.key;
    c.shieldBase = g.shield;
    c.twist = g.twist;
    c.shieldSplit = g.shieldSplit;
    c.n = n;
    c.delta = std::move(delta);
    return c;
}

GeneralizedPrivateState ProtocolConfig::single_copy() const {
    return make_generalized_private_state(key, shieldBase, twist, shieldSplit);
}

ProtocolContext::ProtocolContext(const ProtocolConfig& c) : cfg(c) {
    k = cfg.key.count();
    if (k < 2) throw std::invalid_argument("dilution needs at least two Schmidt coefficients");
    // validates dimensions
    (void)cfg.single_copy();
    std::vector<Rational> probs;
    for (double l : cfg.key.coeffs) probs.push_back(rational_from_double(l));
    std::vector<std::string> alphabet;
    for (int a = 0; a < k; ++a) alphabet.push_back(std::to_string(a));
    spec = SourceSpec(alphabet, probs, cfg.n, cfg.delta);
    typical = std::make_shared<const TypicalSet>(enumerate_typical_set(spec));
    if (typical->size() == 0) throw std::invalid_argument("typical set is empty for this n and delta");
    codec = Codec(typical, cfg.eta);
    L = codec.length();
    lMax = l_max(cfg.n, cfg.delta);
    dn = codec.codeword_count();
    mass = typical->mass;
    dA = cfg.shieldSplit.first;
    dB = cfg.shieldSplit.second;
    Mat r = cfg.shieldBase.rho();
    shieldPurity = (r * r).trace().real();
}

Seq ProtocolContext::beta_extended(const std::vector<int>& x, const Seq& s) const {
    auto r = codec.encode_extended(s);
    if (!r) return s;
    BetaMap b(codec, x);
    return codec.decode_extended(b.apply_rank(*r));
}

GeneralizedPrivateState ResourcePrivateState::dense(const TwistingUnitary& twist) const {
    const int n = labels.empty() ? 0 : static_cast<int>(std::max_element(labels.begin(), labels.end(),
                                                                           [](const Seq& a, const Seq& b) {
                                                                               return a.size() < b.size();
                                                                           })->size());
    if (n == 0) throw std::logic_error("resource state has no labels");
    const int dA = shieldSplit.first, dB = shieldSplit.second;
    if (std::pow(static_cast<double>(dA * dB), 2 * n) * dn * dn > 1.7e7)
        throw std::invalid_argument("resource state too large for a dense form");
    // shield^{(x)n} over (A'_1, B'_1, ..., A'_n, B'_n), reordered to (A'_1..A'_n, B'_1..B'_n)
    std::vector<int> dims, perm;
    for (int i = 0; i < n; ++i) {
        dims.push_back(dA);
        dims.push_back(dB);
    }
    for (int i = 0; i < n; ++i) perm.push_back(2 * i);
    for (int i = 0; i < n; ++i) perm.push_back(2 * i + 1);
    Mat rho = shieldBase.rho();
    Mat big = rho;
    for (int i = 1; i < n; ++i) big = kron(big, rho);
    big = permute_matrix(big, dims, perm);
    const int ds = dA * dB;
    std::vector<Mat> blocks;
    for (const auto& lab : labels) {
        Mat u = Mat::Identity(1, 1);
        for (int i = 0; i < n; ++i) u = kron(u, lab.empty() ? Mat(Mat::Identity(ds, ds)) : twist.blocks.at(lab[i]));
        blocks.push_back(permute_matrix(u, dims, perm));
    }
    int dAn = 1, dBn = 1;
    for (int i = 0; i < n; ++i) {
        dAn *= dA;
        dBn *= dB;
    }
    RegisterState sh = RegisterState::density_unchecked(RegisterShape({dAn, dBn}), big);
    return make_private_state(static_cast<int>(dn), sh, TwistingUnitary(blocks), {dAn, dBn});
}

ResourcePrivateState build_resource_state(const ProtocolContext& ctx) {
    ResourcePrivateState r;
    r.dn = ctx.dn;
    r.L = ctx.L;
    r.shieldBase = ctx.cfg.shieldBase;
    r.shieldSplit = ctx.cfg.shieldSplit;
    for (std::uint64_t rank = 0; rank < ctx.dn; ++rank)
        r.labels.push_back(rank < ctx.typical->size() ? ctx.typical->member(rank) : Seq{});
    return r;
}

void word_push(TwistWord& w, int g) {
    if (!w.empty() && w.back() == -g) w.pop_back();
    else w.push_back(g);
}

Mat word_matrix(const TwistWord& w, const TwistingUnitary& twist) {
    const int d = twist.shield_dim();
    Mat m = Mat::Identity(d, d);
    for (int g : w) {
        const Mat& u = twist.blocks.at(std::abs(g) - 1);
        m = (g > 0 ? u : Mat(u.adjoint())) * m;
    }
    return m;
}

PartyRegisters initial_party(const ProtocolContext& ctx) {
    const int n = ctx.cfg.n;
    PartyRegisters p;
    p.sHat.assign(n, 0);
    p.sHat1.assign(n, 0);
    p.sOut.assign(n + ctx.lMax, kBot);
    p.counter = 1;
    p.shield.resize(n);
    for (int i = 0; i < n; ++i) p.shield[i] = i;
    p.shieldTilde.assign(n, -1);
    p.tele.assign(ctx.lMax, -1);
    return p;
}

Record initial_record(const ProtocolContext& ctx) {
    Record r;
    r.alice = initial_party(ctx);
    r.bob = initial_party(ctx);
    r.words.assign(ctx.cfg.n, {});
    return r;
}

ProtocolState initial_state(const ProtocolContext& ctx) {
    ProtocolState st;
    auto res = build_resource_state(ctx);
    const double amp = 1.0 / std::sqrt(static_cast<double>(ctx.dn));
    for (std::uint64_t r = 0; r < ctx.dn; ++r) {
        ResourceTerm t;
        t.r = r;
        t.amp = amp;
        t.words.assign(ctx.cfg.n, {});
        if (!res.labels[r].empty())
            for (int i = 0; i < ctx.cfg.n; ++i) word_push(t.words[i], res.labels[r][i] + 1);
        st.resource.push_back(std::move(t));
    }
    return st;
}

namespace {

template <class F>
void parallel_for(std::size_t count, int jobs, F fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

struct BranchErrors {
    std::vector<std::string> list;
    void add(std::string e) {
        if (list.size() < 8) list.push_back(std::move(e));
    }
};

// Applies U_a (or its inverse) to the copy whose halves sit at the given slots.
void twist_cell(Record& rec, int halfA, int halfB, int g, BranchErrors& err, const std::string& where) {
    if (halfA < 0 && halfB < 0) return;  // bottom cells
    if (halfA != halfB || halfA < 0) {
        err.add(where + ": shield halves are not paired");
        return;
    }
    word_push(rec.words[halfA], g);
}

void shift(int& c, int lMax) { c = c % lMax + 1; }
void unshift(int& c, int lMax) { c = (c - 2 + lMax) % lMax + 1; }

void permute_layout(std::vector<int>& first, std::vector<int>& second, const std::vector<int>& dest, bool inverse) {
    const int n = static_cast<int>(first.size());
    std::vector<int> in(first);
    in.insert(in.end(), second.begin(), second.end());
    std::vector<int> out(in.size());
    for (std::size_t src = 0; src < in.size(); ++src) {
        if (inverse) out[src] = in[dest[src]];
        else out[dest[src]] = in[src];
    }
    std::copy(out.begin(), out.begin() + n, first.begin());
    std::copy(out.begin() + n, out.end(), second.begin());
}

void permute_cells(PartyRegisters& p, const std::vector<int>& dest) {
    const int n = static_cast<int>(p.shield.size());
    std::vector<int> in(p.shield);
    in.insert(in.end(), p.shieldTilde.begin(), p.shieldTilde.end());
    in.insert(in.end(), p.tele.begin(), p.tele.end());
    std::vector<int> out(in.size());
    for (std::size_t src = 0; src < in.size(); ++src) out[dest[src]] = in[src];
    std::copy(out.begin(), out.begin() + n, p.shield.begin());
    std::copy(out.begin() + n, out.begin() + 2 * n, p.shieldTilde.begin());
    std::copy(out.begin() + 2 * n, out.end(), p.tele.begin());
}

void pa_party(const ProtocolContext& ctx, const std::vector<int>& x, const KeyRegister& key, PartyRegisters& p,
              BranchErrors& err, const char* who) {
    if (key.kind != KeyKind::sequence) {
        err.add(std::string("PA(") + who + "): key register does not hold a sequence");
        return;
    }
    const Seq& s = key.value;
    const int n = ctx.cfg.n;
    for (int i = 0; i < n; ++i) {
        p.sHat[i] = (p.sHat[i] + s[i]) % ctx.k;
        p.sHat1[i] = (p.sHat1[i] + s[i]) % ctx.k;
    }
    p.sHat = ctx.beta_extended(x, p.sHat);
    p.sHat1 = ctx.beta_extended(x, p.sHat1);
    if (!ctx.typical_seq(s) || !ctx.typical_seq(p.sHat)) return;
    auto plan = ctx.plan(s, p.sHat);
    permute_layout(p.sHat1, p.sOut, plan.dest, false);
    permute_cells(p, plan.dest);
}

void pec(const ProtocolContext& ctx, Record& rec, BranchErrors& err) {
    const int n = ctx.cfg.n, L = ctx.lMax;
    if (rec.keyB.kind != KeyKind::sequence) {
        err.add("PEC: Bob's key register does not hold a sequence");
        return;
    }
    rec.teleAtBob = true;
    auto& b = rec.bob;
    for (int c = 0; c < L; ++c) {
        int a = b.sOut[n + c];
        if (a == kBot) continue;
        int g = ctx.cfg.fault == Fault::wrong_tau1 ? a + 1 : -(a + 1);
        twist_cell(rec, rec.alice.tele[c], b.tele[c], g, err, "PEC tau1");
    }
    for (int i = 0; i < n; ++i) {
        if (b.sOut[i] != kBot) continue;
        if (ctx.cfg.fault != Fault::skip_tau2) {
            int c = b.counter - 1;
            twist_cell(rec, rec.alice.tele[c], b.tele[c], rec.keyB.value[i] + 1, err, "PEC tau2");
        }
        shift(b.counter, L);
    }
    rec.teleAtBob = false;
    for (int i = n - 1; i >= 0; --i)
        if (b.sOut[i] == kBot) unshift(b.counter, L);
}

void ipa_party(const ProtocolContext& ctx, const std::vector<int>& x, const KeyRegister& key, PartyRegisters& p,
               BranchErrors& err, const char* who) {
    if (key.kind != KeyKind::sequence) {
        err.add(std::string("IPA(") + who + "): key register does not hold a sequence");
        return;
    }
    const Seq& s = key.value;
    const int n = ctx.cfg.n, L = ctx.lMax;
    for (int i = 0; i < n; ++i) {
        if (p.sOut[i] != kBot) continue;
        std::swap(p.shieldTilde[i], p.tele[p.counter - 1]);
        shift(p.counter, L);
    }
    for (int i = n - 1; i >= 0; --i)
        if (p.sOut[i] == kBot) unshift(p.counter, L);
    const bool bothTypical = ctx.typical_seq(s) && ctx.typical_seq(p.sHat);
    if (bothTypical) {
        if (ctx.cfg.fault != Fault::skip_ipa_swap) std::swap(p.shield, p.shieldTilde);
        auto plan = ctx.plan(s, p.sHat);
        permute_layout(p.sHat1, p.sOut, plan.dest, true);
    }
    p.sHat = ctx.beta_extended(x, p.sHat);
    p.sHat1 = ctx.beta_extended(x, p.sHat1);
    for (int i = 0; i < n; ++i) {
        if (p.sHat[i] == kBot || p.sHat1[i] == kBot) {
            err.add(std::string("IPA(") + who + "): bottom left in the copy registers");
            return;
        }
        p.sHat[i] = ((p.sHat[i] - s[i]) % ctx.k + ctx.k) % ctx.k;
        p.sHat1[i] = ((p.sHat1[i] - s[i]) % ctx.k + ctx.k) % ctx.k;
    }
}

KeyRegister decompress(const ProtocolContext& ctx, const KeyRegister& k) {
    if (k.kind != KeyKind::code) return k;
    return {KeyKind::sequence, ctx.codec.decode_extended(ctx.codec.rank_of(k.value))};
}

}  // namespace

ProtocolState run_step(const ProtocolContext& ctx, const ProtocolState& in, Step step) {
    const auto& order = all_steps();
    if (in.stepsDone >= static_cast<int>(order.size()) || order[in.stepsDone] != step)
        throw std::logic_error("step " + to_string(step) + " applied out of order");
    ProtocolState st = in;
    st.stepsDone += 1;
    const int n = ctx.cfg.n;
    const double N = to_double(ctx.mass);

    switch (step) {
        case Step::S1: {
            if (std::pow(static_cast<double>(ctx.k), n) > (1 << 22)) throw std::invalid_argument("ancilla too large");
            const auto total = static_cast<std::uint64_t>(std::llround(std::pow(ctx.k, n)));
            for (std::uint64_t code = 0; code < total; ++code) {
                Seq s = unpack(code, n, ctx.k);
                double p = 1.0;
                for (int a : s) p *= ctx.cfg.key.coeffs[a];
                st.ancilla.push_back({KeyRegister{KeyKind::sequence, s}, std::sqrt(p)});
            }
            return st;
        }
        case Step::S2: {
            for (auto& [reg, amp] : st.ancilla) {
                auto c = ctx.codec.encode(reg.value);
                reg = c ? KeyRegister{KeyKind::code, *c} : KeyRegister{KeyKind::empty, {}};
            }
            return st;
        }
        case Step::S3: {
            double abort = 0.0;
            std::vector<std::pair<KeyRegister, double>> kept;
            for (auto& term : st.ancilla) {
                if (term.first.kind == KeyKind::empty) abort += term.second * term.second;
                else kept.push_back(term);
            }
            st.abortMass = 1.0 - N;
            (void)abort;
            for (auto& term : kept) term.second /= std::sqrt(N);
            st.ancilla = std::move(kept);
            st.xorApplied = true;
            st.ledger.classicalDigits += 1;
            return st;
        }
        case Step::S4: {
            std::vector<std::uint64_t> xs;
            if (ctx.dn <= static_cast<std::uint64_t>(ctx.cfg.maxEnumeratedOutcomes)) {
                for (std::uint64_t x = 0; x < ctx.dn; ++x) xs.push_back(x);
                st.outcomesEnumerated = true;
            } else {
                for (int t = 0; t < ctx.cfg.sampledOutcomes; ++t) {
                    Rng rng(derive_seed(ctx.cfg.seed, static_cast<std::uint64_t>(t)));
                    xs.push_back(static_cast<std::uint64_t>(rng.integer(0, static_cast<int>(ctx.dn - 1))));
                }
                st.outcomesEnumerated = false;
            }
            const double w = N / static_cast<double>(xs.size());
            st.outcomes.resize(xs.size());
            parallel_for(xs.size(), ctx.cfg.jobs, [&](std::size_t i) {
                OutcomeBranch& b = st.outcomes[i];
                b.xRank = xs[i];
                b.x = ctx.codec.digits_of(xs[i]);
                b.weight = w;
                for (const auto& [reg, amp] : st.ancilla) {
                    Record rec = initial_record(ctx);
                    auto r = digits_sub(b.x, reg.value, ctx.k);
                    const auto& res = st.resource[ctx.codec.rank_of(r)];
                    rec.amp = amp;
                    rec.keyA = reg;
                    rec.keyB = {KeyKind::code, r};
                    rec.words = res.words;
                    b.records.push_back(std::move(rec));
                }
            });
            st.ancilla.clear();
            st.resource.clear();
            st.measured = true;
            st.ledger.classicalDigits += ctx.L;
            return st;
        }
        default: break;
    }

    if (!st.measured) throw std::logic_error("post-measurement step before S4");
    std::vector<BranchErrors> errs(st.outcomes.size());
    parallel_for(st.outcomes.size(), ctx.cfg.jobs, [&](std::size_t bi) {
        auto& b = st.outcomes[bi];
        for (auto& rec : b.records) {
            switch (step) {
                case Step::S5:
                    if (rec.keyB.kind == KeyKind::code) rec.keyB.value = digits_sub(b.x, rec.keyB.value, ctx.k);
                    else errs[bi].add("S5: Bob's register does not hold a code");
                    break;
                case Step::S6:
                    rec.keyA = decompress(ctx, rec.keyA);
                    rec.keyB = decompress(ctx, rec.keyB);
                    break;
                case Step::PA:
                    pa_party(ctx, b.x, rec.keyA, rec.alice, errs[bi], "Alice");
                    pa_party(ctx, b.x, rec.keyB, rec.bob, errs[bi], "Bob");
                    break;
                case Step::PEC: pec(ctx, rec, errs[bi]); break;
                case Step::IPA:
                    ipa_party(ctx, b.x, rec.keyA, rec.alice, errs[bi], "Alice");
                    ipa_party(ctx, b.x, rec.keyB, rec.bob, errs[bi], "Bob");
                    break;
                case Step::S8: break;
                default: break;
            }
        }
    });
    if (step == Step::PEC) st.ledger.teleportedCells += 2LL * ctx.lMax;
    for (std::size_t bi = 0; bi < errs.size(); ++bi)
        for (const auto& e : errs[bi].list)
            if (st.structuralErrors.size() < 32)
                st.structuralErrors.push_back("x=" + std::to_string(st.outcomes[bi].xRank) + " " + e);
    return st;
}

ProtocolState run_all_steps(const ProtocolContext& ctx, const StepObserver& observer) {
    ProtocolState st = initial_state(ctx);
    for (Step s : all_steps()) {
        st = run_step(ctx, st, s);
        if (observer) observer(s, st);
    }
    return st;
}

namespace {

struct LabelView {
    double amp;
    KeyRegister keyA, keyB;
    Seq ancillas;
    std::vector<TwistWord> slots;
    bool operator==(const LabelView&) const = default;
};

LabelView label_view(const Record& rec) {
    LabelView v{rec.amp, rec.keyA, rec.keyB, {}, {}};
    for (const PartyRegisters* p : {&rec.alice, &rec.bob}) {
        for (const Seq* q : {&p->sHat, &p->sHat1, &p->sOut}) v.ancillas.insert(v.ancillas.end(), q->begin(), q->end());
        v.ancillas.push_back(p->counter);
        for (const auto* slots : {&p->shield, &p->shieldTilde, &p->tele})
            for (int c : *slots) v.slots.push_back(c < 0 ? TwistWord{0} : rec.words[c]);
    }
    v.ancillas.push_back(rec.teleAtBob ? 1 : 0);
    return v;
}

}  // namespace

RecordAudit audit_records(const ProtocolContext& ctx, const ProtocolState& s) {
    RecordAudit a;
    const int n = ctx.cfg.n;
    const PartyRegisters init = initial_party(ctx);
    auto fail = [&](const std::string& m) {
        if (a.failures.size() < 16) a.failures.push_back(m);
    };
    if (!s.measured) {
        a.labelExact = a.ancillaRestored = a.xIndependent = false;
        a.copyArrangement = "broken";
        fail("protocol not measured");
        return a;
    }
    std::optional<std::vector<int>> arrangement;
    bool consistent = true, identity = true, broken = false;
    for (const auto& b : s.outcomes) {
        for (const auto& rec : b.records) {
            // ancillas
            auto sameAnc = [&](const PartyRegisters& p) {
                return p.sHat == init.sHat && p.sHat1 == init.sHat1 && p.sOut == init.sOut && p.counter == 1 &&
                       p.shieldTilde == init.shieldTilde && p.tele == init.tele;
            };
            if (!sameAnc(rec.alice) || !sameAnc(rec.bob) || rec.teleAtBob) {
                if (a.ancillaRestored) fail("ancilla not restored at x=" + std::to_string(b.xRank));
                a.ancillaRestored = false;
            }
            // labels
            bool exact = rec.keyA.kind == KeyKind::sequence && rec.keyA == rec.keyB;
            std::vector<int> arr(n, -1);
            if (exact) {
                std::vector<char> seen(n, 0);
                for (int p = 0; p < n; ++p) {
                    int c = rec.alice.shield[p];
                    if (c < 0 || c != rec.bob.shield[p] || seen[c]) {
                        exact = false;
                        break;
                    }
                    seen[c] = 1;
                    arr[p] = c;
                    if (rec.words[c] != TwistWord{rec.keyA.value[p] + 1}) exact = false;
                }
            }
            if (!exact) {
                if (a.labelExact) fail("label mismatch at x=" + std::to_string(b.xRank));
                a.labelExact = false;
                bool overflow = rec.keyA.kind == KeyKind::sequence && ctx.typical_seq(rec.keyA.value) &&
                                !ctx.typical_seq(ctx.beta_extended(b.x, rec.keyA.value));
                if (overflow) a.overflowMass += b.weight * rec.amp * rec.amp;
                a.mismatchMass += b.weight * rec.amp * rec.amp;
                broken = true;
                continue;
            }
            for (int p = 0; p < n; ++p)
                if (arr[p] != p) identity = false;
            if (!arrangement) arrangement = arr;
            else if (*arrangement != arr) consistent = false;
        }
    }
    a.copyArrangement = broken ? "broken" : identity ? "identity" : consistent ? "consistent" : "s_dependent";
    // announced-outcome independence, compared on what each slot holds rather than which copy
    std::vector<std::vector<LabelView>> views;
    for (const auto& b : s.outcomes) {
        std::vector<LabelView> v;
        for (const auto& rec : b.records) v.push_back(label_view(rec));
        views.push_back(std::move(v));
    }
    for (std::size_t i = 1; i < views.size(); ++i)
        if (views[i] != views[0]) {
            a.xIndependent = false;
            fail("records differ between x=" + std::to_string(s.outcomes[0].xRank) + " and x=" +
                 std::to_string(s.outcomes[i].xRank));
            break;
        }
    return a;
}

DilutionReport make_report(const ProtocolContext& ctx, const ProtocolState& st) {
    DilutionReport r;
    r.n = ctx.cfg.n;
    r.L = ctx.L;
    r.lMax = ctx.lMax;
    r.dn = ctx.dn;
    r.eta = ctx.codec.eta();
    r.keyBitsConsumed = ctx.L * std::log2(static_cast<double>(ctx.k));
    r.keyRate = r.keyBitsConsumed / ctx.cfg.n;
    r.entropy = ctx.cfg.key.entropy();
    r.ebits.cells = st.ledger.teleportedCells;
    r.ebits.cellDimA = ctx.dA + 1;
    r.ebits.cellDimB = ctx.dB + 1;
    r.ebits.qubitPairs = r.ebits.cells * static_cast<long long>(std::ceil(std::log2(static_cast<double>(ctx.dA + 1)) - 1e-12));
    {
        Rational four = Rational(4) * ctx.cfg.delta * ctx.cfg.n;
        BigInt q = numerator(four) / denominator(four);
        if (q * denominator(four) != numerator(four)) q += 1;
        r.ebits.nominal = q.convert_to<long long>();
    }
    auto audit = audit_records(ctx, st);
    r.ancillaRestored = audit.ancillaRestored;
    r.xIndependent = audit.xIndependent;
    r.labelExact = audit.labelExact;
    r.copyArrangement = audit.copyArrangement;
    r.overflowMass = audit.overflowMass;
    r.failureProbability = st.abortMass;
    r.typicalMass = to_double(ctx.mass);
    r.outcomesEvaluated = st.outcomes.size();
    r.outcomesEnumerated = st.outcomesEnumerated;
    r.structuralErrors = st.structuralErrors;
    for (const auto& f : audit.failures) r.structuralErrors.push_back(f);
    if (audit.labelExact && audit.ancillaRestored && st.structuralErrors.empty())
        r.keyMatrixDistance = key_matrix_comparison(ctx, st).dExact;
    r.comparison = compare_to_target(ctx, st);
    r.traceDistanceToTarget = r.comparison.dExact;
    r.distanceToTypical = r.comparison.dTypical;
    r.backend = to_string(ctx.cfg.backend);
    return r;
}

}  // namespace privkey
