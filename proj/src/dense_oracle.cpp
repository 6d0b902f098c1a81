#include "privkey/dense_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace privkey {

std::string to_string(OracleScope s) { return s == OracleScope::per_step ? "per_step" : "end_to_end"; }

OracleScope oracle_scope_from_string(const std::string& s) {
    if (s == "per_step") return OracleScope::per_step;
    if (s == "end_to_end") return OracleScope::end_to_end;
    throw std::invalid_argument("unknown oracle scope '" + s + "'");
}

OracleLayout::OracleLayout(const ProtocolContext& ctx) : n(ctx.cfg.n), L(ctx.L), lMax(ctx.lMax) {
    int at = 0;
    auto take = [&](int len) {
        int o = at;
        at += len;
        return o;
    };
    keyA = take(n);
    keyB = take(n);
    resA = take(L);
    flag = take(1);
    for (auto& p : party) {
        p.sHat = take(n);
        p.sHat1 = take(n);
        p.sOut = take(n + lMax);
        p.counter = take(1);
        p.shield = take(n);
        p.tilde = take(n);
        p.tele = take(lMax);
    }
    env = take(n);
    size = at;
}

namespace {

constexpr std::size_t kTermLimit = 4000000;

using Emit = std::function<void(RegisterTuple&&, cplx)>;

// Applies a per-tuple linear map; terms are merged and zeros dropped.
SparseKet transform(const SparseKet& in, const std::function<void(const RegisterTuple&, cplx, const Emit&)>& f) {
    SparseKet out;
    Emit emit = [&](RegisterTuple&& t, cplx a) { out[std::move(t)] += a; };
    for (const auto& [t, a] : in) f(t, a, emit);
    for (auto it = out.begin(); it != out.end();) {
        if (std::abs(it->second) < 1e-15) it = out.erase(it);
        else ++it;
    }
    if (out.size() > kTermLimit) throw std::invalid_argument("dense oracle capacity exceeded");
    return out;
}

SparseKet relabel(const SparseKet& in, const std::function<void(RegisterTuple&)>& f) {
    return transform(in, [&](const RegisterTuple& t, cplx a, const Emit& emit) {
        RegisterTuple u = t;
        f(u);
        emit(std::move(u), a);
    });
}

Seq cells(const RegisterTuple& t, int off, int len) { return Seq(t.begin() + off, t.begin() + off + len); }
void put(RegisterTuple& t, int off, const Seq& v) { std::copy(v.begin(), v.end(), t.begin() + off); }

// U on the copy whose halves sit in Alice's cell ia and Bob's cell ib; identity when either is bottom.
SparseKet pair_unitary(const SparseKet& in, const ProtocolContext& ctx,
                       const std::function<const Mat*(const RegisterTuple&, int&, int&)>& select) {
    const int dB = ctx.dB;
    return transform(in, [&](const RegisterTuple& t, cplx a, const Emit& emit) {
        int ia = -1, ib = -1;
        const Mat* u = select(t, ia, ib);
        if (!u || t[ia] < 0 || t[ib] < 0) {
            emit(RegisterTuple(t), a);
            return;
        }
        const int col = t[ia] * dB + t[ib];
        for (int row = 0; row < u->rows(); ++row) {
            cplx v = (*u)(row, col);
            if (v == cplx(0)) continue;
            RegisterTuple w = t;
            w[ia] = row / dB;
            w[ib] = row % dB;
            emit(std::move(w), a * v);
        }
    });
}

void shift(int& c, int lMax) { c = c % lMax + 1; }
void unshift(int& c, int lMax) { c = (c - 2 + lMax) % lMax + 1; }

SparseKet apply_pa(const ProtocolContext& ctx, const OracleLayout& lay, const std::vector<int>& x, const SparseKet& in,
                   int who) {
    const int n = lay.n;
    const auto& P = lay.party[who];
    const int keyOff = who == 0 ? lay.keyA : lay.keyB;
    return relabel(in, [&](RegisterTuple& t) {
        Seq s = cells(t, keyOff, n);
        Seq h = cells(t, P.sHat, n), h1 = cells(t, P.sHat1, n);
        for (int i = 0; i < n; ++i) {
            h[i] = (h[i] + s[i]) % ctx.k;
            h1[i] = (h1[i] + s[i]) % ctx.k;
        }
        h = ctx.beta_extended(x, h);
        h1 = ctx.beta_extended(x, h1);
        put(t, P.sHat, h);
        put(t, P.sHat1, h1);
        if (!ctx.typical_seq(s) || !ctx.typical_seq(h)) return;
        auto plan = ctx.plan(s, h);
        // sHat1 and sOut are adjacent, as are shield, tilde and tele
        RegisterTuple k0 = t;
        for (std::size_t src = 0; src < plan.dest.size(); ++src) {
            t[P.sHat1 + plan.dest[src]] = k0[P.sHat1 + src];
            t[P.shield + plan.dest[src]] = k0[P.shield + src];
        }
    });
}

SparseKet apply_pec(const ProtocolContext& ctx, const OracleLayout& lay, const SparseKet& in) {
    const int n = lay.n, L = lay.lMax;
    const auto& A = lay.party[0];
    const auto& B = lay.party[1];
    SparseKet st = in;
    // untwist the cells listed in s_err
    std::vector<Mat> adj;
    for (const auto& u : ctx.cfg.twist.blocks) adj.push_back(u.adjoint());
    for (int c = 0; c < L; ++c)
        st = pair_unitary(st, ctx, [&](const RegisterTuple& t, int& ia, int& ib) -> const Mat* {
            int a = t[B.sOut + n + c];
            ia = A.tele + c;
            ib = B.tele + c;
            return a >= 0 ? &adj[a] : nullptr;
        });
    for (int i = 0; i < n; ++i) {
        st = pair_unitary(st, ctx, [&](const RegisterTuple& t, int& ia, int& ib) -> const Mat* {
            if (t[B.sOut + i] != kBot) return nullptr;
            int c = t[B.counter] - 1;
            ia = A.tele + c;
            ib = B.tele + c;
            return &ctx.cfg.twist.blocks.at(t[lay.keyB + i]);
        });
        st = relabel(st, [&](RegisterTuple& t) {
            if (t[B.sOut + i] == kBot) shift(t[B.counter], L);
        });
    }
    for (int i = n - 1; i >= 0; --i)
        st = relabel(st, [&](RegisterTuple& t) {
            if (t[B.sOut + i] == kBot) unshift(t[B.counter], L);
        });
    return st;
}

SparseKet apply_ipa(const ProtocolContext& ctx, const OracleLayout& lay, const std::vector<int>& x, const SparseKet& in,
                    int who) {
    const int n = lay.n, L = lay.lMax;
    const auto& P = lay.party[who];
    const int keyOff = who == 0 ? lay.keyA : lay.keyB;
    SparseKet st = in;
    for (int i = 0; i < n; ++i)
        st = relabel(st, [&](RegisterTuple& t) {
            if (t[P.sOut + i] != kBot) return;
            std::swap(t[P.tilde + i], t[P.tele + t[P.counter] - 1]);
            shift(t[P.counter], L);
        });
    for (int i = n - 1; i >= 0; --i)
        st = relabel(st, [&](RegisterTuple& t) {
            if (t[P.sOut + i] == kBot) unshift(t[P.counter], L);
        });
    return relabel(st, [&](RegisterTuple& t) {
        Seq s = cells(t, keyOff, n);
        Seq h = cells(t, P.sHat, n);
        if (ctx.typical_seq(s) && ctx.typical_seq(h)) {
            for (int i = 0; i < n; ++i) std::swap(t[P.shield + i], t[P.tilde + i]);
            auto plan = ctx.plan(s, h);
            RegisterTuple k0 = t;
            for (std::size_t src = 0; src < plan.dest.size(); ++src)
                t[P.sHat1 + src] = k0[P.sHat1 + plan.dest[src]];
        }
        Seq h1 = cells(t, P.sHat1, n);
        h = ctx.beta_extended(x, h);
        h1 = ctx.beta_extended(x, h1);
        for (int i = 0; i < n; ++i) {
            h[i] = ((h[i] - s[i]) % ctx.k + ctx.k) % ctx.k;
            h1[i] = ((h1[i] - s[i]) % ctx.k + ctx.k) % ctx.k;
        }
        put(t, P.sHat, h);
        put(t, P.sHat1, h1);
    });
}

SparseKet rotate_keys(const ProtocolContext& ctx, const OracleLayout& lay, const SparseKet& in) {
    SparseKet st = in;
    for (int side = 0; side < 2; ++side) {
        const Mat& basis = side == 0 ? ctx.cfg.key.basisA : ctx.cfg.key.basisB;
        const int off = side == 0 ? lay.keyA : lay.keyB;
        for (int i = 0; i < lay.n; ++i)
            st = transform(st, [&](const RegisterTuple& t, cplx a, const Emit& emit) {
                int v = t[off + i];
                if (v < 0) {
                    emit(RegisterTuple(t), a);
                    return;
                }
                for (int row = 0; row < basis.rows(); ++row) {
                    if (basis(row, v) == cplx(0)) continue;
                    RegisterTuple w = t;
                    w[off + i] = row;
                    emit(std::move(w), a * basis(row, v));
                }
            });
    }
    return st;
}

SparseKet decode_key(const ProtocolContext& ctx, const OracleLayout& lay, const SparseKet& in, int off) {
    return relabel(in, [&](RegisterTuple& t) {
        if (t[off] == kEmptyCell) return;
        auto s = ctx.codec.decode_extended(ctx.codec.rank_of(cells(t, off, lay.L)));
        put(t, off, s);
    });
}

void encode_key(RegisterTuple& t, int off, const OracleLayout& lay, const KeyRegister& k) {
    if (k.kind == KeyKind::empty) {
        for (int i = 0; i < lay.n; ++i) t[off + i] = kEmptyCell;
        return;
    }
    for (int i = 0; i < lay.n; ++i) t[off + i] = i < static_cast<int>(k.value.size()) ? k.value[i] : 0;
}

struct ShieldExpansion {
    int r = 0;
    std::vector<double> q;
    std::vector<Vec> phi;
};

ShieldExpansion expand_shield(const ProtocolContext& ctx) {
    ShieldExpansion e;
    auto eig = hermitian_eig(ctx.cfg.shieldBase.rho());
    for (int i = 0; i < eig.values.size(); ++i)
        if (eig.values[i] > kPsdClip) {
            e.q.push_back(eig.values[i]);
            e.phi.push_back(eig.vectors.col(i));
        }
    e.r = static_cast<int>(e.q.size());
    return e;
}

// Emits amp * (x)_c W_c |chi_c> with copy halves placed at the given Alice/Bob cells.
void expand_copies(const ProtocolContext& ctx, const OracleLayout& lay, const ShieldExpansion& sh,
                   const RegisterTuple& base, cplx amp, const std::vector<TwistWord>& words,
                   const std::vector<int>& cellA, const std::vector<int>& cellB, SparseKet& out) {
    const int n = lay.n, ds = ctx.dA * ctx.dB;
    std::vector<std::vector<Vec>> w(n);
    for (int c = 0; c < n; ++c) {
        Mat m = word_matrix(words[c], ctx.cfg.twist);
        for (int j = 0; j < sh.r; ++j) w[c].push_back(m * sh.phi[j] * std::sqrt(sh.q[j]));
    }
    std::vector<int> dims(2 * n);
    for (int c = 0; c < n; ++c) {
        dims[2 * c] = sh.r;
        dims[2 * c + 1] = ds;
    }
    long long total = 1;
    for (int d : dims) total *= d;
    for (long long idx = 0; idx < total; ++idx) {
        auto dg = digits_of(idx, dims);
        cplx v = amp;
        RegisterTuple t = base;
        for (int c = 0; c < n && v != cplx(0); ++c) {
            v *= w[c][dg[2 * c]][dg[2 * c + 1]];
            t[lay.env + c] = dg[2 * c];
            if (cellA[c] >= 0) t[cellA[c]] = dg[2 * c + 1] / ctx.dB;
            if (cellB[c] >= 0) t[cellB[c]] = dg[2 * c + 1] % ctx.dB;
        }
        if (std::abs(v) > 1e-15) out[std::move(t)] += v;
    }
}

RegisterTuple blank_tuple(const OracleLayout& lay) {
    RegisterTuple t(lay.size, 0);
    for (const auto& p : lay.party) {
        for (int i = 0; i < lay.n + lay.lMax; ++i) t[p.sOut + i] = kBot;
        t[p.counter] = 1;
        for (int i = 0; i < lay.n; ++i) t[p.tilde + i] = kBot;
        for (int i = 0; i < lay.lMax; ++i) t[p.tele + i] = kBot;
    }
    return t;
}

double norm2(const SparseKet& a) {
    double s = 0.0;
    for (const auto& [t, v] : a) s += std::norm(v);
    return s;
}

void check_scale(const ProtocolContext& ctx, OracleScope scope) {
    if (ctx.cfg.n > 2 || ctx.k > 4 || ctx.dA > 2 || ctx.dB > 2)
        throw std::invalid_argument("dense oracle needs n <= 2, |A| <= 4 and shield halves of dimension <= 2");
    if (scope == OracleScope::end_to_end && ctx.dA * ctx.dB != 1)
        throw std::invalid_argument("end-to-end dense oracle needs a trivial shield");
}

}  // namespace

SparseKet records_to_ket(const ProtocolContext& ctx, const OracleLayout& lay, const std::vector<Record>& records,
                         bool rotated) {
    const auto sh = expand_shield(ctx);
    SparseKet out;
    const int n = lay.n;
    for (const auto& rec : records) {
        RegisterTuple t(lay.size, 0);
        encode_key(t, lay.keyA, lay, rec.keyA);
        encode_key(t, lay.keyB, lay, rec.keyB);
        t[lay.flag] = 0;
        std::vector<int> cellA(n, -1), cellB(n, -1);
        const PartyRegisters* ps[2] = {&rec.alice, &rec.bob};
        for (int w = 0; w < 2; ++w) {
            const auto& p = *ps[w];
            const auto& P = lay.party[w];
            put(t, P.sHat, p.sHat);
            put(t, P.sHat1, p.sHat1);
            put(t, P.sOut, p.sOut);
            t[P.counter] = p.counter;
            auto place = [&](const std::vector<int>& slots, int off) {
                for (std::size_t i = 0; i < slots.size(); ++i) {
                    t[off + static_cast<int>(i)] = kBot;
                    if (slots[i] >= 0) (w == 0 ? cellA : cellB)[slots[i]] = off + static_cast<int>(i);
                }
            };
            place(p.shield, P.shield);
            place(p.shieldTilde, P.tilde);
            place(p.tele, P.tele);
        }
        expand_copies(ctx, lay, sh, t, rec.amp, rec.words, cellA, cellB, out);
    }
    return rotated ? rotate_keys(ctx, lay, out) : out;
}

SparseKet dense_step(const ProtocolContext& ctx, const OracleLayout& lay, const std::vector<int>& x,
                     const SparseKet& in, Step step) {
    switch (step) {
        case Step::S5:
            return relabel(in, [&](RegisterTuple& t) {
                if (t[lay.keyB] == kEmptyCell) return;
                for (int i = 0; i < lay.L; ++i) t[lay.keyB + i] = ((x[i] - t[lay.keyB + i]) % ctx.k + ctx.k) % ctx.k;
            });
        case Step::S6: return decode_key(ctx, lay, decode_key(ctx, lay, in, lay.keyA), lay.keyB);
        case Step::PA: return apply_pa(ctx, lay, x, apply_pa(ctx, lay, x, in, 0), 1);
        case Step::PEC: return apply_pec(ctx, lay, in);
        case Step::IPA: return apply_ipa(ctx, lay, x, apply_ipa(ctx, lay, x, in, 0), 1);
        case Step::S8: return rotate_keys(ctx, lay, in);
        default: throw std::invalid_argument("dense_step handles post-measurement steps only");
    }
}

double ket_distance(const SparseKet& a, const SparseKet& b) {
    const double na = norm2(a), nb = norm2(b);
    cplx ip = 0;
    for (const auto& [t, v] : a) {
        auto it = b.find(t);
        if (it != b.end()) ip += std::conj(v) * it->second;
    }
    const double disc = (na + nb) * (na + nb) - 4.0 * std::norm(ip);
    return 0.5 * std::sqrt(std::max(0.0, disc));
}

DenseOracleReport dense_oracle_run(const ProtocolConfig& cfg, OracleScope scope) {
    ProtocolContext ctx(cfg);
    check_scale(ctx, scope);
    OracleLayout lay(ctx);
    DenseOracleReport rep;
    rep.scope = scope;

    if (scope == OracleScope::per_step) {
        ProtocolState st = initial_state(ctx);
        for (Step s : all_steps()) {
            ProtocolState next = run_step(ctx, st, s);
            if (st.measured) {
                StepDistance d{s, 0.0};
                for (std::size_t i = 0; i < st.outcomes.size(); ++i) {
                    const auto& b = st.outcomes[i];
                    SparseKet before = records_to_ket(ctx, lay, b.records, false);
                    SparseKet dense = dense_step(ctx, lay, b.x, before, s);
                    SparseKet symbolic = records_to_ket(ctx, lay, next.outcomes[i].records, s == Step::S8);
                    rep.maxTerms = std::max(rep.maxTerms, dense.size());
                    d.maxDistance = std::max(d.maxDistance, ket_distance(dense, symbolic));
                }
                rep.steps.push_back(d);
            }
            st = std::move(next);
        }
        rep.abortMass = st.abortMass;
        return rep;
    }

    // end to end, gate by gate from the resource state and the local ancilla
    const int n = lay.n;
    const auto sh = expand_shield(ctx);
    const auto res = build_resource_state(ctx);
    SparseKet st;
    const auto total = static_cast<std::uint64_t>(std::llround(std::pow(ctx.k, n)));
    std::vector<int> cellA(n), cellB(n);
    for (int c = 0; c < n; ++c) {
        cellA[c] = lay.party[0].shield + c;
        cellB[c] = lay.party[1].shield + c;
    }
    for (std::uint64_t code = 0; code < total; ++code) {
        Seq s = unpack(code, n, ctx.k);
        double p = 1.0;
        for (int a : s) p *= ctx.cfg.key.coeffs[a];
        for (std::uint64_t r = 0; r < ctx.dn; ++r) {
            RegisterTuple t = blank_tuple(lay);
            put(t, lay.keyA, s);
            auto rd = ctx.codec.digits_of(r);
            put(t, lay.resA, rd);
            for (int i = 0; i < n; ++i) t[lay.keyB + i] = i < lay.L ? rd[i] : 0;
            std::vector<TwistWord> words(n);
            if (!res.labels[r].empty())
                for (int c = 0; c < n; ++c) words[c] = {res.labels[r][c] + 1};
            expand_copies(ctx, lay, sh, t, std::sqrt(p / static_cast<double>(ctx.dn)), words, cellA, cellB, st);
        }
    }
    // compression, abort test and controlled XOR onto Alice's resource key
    st = relabel(st, [&](RegisterTuple& t) {
        Seq s = cells(t, lay.keyA, n);
        auto c = ctx.codec.encode(s);
        if (!c) {
            for (int i = 0; i < n; ++i) t[lay.keyA + i] = kEmptyCell;
            t[lay.flag] = 1;
            return;
        }
        for (int i = 0; i < n; ++i) t[lay.keyA + i] = i < lay.L ? (*c)[i] : 0;
    });
    SparseKet kept;
    for (const auto& [t, a] : st) {
        if (t[lay.flag] == 1) rep.abortMass += std::norm(a);
        else kept[t] = a;
    }
    st = relabel(kept, [&](RegisterTuple& t) {
        for (int i = 0; i < lay.L; ++i) t[lay.resA + i] = (t[lay.resA + i] + t[lay.keyA + i]) % ctx.k;
    });
    // measurement of Alice's resource key
    std::map<std::vector<int>, SparseKet> branches;
    for (const auto& [t, a] : st) branches[cells(t, lay.resA, lay.L)][t] = a;
    ProtocolContext symCtx(cfg);
    ProtocolState sym = run_all_steps(symCtx);
    Mat rhoOut;
    std::map<RegisterTuple, int> sysIndex;
    std::vector<std::pair<double, std::map<RegisterTuple, std::map<RegisterTuple, cplx>>>> outputs;
    double symDist = 0.0;
    for (auto& [x, branch] : branches) {
        const double w = norm2(branch);
        SparseKet b = relabel(branch, [&](RegisterTuple& t) {
            for (int i = 0; i < lay.L; ++i) t[lay.resA + i] = 0;
        });
        for (Step s : {Step::S5, Step::S6, Step::PA, Step::PEC, Step::IPA, Step::S8}) {
            b = dense_step(ctx, lay, x, b, s);
            rep.maxTerms = std::max(rep.maxTerms, b.size());
        }
        const double scale = 1.0 / std::sqrt(w);
        for (auto& [t, a] : b) a *= scale;
        const auto xr = ctx.codec.rank_of(x);
        for (const auto& ob : sym.outcomes)
            if (ob.xRank == xr) {
                SparseKet symKet = records_to_ket(ctx, lay, ob.records, true);
                symDist = std::max(symDist, ket_distance(b, symKet));
            }
        RegisterTuple initial = blank_tuple(lay);
        std::map<RegisterTuple, std::map<RegisterTuple, cplx>> byRest;
        for (const auto& [t, a] : b) {
            RegisterTuple sys, rest = t;
            for (int i = 0; i < n; ++i) sys.push_back(t[lay.keyA + i]);
            for (int i = 0; i < n; ++i) sys.push_back(t[lay.keyB + i]);
            for (int i = 0; i < n; ++i) sys.push_back(t[lay.party[0].shield + i]);
            for (int i = 0; i < n; ++i) sys.push_back(t[lay.party[1].shield + i]);
            for (int i = 0; i < n; ++i) {
                rest[lay.keyA + i] = rest[lay.keyB + i] = 0;
                rest[lay.party[0].shield + i] = rest[lay.party[1].shield + i] = 0;
            }
            for (int i = 0; i < n; ++i) rest[lay.env + i] = 0;
            if (rest != initial) rep.ancillaRestored = false;
            RegisterTuple restFull = rest;
            for (int i = 0; i < n; ++i) restFull[lay.env + i] = t[lay.env + i];
            byRest[restFull][sys] += a;
            sysIndex.emplace(sys, 0);
        }
        outputs.emplace_back(w, std::move(byRest));
    }
    rep.distanceToSymbolic = symDist;
    // target support in the same coordinates
    GeneralizedPrivateState g = cfg.single_copy();
    Mat target = target_power(g, n);
    std::vector<int> tdims;
    for (int i = 0; i < n; ++i) tdims.push_back(g.dim_key_a());
    for (int i = 0; i < n; ++i) tdims.push_back(g.dim_key_b());
    for (int i = 0; i < n; ++i) tdims.push_back(ctx.dA);
    for (int i = 0; i < n; ++i) tdims.push_back(ctx.dB);
    for (long long i = 0; i < target.rows(); ++i)
        if (std::abs(target(i, i)) > 1e-15) sysIndex.emplace(digits_of(i, tdims), 0);
    int next = 0;
    for (auto& [k, v] : sysIndex) v = next++;
    Mat out = Mat::Zero(next, next), tgt = Mat::Zero(next, next);
    for (const auto& [w, byRest] : outputs)
        for (const auto& [rest, vec] : byRest) {
            Vec v = Vec::Zero(next);
            for (const auto& [sys, a] : vec) v[sysIndex.at(sys)] = a;
            out += w * v * v.adjoint();
        }
    for (long long i = 0; i < target.rows(); ++i) {
        auto si = sysIndex.find(digits_of(i, tdims));
        if (si == sysIndex.end()) continue;
        for (long long j = 0; j < target.cols(); ++j) {
            auto sj = sysIndex.find(digits_of(j, tdims));
            if (sj != sysIndex.end()) tgt(si->second, sj->second) = target(i, j);
        }
    }
    rep.distanceToTarget = 0.5 * trace_norm(out - tgt) + 0.5 * rep.abortMass;
    return rep;
}

}  // namespace privkey
