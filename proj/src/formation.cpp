#include <cmath>
#include <map>
#include <stdexcept>

#include "privkey/dilution.hpp"

namespace privkey {

namespace {

// Keeps the first `keep` copies of a component output and orders them copy by copy as (Alice, Bob).
Mat reduce_component(const ReconstructedOutput& out, int copies, int keep) {
    std::vector<int> keepIdx, perm;
    for (int grp = 0; grp < 4; ++grp)
        for (int j = 0; j < keep; ++j) keepIdx.push_back(grp * copies + j);
    if (keep == 0) {
        Mat m(1, 1);
        m(0, 0) = out.good.trace();
        return m;
    }
    Mat kept = partial_trace_matrix(out.good, out.dims, keepIdx);
    std::vector<int> keptDims;
    for (int idx : keepIdx) keptDims.push_back(out.dims[idx]);
    // kept order is (A_1..A_k, B_1..B_k, A'_1..A'_k, B'_1..B'_k); want (A_j, A'_j, B_j, B'_j) per copy
    for (int j = 0; j < keep; ++j) {
        perm.push_back(j);
        perm.push_back(2 * keep + j);
        perm.push_back(keep + j);
        perm.push_back(3 * keep + j);
    }
    return permute_matrix(kept, keptDims, perm);
}

}  // namespace

FormationReport formation_protocol_run(const Ensemble& e, int n, const Rational& delta0,
                                       const std::vector<ComponentConfig>& perComponent) {
    if (e.empty()) throw std::invalid_argument("empty ensemble");
    if (e.size() > 2) throw std::invalid_argument("formation run supports at most two ensemble members");
    if (perComponent.size() != e.size()) throw std::invalid_argument("one component configuration per member needed");
    if (n < 1) throw std::invalid_argument("n must be positive");
    const int m = static_cast<int>(e.size());
    RegisterState mix = ensemble_mixture(e);
    const int dAlice = mix.shape().dims[0], dBob = mix.shape().dims[1];
    if (std::pow(static_cast<double>(dAlice * dBob), n) > 1024) throw std::invalid_argument("formation run too large");

    FormationReport rep;
    rep.n = n;
    rep.delta0 = delta0;
    std::vector<std::string> alphabet;
    std::vector<Rational> probs;
    for (int i = 0; i < m; ++i) {
        alphabet.push_back(std::to_string(i));
        probs.push_back(rational_from_double(e[i].first));
    }
    SourceSpec typeSpec(alphabet, probs, n, delta0);
    TypicalSet types = enumerate_typical_set(typeSpec);
    rep.typeMass = to_double(types.mass);

    std::vector<ReconstructedOutput> outputs;
    double rhsC = 0.0;
    for (int i = 0; i < m; ++i) {
        const double p = e[i].first;
        const auto& g = e[i].second;
        // worst-case copy count of member i in a typical type sequence
        Rational lr = Rational(n) * probs[i] * (Rational(1) + delta0);
        BigInt q = numerator(lr) / denominator(lr);
        if (q * denominator(lr) != numerator(lr)) q += 1;
        const int lPlus = std::max(1, q.convert_to<int>());
        rep.lPlus.push_back(lPlus);
        ProtocolConfig cfg = ProtocolConfig::from_state(g, lPlus, perComponent[i].delta);
        cfg.eta = perComponent[i].eta;
        ProtocolContext ctx(cfg);
        ProtocolState st = run_all_steps(ctx);
        rep.components.push_back(make_report(ctx, st));
        auto out = reconstruct_output(ctx, st);
        if (out.leakage > 1e-14) rep.exact = false;
        outputs.push_back(std::move(out));

        const double S = g.key.entropy();
        const double logA = std::log2(static_cast<double>(ctx.k));
        const double etaBits = ctx.codec.eta() * logA;
        const double c = S + etaBits + 2.0 * to_double(perComponent[i].delta);
        rep.chargedKeyBits += std::ceil(lPlus * c - 1e-9);
        rep.actualKeyBits += ctx.L * logA;
        rep.kfValue += p * S;
        rhsC += (c + 1.0) / n;
        rep.rateBound += p * S + to_double(delta0) * p * S + (1.0 + to_double(delta0)) * p * (etaBits + 2.0 * to_double(perComponent[i].delta));
    }
    rep.rateBound += rhsC;
    rep.rate = rep.chargedKeyBits / n;
    rep.rateWithinBound = rep.rate <= rep.rateBound + 1e-9;

    // per-member reduced outputs, cached by the number of copies kept
    std::vector<std::map<int, Mat>> reduced(m);
    auto reduced_for = [&](int i, int keep) -> const Mat& {
        auto it = reduced[i].find(keep);
        if (it == reduced[i].end())
            it = reduced[i].emplace(keep, reduce_component(outputs[i], rep.lPlus[i], keep)).first;
        return it->second;
    };
    std::vector<Mat> memberAB;
    for (const auto& [p, g] : e) memberAB.push_back(alice_bob_form(g).rho());

    const long long D = static_cast<long long>(std::llround(std::pow(dAlice * dBob, n)));
    Mat G = Mat::Zero(D, D), mixture = Mat::Zero(D, D);
    std::vector<int> copyDims;
    for (int t = 0; t < n; ++t) {
        copyDims.push_back(dAlice);
        copyDims.push_back(dBob);
    }
    for (std::size_t idx = 0; idx < types.size(); ++idx) {
        Seq s = types.member(idx);
        double ps = 1.0;
        for (int a : s) ps *= e[a].first;
        auto counts = symbol_counts(s, m);
        Mat prod = Mat::Identity(1, 1);
        std::vector<int> offset(m, 0);
        for (int i = 0; i < m; ++i) {
            if (counts[i] > rep.lPlus[i]) throw std::logic_error("typical type sequence exceeds the copy budget");
            offset[i] = i == 0 ? 0 : offset[i - 1] + counts[i - 1];
            prod = kron(prod, reduced_for(i, counts[i]));
        }
        std::vector<int> perm, seen(m, 0);
        Mat ideal = Mat::Identity(1, 1);
        for (int t = 0; t < n; ++t) {
            const int src = offset[s[t]] + seen[s[t]]++;
            perm.push_back(2 * src);
            perm.push_back(2 * src + 1);
            ideal = kron(ideal, memberAB[s[t]]);
        }
        G += ps * permute_matrix(prod, copyDims, perm);
        mixture += (ps / rep.typeMass) * ideal;
    }
    Mat target = mix.rho();
    for (int t = 1; t < n; ++t) target = kron(target, mix.rho());
    const double success = G.trace().real();
    rep.successProbability = success;
    rep.traceDistance = 0.5 * trace_norm(G - target) + 0.5 * (1.0 - success);
    rep.mixtureDistance = success > 0 ? 0.5 * trace_norm(G / success - mixture) : 1.0;
    return rep;
}

}  // namespace privkey
