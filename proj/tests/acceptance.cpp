// Acceptance run: one line per criterion, exit 0 only when every criterion not expected red passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "privkey/cli.hpp"
#include "privkey/dense_oracle.hpp"
#include "privkey/divergences.hpp"
#include "privkey/rng.hpp"
#include "privkey/verify.hpp"

using namespace privkey;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GeneralizedPrivateState instance(Rng& rng) {
    const int dk = rng.integer(2, 4), dsA = rng.integer(1, 3), dsB = rng.integer(1, 3);
    return random_gsir(dk, dsA, dsB, rng);
}

// S(A_key) from the expanded matrix, traced by index arithmetic.
double key_entropy_oracle(const GeneralizedPrivateState& g) {
    const int dA = g.dim_key_a();
    const int rest = static_cast<int>(g.expanded().dim()) / dA;
    return oracle::entropy(oracle::trace_second(g.expanded().rho(), dA, rest));
}

Outcome c1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
        auto g = instance(rng);
        worst = std::max(worst, std::abs(key_entropy_oracle(g) - oracle::shannon(g.key.coeffs)));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-9 && t < 30, "max |S_A(gamma) - H(lambda)| = " + fmt("%.2e", worst) + " over 200 instances, " + fmt("%.1f s", t)};
}

Outcome c2() {
    Rng rng(1002);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
        auto g = instance(rng);
        auto d = relative_entropy(g.expanded(), sigma_ansatz(g));
        const double ref = oracle::relative_entropy(g.expanded().rho(), sigma_ansatz(g).rho());
        worst = std::max({worst, d.infinite ? 1.0 : std::abs(d.value - oracle::shannon(g.key.coeffs)),
                          std::abs(ref - oracle::shannon(g.key.coeffs))});
    }
    Mat u(2, 2);
    u << 0, 1, 1, 0;
    auto f = make_flower_state(2, u);
    const double flower = oracle::relative_entropy(f.expanded().rho(), sigma_ansatz(f).rho());
    const double flowerLib = relative_entropy(f.expanded(), sigma_ansatz(f)).value;
    const double fdev = std::max(std::abs(flower - 1.0), std::abs(flowerLib - 1.0));
    return {worst <= 1e-9 && fdev <= 1e-9,
            "max |D(gamma||sigma) - H(lambda)| = " + fmt("%.2e", worst) + ", flower |D - 1| = " + fmt("%.2e", fdev)};
}

Outcome c3() {
    Rng rng(1003);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        auto g = instance(rng);
        worst = std::max(worst, std::abs(devetak_winter_rate(g) - oracle::shannon(g.key.coeffs)));
    }
    return {worst <= 1e-8, "max |rate - H(lambda)| = " + fmt("%.2e", worst) + " over 100 instances"};
}

struct DilutionRuns {
    double keyMatrix = 0, dense = 0, denseOracle = 0;
    int labelFailures = 0, ancillaFailures = 0, xFailures = 0, runs = 0;
    double seconds = 0;
};

// gamma^{(x)2} with scalar shield in the (A1, A2, B1, B2) order, built from kets.
Mat two_copy_target(const GeneralizedPrivateState& g) {
    Vec psi = g.key.ket();  // over (A, B)
    const int d = g.dim_key_a();
    for (int i = 0; i < d; ++i) psi(i * d + i) *= g.twist.blocks[i](0, 0);  // scalar twist phases
    Vec out = Vec::Zero(d * d * d * d);
    for (int a1 = 0; a1 < d; ++a1)
        for (int b1 = 0; b1 < d; ++b1)
            for (int a2 = 0; a2 < d; ++a2)
                for (int b2 = 0; b2 < d; ++b2) out(((a1 * d + a2) * d + b1) * d + b2) = psi(a1 * d + b1) * psi(a2 * d + b2);
    return out * out.adjoint();
}

const DilutionRuns& dilution_runs() {
    static DilutionRuns r = [] {
        DilutionRuns d;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::tuple<GeneralizedPrivateState, int, Rational>> cases;
        for (int n = 1; n <= 10; ++n) cases.emplace_back(verify_flower_state({0.7, 0.3}), n, Rational(3));
        for (int n = 1; n <= 6; ++n) cases.emplace_back(verify_phase_state({0.5, 0.5}), n, Rational(1));
        for (const auto& [g, n, delta] : cases) {
            auto rep = run_protocol(ProtocolConfig::from_state(g, n, delta));
            ++d.runs;
            d.labelFailures += rep.labelExact ? 0 : 1;
            d.ancillaFailures += rep.ancillaRestored ? 0 : 1;
            d.xFailures += rep.xIndependent ? 0 : 1;
            d.keyMatrix = std::max(d.keyMatrix, rep.keyMatrixDistance < 0 ? 1.0 : rep.keyMatrixDistance);
        }
        for (const auto& g : {verify_phase_state({0.5, 0.5}), verify_phase_state({0.7, 0.3})}) {
            auto cfg = ProtocolConfig::from_state(g, 2, Rational(3));
            ProtocolContext ctx(cfg);
            auto fin = run_all_steps(ctx);
            auto audit = audit_records(ctx, fin);
            ++d.runs;
            d.ancillaFailures += audit.ancillaRestored ? 0 : 1;
            d.xFailures += audit.xIndependent ? 0 : 1;
            auto out = reconstruct_output(ctx, fin);
            d.dense = std::max(d.dense, 0.5 * oracle::trace_norm(Mat(out.good - two_copy_target(g))) + 0.5 * out.abortMass);
            auto oracleRun = dense_oracle_run(cfg, OracleScope::end_to_end);
            d.denseOracle = std::max(d.denseOracle, oracleRun.distanceToTarget);
            d.ancillaFailures += oracleRun.ancillaRestored ? 0 : 1;
        }
        d.seconds = seconds_since(t0);
        return d;
    }();
    return r;
}

Outcome c4() {
    const auto& d = dilution_runs();
    const bool ok = d.labelFailures == 0 && d.keyMatrix <= 1e-9 && d.dense <= 1e-8 && d.denseOracle <= 1e-8 && d.seconds < 120;
    return {ok, "dense n=2 distance " + fmt("%.2e", std::max(d.dense, d.denseOracle)) + ", symbolic key-matrix distance " +
                    fmt("%.2e", d.keyMatrix) + " (n <= 10), label failures " + std::to_string(d.labelFailures) + ", " +
                    fmt("%.1f s", d.seconds)};
}

Outcome c5() {
    const auto& d = dilution_runs();
    return {d.ancillaFailures == 0 && d.xFailures == 0,
            std::to_string(d.runs) + " runs: ancilla failures " + std::to_string(d.ancillaFailures) + ", x-dependence " +
                std::to_string(d.xFailures)};
}

Outcome c6() {
    const double h = oracle::binary_entropy(0.25);
    double low = 1e300, high = 1e300;
    long long ledger = 0;
    for (int n = 4; n <= 12; ++n) {
        auto rep = run_protocol(ProtocolConfig::from_state(verify_phase_state({0.25, 0.75}), n, Rational(1, 2)));
        const double rate = rep.keyBitsConsumed / n;
        low = std::min(low, rate - h);
        high = std::min(high, h + rep.eta + 2.0 / n - rate);
        // delta = 1/2: ceil(2 delta n) = n cells each way, nominal ceil(4 delta n) = 2n
        ledger += std::llabs(rep.ebits.cells - 2LL * n) + std::llabs(rep.ebits.nominal - 2LL * n);
    }
    return {low >= -1e-12 && high >= -1e-12 && ledger == 0,
            "rate slack below " + fmt("%.4f", low) + ", above " + fmt("%.4f", high) + ", ebit ledger mismatches " + std::to_string(ledger)};
}

Outcome c7() {
    long long betaFailures = 0;
    for (int n = 1; n <= 8; ++n) {
        SourceSpec spec({"0", "1"}, {Rational(1, 2), Rational(1, 2)}, n, Rational(1, 2));
        auto t = std::make_shared<const TypicalSet>(enumerate_typical_set(spec));
        if (t->size() == 0) continue;
        Codec codec(t);
        for (std::uint64_t xr = 0; xr < codec.codeword_count(); ++xr) {
            BetaMap beta(codec, codec.digits_of(xr));
            std::set<std::uint64_t> img;
            for (std::uint64_t r = 0; r < codec.codeword_count(); ++r) img.insert(beta.apply_rank(r));
            if (img.size() != codec.codeword_count() || *img.rbegin() >= codec.codeword_count()) ++betaFailures;
        }
    }
    // f over typical pairs by direct counting, against ceil(2 delta n) with delta = 1/4
    long long boundFailures = 0;
    for (int n = 1; n <= 10; ++n) {
        std::vector<int> ones;
        for (int c = 0; c <= n; ++c)
            if (4 * std::abs(2 * c - n) <= n) ones.push_back(c);
        const int lmax = (n + 1) / 2;
        for (int a : ones)
            for (int b : ones)
                if (2 * std::abs(a - b) > lmax) ++boundFailures;
    }
    SourceSpec paper({"a", "b", "c", "d"}, std::vector<Rational>(4, Rational(1, 4)), 9, Rational(7, 9));
    auto s = paper.parse_sequence("bccbdbaac"), sHat = paper.parse_sequence("cbbccdadc");
    const int f = f_mismatch(s, sHat), lm = l_max(9, Rational(7, 9));
    const bool example = f == 4 && lm == 14 && paper.is_typical(s) && paper.is_typical(sHat);
    return {betaFailures == 0 && boundFailures == 0 && example,
            "beta failures " + std::to_string(betaFailures) + ", f > L_max cases " + std::to_string(boundFailures) +
                ", example f = " + std::to_string(f) + ", L_max = " + std::to_string(lm)};
}

Mat diag(const std::vector<double>& d) {
    Mat m = Mat::Zero(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Outcome c8() {
    Rng rng(1008);
    double dmin = 0, lp = 0;
    for (int t = 0; t < 50; ++t) {
        Mat a = random_density(4, rng, 2).rho(), b = random_density(4, rng).rho();
        // D_min = -log2 Tr[P_a b] with the support projector from the oracle's eigensolver
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        Mat proj = Mat::Zero(4, 4);
        for (int i = 0; i < 4; ++i)
            if (es.eigenvalues()(i) > 1e-10) proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
        const double ref = -std::log2((proj * b).trace().real());
        dmin = std::max(dmin, std::abs(hypothesis_testing_divergence(a, b, 0.0).value - ref));
        auto p = random_probs(4, rng), q = random_probs(4, rng);
        const double eps = 0.5 * rng.uniform();
        const double beta = oracle::classical_beta_greedy(p, q, eps);
        lp = std::max(lp, std::abs(hypothesis_testing_divergence(diag(p), diag(q), eps).value + std::log2(beta)));
    }
    Vec phi = make_max_entangled(2).ket();
    const double bell = hypothesis_testing_divergence(Mat(phi * phi.adjoint()), dephased_max_entangled(2), 0.1).value;
    const double bdev = std::abs(bell - (1 - std::log2(0.9)));
    return {dmin <= 1e-9 && lp <= 1e-9 && bdev <= 1e-7, "|D_h^0 - D_min| = " + fmt("%.2e", dmin) + ", vs greedy LP " +
                                                            fmt("%.2e", lp) + ", Bell case " + fmt("%.2e", bdev)};
}

Outcome c9() {
    Rng rng(1009);
    double worst = 1e300, slack = 1e300;
    for (int dk : {2, 3})
        for (int ds : {1, 2})
            for (double eps : {0.0, 0.1, 0.3}) {
                auto shield = RegisterState::density(RegisterShape({ds, 1}), random_density(ds, rng).rho());
                std::vector<Mat> blocks;
                for (int i = 0; i < dk; ++i) blocks.push_back(random_unitary(ds, rng));
                auto g = make_private_state(dk, shield, TwistingUnitary(blocks), {ds, 1});
                const double dh = hypothesis_testing_divergence(g.expanded(), sigma_ansatz(g), eps).value;
                worst = std::min(worst, std::pow(2.0, -dh) - (1 - eps) / dk);
                const double lower = std::log2(dk) + std::log2(1 - eps), upper = std::log2(dk);
                auto y = yield_cost_bounds(dk, eps, 0.0);
                slack = std::min({slack, upper - lower, y.kcUpper - y.kcLower});
                if (std::abs(y.kcLower - lower) > 1e-12) slack = -1;
            }
    return {worst >= -1e-9 && slack >= 0, "min 2^-D_h - (1-eps)/d_k = " + fmt("%.2e", worst) + ", min bracket slack " + fmt("%.4f", slack)};
}

Outcome c10() {
    Rng rng(1010);
    double worst = 0;
    int verdictFailures = 0;
    for (int t = 0; t < 50; ++t) {
        auto g1 = random_gsir(2, rng.integer(1, 2), 1, rng), g2 = random_gsir(2, 1, rng.integer(1, 2), rng);
        Ensemble e1{{1.0, g1}}, e2{{1.0, g2}};
        auto t1 = alice_bob_form(g1), t2 = alice_bob_form(g2);
        auto target = product_target(t1, {g1.dim_key_a(), g1.ds_a(), g1.dim_key_b(), g1.ds_b()}, t2,
                                     {g2.dim_key_a(), g2.ds_a(), g2.dim_key_b(), g2.ds_b()});
        const double sum = oracle::shannon(g1.key.coeffs) + oracle::shannon(g2.key.coeffs);
        worst = std::max(worst, std::abs(kf_ensemble_value(product_ensemble(e1, e2), target) - sum));
        if (check_strict_irreducibility(tensor_sir(g1, g2)) == IrreducibilityVerdict::entangled_conditional) ++verdictFailures;
    }
    return {worst <= 1e-10 && verdictFailures == 0,
            "max |K(e1 x e2) - K(e1) - K(e2)| = " + fmt("%.2e", worst) + ", irreducibility failures " + std::to_string(verdictFailures)};
}

Outcome c11() {
    // typical set by direct counting over all binary strings, uniform source
    bool upper = true;
    double mass14 = 0;
    for (int n = 1; n <= 14; ++n) {
        long long size = 0;
        double mass = 0;
        for (long long code = 0; code < (1LL << n); ++code) {
            const int ones = __builtin_popcountll(code);
            // |ones/n - 1/2| <= 0.2 * 1/2
            if (10 * std::abs(2 * ones - n) <= 2 * n) {
                ++size;
                mass += std::ldexp(1.0, -n);
            }
        }
        upper = upper && size <= std::exp2(n * 1.2);
        if (n == 14) mass14 = mass;
    }
    return {upper && mass14 >= 0.99, std::string("upper size bound ") + (upper ? "holds" : "fails") + " for n <= 14, mass at n = 14 is " +
                                         fmt("%.6f", mass14) + " (needs >= 0.99)"};
}

Outcome c12() {
    std::ostringstream a, b, err;
    const int ca = run_cli({"verify", "--seed", "42", "--jobs", "1"}, a, err);
    const int cb = run_cli({"verify", "--seed", "42", "--jobs", "4"}, b, err);
    const bool same = a.str() == b.str() && !a.str().empty();
    return {same && ca == cb, std::string("two verify runs, seed 42, jobs 1 and 4: ") + (same ? "byte-identical" : "differ") + ", " +
                                  std::to_string(a.str().size()) + " bytes"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> expectRed;
    std::vector<int> only;
    app.add_option("--expect-red", expectRed, "criteria known to be unattainable");
    app.add_option("--only", only, "run a subset");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5}, {6, c6}, {7, c7}, {8, c8}, {9, c9}, {10, c10}, {11, c11}, {12, c12}};
    const std::set<int> red(expectRed.begin(), expectRed.end());
    const std::set<int> subset(only.begin(), only.end());
    bool ok = true;
    for (const auto& [id, fn] : criteria) {
        if (!subset.empty() && !subset.count(id)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool expected = red.count(id) > 0;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << (expected ? " (expected red)" : "") << "  "
                  << o.detail << std::endl;
        if (o.pass == expected) ok = false;
    }
    std::cout << (ok ? "acceptance: OK" : "acceptance: FAILED") << std::endl;
    return ok ? 0 : 1;
}
