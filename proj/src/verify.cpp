#include "privkey/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "privkey/dense_oracle.hpp"
#include "privkey/rng.hpp"

namespace privkey {

namespace {

using Params = std::map<std::string, double>;

class SuiteBuilder {
public:
    SuiteBuilder(const VerifyOptions& opt, VerifySuite& suite) : opt_(opt), suite_(suite) {}

    bool wants(int criterion) const {
        return opt_.criteria.empty() ||
               std::find(opt_.criteria.begin(), opt_.criteria.end(), criterion) != opt_.criteria.end();
    }

    // lhs <= rhs within tol.
    void add(std::string name, int criterion, double lhs, double rhs, double tol, Params params = {},
             bool informational = false) {
        suite_.checks.push_back({name, criterion, tol, informational});
        suite_.results.push_back(make_bound(std::move(name), lhs, rhs, std::move(params), tol));
    }

    std::uint64_t seed(std::uint64_t stream, std::uint64_t index) const {
        return derive_seed(derive_seed(opt_.seed, stream), index);
    }

private:
    const VerifyOptions& opt_;
    VerifySuite& suite_;
};

double binary_entropy(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

GeneralizedPrivateState random_instance(std::uint64_t seed, int maxDk, int maxDs) {
    Rng rng(seed);
    const int dk = rng.integer(2, maxDk);
    const int dsA = rng.integer(1, maxDs), dsB = rng.integer(1, maxDs);
    return random_gsir(dk, dsA, dsB, rng);
}

// entropy identity, relative-entropy ansatz and Devetak-Winter rate on random GSIR instances.
void gsir_identities(SuiteBuilder& b, const VerifyOptions& opt) {
    const int count = 200;
    std::vector<double> entropyDev(count), ansatzDev(count), dwDev(count, 0.0);
    parallel_for_each(count, opt.jobs, [&](int i) {
        auto g = random_instance(b.seed(1, i), 4, 3);
        const double s = g.key.entropy();
        const auto gamma = g.expanded();
        entropyDev[i] = std::abs(von_neumann_entropy(gamma, std::vector<int>{0}) - s);
        auto d = relative_entropy(gamma, sigma_ansatz(g));
        ansatzDev[i] = d.infinite ? 1e300 : std::abs(d.value - s);
        if (i < 100) dwDev[i] = std::abs(devetak_winter_rate(g) - s);
    });
    if (b.wants(1)) b.add("entropy_identity", 1, max_of(entropyDev), 0.0, 1e-9, {{"instances", count}});
    if (b.wants(2)) {
        b.add("er_ansatz_identity", 2, max_of(ansatzDev), 0.0, 1e-9, {{"instances", count}});
        Mat u(2, 2);
        u << 0, 1, 1, 0;
        auto flower = make_flower_state(2, u);
        auto d = relative_entropy(flower.expanded(), sigma_ansatz(flower));
        b.add("er_ansatz_flower", 2, d.infinite ? 1e300 : std::abs(d.value - 1.0), 0.0, 1e-9, {{"ds", 2}});
    }
    if (b.wants(3)) b.add("devetak_winter_rate", 3, max_of(dwDev), 0.0, 1e-8, {{"instances", 100}});
}

struct DilutionCase {
    GeneralizedPrivateState g;
    int n;
    Rational delta;
};

// exactness regime runs, symbolic up to n = 10 and dense at n = 2.
void dilution_exactness(SuiteBuilder& b, const VerifyOptions& opt) {
    std::vector<DilutionCase> symbolic;
    for (int n = 1; n <= 10; ++n) symbolic.push_back({verify_flower_state({0.7, 0.3}), n, Rational(3)});
    for (int n = 1; n <= 6; ++n) symbolic.push_back({verify_phase_state({0.5, 0.5}), n, Rational(1)});
    for (int n = 1; n <= 3; ++n) symbolic.push_back({verify_phase_state({0.5, 0.25, 0.25}), n, Rational(3)});

    int labelFailures = 0, ancillaFailures = 0, xFailures = 0;
    double keyMatrix = 0.0;
    for (const auto& c : symbolic) {
        auto cfg = ProtocolConfig::from_state(c.g, c.n, c.delta);
        cfg.fault = opt.fault;
        cfg.jobs = opt.jobs;
        cfg.seed = b.seed(4, static_cast<std::uint64_t>(c.n));
        auto r = run_protocol(cfg);
        labelFailures += r.labelExact ? 0 : 1;
        ancillaFailures += r.ancillaRestored ? 0 : 1;
        xFailures += r.xIndependent ? 0 : 1;
        keyMatrix = std::max(keyMatrix, r.keyMatrixDistance < 0 ? 1.0 : r.keyMatrixDistance);
    }
    const double runs = static_cast<double>(symbolic.size());

    std::vector<std::pair<GeneralizedPrivateState, Rational>> dense{
        {verify_phase_state({0.5, 0.5}), Rational(1)}, {verify_phase_state({0.7, 0.3}), Rational(3)}};
    double endToEnd = 0.0, endToSymbolic = 0.0, perStep = 0.0;
    for (const auto& [g, delta] : dense) {
        auto cfg = ProtocolConfig::from_state(g, 2, delta);
        cfg.fault = opt.fault;
        auto r = dense_oracle_run(cfg, OracleScope::end_to_end);
        endToEnd = std::max(endToEnd, r.distanceToTarget);
        endToSymbolic = std::max(endToSymbolic, r.distanceToSymbolic);
        ancillaFailures += r.ancillaRestored ? 0 : 1;
    }
    for (int n = 1; n <= 2; ++n) {
        auto cfg = ProtocolConfig::from_state(verify_flower_state({0.7, 0.3}), n, Rational(3));
        cfg.fault = opt.fault;
        auto r = dense_oracle_run(cfg, OracleScope::per_step);
        for (const auto& s : r.steps) perStep = std::max(perStep, s.maxDistance);
        ancillaFailures += r.ancillaRestored ? 0 : 1;
    }

    if (b.wants(4)) {
        b.add("dilution_label_exact", 4, labelFailures, 0.0, 0.0, {{"runs", runs}});
        b.add("dilution_key_matrix_distance", 4, keyMatrix, 0.0, 1e-9, {{"runs", runs}, {"max_n", 10}});
        b.add("dilution_dense_end_to_end", 4, endToEnd, 0.0, 1e-8, {{"n", 2}, {"ds", 1}});
        b.add("dilution_dense_matches_symbolic", 4, endToSymbolic, 0.0, 1e-8, {{"n", 2}, {"ds", 1}});
        b.add("dilution_dense_per_step", 4, perStep, 0.0, 1e-9, {{"max_n", 2}, {"ds", 2}});
    }
    if (b.wants(5)) {
        b.add("ancilla_restored", 5, ancillaFailures, 0.0, 0.0, {{"runs", runs + 4}});
        b.add("x_independent", 5, xFailures, 0.0, 0.0, {{"runs", runs}});
    }
}

// consumed key rate and ebit ledger for lambda = (1/4, 3/4).
void rate_accounting(SuiteBuilder& b, const VerifyOptions& opt) {
    const double h = binary_entropy(0.25);
    const Rational delta(1, 2);
    double lowerSlack = 1e300, upperSlack = 1e300;
    long long ledgerMismatch = 0, nominalMismatch = 0;
    for (int n = 4; n <= 12; ++n) {
        auto cfg = ProtocolConfig::from_state(verify_phase_state({0.25, 0.75}), n, delta);
        cfg.fault = opt.fault;
        cfg.jobs = opt.jobs;
        cfg.seed = b.seed(6, static_cast<std::uint64_t>(n));
        auto r = run_protocol(cfg);
        const double rate = r.keyBitsConsumed / n;
        lowerSlack = std::min(lowerSlack, rate - h);
        upperSlack = std::min(upperSlack, h + r.eta + 2.0 / n - rate);
        const long long cells = 2 * l_max(n, delta);
        Rational nominal = Rational(4) * delta * n;
        BigInt q = numerator(nominal) / denominator(nominal);
        if (q * denominator(nominal) != numerator(nominal)) q += 1;
        ledgerMismatch += std::llabs(r.ebits.cells - cells);
        nominalMismatch += std::llabs(r.ebits.nominal - q.convert_to<long long>());
    }
    Params params{{"delta", 0.5}, {"n_min", 4}, {"n_max", 12}, {"h", h}};
    b.add("rate_lower_bound", 6, -lowerSlack, 0.0, 1e-12, params);
    b.add("rate_upper_bound", 6, -upperSlack, 0.0, 1e-12, params);
    b.add("ebit_ledger_cells", 6, static_cast<double>(ledgerMismatch), 0.0, 0.0, params);
    b.add("ebit_ledger_nominal", 6, static_cast<double>(nominalMismatch), 0.0, 0.0, params);
}

// beta bijectivity, mismatch bound and the n = 9 example.
void combinatorics(SuiteBuilder& b) {
    long long betaFailures = 0;
    for (int n = 1; n <= 8; ++n)
        for (const Rational& delta : {Rational(1, 2), Rational(3)}) {
            SourceSpec spec({"0", "1"}, {Rational(1, 4), Rational(3, 4)}, n, delta);
            auto t = std::make_shared<const TypicalSet>(enumerate_typical_set(spec));
            if (t->size() == 0) continue;
            Codec codec(t);
            const std::uint64_t xs = std::uint64_t{1} << codec.length();
            const std::uint64_t dn = codec.codeword_count();
            for (std::uint64_t xr = 0; xr < xs; ++xr) {
                BetaMap beta(codec, unpack(xr, codec.length(), 2));
                std::vector<char> hit(dn, 0);
                for (std::uint64_t r = 0; r < dn; ++r) {
                    auto img = beta.apply_rank(r);
                    if (img >= dn || hit[img]) ++betaFailures;
                    else hit[img] = 1;
                }
                if (t->size() == dn) {
                    std::vector<char> seen(t->size(), 0);
                    for (std::size_t i = 0; i < t->size(); ++i) {
                        auto img = beta.apply(t->member(i));
                        auto rank = img ? t->rank(*img) : std::nullopt;
                        if (!rank || seen[*rank]) ++betaFailures;
                        else seen[*rank] = 1;
                    }
                }
            }
        }
    b.add("beta_bijective", 7, static_cast<double>(betaFailures), 0.0, 0.0, {{"max_n", 8}});

    double worst = -1e300;
    for (int n = 1; n <= 10; ++n)
        for (const Rational& delta : {Rational(1, 2), Rational(1)}) {
            SourceSpec spec({"0", "1"}, {Rational(1, 4), Rational(3, 4)}, n, delta);
            auto t = enumerate_typical_set(spec);
            const int bound = l_max(n, delta);
            int fMax = 0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                const Seq s = t.member(i);
                for (std::size_t j = 0; j < t.size(); ++j) fMax = std::max(fMax, f_mismatch(s, t.member(j)));
            }
            worst = std::max(worst, static_cast<double>(fMax - bound));
        }
    b.add("mismatch_bound", 7, worst, 0.0, 0.0, {{"max_n", 10}});

    SourceSpec paper({"a", "b", "c", "d"}, std::vector<Rational>(4, Rational(1, 4)), 9, Rational(7, 9));
    const Seq s = paper.parse_sequence("bccbdbaac"), sHat = paper.parse_sequence("cbbccdadc");
    const bool typical = paper.is_typical(s) && paper.is_typical(sHat);
    b.add("example_typical", 7, typical ? 0.0 : 1.0, 0.0, 0.0, {{"n", 9}});
    b.add("example_mismatch", 7, std::abs(f_mismatch(s, sHat) - 4.0), 0.0, 0.0, {{"n", 9}});
    b.add("example_l_max", 7, std::abs(l_max(9, Rational(7, 9)) - 14.0), 0.0, 0.0, {{"n", 9}});
}

// hypothesis-testing divergence.
void hypothesis_testing(SuiteBuilder& b) {
    double dminDev = 0.0, lpDev = 0.0;
    for (int i = 0; i < 20; ++i) {
        Rng rng(b.seed(8, i));
        auto rho = random_density(4, rng, 1 + i % 4).rho();
        auto sigma = random_density(4, rng, i % 3 == 0 ? 3 : 4).rho();
        auto dh = hypothesis_testing_divergence(rho, sigma, 0.0);
        auto dmin = min_relative_entropy(rho, sigma);
        if (dh.infinite != dmin.infinite) dminDev = 1e300;
        else if (!dh.infinite) dminDev = std::max(dminDev, std::abs(dh.value - dmin.value));

        Mat v = random_unitary(4, rng);
        auto p = random_probs(4, rng), q = random_probs(4, rng);
        Mat dp = Mat::Zero(4, 4), dq = Mat::Zero(4, 4);
        for (int k = 0; k < 4; ++k) {
            dp(k, k) = p[k];
            dq(k, k) = q[k];
        }
        const double eps = 0.05 * (i % 7);
        auto d = hypothesis_testing_divergence(Mat(v * dp * v.adjoint()), Mat(v * dq * v.adjoint()), eps);
        lpDev = std::max(lpDev, std::abs(d.value + std::log2(classical_np_beta(p, q, eps))));
    }
    b.add("dh_zero_equals_dmin", 8, dminDev, 0.0, 1e-9, {{"pairs", 20}});
    b.add("dh_commuting_vs_lp", 8, lpDev, 0.0, 1e-9, {{"pairs", 20}});
    const Mat phi = make_max_entangled(2).rho();
    auto d = hypothesis_testing_divergence(phi, dephased_max_entangled(2), 0.1);
    b.add("dh_bell", 8, std::abs(d.value - (1.0 - std::log2(0.9))), 0.0, 1e-7, {{"epsilon", 0.1}});
}

// weak duality and the yield-cost bracket on private states.
void duality(SuiteBuilder& b) {
    double dualGap = -1e300, certGap = 0.0, bracket = -1e300;
    int infeasible = 0, trial = 0;
    for (int dk : {2, 3})
        for (int ds : {1, 2})
            for (double eps : {0.0, 0.1, 0.3}) {
                Rng rng(b.seed(9, trial++));
                auto base = random_gsir(dk, ds, ds, rng);
                auto g = make_private_state(dk, base.shield, base.twist, base.shieldSplit);
                auto dh = hypothesis_testing_divergence(g.expanded(), sigma_ansatz(g), eps);
                const double primal = dh.infinite ? 0.0 : std::exp2(-dh.value);
                dualGap = std::max(dualGap, (1.0 - eps) / dk - primal);
                auto cert = dual_certificate_value(dk, g.shield, eps);
                infeasible += cert.feasible ? 0 : 1;
                certGap = std::max(certGap, std::abs(cert.value - (1.0 - eps) / dk));
                auto yc = yield_cost_bounds(dk, eps, 0.0);
                for (const auto& c : yc.checks) bracket = std::max(bracket, c.lhs - c.rhs);
                bracket = std::max(bracket, std::abs(yc.kcLower - (std::log2(dk) + std::log2(1.0 - eps))));
            }
    b.add("dual_weak_duality", 9, dualGap, 0.0, 1e-9, {{"instances", trial}});
    b.add("dual_certificate_feasible", 9, infeasible, 0.0, 0.0, {{"instances", trial}});
    b.add("dual_certificate_value", 9, certGap, 0.0, 1e-12, {{"instances", trial}});
    b.add("yield_cost_bracket", 9, bracket, 0.0, 1e-12, {{"instances", trial}});
}

// additivity of ensemble values over the product construction.
void subadditivity(SuiteBuilder& b, const VerifyOptions& opt) {
    const int count = 50;
    std::vector<double> dev(count, 0.0);
    std::vector<int> reducible(count, 0);
    parallel_for_each(count, opt.jobs, [&](int i) {
        Rng rng(b.seed(10, i));
        auto make = [&rng](int dsA, int dsB) {
            const double p = 0.2 + 0.6 * rng.uniform();
            auto g1 = random_gsir(2, dsA, dsB, rng);
            auto g2 = random_gsir(2, dsA, dsB, rng);
            return Ensemble{{p, g1}, {1.0 - p, g2}};
        };
        const int a1 = rng.integer(1, 2), b1 = rng.integer(1, 2), a2 = rng.integer(1, 2), b2 = rng.integer(1, 2);
        Ensemble e1 = make(a1, b1), e2 = make(a2, b2);
        auto t1 = ensemble_mixture(e1), t2 = ensemble_mixture(e2);
        auto prod = product_ensemble(e1, e2);
        auto target = product_target(t1, {2, a1, 2, b1}, t2, {2, a2, 2, b2});
        dev[i] = std::abs(kf_ensemble_value(prod, target) - kf_ensemble_value(e1, t1) - kf_ensemble_value(e2, t2));
        for (const auto& [p, g] : prod)
            if (check_strict_irreducibility(g) == IrreducibilityVerdict::entangled_conditional) reducible[i] = 1;
    });
    b.add("kf_product_additive", 10, max_of(dev), 0.0, 1e-10, {{"pairs", count}});
    int bad = 0;
    for (int r : reducible) bad += r;
    b.add("tensor_sir_irreducible", 10, bad, 0.0, 0.0, {{"pairs", count}});
}

// typical set size bound and mass.
void typicality_bounds(SuiteBuilder& b) {
    double worst = -1e300;
    for (int n = 1; n <= 14; ++n)
        for (const Rational& delta : {Rational(1, 5), Rational(1, 2)})
            for (const auto& probs : {std::vector<Rational>{Rational(1, 2), Rational(1, 2)},
                                      std::vector<Rational>{Rational(1, 4), Rational(3, 4)}}) {
                auto t = enumerate_typical_set(SourceSpec({"0", "1"}, probs, n, delta));
                auto r = check_size_bounds(t);
                worst = std::max(worst, r.size - r.upper);
            }
    b.add("typical_size_upper_bound", 11, worst, 0.0, 1e-9, {{"max_n", 14}});
    SourceSpec spec({"0", "1"}, {Rational(1, 2), Rational(1, 2)}, 14, Rational(1, 5));
    const double mass = to_double(typical_mass(spec));
    b.add("typical_mass_threshold", 11, 0.99, mass, 0.0, {{"n", 14}, {"delta", 0.2}}, true);
}

// Formation protocol on a two-member ensemble in the exactness regime.
void formation(SuiteBuilder& b) {
    Mat h(2, 2);
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    auto g1 = verify_phase_state({0.7, 0.3});
    auto g2 = make_generalized_private_state(SchmidtState({0.6, 0.4}, h, h), g1.shield, g1.twist, g1.shieldSplit);
    std::vector<ComponentConfig> cc(2);
    for (auto& c : cc) c.delta = Rational(3);
    auto r = formation_protocol_run({{0.5, g1}, {0.5, g2}}, 2, Rational(1), cc);
    b.add("formation_mixture_distance", 0, r.mixtureDistance, 0.0, 1e-6, {{"n", 2}, {"members", 2}});
    b.add("formation_rate_bound", 0, r.rate, r.rateBound, 1e-9, {{"n", 2}, {"members", 2}});
}

}  // namespace

void parallel_for_each(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(errorMutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

double classical_np_beta(const std::vector<double>& p, const std::vector<double>& q, double epsilon) {
    const int d = static_cast<int>(p.size());
    const double need = 1.0 - epsilon;
    double best = 1e300;
    for (int mask = 0; mask < (1 << d); ++mask) {
        double tp = 0.0, tq = 0.0;
        for (int i = 0; i < d; ++i)
            if (mask >> i & 1) {
                tp += p[i];
                tq += q[i];
            }
        if (tp >= need - 1e-15) best = std::min(best, tq);
        // one free coordinate solving the type-one constraint with equality
        for (int f = 0; f < d; ++f) {
            if (mask >> f & 1 || p[f] <= 0.0) continue;
            const double t = (need - tp) / p[f];
            if (t >= 0.0 && t <= 1.0) best = std::min(best, tq + t * q[f]);
        }
    }
    return best;
}

GeneralizedPrivateState verify_flower_state(const std::vector<double>& lambda) {
    Mat u(2, 2);
    u << 0, 1, cplx(0, 1), 0;
    auto f = make_flower_state(2, u);
    const int k = static_cast<int>(lambda.size());
    return make_generalized_private_state(SchmidtState(lambda, Mat::Identity(k, k), Mat::Identity(k, k)), f.shield,
                                          f.twist, f.shieldSplit);
}

GeneralizedPrivateState verify_phase_state(const std::vector<double>& lambda) {
    const int k = static_cast<int>(lambda.size());
    std::vector<Mat> blocks;
    for (int i = 0; i < k; ++i) {
        Mat b(1, 1);
        b(0, 0) = std::polar(1.0, 2.0 * M_PI * i * i / (k + 2));
        blocks.push_back(b);
    }
    Vec one = Vec::Ones(1);
    return make_generalized_private_state(SchmidtState(lambda, Mat::Identity(k, k), Mat::Identity(k, k)),
                                          RegisterState::pure(RegisterShape({1, 1}), one), TwistingUnitary(blocks),
                                          {1, 1});
}

bool VerifySuite::passed() const { return failures().empty(); }

bool VerifySuite::criterion_passed(int criterion) const {
    bool any = false;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        if (checks[i].criterion != criterion) continue;
        any = true;
        if (!results[i].satisfied) return false;
    }
    return any;
}

std::vector<std::string> VerifySuite::failures() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < checks.size(); ++i)
        if (!checks[i].informational && !results[i].satisfied) out.push_back(checks[i].name);
    return out;
}

json VerifySuite::to_json() const {
    json cs = json::array(), rs = json::array();
    for (std::size_t i = 0; i < checks.size(); ++i) {
        cs.push_back(json{{"name", checks[i].name},
                          {"criterion", checks[i].criterion},
                          {"tolerance", checks[i].tolerance},
                          {"informational", checks[i].informational}});
        rs.push_back(privkey::to_json(results[i]));
    }
    return json{{"seed", seed}, {"passed", passed()}, {"failures", failures()}, {"checks", cs}, {"results", rs}};
}

VerifySuite run_verify_suite(const VerifyOptions& opt) {
    VerifySuite suite;
    suite.seed = opt.seed;
    SuiteBuilder b(opt, suite);
    if (b.wants(1) || b.wants(2) || b.wants(3)) gsir_identities(b, opt);
    if (b.wants(4) || b.wants(5)) dilution_exactness(b, opt);
    if (b.wants(6)) rate_accounting(b, opt);
    if (b.wants(7)) combinatorics(b);
    if (b.wants(8)) hypothesis_testing(b);
    if (b.wants(9)) duality(b);
    if (b.wants(10)) subadditivity(b, opt);
    if (b.wants(11)) typicality_bounds(b);
    if (b.wants(0)) formation(b);
    return suite;
}

}  // namespace privkey
