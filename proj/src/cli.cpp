#include "privkey/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "privkey/dense_oracle.hpp"
#include "privkey/serialize.hpp"
#include "privkey/verify.hpp"

namespace privkey {

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& text, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (seps.find(ch) != std::string::npos) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Option values as text: config file entries first, command-line flags override them.
class Params {
public:
    std::string& slot(const std::string& name) { return values_[name]; }
    bool& flag(const std::string& name) { return flags_[name]; }

    void load_config(const json& cfg, const std::string& command) {
        if (!cfg.is_object()) throw UsageError("config must be a JSON object");
        if (cfg.contains("command") && cfg.at("command") != command)
            throw UsageError("config is for command '" + cfg.at("command").get<std::string>() + "'");
        auto take = [&](const std::string& key, const json& v) {
            if (key == "command" || key == "params") return;
            if (v.is_boolean()) {
                flags_[key] = v.get<bool>();
            } else if (v.is_string()) {
                values_[key] = v.get<std::string>();
            } else if (v.is_array()) {
                std::string joined;
                for (const auto& e : v) {
                    if (!joined.empty()) joined += ",";
                    joined += e.is_string() ? e.get<std::string>() : e.dump();
                }
                values_[key] = joined;
            } else if (v.is_number()) {
                values_[key] = v.dump();
            } else {
                throw UsageError("config entry '" + key + "' has an unsupported type");
            }
        };
        for (const auto& [k, v] : cfg.items()) take(k, v);
        if (cfg.contains("params")) {
            if (!cfg.at("params").is_object()) throw UsageError("config params must be an object");
            for (const auto& [k, v] : cfg.at("params").items()) take(k, v);
        }
    }

    bool has(const std::string& name) const {
        auto it = values_.find(name);
        return it != values_.end() && !it->second.empty();
    }
    bool on(const std::string& name) const {
        auto it = flags_.find(name);
        return it != flags_.end() && it->second;
    }
    std::string text(const std::string& name, const std::string& fallback = "") const {
        return has(name) ? values_.at(name) : fallback;
    }
    std::string required(const std::string& name) const {
        if (!has(name)) throw UsageError("--" + name + " is required");
        return values_.at(name);
    }
    long long integer(const std::string& name, long long fallback, long long lo, long long hi) const {
        if (!has(name)) return fallback;
        const std::string& t = values_.at(name);
        long long v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw UsageError("--" + name + " must be an integer");
        if (v < lo || v > hi)
            throw UsageError("--" + name + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }
    std::uint64_t seed() const {
        if (!has("seed")) return 0;
        const std::string& t = values_.at("seed");
        std::uint64_t v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw UsageError("--seed must be a 64-bit unsigned integer");
        return v;
    }
    double real(const std::string& name, double fallback) const {
        if (!has(name)) return fallback;
        try {
            return to_double(parse_rational(values_.at(name)));
        } catch (const std::exception&) {
            throw UsageError("--" + name + " must be a number");
        }
    }
    Rational rational(const std::string& name, const Rational& fallback) const {
        if (!has(name)) return fallback;
        try {
            return parse_rational(values_.at(name));
        } catch (const std::exception&) {
            throw UsageError("--" + name + " must be a number");
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> flags_;
};

struct Output {
    std::string path;  // empty: stdout
    std::string text;
};

json load_file(const Params& p, const std::string& name) {
    try {
        return read_json_file(p.required(name));
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

template <class F>
auto parse_input(const std::string& what, F f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw UsageError(what + ": " + e.what());
    }
}

// Scalar shield and trivial twist unless given.
GeneralizedPrivateState load_state(const Params& p) {
    if (p.has("state")) {
        json j = load_file(p, "state");
        return parse_input("state", [&] { return gsir_from_json(j); });
    }
    json sj = load_file(p, "schmidt");
    SchmidtState key = parse_input("schmidt", [&] { return schmidt_from_json(sj.contains("schmidt") ? sj.at("schmidt") : sj); });
    RegisterState shield = RegisterState::pure(RegisterShape({1, 1}), Vec::Ones(1));
    if (p.has("shield")) {
        json j = load_file(p, "shield");
        shield = parse_input("shield", [&] { return state_from_json(j); });
    }
    std::pair<int, int> split{1, 1};
    if (shield.shape().count() == 2) split = {shield.shape().dims[0], shield.shape().dims[1]};
    else split = {static_cast<int>(shield.dim()), 1};
    TwistingUnitary twist = TwistingUnitary::trivial(key.count(), static_cast<int>(shield.dim()));
    if (p.has("twist")) {
        json j = load_file(p, "twist");
        twist = parse_input("twist", [&] { return twist_from_json(j); });
    }
    return parse_input("state", [&] { return make_generalized_private_state(key, shield, twist, split); });
}

int cmd_dilute(const Params& p, Output& out, std::ostream&) {
    GeneralizedPrivateState g = load_state(p);
    const int n = static_cast<int>(p.integer("n", 2, 1, 64));
    const Rational delta = p.rational("delta", Rational(1));
    if (delta <= 0) throw UsageError("--delta must be positive");
    ProtocolConfig cfg = ProtocolConfig::from_state(g, n, delta);
    cfg.eta = p.real("eta", -1.0);
    cfg.seed = p.seed();
    cfg.jobs = static_cast<int>(p.integer("jobs", 1, 1, 256));
    cfg.backend = parse_input("backend", [&] { return backend_from_string(p.text("backend", "symbolic")); });
    cfg.fault = parse_input("fault", [&] { return fault_from_string(p.text("fault", "none")); });
    const std::string oracle = p.text("oracle", "none");
    if (oracle != "none") parse_input("oracle", [&] { return oracle_scope_from_string(oracle); });
    // validates the configuration before any protocol step runs
    parse_input("configuration", [&] { return ProtocolContext(cfg).L; });

    std::string trace;
    StepObserver observer;
    if (p.has("trace")) {
        observer = [&trace](Step step, const ProtocolState& st) {
            if (!st.measured) {
                trace += json{{"step", to_string(step)},
                              {"branch", nullptr},
                              {"resource_terms", st.resource.size()},
                              {"abort_mass", st.abortMass}}
                             .dump() +
                         "\n";
                return;
            }
            for (const auto& b : st.outcomes) {
                json records = json::array();
                for (const auto& r : b.records) records.push_back(to_json(r));
                trace += json{{"step", to_string(step)},
                              {"branch", b.xRank},
                              {"x", b.x},
                              {"weight", b.weight},
                              {"records", records}}
                             .dump() +
                         "\n";
            }
        };
    }
    DilutionReport r = run_protocol(cfg, observer);
    json doc{{"command", "dilute"},
             {"config",
              {{"n", n},
               {"delta", to_string(delta)},
               {"eta", cfg.eta},
               {"backend", to_string(cfg.backend)},
               {"seed", cfg.seed},
               {"fault", to_string(cfg.fault)}}},
             {"report", to_json(r)}};
    if (oracle != "none") doc["oracle"] = to_json(dense_oracle_run(cfg, oracle_scope_from_string(oracle)));
    if (p.has("trace")) write_text_file(p.text("trace"), trace);
    out.text = doc.dump(2) + "\n";
    const bool broken = r.comparison.method == "structural_failure" || !r.ancillaRestored;
    return broken ? kExitCheckFailure : kExitPass;
}

int cmd_typical(const Params& p, Output& out, std::ostream&) {
    auto alphabet = split(p.text("alphabet", "0,1"), ",");
    auto probText = split(p.required("probs"), ",");
    const int n = static_cast<int>(p.integer("n", 1, 1, 64));
    const std::string delta = p.text("delta", "1/2");
    SourceSpec spec = parse_input("source", [&] { return SourceSpec::from_strings(alphabet, probText, n, delta); });
    const bool csv = p.on("list") || p.has("sequences");
    const bool js = p.on("mass") || p.on("bounds");
    if (csv && js) throw UsageError("--list/--sequences and --mass/--bounds produce different formats; pick one");
    std::vector<Seq> queries;
    if (p.has("sequences"))
        for (const auto& t : split(p.text("sequences"), ";"))
            queries.push_back(parse_input("sequence", [&] { return spec.parse_sequence(t); }));
    for (const auto& q : queries)
        if (static_cast<int>(q.size()) != n) throw UsageError("sequence length differs from --n");

    if (csv) {
        std::ostringstream os;
        os << "sequence,probability,typical\n";
        auto probability = [&](const Seq& s) {
            double v = 1.0;
            for (int a : s) v *= to_double(spec.probs[a]);
            return v;
        };
        for (const auto& q : queries)
            os << spec.format_sequence(q) << "," << format_double(probability(q)) << "," << (spec.is_typical(q) ? 1 : 0) << "\n";
        if (p.on("list")) {
            auto t = parse_input("typical set", [&] { return enumerate_typical_set(spec); });
            for (std::size_t i = 0; i < t.size(); ++i) {
                Seq s = t.member(i);
                os << spec.format_sequence(s) << "," << format_double(probability(s)) << ",1\n";
            }
        }
        out.text = os.str();
        return kExitPass;
    }
    json doc{{"command", "typical"}, {"n", n}, {"delta", delta}};
    const Rational mass = typical_mass(spec);
    doc["mass"] = to_double(mass);
    doc["mass_exact"] = to_string(mass);
    doc["size"] = typical_size(spec).str();
    doc["l_max"] = l_max(n, spec.delta);
    int code = kExitPass;
    if (p.on("bounds")) {
        auto t = parse_input("typical set", [&] { return enumerate_typical_set(spec); });
        auto r = check_size_bounds(t);
        doc["bounds"] = to_json(r);
        if (!r.upperHolds) code = kExitCheckFailure;
    }
    out.text = doc.dump(2) + "\n";
    return code;
}

int cmd_bounds(const Params& p, Output& out, std::ostream&) {
    const int dk = static_cast<int>(p.integer("dk", 2, 1, 64));
    const double eps = p.real("epsilon", 0.0);
    const double eps2 = p.real("eps2", 0.0);
    if (!(eps >= 0.0 && eps < 1.0) || !(eps2 >= 0.0) || eps + eps2 >= 1.0)
        throw UsageError("need 0 <= epsilon, 0 <= eps2 and epsilon + eps2 < 1");
    RegisterState shield = RegisterState::pure(RegisterShape({1, 1}), Vec::Ones(1));
    if (p.has("shield")) {
        json j = load_file(p, "shield");
        shield = parse_input("shield", [&] { return state_from_json(j); });
    }
    if (dk * dk * shield.dim() > 4096) throw UsageError("certificate too large");
    auto cert = dual_certificate_value(dk, shield, eps);
    std::ostringstream os;
    BoundReport certBound = make_bound("dual_certificate", cert.maxViolation, 0.0, {{"dk", dk}, {"epsilon", eps}}, 1e-10);
    certBound.satisfied = cert.feasible;
    json line = to_json(certBound);
    line["value"] = cert.value;
    line["feasible"] = cert.feasible;
    line["y"] = cert.y;
    os << line.dump() << "\n";
    bool ok = cert.feasible;
    auto yc = yield_cost_bounds(dk, eps, eps2);
    for (const auto& c : yc.checks) {
        json l = to_json(c);
        l["correction"] = yc.correction;
        os << l.dump() << "\n";
        ok = ok && c.satisfied;
    }
    out.text = os.str();
    return ok ? kExitPass : kExitCheckFailure;
}

int cmd_measures(const Params& p, Output& out, std::ostream&) {
    json doc{{"command", "measures"}};
    const double eps = p.real("epsilon", 0.1);
    const double alpha = p.real("alpha", 2.0);
    if (!(eps >= 0.0 && eps < 1.0)) throw UsageError("--epsilon must lie in [0, 1)");
    if (!(alpha > 0.0) || alpha == 1.0) throw UsageError("--alpha must be positive and different from 1");
    if (p.has("gsir")) {
        json j = load_file(p, "gsir");
        auto g = parse_input("gsir", [&] { return gsir_from_json(j); });
        const auto gamma = g.expanded();
        const auto sigma = sigma_ansatz(g);
        doc["key_entropy"] = g.key.entropy();
        doc["entropy_a"] = von_neumann_entropy(gamma, std::vector<int>{0});
        doc["er_ansatz"] = to_json(relative_entropy(gamma, sigma));
        doc["devetak_winter"] = devetak_winter_rate(g);
        doc["irreducibility"] = to_string(check_strict_irreducibility(g));
        doc["hypothesis_testing"] = to_json(hypothesis_testing_divergence(gamma, sigma, eps));
    } else {
        json rj = load_file(p, "rho"), sj = load_file(p, "sigma");
        auto rho = parse_input("rho", [&] { return state_from_json(rj); });
        auto sigma = parse_input("sigma", [&] { return state_from_json(sj); });
        if (!rho.shape().same_dims(sigma.shape())) throw UsageError("rho and sigma have different shapes");
        doc["relative_entropy"] = to_json(relative_entropy(rho, sigma));
        doc["max_relative_entropy"] = to_json(max_relative_entropy(rho, sigma));
        doc["min_relative_entropy"] = to_json(min_relative_entropy(rho, sigma));
        doc["sandwiched_renyi"] = to_json(sandwiched_renyi(rho, sigma, alpha));
        doc["hypothesis_testing"] = to_json(hypothesis_testing_divergence(rho, sigma, eps));
        doc["trace_distance"] = trace_distance(rho, sigma);
        doc["fidelity"] = fidelity(rho, sigma);
    }
    doc["epsilon"] = eps;
    doc["alpha"] = alpha;
    out.text = doc.dump(2) + "\n";
    return kExitPass;
}

std::vector<Mat> projective(const Mat& observableBasis) {
    std::vector<Mat> out;
    for (Eigen::Index c = 0; c < observableBasis.cols(); ++c) {
        Vec v = observableBasis.col(c);
        out.push_back(v * v.adjoint());
    }
    return out;
}

Mat rotated_basis(double theta) {
    Mat b(2, 2);
    b << std::cos(theta / 2), -std::sin(theta / 2), std::sin(theta / 2), std::cos(theta / 2);
    return b;
}

int cmd_device(const Params& p, Output& out, std::ostream&) {
    RegisterState rho = make_max_entangled(2);
    if (p.has("state")) {
        json j = load_file(p, "state");
        rho = parse_input("state", [&] { return state_from_json(j); });
    }
    if (rho.shape().count() != 2) throw UsageError("device state must be bipartite");
    std::vector<std::vector<Mat>> measA, measB;
    if (p.has("povms")) {
        json j = load_file(p, "povms");
        auto read = [&](const char* side) {
            std::vector<std::vector<Mat>> sets;
            if (!j.contains(side) || !j.at(side).is_array()) throw UsageError(std::string("povms need \"") + side + "\"");
            for (const auto& set : j.at(side)) {
                std::vector<Mat> elems;
                for (const auto& e : set) elems.push_back(parse_input("povm", [&] { return matrix_from_json(e); }));
                sets.push_back(elems);
            }
            return sets;
        };
        measA = read("alice");
        measB = read("bob");
    } else {
        const std::string preset = p.text("preset", "chsh");
        if (rho.shape().dims[0] != 2 || rho.shape().dims[1] != 2) throw UsageError("presets need a two-qubit state");
        if (preset == "chsh") {
            measA = {projective(rotated_basis(0.0)), projective(rotated_basis(M_PI / 2))};
            measB = {projective(rotated_basis(M_PI / 4)), projective(rotated_basis(-M_PI / 4))};
        } else if (preset == "zz") {
            measA = {projective(rotated_basis(0.0))};
            measB = {projective(rotated_basis(0.0))};
        } else {
            throw UsageError("--preset must be chsh or zz");
        }
    }
    Behavior b = parse_input("measurements", [&] { return behavior_from_realization(rho, measA, measB); });
    json doc{{"command", "device"}, {"behavior", to_json(b)}};
    out.text = doc.dump(2) + "\n";
    return b.normalized() && b.non_signaling() ? kExitPass : kExitCheckFailure;
}

int cmd_verify(const Params& p, Output& out, std::ostream& err) {
    VerifyOptions opt;
    opt.seed = p.has("seed") ? p.seed() : 1;
    opt.jobs = static_cast<int>(p.integer("jobs", 1, 1, 256));
    opt.fault = parse_input("fault", [&] { return fault_from_string(p.text("fault", "none")); });
    if (p.has("criteria"))
        for (const auto& t : split(p.text("criteria"), ",")) {
            int c = 0;
            auto res = std::from_chars(t.data(), t.data() + t.size(), c);
            if (res.ec != std::errc() || res.ptr != t.data() + t.size() || c < 0 || c > 12)
                throw UsageError("--criteria must list integers in [0, 12]");
            opt.criteria.push_back(c);
        }
    VerifySuite suite = run_verify_suite(opt);
    out.text = suite.to_json().dump(2) + "\n";
    for (const auto& f : suite.failures()) err << "failed: " << f << "\n";
    return suite.passed() ? kExitPass : kExitCheckFailure;
}

std::string config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return "";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Private-state key dilution laboratory", "privkey"};
    app.require_subcommand(1);
    Params params;
    std::string configFile;

    struct Spec {
        const char* name;
        const char* help;
        std::vector<std::pair<const char*, const char*>> options;
        std::vector<std::pair<const char*, const char*>> flags;
        int (*run)(const Params&, Output&, std::ostream&);
    };
    const std::vector<Spec> specs{
        {"dilute",
         "Run the dilution protocol",
         {{"state", "GSIR JSON file (alternative to --schmidt/--shield/--twist)"},
          {"schmidt", "Schmidt data JSON file"},
          {"shield", "shield state JSON file"},
          {"twist", "twist blocks JSON file"},
          {"n", "number of copies"},
          {"delta", "typicality parameter"},
          {"eta", "code-length slack, negative for the smallest lossless value"},
          {"backend", "symbolic or dense"},
          {"oracle", "none, per_step or end_to_end"},
          {"fault", "injected fault"},
          {"trace", "write one JSON line per step per branch"},
          {"report", "report file"}},
         {},
         cmd_dilute},
        {"typical",
         "Strongly typical set queries",
         {{"alphabet", "comma-separated symbols"},
          {"probs", "comma-separated probabilities"},
          {"n", "sequence length"},
          {"delta", "typicality parameter"},
          {"sequences", "';'-separated sequences to classify"}},
         {{"list", "list the typical set as CSV"}, {"mass", "exact typical mass"}, {"bounds", "size bounds"}},
         cmd_typical},
        {"bounds",
         "Dual certificate and yield-cost bracket",
         {{"dk", "key dimension"}, {"epsilon", "error parameter"}, {"eps2", "second error parameter"}, {"shield", "shield state JSON file"}},
         {},
         cmd_bounds},
        {"measures",
         "Divergences of a state pair or of a GSIR",
         {{"rho", "state JSON file"},
          {"sigma", "state JSON file"},
          {"gsir", "GSIR JSON file"},
          {"epsilon", "hypothesis-testing error"},
          {"alpha", "sandwiched Renyi order"}},
         {},
         cmd_measures},
        {"verify",
         "Run the invariant suite",
         {{"fault", "fault injected into the dilution checks"}, {"criteria", "comma-separated subset"}},
         {},
         cmd_verify},
        {"device",
         "Behavior of a bipartite realization",
         {{"state", "bipartite state JSON file"}, {"preset", "chsh or zz"}, {"povms", "measurement JSON file"}},
         {},
         cmd_device},
    };

    const std::string cfgPath = config_path(args);
    std::map<std::string, CLI::App*> subs;
    for (const auto& s : specs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        for (const auto& [name, help] : s.options) sub->add_option(std::string("--") + name, params.slot(name), help);
        for (const auto& [name, help] : s.flags) sub->add_flag(std::string("--") + name, params.flag(name), help);
        sub->add_option("--seed", params.slot("seed"), "root seed");
        sub->add_option("--out", params.slot("out"), "output file");
        sub->add_option("--jobs", params.slot("jobs"), "worker threads");
        sub->add_option("--config", configFile, "JSON config; flags win");
        subs[s.name] = sub;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        // config values first; parsing then overwrites whatever the flags set
        if (!cfgPath.empty()) {
            std::string command;
            for (const auto& a : args)
                if (subs.count(a)) {
                    command = a;
                    break;
                }
            params.load_config(read_json_file(cfgPath), command);
        }
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    for (const auto& s : specs) {
        if (!subs[s.name]->parsed()) continue;
        Output o;
        o.path = params.text("out", params.text("report"));
        int code = kExitUsage;
        try {
            code = s.run(params, o, err);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitUsage;
        }
        try {
            if (o.path.empty()) out << o.text;
            else write_text_file(o.path, o.text);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitUsage;
        }
        return code;
    }
    return kExitUsage;
}

}  // namespace privkey
