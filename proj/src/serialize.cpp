#include "privkey/serialize.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace privkey {

namespace {

std::vector<double> real_parts(const cplx* data, Eigen::Index count) {
    std::vector<double> out(count);
    for (Eigen::Index i = 0; i < count; ++i) out[i] = data[i].real();
    return out;
}

std::vector<double> imag_parts(const cplx* data, Eigen::Index count) {
    std::vector<double> out(count);
    for (Eigen::Index i = 0; i < count; ++i) out[i] = data[i].imag();
    return out;
}

std::vector<cplx> read_complex(const json& j, std::size_t count) {
    if (!j.contains("re")) throw std::invalid_argument("missing \"re\"");
    const auto& re = j.at("re");
    if (!re.is_array() || re.size() != count) throw std::invalid_argument("\"re\" has the wrong length");
    std::vector<cplx> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = number_from_json(re[i]);
    if (j.contains("im")) {
        const auto& im = j.at("im");
        if (!im.is_array() || im.size() != count) throw std::invalid_argument("\"im\" has the wrong length");
        for (std::size_t i = 0; i < count; ++i) out[i] += cplx(0.0, number_from_json(im[i]));
    }
    return out;
}

int positive_int(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<long long>() < 1) throw std::invalid_argument(std::string(what) + " must be a positive integer");
    return j.get<int>();
}

Mat row_major(const std::vector<cplx>& v, int rows, int cols) {
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r) * cols + c];
    return m;
}

json word_to_json(const TwistWord& w) {
    json out = json::array();
    for (int g : w) out.push_back(g);
    return out;
}

json party_to_json(const PartyRegisters& p) {
    return json{{"s_hat", p.sHat},     {"s_hat1", p.sHat1},           {"s_out", p.sOut}, {"counter", p.counter},
                {"shield", p.shield}, {"shield_tilde", p.shieldTilde}, {"tele", p.tele}};
}

json key_to_json(const KeyRegister& k) {
    const char* kind = k.kind == KeyKind::sequence ? "sequence" : k.kind == KeyKind::code ? "code" : "empty";
    return json{{"kind", kind}, {"value", k.value}};
}

}  // namespace

json number_to_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("expected a number");
}

json matrix_to_json(const Mat& m) {
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
    return json{{"rows", m.rows()},
                {"cols", m.cols()},
                {"re", real_parts(r.data(), r.size())},
                {"im", imag_parts(r.data(), r.size())}};
}

Mat matrix_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("matrix must be an object");
    const int rows = positive_int(j.at("rows"), "rows");
    const int cols = positive_int(j.at("cols"), "cols");
    return row_major(read_complex(j, static_cast<std::size_t>(rows) * cols), rows, cols);
}

json state_to_json(const RegisterState& s) {
    json out{{"dims", s.shape().dims}, {"kind", s.is_pure() ? "pure" : "density"}};
    if (s.is_pure()) {
        const Vec& v = s.ket();
        out["re"] = real_parts(v.data(), v.size());
        out["im"] = imag_parts(v.data(), v.size());
    } else {
        Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = s.rho();
        out["re"] = real_parts(r.data(), r.size());
        out["im"] = imag_parts(r.data(), r.size());
    }
    return out;
}

RegisterState state_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("state must be an object");
    if (!j.contains("dims") || !j.at("dims").is_array() || j.at("dims").empty())
        throw std::invalid_argument("state needs a non-empty \"dims\" array");
    std::vector<int> dims;
    long long total = 1;
    for (const auto& d : j.at("dims")) {
        dims.push_back(positive_int(d, "dims entry"));
        total *= dims.back();
        if (total > (1LL << 14)) throw std::invalid_argument("state too large");
    }
    const std::string kind = j.value("kind", "");
    if (kind == "pure") {
        auto v = read_complex(j, static_cast<std::size_t>(total));
        return RegisterState::pure(RegisterShape(dims), Eigen::Map<Vec>(v.data(), total));
    }
    if (kind == "density") {
        auto v = read_complex(j, static_cast<std::size_t>(total * total));
        return RegisterState::density(RegisterShape(dims), row_major(v, static_cast<int>(total), static_cast<int>(total)));
    }
    throw std::invalid_argument("state kind must be \"pure\" or \"density\"");
}

json schmidt_to_json(const SchmidtState& s) {
    return json{{"coeffs", s.coeffs}, {"basisA", matrix_to_json(s.basisA)}, {"basisB", matrix_to_json(s.basisB)}};
}

SchmidtState schmidt_from_json(const json& j) {
    if (!j.is_object() || !j.contains("coeffs")) throw std::invalid_argument("schmidt data needs \"coeffs\"");
    std::vector<double> coeffs;
    for (const auto& c : j.at("coeffs")) coeffs.push_back(number_from_json(c));
    if (!j.contains("basisA") && !j.contains("basisB")) return SchmidtState::computational(coeffs);
    return SchmidtState(coeffs, matrix_from_json(j.at("basisA")), matrix_from_json(j.at("basisB")));
}

json twist_to_json(const TwistingUnitary& t) {
    json out = json::array();
    for (const auto& b : t.blocks) out.push_back(matrix_to_json(b));
    return out;
}

TwistingUnitary twist_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("twist must be a non-empty array of unitaries");
    std::vector<Mat> blocks;
    for (const auto& b : j) blocks.push_back(matrix_from_json(b));
    return TwistingUnitary(blocks);
}

json gsir_to_json(const GeneralizedPrivateState& g) {
    return json{{"schmidt", schmidt_to_json(g.key)},
                {"shield", state_to_json(g.shield)},
                {"twist", twist_to_json(g.twist)},
                {"shield_split", {g.shieldSplit.first, g.shieldSplit.second}}};
}

GeneralizedPrivateState gsir_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("state must be an object");
    for (const char* key : {"schmidt", "shield", "twist"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("missing \"") + key + "\"");
    RegisterState shield = state_from_json(j.at("shield"));
    std::pair<int, int> split{1, 1};
    if (j.contains("shield_split")) {
        const auto& s = j.at("shield_split");
        if (!s.is_array() || s.size() != 2) throw std::invalid_argument("shield_split must be [dA, dB]");
        split = {positive_int(s[0], "shield_split"), positive_int(s[1], "shield_split")};
    } else if (shield.shape().count() == 2) {
        split = {shield.shape().dims[0], shield.shape().dims[1]};
    } else {
        split = {static_cast<int>(shield.dim()), 1};
    }
    return make_generalized_private_state(schmidt_from_json(j.at("schmidt")), shield, twist_from_json(j.at("twist")),
                                          split);
}

json to_json(const BoundReport& b) {
    json params = json::object();
    for (const auto& [k, v] : b.params) params[k] = number_to_json(v);
    return json{{"name", b.name},
                {"lhs", number_to_json(b.lhs)},
                {"rhs", number_to_json(b.rhs)},
                {"satisfied", b.satisfied},
                {"slack", number_to_json(b.slack)},
                {"params", params}};
}

json to_json(const DivergenceResult& d) {
    return json{{"value", number_to_json(d.value)}, {"infinite", d.infinite}, {"method", to_string(d.method)}};
}

json to_json(const SizeBoundReport& r) {
    return json{{"n", r.n},
                {"size", r.size},
                {"lower", r.lower},
                {"upper", r.upper},
                {"mass", r.mass},
                {"upper_holds", r.upperHolds},
                {"lower_holds", r.lowerHolds}};
}

json to_json(const Comparison& c) {
    return json{{"d_exact", c.dExact},  {"d_typical", c.dTypical},     {"method", c.method},
                {"exact", c.exact},     {"eps_n", c.epsN},             {"eps_used", c.epsUsed},
                {"closeness_holds", c.closenessHolds}, {"notes", c.notes}};
}

json to_json(const EbitLedger& e) {
    return json{{"cells", e.cells},
                {"cell_dim_a", e.cellDimA},
                {"cell_dim_b", e.cellDimB},
                {"qubit_pairs", e.qubitPairs},
                {"nominal", e.nominal}};
}

json to_json(const DilutionReport& r) {
    return json{{"n", r.n},
                {"L", r.L},
                {"l_max", r.lMax},
                {"d_n", r.dn},
                {"eta", r.eta},
                {"keyBitsConsumed", r.keyBitsConsumed},
                {"keyRate", r.keyRate},
                {"entropy", r.entropy},
                {"ebits", to_json(r.ebits)},
                {"traceDistanceToTarget", r.traceDistanceToTarget},
                {"distanceToTypical", r.distanceToTypical},
                {"comparison", to_json(r.comparison)},
                {"ancillaRestored", r.ancillaRestored},
                {"xIndependent", r.xIndependent},
                {"labelExact", r.labelExact},
                {"copyArrangement", r.copyArrangement},
                {"residualDistance", r.residualDistance},
                {"keyMatrixDistance", r.keyMatrixDistance},
                {"failureProbability", r.failureProbability},
                {"overflowMass", r.overflowMass},
                {"typicalMass", r.typicalMass},
                {"outcomesEvaluated", r.outcomesEvaluated},
                {"outcomesEnumerated", r.outcomesEnumerated},
                {"structuralErrors", r.structuralErrors},
                {"backend", r.backend}};
}

json to_json(const FormationReport& r) {
    json comps = json::array();
    for (const auto& c : r.components) comps.push_back(to_json(c));
    return json{{"n", r.n},
                {"delta0", to_string(r.delta0)},
                {"l_plus", r.lPlus},
                {"chargedKeyBits", r.chargedKeyBits},
                {"actualKeyBits", r.actualKeyBits},
                {"rate", r.rate},
                {"rateBound", r.rateBound},
                {"rateWithinBound", r.rateWithinBound},
                {"typeMass", r.typeMass},
                {"traceDistance", r.traceDistance},
                {"mixtureDistance", r.mixtureDistance},
                {"successProbability", r.successProbability},
                {"exact", r.exact},
                {"kfValue", r.kfValue},
                {"components", comps}};
}

json to_json(const DenseOracleReport& r) {
    json steps = json::array();
    for (const auto& s : r.steps) steps.push_back(json{{"step", to_string(s.step)}, {"max_distance", s.maxDistance}});
    return json{{"scope", to_string(r.scope)},
                {"steps", steps},
                {"distanceToTarget", r.distanceToTarget},
                {"distanceToSymbolic", r.distanceToSymbolic},
                {"abortMass", r.abortMass},
                {"ancillaRestored", r.ancillaRestored},
                {"maxTerms", r.maxTerms}};
}

json to_json(const Record& r) {
    json words = json::array();
    for (const auto& w : r.words) words.push_back(word_to_json(w));
    return json{{"amp", r.amp},
                {"key_a", key_to_json(r.keyA)},
                {"key_b", key_to_json(r.keyB)},
                {"alice", party_to_json(r.alice)},
                {"bob", party_to_json(r.bob)},
                {"tele_at_bob", r.teleAtBob},
                {"words", words}};
}

json to_json(const Behavior& b) {
    return json{{"out_a", b.outA},
                {"out_b", b.outB},
                {"in_x", b.inX},
                {"in_y", b.inY},
                {"table", b.table},
                {"normalized", b.normalized()},
                {"non_signaling", b.non_signaling()},
                {"chsh", b.outA == 2 && b.outB == 2 && b.inX == 2 && b.inY == 2 ? json(b.chsh()) : json(nullptr)}};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + path);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace privkey
