#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "privkey/rng.hpp"
#include "privkey/serialize.hpp"

using namespace privkey;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("privkey_test_" + name)).string();
}

}  // namespace

TEST_CASE("non-finite numbers") {
    CHECK(number_to_json(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(number_to_json(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(std::isnan(number_from_json(number_to_json(std::nan("")))));
    CHECK(number_from_json(json(0.25)) == 0.25);
    CHECK(std::isinf(number_from_json(json("inf"))));
    CHECK_THROWS(number_from_json(json("many")));
}

TEST_CASE("matrix and state roundtrip") {
    Rng rng(4);
    Mat u = random_unitary(3, rng);
    CHECK(matrix_from_json(matrix_to_json(u)) == u);
    auto j = matrix_to_json(u);
    CHECK(j["rows"] == 3);
    CHECK(j["re"].size() == 9);
    auto rho = RegisterState::density(RegisterShape({3}), random_density(3, rng).rho());
    CHECK(state_from_json(state_to_json(rho)).rho() == rho.rho());
    auto phi = make_max_entangled(2);
    auto back = state_from_json(state_to_json(phi));
    CHECK(back.is_pure());
    CHECK(back.shape().dims == std::vector<int>{2, 2});
    json bad = state_to_json(phi);
    bad["dims"] = {2, 3};
    CHECK_THROWS(state_from_json(bad));
    CHECK_THROWS(matrix_from_json(json{{"rows", 2}, {"cols", 2}, {"re", {1, 0}}}));
}

TEST_CASE("GSIR roundtrip and defaults") {
    Rng rng(5);
    auto g = random_gsir(3, 2, 2, rng);
    auto h = gsir_from_json(gsir_to_json(g));
    CHECK((h.expanded().rho() - g.expanded().rho()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(h.shieldSplit == g.shieldSplit);
    json minimal = {{"schmidt", {{"coeffs", {0.5, 0.5}}}},
                    {"shield", state_to_json(RegisterState::pure(RegisterShape({1, 1}), Vec::Ones(1)))},
                    {"twist", twist_to_json(TwistingUnitary::trivial(2, 1))}};
    auto m = gsir_from_json(minimal);
    CHECK(m.key.is_computational());
    CHECK(m.dk() == 2);
}

TEST_CASE("report schemas") {
    auto b = make_bound("demo", 1.0, 2.0, {{"n", 3}});
    auto j = to_json(b);
    CHECK(j["name"] == "demo");
    CHECK(j["slack"] == 1.0);
    CHECK(j["satisfied"] == true);
    CHECK(j.contains("lhs"));
    CHECK(j.contains("rhs"));
    auto d = to_json(DivergenceResult::infinity(DivergenceMethod::eigendecomposition));
    CHECK(d["value"] == "inf");
}

TEST_CASE("atomic file writes") {
    const auto path = temp_path("write.json");
    write_text_file(path, "{\"a\": 1}\n");
    CHECK(read_json_file(path)["a"] == 1);
    std::filesystem::remove(path);
    CHECK_THROWS(write_text_file(temp_path("missing_dir/x/y.json"), "{}"));
    CHECK_THROWS(read_json_file(temp_path("does_not_exist.json")));
    const auto broken = temp_path("broken.json");
    std::ofstream(broken) << "{not json";
    CHECK_THROWS(read_json_file(broken));
    std::filesystem::remove(broken);
}
