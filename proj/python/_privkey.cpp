#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "privkey/cli.hpp"
#include "privkey/divergences.hpp"
#include "privkey/typicality.hpp"

namespace py = pybind11;
using namespace privkey;

namespace {

SourceSpec spec_from(const std::vector<std::string>& probs, int n, const std::string& delta) {
    std::vector<std::string> alphabet;
    for (std::size_t i = 0; i < probs.size(); ++i) alphabet.push_back(std::to_string(i));
    return SourceSpec::from_strings(alphabet, probs, n, delta);
}

py::tuple run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_privkey, m) {
    m.doc() = "Private-state dilution toolkit";

    m.def("run_cli", &run, py::arg("args"), "Run a CLI command; returns (exit code, stdout, stderr).");

    m.def(
        "typical_mass",
        [](const std::vector<std::string>& probs, int n, const std::string& delta) {
            return to_string(typical_mass(spec_from(probs, n, delta)));
        },
        py::arg("probs"), py::arg("n"), py::arg("delta"), "Exact typical-set mass as a rational string.");
    m.def(
        "typical_size",
        [](const std::vector<std::string>& probs, int n, const std::string& delta) {
            return typical_size(spec_from(probs, n, delta)).str();
        },
        py::arg("probs"), py::arg("n"), py::arg("delta"));
    m.def(
        "l_max", [](int n, const std::string& delta) { return l_max(n, parse_rational(delta)); }, py::arg("n"),
        py::arg("delta"));

    m.def(
        "relative_entropy",
        [](const Mat& rho, const Mat& sigma) {
            auto r = relative_entropy(rho, sigma);
            return r.infinite ? std::numeric_limits<double>::infinity() : r.value;
        },
        py::arg("rho"), py::arg("sigma"));
    m.def(
        "hypothesis_testing_divergence",
        [](const Mat& rho, const Mat& sigma, double eps) {
            auto r = hypothesis_testing_divergence(rho, sigma, eps);
            return r.infinite ? std::numeric_limits<double>::infinity() : r.value;
        },
        py::arg("rho"), py::arg("sigma"), py::arg("epsilon"));
    m.def("dephased_max_entangled", &dephased_max_entangled, py::arg("d"));
    m.def(
        "yield_cost_bounds",
        [](int dk, double eps1, double eps2) {
            auto r = yield_cost_bounds(dk, eps1, eps2);
            return py::dict(py::arg("kc_lower") = r.kcLower, py::arg("kc_upper") = r.kcUpper,
                            py::arg("correction") = r.correction);
        },
        py::arg("dk"), py::arg("eps1"), py::arg("eps2"));
}
