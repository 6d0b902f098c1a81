#pragma once

#include <string>

#include <json.hpp>

#include "privkey/dense_oracle.hpp"
#include "privkey/dilution.hpp"
#include "privkey/divergences.hpp"
#include "privkey/states.hpp"
#include "privkey/typicality.hpp"

namespace privkey {

using json = nlohmann::ordered_json;

// Non-finite doubles are written as the strings "inf", "-inf" and "nan".
json number_to_json(double v);
double number_from_json(const json& j);

// Matrix: {"rows", "cols", "re", "im"}, row-major.
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);

// State: {"dims", "kind": "pure"|"density", "re", "im"}, row-major.
json state_to_json(const RegisterState& s);
RegisterState state_from_json(const json& j);

json schmidt_to_json(const SchmidtState& s);
SchmidtState schmidt_from_json(const json& j);
json twist_to_json(const TwistingUnitary& t);
TwistingUnitary twist_from_json(const json& j);

// {"schmidt", "shield", "twist", "shield_split"}.
json gsir_to_json(const GeneralizedPrivateState& g);
GeneralizedPrivateState gsir_from_json(const json& j);

json to_json(const BoundReport& b);
json to_json(const DivergenceResult& d);
json to_json(const SizeBoundReport& r);
json to_json(const Comparison& c);
json to_json(const EbitLedger& e);
json to_json(const DilutionReport& r);
json to_json(const FormationReport& r);
json to_json(const DenseOracleReport& r);
json to_json(const Record& r);
json to_json(const Behavior& b);

json read_json_file(const std::string& path);
// Writes through a temporary file and renames, so a failed run leaves no partial file.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace privkey
