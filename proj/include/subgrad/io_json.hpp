#pragma once

#include "subgrad/cells.hpp"
#include "subgrad/diagnostics.hpp"
#include "subgrad/engine.hpp"
#include "subgrad/piecewise.hpp"
#include "subgrad/strata.hpp"

#include <json.hpp>

#include <string>

namespace sg {

using Json = nlohmann::json;

inline constexpr const char* kFunctionSchema = "subgrad.function/1";
inline constexpr const char* kStratificationSchema = "subgrad.stratification/1";

// Parses text and reports failures as ConfigError "source:line:column: message".
Json parse_json(const std::string& text, const std::string& source = "<input>");
Json load_json_file(const std::string& path);

// Doubles are written in shortest round-trip form; infinities become null.
Json number(double v);
Json vector_json(const Vector& v);
Vector vector_from(const Json& j);
// Bounds: null encodes -inf for lower, +inf for upper.
Json bounds_json(const Vector& v);
Vector bounds_from(const Json& j, double inf_value);

Json polynomial_json(const Polynomial& p);
Polynomial polynomial_from(const Json& j, int nvars);

Json node_json(const Node& n);
Node node_from(const Json& j);

Json function_json(const PiecewiseFunction& f);
PiecewiseFunction function_from(const Json& j);

Json stratification_json(const Stratification& S);
Stratification stratification_from(const Json& j);

Json to_json(const ValidationReport& r);
Json to_json(const WConditionFit& w);
Json to_json(const ExponentAssignment& ex);
Json to_json(const KLFit& fit);
Json to_json(const ProofConstants& pc);
Json to_json(const IndexTrace& it);
Json to_json(const BoundReport& b);
Json to_json(const SigmaFit& s);
Json to_json(const DescentReport& d);
Json to_json(const LengthReport& l);
Json to_json(const InclusionReport& r);
Json to_json(const QuasiconvexityEstimate& q);
Json to_json(const ShrunkenCell& s);

// Run-length encoding of a sorted index list as [start, length] pairs.
Json run_length(const std::vector<long>& sorted);

} // namespace sg
