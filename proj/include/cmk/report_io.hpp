#pragma once

// JSON serialization of reports and run configurations.

#include <string>

#include <json.hpp>

#include "cmk/diagnostics.hpp"
#include "cmk/problem.hpp"
#include "cmk/solver.hpp"

namespace cmk {

using Json = nlohmann::ordered_json;

Json to_json(const SolveReport& report);
Json to_json(const MonitorReport& report);
Json to_json(const ConvexityCertificate& cert);
Json to_json(const SolveOptions& opts);
Json to_json(const UniquenessReport& report);
Json to_json(const EpsStep& step);

/// Pretty-printed with a trailing newline; throws IoError.
void write_json(const Json& doc, const std::string& path);

}  // namespace cmk
