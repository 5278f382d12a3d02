#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "brw/scheme.hpp"

namespace brw {

using json = nlohmann::json;

json pmf_to_json(const std::vector<PmfEntry>& pmf);
std::vector<PmfEntry> pmf_from_json(const json& j);

json to_json(const OffspringLaw& law);
json to_json(const StepLaw& law);
json to_json(const SchemeSpec& spec);

OffspringLaw offspring_from_json(const json& j);
StepLaw step_from_json(const json& j);
SchemeSpec scheme_from_json(const json& j);

json read_json_file(const std::string& path);
SchemeSpec load_scheme(const std::string& path);

}  // namespace brw
