#pragma once

#include "hdvb/mc_harness.hpp"
#include "hdvb/var_fit.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace hdvb::cli {

std::string hex64(std::uint64_t v);

nlohmann::json selector_json(const SelectorConfig& s);
nlohmann::json spec_json(const ExperimentSpec& spec);
nlohmann::json report_json(const ExperimentReport& report);

}  // namespace hdvb::cli
