#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "mbde/booster.hpp"
#include "mbde/sampler.hpp"
#include "mbde/targets.hpp"
#include "mbde/weak_learner.hpp"

namespace mbde {

// Locale-independent double formatting with 17 significant digits (enough to
// round-trip any double exactly).
std::string format_double(double v);
double parse_double(const std::string& s);

// Dataset CSV: header "x0" or "x0,x1", one point per row.
void write_dataset_csv(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

nlohmann::json to_json(const TargetDensity& t);
TargetDensity target_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Classifier& c);
Classifier classifier_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WlaReport& r);
WlaReport wla_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MollifiedDensity& q);
MollifiedDensity model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PrivacyLedger& l);
PrivacyLedger ledger_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

void write_text(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

}  // namespace mbde
