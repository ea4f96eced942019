#pragma once

#include <string>

#include <json.hpp>

#include "proxest/adjust.hpp"
#include "proxest/bootstrap.hpp"
#include "proxest/cohort.hpp"
#include "proxest/confusion.hpp"
#include "proxest/simex.hpp"
#include "proxest/synth.hpp"

namespace proxest {

// Cohort CSV: header y,x,u_star[,u_true],c_0,...,c_{p-1}; one row per unit;
// an empty u_star field marks a missing proxy label. Doubles are written
// with 17 significant digits so write/read round-trips bit-exactly.
Cohort read_cohort_csv(const std::string& path, int k = 0);
void write_cohort_csv(const std::string& path, const Cohort& cohort);

// Confusion CSV: K lines of K comma-separated nonnegative integers, true
// class on rows, no header.
ConfusionCounts read_confusion_csv(const std::string& path);
void write_confusion_csv(const std::string& path, const ConfusionCounts& counts);

DgpConfig read_dgp_json(const std::string& path);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex characters
std::string file_digest_hex(const std::string& path);
// same digest over an in-memory string (used for config hashes)
std::string string_digest_hex(const std::string& text);

// JSON shapes for reports; non-finite ratios serialize as null
nlohmann::json to_json(const CausalEstimate& estimate);
nlohmann::json to_json(const EstimateReport& report);
nlohmann::json to_json(const IntervalEstimate& interval, const std::string& estimand);
nlohmann::json to_json(const BootstrapResult& result);
nlohmann::json to_json(const SimexTrace& trace);
nlohmann::json to_json(const TrueEffects& effects);

}  // namespace proxest
