#pragma once

#include <string>

#include "core/measures.hpp"

namespace photoscore {

// Shortest round-trippable decimal form of a double (%.17g).
std::string g17(double x);

// Current UTC time, ISO-8601.
std::string utc_timestamp();

// Text report for one model's disentanglement measure.
std::string measure_report(const std::string& model_name,
                           const DisentanglementResult& result,
                           bool include_timestamp);

// Text report for a confusion-table evaluation; binary renders the two-class
// low/high table.
std::string eval_report(const ClassMetrics& metrics, bool binary,
                        bool include_timestamp);

}  // namespace photoscore
