#pragma once

#include <string>

#include "pvs/ensemble.hpp"
#include "pvs/trees.hpp"

namespace pvs {

// In-memory forms of the model files written by save(). Loading validates the
// schema and every shape and reports the offending field path.

std::string ensemble_to_string(const EnsembleModel& model);
EnsembleModel ensemble_from_string(const std::string& contents);

std::string baseline_to_string(const BaselineModel& model);
BaselineModel baseline_from_string(const std::string& contents);

}  // namespace pvs
