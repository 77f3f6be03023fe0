#pragma once

// JSON forms of the configuration-level types, shared by the checkpoint
// header and the run-config file. Malformed input throws Error{InvalidConfig}.

#include <json.hpp>

#include "deepqoe/model.hpp"
#include "deepqoe/schema.hpp"

namespace deepqoe::json_io {

using nlohmann::json;

json schema_to_json(const schema::DatasetSchema& schema);
schema::DatasetSchema schema_from_json(const json& j);

// Text branches come back without a table; the caller attaches one.
json branch_to_json(const model::BranchSpec& branch);
model::BranchSpec branch_from_json(const json& j);

json network_to_json(const model::NetworkConfig& config);
model::NetworkConfig network_from_json(const json& j);

json optimizer_to_json(const diff::OptimizerSpec& spec);
diff::OptimizerSpec optimizer_from_json(const json& j);

json train_to_json(const model::TrainConfig& config);
model::TrainConfig train_from_json(const json& j);

json synthetic_to_json(const schema::SyntheticSpec& spec);
schema::SyntheticSpec synthetic_from_json(const json& j);

}  // namespace deepqoe::json_io
