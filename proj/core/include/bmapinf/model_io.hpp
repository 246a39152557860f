#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "bmapinf/model.hpp"

namespace bmapinf {

// Model file format (JSON):
//
//   {
//     "name": "optional free text",
//     "d": 2,
//     "d0": [[-2.0, 0.8], [0.4, -1.0]],          // or flat row-major, length d*d
//     "streams": [
//       { "label": "a",
//         "rate_matrix": [[1.0, 0.2], [0.1, 0.5]],
//         "batch": { "family": "geometric", "params": { "p": 0.5 } },
//         "service_rate": 1.0 }
//     ]
//   }
//
// batch families and params: finite {pmf: [p1, p2, ...]}, geometric {p},
// zeta {alpha}, logheavy {beta}. Unknown keys anywhere are rejected with
// InvalidInput. docs/model.schema.json is the machine-readable version.
struct ModelDocument {
  std::string name;
  MbmapModel model;
};

ModelDocument model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const MbmapModel& model, const std::string& name = {});
nlohmann::json batch_to_json(const BatchSizeDistribution& batch);

ModelDocument load_model_file(const std::filesystem::path& path);

}  // namespace bmapinf
