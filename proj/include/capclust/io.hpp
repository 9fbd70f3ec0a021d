#pragma once

#include <string>

#include <json.hpp>

#include "capclust/bootstrap.hpp"
#include "capclust/components.hpp"
#include "capclust/selection.hpp"
#include "capclust/simgen.hpp"

namespace capclust {

// 17-significant-digit decimal, round-trip exact for doubles.
std::string fmt17(double v);

nlohmann::json to_json(const VectorXd& v);
nlohmann::json to_json(const MatrixXd& m);
VectorXd vector_from_json(const nlohmann::json& j);
MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitResult& f);
FitResult fit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ComponentSet& cs);
ComponentSet components_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BicReport& r);
nlohmann::json to_json(const BootstrapReport& r);
nlohmann::json to_json(const SimGroundTruth& t);
SimGroundTruth truth_from_json(const nlohmann::json& j);

EmConfig em_config_from_json(const nlohmann::json& j);
SimConfig sim_config_from_json(const nlohmann::json& j);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace capclust
