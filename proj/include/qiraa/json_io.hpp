#pragma once

#include "json.hpp"
#include "qiraa/models.hpp"

namespace qiraa {

using json = nlohmann::json;

void to_json(json& j, const Hyperparams& h);
void from_json(const json& j, Hyperparams& h);
void to_json(json& j, const ModelSpec& s);
/// Missing hyperparameters take the kind's defaults.
void from_json(const json& j, ModelSpec& s);

void to_json(json& j, const Matrix& m);
void from_json(const json& j, Matrix& m);

}  // namespace qiraa
