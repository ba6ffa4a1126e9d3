#pragma once

#include <string>

#include "advml/mlp.hpp"
#include "advml/svm.hpp"

namespace advml {

// Versioned JSON documents. Doubles are written in shortest round-trip form,
// so weights survive save/load bit for bit.
//   {"format":"advml-mlp","version":1,"layout":[in,h1,...,K],
//    "activations":["relu",...,"identity"],"alphas":[...],
//    "weights":[[W0 row-major..., b0...], ...],"seed":s,"train_metadata":{...}}
std::string mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(const std::string& text);

std::string svm_to_json(const SvmModel& model);
SvmModel svm_from_json(const std::string& text);

void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);

}  // namespace advml
