#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "advml/dataset.hpp"
#include "advml/mlp.hpp"
#include "advml/svm.hpp"
#include "config.hpp"

namespace advml::cli {

struct DataPair {
  Dataset train;
  Dataset test;
};

// --data is a gen-data directory (train.csv, test.csv) or a single file;
// --test overrides the test file. A single file serves as both sets.
DataPair load_data(const RunConfig& c);

struct LoadedModel {
  std::optional<MlpModel> mlp;
  std::optional<SvmModel> svm;
  const Classifier& classifier() const;
};
LoadedModel load_model(const std::string& path);

// Checks that --out is usable, then creates it.
std::filesystem::path prepare_out(const RunConfig& c);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_snapshot(const std::filesystem::path& dir, const RunConfig& c);

MlpLayout layout_from(const RunConfig& c, const std::string& hidden_key, const std::string& activation_key);
TrainConfig train_config_from(const RunConfig& c);

}  // namespace advml::cli
