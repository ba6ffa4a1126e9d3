#include "common.hpp"

#include "advml/error.hpp"
#include "advml/io.hpp"
#include "advml/model_io.hpp"

namespace advml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Dataset read_dataset(const fs::path& p, bool u8) {
  if (!fs::is_regular_file(p)) throw UsageError("dataset file not found: " + p.string());
  return load_dataset(p.string(), u8);
}

}  // namespace

DataPair load_data(const RunConfig& c) {
  const fs::path data = c.str("data");
  const bool u8 = c.flag("u8");
  DataPair d;
  if (fs::is_directory(data)) {
    d.train = read_dataset(data / "train.csv", u8);
    d.test = c.has("test") ? read_dataset(c.str("test"), u8) : read_dataset(data / "test.csv", u8);
  } else {
    d.train = read_dataset(data, u8);
    d.test = c.has("test") ? read_dataset(c.str("test"), u8) : d.train;
  }
  if (d.train.dims() != d.test.dims() || d.train.class_count() != d.test.class_count()) {
    throw UsageError("train and test sets disagree on dims or class count");
  }
  return d;
}

const Classifier& LoadedModel::classifier() const {
  if (mlp) return *mlp;
  return *svm;
}

LoadedModel load_model(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("model file not found: " + path);
  const std::string text = read_text_file(path);
  std::string format;
  try {
    format = json::parse(text).at("format").get<std::string>();
  } catch (const json::exception&) {
    throw UsageError("model file is not a model document: " + path);
  }
  LoadedModel m;
  if (format == "advml-mlp") {
    m.mlp = mlp_from_json(text);
  } else if (format == "advml-svm") {
    m.svm = svm_from_json(text);
  } else {
    throw UsageError("unknown model format '" + format + "'");
  }
  return m;
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out = c.str("out");
  if (fs::exists(out) && !fs::is_directory(out)) throw UsageError("--out exists and is not a directory");
  fs::create_directories(out);
  return out;
}

void write_json(const fs::path& path, const json& j) { write_text_file(path.string(), j.dump(2) + "\n"); }

void write_snapshot(const fs::path& dir, const RunConfig& c) {
  write_text_file((dir / "config.txt").string(), c.snapshot());
}

MlpLayout layout_from(const RunConfig& c, const std::string& hidden_key, const std::string& activation_key) {
  MlpLayout l;
  if (c.str_or(hidden_key, "none") != "none") l.hidden = c.sizes(hidden_key);
  const auto act = parse_activation(c.str(activation_key));
  if (!act) throw UsageError("--" + activation_key + ": unknown activation");
  l.activation = *act;
  return l;
}

TrainConfig train_config_from(const RunConfig& c) {
  TrainConfig t;
  t.epochs = static_cast<int>(c.count("epochs"));
  t.learning_rate = c.real("lr");
  t.batch = c.count("batch");
  t.seed = c.seed();
  return t;
}

}  // namespace advml::cli
