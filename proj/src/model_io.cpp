#include "advml/model_io.hpp"

#include <json.hpp>

#include "advml/error.hpp"
#include "advml/io.hpp"

namespace advml {

using nlohmann::json;

std::string mlp_to_json(const MlpModel& model) {
  json doc;
  doc["format"] = "advml-mlp";
  doc["version"] = 1;
  std::vector<std::size_t> layout{model.input_size()};
  json acts = json::array(), alphas = json::array(), weights = json::array();
  for (const DenseLayer& l : model.layers()) {
    layout.push_back(l.outputs);
    acts.push_back(to_string(l.activation));
    alphas.push_back(l.activation.alpha);
    std::vector<double> flat = l.weights;
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    weights.push_back(flat);
  }
  doc["layout"] = layout;
  doc["activations"] = acts;
  doc["alphas"] = alphas;
  doc["weights"] = weights;
  const TrainMetadata& m = model.metadata();
  doc["seed"] = m.seed;
  doc["train_metadata"] = {{"epochs", m.epochs},
                           {"learning_rate", m.learning_rate},
                           {"batch", m.batch},
                           {"train_accuracy", m.train_accuracy},
                           {"final_loss", m.final_loss}};
  return doc.dump(1);
}

MlpModel mlp_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "advml-mlp") throw InvalidInput("not an MLP model document");
    if (doc.at("version").get<int>() != 1) throw InvalidInput("unsupported model version");
    const auto layout = doc.at("layout").get<std::vector<std::size_t>>();
    const auto acts = doc.at("activations").get<std::vector<std::string>>();
    const auto weights = doc.at("weights").get<std::vector<std::vector<double>>>();
    std::vector<double> alphas(acts.size(), 0.0);
    if (doc.contains("alphas")) alphas = doc.at("alphas").get<std::vector<double>>();
    if (layout.size() < 2 || acts.size() != layout.size() - 1 || weights.size() != acts.size() ||
        alphas.size() != acts.size()) {
      throw InvalidInput("model layout, activations and weights disagree");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < layout.size(); ++i) {
      DenseLayer l;
      l.inputs = layout[i];
      l.outputs = layout[i + 1];
      const auto act = parse_activation(acts[i]);
      if (!act) throw InvalidInput("unknown activation '" + acts[i] + "'");
      l.activation = *act;
      l.activation.alpha = alphas[i];
      const auto& flat = weights[i];
      if (flat.size() != l.inputs * l.outputs + l.outputs) throw InvalidInput("layer weight count mismatch");
      l.weights.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(l.inputs * l.outputs));
      l.bias.assign(flat.begin() + static_cast<std::ptrdiff_t>(l.inputs * l.outputs), flat.end());
      layers.push_back(std::move(l));
    }
    TrainMetadata m;
    m.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("train_metadata")) {
      const json& t = doc["train_metadata"];
      m.epochs = t.value("epochs", 0);
      m.learning_rate = t.value("learning_rate", 0.0);
      m.batch = t.value("batch", std::size_t{0});
      m.train_accuracy = t.value("train_accuracy", 0.0);
      m.final_loss = t.value("final_loss", 0.0);
    }
    return MlpModel(std::move(layers), m);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed model document: ") + e.what());
  }
}

std::string svm_to_json(const SvmModel& model) {
  json doc;
  doc["format"] = "advml-svm";
  doc["version"] = 1;
  doc["w"] = model.w();
  doc["b"] = model.b();
  doc["alphas"] = model.alphas();
  doc["support_indices"] = model.support_indices();
  return doc.dump(1);
}

SvmModel svm_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "advml-svm") throw InvalidInput("not an SVM model document");
    return SvmModel(doc.at("w").get<std::vector<double>>(), doc.at("b").get<double>(),
                    doc.at("alphas").get<std::vector<double>>(),
                    doc.at("support_indices").get<std::vector<std::size_t>>());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed SVM document: ") + e.what());
  }
}

void save_mlp(const MlpModel& model, const std::string& path) { write_text_file(path, mlp_to_json(model)); }

MlpModel load_mlp(const std::string& path) { return mlp_from_json(read_text_file(path)); }

}  // namespace advml
