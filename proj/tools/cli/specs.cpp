#include <set>

#include "commands.hpp"
#include "registry.hpp"

namespace advml::cli {

namespace {

using Specs = std::vector<OptionSpec>;

const Specs kGenData = {
    {"seed", "0", "random seed"},
    {"out", "", "output directory"},
    {"kind", "blobs", "blobs, moons, digits or import"},
    {"n", "200", "examples"},
    {"dims", "2", "blob dimensions"},
    {"classes", "2", "blob classes"},
    {"separation", "0.5", "blob centre circle diameter"},
    {"noise", "0.05", "noise scale"},
    {"channels", "1", "digit channels (1 or 3)"},
    {"side", "8", "digit image side"},
    {"source", "", "dataset file to import (kind=import)"},
    {"u8", "true", "imported pixels are 0-255 integers"},
    {"train-fraction", "0.75", "share of examples in train.csv"},
    {"stratified", "true", "split each class separately"},
};

const Specs kTrain = {
    {"seed", "0", "random seed"},
    {"out", "", "output directory"},
    {"data", "", "gen-data directory or dataset file"},
    {"test", "", "test dataset file"},
    {"u8", "false", "dataset pixels are 0-255 integers"},
    {"model-kind", "mlp", "mlp or svm"},
    {"hidden", "32", "hidden layer widths, e.g. 32,16, or none"},
    {"activation", "relu", "hidden activation"},
    {"epochs", "50", "training epochs"},
    {"lr", "0.1", "learning rate"},
    {"batch", "16", "minibatch size"},
};

const Specs kAttackCommon = {
    {"seed", "0", "random seed"},
    {"out", "", "output directory"},
    {"model", "", "model file (not needed with --oracle-url)"},
    {"data", "", "gen-data directory (test.csv is attacked) or dataset file"},
    {"test", "", "dataset file to attack"},
    {"u8", "false", "dataset pixels are 0-255 integers"},
    {"oracle-url", "", "remote oracle, e.g. http://127.0.0.1:8080"},
    {"name", "", "attack name"},
    {"indices", "", "examples to attack, e.g. 0..10 or 1,4,7 (default all)"},
    {"threads", "1", "worker threads"},
    {"queries", "", "query budget per example for black-box attacks"},
};

const Specs kPoisonCommon = {
    {"seed", "0", "random seed"},
    {"out", "", "output directory"},
    {"data", "", "gen-data directory or training dataset file"},
    {"test", "", "test dataset file"},
    {"u8", "false", "dataset pixels are 0-255 integers"},
    {"strategy", "", "random, farfirst, greedy, exhaustive-oracle, feature-collision, polytope or backdoor"},
    {"victim-hidden", "32", "victim hidden widths, or none"},
    {"victim-activation", "relu", "victim hidden activation"},
    {"epochs", "50", "victim training epochs"},
    {"lr", "0.1", "victim learning rate"},
    {"batch", "16", "victim minibatch size"},
};

const Specs kCleanLabel = {
    {"target-index", "0", "test index of the target instance"},
    {"base-class", "", "class of the bases (default: next class after the target's)"},
    {"k", "1", "number of poisons"},
    {"iters", "200", "optimisation iterations"},
    {"step", "0.5", "step size"},
    {"finetune", "true", "retrain only the last layer of the clean victim"},
};

const std::map<std::string, Specs>& strategy_params() {
  static const std::map<std::string, Specs> m = [] {
    std::map<std::string, Specs> s;
    s["random"] = {{"p", "0.3", "fraction of labels to flip"},
                   {"mode", "untargeted", "untargeted or targeted"},
                   {"src", "", "targeted: source label"},
                   {"dst", "", "targeted: destination label"}};
    s["farfirst"] = {{"l", "1", "labels to flip"}};
    s["greedy"] = {{"l", "1", "labels to flip"}, {"threads", "1", "worker threads per round"}};
    s["exhaustive-oracle"] = {{"l", "1", "labels to flip"}};
    Specs fc = kCleanLabel;
    fc.push_back({"beta", "0.25", "input-space similarity weight"});
    fc.push_back({"watermark", "", "watermark opacity, e.g. 0.3"});
    s["feature-collision"] = fc;
    Specs poly = kCleanLabel;
    poly[2] = {"k", "5", "number of poisons"};
    poly.push_back({"eps", "0.1", "Linf bound around each base"});
    poly.push_back({"polytope-mode", "bullseye", "convex, bullseye or bullseye-multi"});
    poly.push_back({"targets", "1", "bullseye-multi: target instances of the target's class"});
    poly.push_back({"extractors", "1", "substitute feature extractors"});
    s["polytope"] = poly;
    s["backdoor"] = {{"rate", "0.1", "fraction of examples to poison"},
                     {"target", "0", "label the trigger maps to"},
                     {"trigger-size", "2", "side of the corner square"},
                     {"trigger-value", "1", "trigger pixel value"}};
    return s;
  }();
  return m;
}

const Specs kEval = {
    {"seed", "0", "random seed"},
    {"out", "", "output directory"},
    {"model", "", "model file"},
    {"data", "", "gen-data directory (test.csv is used) or dataset file"},
    {"test", "", "dataset file to evaluate"},
    {"u8", "false", "dataset pixels are 0-255 integers"},
    {"trigger-target", "", "evaluate a corner backdoor trigger mapping to this label"},
    {"trigger-size", "2", "side of the corner square"},
    {"trigger-value", "1", "trigger pixel value"},
};

const Specs kReport = {
    {"out", "", "output directory"},
    {"plot", "false", "also write report.svg"},
};

const Specs kServe = {
    {"model", "", "model file"},
    {"host", "127.0.0.1", "bind address"},
    {"port", "8080", "port (0 picks a free one)"},
    {"duration", "0", "seconds to serve; 0 serves until interrupted"},
    {"port-file", "", "write the bound port here"},
};

Specs join(Specs a, const Specs& b) {
  std::set<std::string> seen;
  for (const auto& s : a) seen.insert(s.name);
  for (const auto& s : b) {
    if (seen.insert(s.name).second) a.push_back(s);
  }
  return a;
}

}  // namespace

std::vector<OptionSpec> command_specs(const std::string& command, const std::string& selector) {
  if (command == "gen-data") return kGenData;
  if (command == "train") return kTrain;
  if (command == "eval") return kEval;
  if (command == "report") return kReport;
  if (command == "serve-oracle") return kServe;
  if (command == "attack") {
    const AttackEntry* e = find_attack(selector);
    if (!e) throw UsageError("unknown attack '" + selector + "'");
    return join(kAttackCommon, e->params);
  }
  if (command == "poison") {
    const auto& m = strategy_params();
    const auto it = m.find(selector);
    if (it == m.end()) throw UsageError("unknown strategy '" + selector + "'");
    return join(kPoisonCommon, it->second);
  }
  throw UsageError("unknown command '" + command + "'");
}

std::vector<OptionSpec> command_flag_specs(const std::string& command) {
  if (command == "attack") return join(kAttackCommon, all_attack_params());
  if (command == "poison") {
    Specs s = kPoisonCommon;
    std::set<std::string> seen;
    for (const auto& o : s) seen.insert(o.name);
    for (const auto& [name, p] : strategy_params()) {
      for (const auto& o : p) {
        if (seen.insert(o.name).second) s.push_back({o.name, "", o.help});
      }
    }
    return s;
  }
  return command_specs(command);
}

}  // namespace advml::cli
