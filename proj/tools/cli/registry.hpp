#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "advml/attack.hpp"
#include "advml/mlp.hpp"
#include "config.hpp"

namespace advml::cli {

struct AttackContext {
  const MlpModel* model = nullptr;  // absent for remote oracles and SVMs
  const Classifier* victim = nullptr;
  const RunConfig* config = nullptr;
  std::optional<std::size_t> query_budget;
  std::uint64_t seed = 0;  // per example
};

struct FeasibilityBound {
  double eps = 0.0;
  NormKind norm = NormKind::Linf;
};

struct AttackEntry {
  std::string name;
  bool whitebox = true;
  std::string summary;
  std::vector<OptionSpec> params;
  std::function<AttackResult(const AttackContext&, const Tensor&, int)> run;
  // Norm ball every output must respect, if the configuration implies one.
  std::function<std::optional<FeasibilityBound>(const RunConfig&)> bound;
};

const std::vector<AttackEntry>& attack_registry();
const AttackEntry* find_attack(const std::string& name);
std::string registry_listing();

// Union of every attack's parameters, for flag declaration.
std::vector<OptionSpec> all_attack_params();

}  // namespace advml::cli
