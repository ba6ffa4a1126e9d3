#include "advml/classifier.hpp"

#include <algorithm>

namespace advml {

int Classifier::classify(std::span<const double> x) const {
  const auto p = probabilities(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace advml
