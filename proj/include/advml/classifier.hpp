#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace advml {

// Anything that maps an input vector to class probabilities. Black-box
// oracles and poisoning evaluation only see this surface.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t input_size() const = 0;
  virtual std::size_t class_count() const = 0;
  virtual std::vector<double> probabilities(std::span<const double> x) const = 0;
  virtual int classify(std::span<const double> x) const;
};

}  // namespace advml
