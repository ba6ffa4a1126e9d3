#pragma once

#include <memory>
#include <string>

#include "advml/classifier.hpp"

namespace advml {

// Classifier on the far side of an HTTP endpoint. Each call POSTs
// {"input": [...], "mode": "score" | "label"} and expects {"scores": [...]}
// or {"label": k}. A URL without a path posts to "/".
class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(const std::string& url, std::size_t input_size, std::size_t classes);
  ~RemoteClassifier() override;

  std::size_t input_size() const override { return inputs_; }
  std::size_t class_count() const override { return classes_; }
  std::vector<double> probabilities(std::span<const double> x) const override;
  int classify(std::span<const double> x) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t inputs_;
  std::size_t classes_;
};

// Serves a classifier over the same protocol on every path. Listens on a
// background thread until stop() or destruction; port 0 picks a free port.
class OracleServer {
 public:
  OracleServer(const Classifier& model, const std::string& host = "127.0.0.1", int port = 0);
  ~OracleServer();
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  int port() const noexcept { return port_; }
  // Blocks the calling thread until stop() is called from elsewhere.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace advml
