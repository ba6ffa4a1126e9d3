#include "advml/remote.hpp"

#include <httplib.h>

#include <condition_variable>
#include <json.hpp>
#include <mutex>
#include <regex>
#include <thread>

#include "advml/error.hpp"

namespace advml {

using nlohmann::json;

struct RemoteClassifier::Impl {
  std::unique_ptr<httplib::Client> client;
  std::string path;
  // httplib clients are not safe for concurrent use.
  std::mutex mu;

  json post(std::span<const double> x, const char* mode) {
    json req = {{"input", std::vector<double>(x.begin(), x.end())}, {"mode", mode}};
    std::lock_guard lock(mu);
    auto res = client->Post(path, req.dump(), "application/json");
    if (!res) throw Error("remote oracle request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("remote oracle returned HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(std::string("remote oracle sent malformed JSON: ") + e.what());
    }
  }
};

RemoteClassifier::RemoteClassifier(const std::string& url, std::size_t input_size, std::size_t classes)
    : impl_(std::make_unique<Impl>()), inputs_(input_size), classes_(classes) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw InvalidInput("oracle URL must look like http://host:port[/path]");
  if (input_size == 0 || classes < 2) throw InvalidInput("remote classifier needs an input size and >= 2 classes");
  impl_->client = std::make_unique<httplib::Client>(m[1].str());
  impl_->client->set_connection_timeout(5);
  impl_->client->set_read_timeout(30);
  impl_->path = m[2].matched ? m[2].str() : "/";
}

RemoteClassifier::~RemoteClassifier() = default;

std::vector<double> RemoteClassifier::probabilities(std::span<const double> x) const {
  if (x.size() != inputs_) throw InvalidInput("remote oracle input has the wrong width");
  const json r = impl_->post(x, "score");
  if (!r.contains("scores") || !r["scores"].is_array()) throw Error("remote oracle response has no scores");
  auto p = r["scores"].get<std::vector<double>>();
  if (p.size() != classes_) throw Error("remote oracle returned the wrong number of scores");
  return p;
}

int RemoteClassifier::classify(std::span<const double> x) const {
  if (x.size() != inputs_) throw InvalidInput("remote oracle input has the wrong width");
  const json r = impl_->post(x, "label");
  if (!r.contains("label") || !r["label"].is_number_integer()) throw Error("remote oracle response has no label");
  const int lab = r["label"].get<int>();
  if (lab < 0 || static_cast<std::size_t>(lab) >= classes_) throw Error("remote oracle label out of range");
  return lab;
}

struct OracleServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;
};

OracleServer::OracleServer(const Classifier& model, const std::string& host, int port)
    : impl_(std::make_unique<Impl>()) {
  impl_->server.Post(".*", [&model](const httplib::Request& req, httplib::Response& res) {
    json reply;
    try {
      const json body = json::parse(req.body);
      const auto x = body.at("input").get<std::vector<double>>();
      const std::string mode = body.value("mode", "score");
      if (x.size() != model.input_size()) throw InvalidInput("input has the wrong width");
      if (mode == "score") {
        reply["scores"] = model.probabilities(x);
      } else if (mode == "label") {
        reply["label"] = model.classify(x);
      } else {
        throw InvalidInput("mode must be score or label");
      }
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    res.set_content(reply.dump(), "application/json");
  });
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ <= 0) throw Error("could not bind oracle server on " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

OracleServer::~OracleServer() { stop(); }

void OracleServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

void OracleServer::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->cv.notify_all();
}

}  // namespace advml
