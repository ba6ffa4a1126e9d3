#include <atomic>
#include <chrono>
#include <csignal>
#include <ostream>
#include <thread>

#include "advml/io.hpp"
#include "advml/model_io.hpp"
#include "advml/poisoning.hpp"
#include "advml/remote.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace advml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void cmd_gen_data(const RunConfig& c, std::ostream& out) {
  const std::string kind = c.str("kind");
  const std::uint64_t seed = c.seed();
  Dataset data;
  if (kind == "blobs") {
    data = gaussian_blobs({c.count("n"), c.count("dims"), c.count("classes"), c.real("separation"), c.real("noise")},
                          seed);
  } else if (kind == "moons") {
    data = two_moons({c.count("n"), c.real("noise")}, seed);
  } else if (kind == "digits") {
    data = synth_digits({c.count("n"), c.real("noise"), c.count("channels"), c.count("side")}, seed);
  } else if (kind == "import") {
    const std::string src = c.str("source");
    if (!fs::is_regular_file(src)) throw UsageError("source file not found: " + src);
    data = load_dataset(src, c.flag("u8"));
  } else {
    throw UsageError("--kind must be blobs, moons, digits or import");
  }
  const Split s = split(data, c.real("train-fraction"), seed, c.flag("stratified"));
  const fs::path dir = prepare_out(c);
  save_dataset(s.train, (dir / "train.csv").string());
  save_dataset(s.test, (dir / "test.csv").string());
  json summary = {{"kind", kind},
                  {"n", data.size()},
                  {"train", s.train.size()},
                  {"test", s.test.size()},
                  {"classes", data.class_count()},
                  {"dims", data.dims()},
                  {"seed", seed}};
  write_json(dir / "summary.json", summary);
  write_snapshot(dir, c);
  out << "wrote " << s.train.size() << " train and " << s.test.size() << " test examples to " << dir.string()
      << "\n";
}

void cmd_train(const RunConfig& c, std::ostream& out) {
  const DataPair d = load_data(c);
  const std::string kind = c.str("model-kind");
  json metrics;
  std::string model_text;
  if (kind == "mlp") {
    MlpLayout layout = layout_from(c, "hidden", "activation");
    layout.classes = d.train.class_count();
    const MlpModel m = train_mlp(d.train, layout, train_config_from(c));
    metrics["train_acc"] = accuracy(m, d.train);
    metrics["test_acc"] = accuracy(m, d.test);
    metrics["final_loss"] = m.metadata().final_loss;
    model_text = mlp_to_json(m);
  } else if (kind == "svm") {
    const SvmModel m = svm_train(d.train);
    metrics["train_acc"] = accuracy(m, d.train);
    metrics["test_acc"] = accuracy(m, d.test);
    metrics["support_vectors"] = m.support_indices().size();
    model_text = svm_to_json(m);
  } else {
    throw UsageError("--model-kind must be mlp or svm");
  }
  metrics["seed"] = c.seed();
  metrics["model_kind"] = kind;
  const fs::path dir = prepare_out(c);
  write_text_file((dir / "model.json").string(), model_text);
  write_json(dir / "metrics.json", metrics);
  write_snapshot(dir, c);
  out << "train_acc " << metrics["train_acc"].get<double>() << " test_acc " << metrics["test_acc"].get<double>()
      << "\n";
}

void cmd_eval(const RunConfig& c, std::ostream& out) {
  const LoadedModel m = load_model(c.str("model"));
  const Dataset test = load_data(c).test;
  const Classifier& model = m.classifier();
  if (model.input_size() != test.feature_count()) throw UsageError("model does not match the dataset width");
  json metrics = {{"accuracy", accuracy(model, test)}, {"n", test.size()}, {"classes", test.class_count()}};
  if (c.has("trigger-target")) {
    const Trigger t = corner_trigger(test.dims(), c.count("trigger-size"), static_cast<int>(c.integer("trigger-target")),
                                     c.real("trigger-value"));
    const BackdoorMetrics b = backdoor_eval(model, test, t);
    metrics["attack_success_rate"] = b.attack_success_rate;
    metrics["triggered"] = b.triggered;
  }
  const fs::path dir = prepare_out(c);
  write_json(dir / "metrics.json", metrics);
  write_snapshot(dir, c);
  out << "accuracy " << metrics["accuracy"].get<double>() << "\n";
}

namespace {
std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }
}  // namespace

void cmd_serve_oracle(const RunConfig& c, std::ostream& out) {
  const LoadedModel m = load_model(c.str("model"));
  const long long port = c.integer("port");
  if (port < 0 || port > 65535) throw UsageError("--port must lie in [0, 65535]");
  OracleServer server(m.classifier(), c.str("host"), static_cast<int>(port));
  out << "serving on http://" << c.str("host") << ":" << server.port() << "\n" << std::flush;
  if (c.has("port-file")) write_text_file(c.str("port-file"), std::to_string(server.port()) + "\n");
  const double duration = c.real("duration");
  g_interrupted = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    if (duration > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  std::signal(SIGINT, SIG_DFL);
  std::signal(SIGTERM, SIG_DFL);
}

}  // namespace advml::cli
