#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <thread>

#include "advml/error.hpp"
#include "advml/io.hpp"
#include "advml/norms.hpp"
#include "advml/remote.hpp"
#include "advml/rng.hpp"
#include "commands.hpp"
#include "common.hpp"
#include "registry.hpp"

namespace advml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Row {
  std::size_t index = 0;
  int orig_label = 0;
  int adv_label = -1;
  bool success = false;
  NormSet norms;
  std::size_t queries = 0;
  int iterations = 0;
  double wall_time_ms = 0.0;
  bool error = false;
};

void verify(const AttackResult& r, const Tensor& x, const std::optional<FeasibilityBound>& bound,
            std::size_t index, const std::string& name) {
  const std::string where = name + " on example " + std::to_string(index);
  if (!r.x_adv.same_shape(x)) throw FeasibilityViolation(where + " changed the input shape");
  for (double v : r.x_adv) {
    if (!(v >= 0.0 && v <= 1.0)) throw FeasibilityViolation(where + " left the [0, 1] box");
  }
  if (bound) {
    const double d = lp_distance(r.x_adv, x, bound->norm);
    if (d > bound->eps * (1.0 + 1e-6)) {
      throw FeasibilityViolation(where + " exceeded its " + to_string(bound->norm) + " budget: " +
                                 format_double(d) + " > " + format_double(bound->eps));
    }
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void cmd_attack(const RunConfig& c, std::ostream& out) {
  const AttackEntry* entry = find_attack(c.str("name"));
  if (!entry) throw UsageError("unknown attack '" + c.str("name") + "'");

  DataPair data = load_data(c);
  const Dataset& test = data.test;
  std::optional<LoadedModel> local;
  std::unique_ptr<RemoteClassifier> remote;
  if (c.has("oracle-url")) {
    if (entry->whitebox) throw UsageError(entry->name + " is a white-box attack and cannot use --oracle-url");
    if (c.has("model")) throw UsageError("give either --model or --oracle-url, not both");
    remote = std::make_unique<RemoteClassifier>(c.str("oracle-url"), test.feature_count(), test.class_count());
  } else {
    local = load_model(c.str("model"));
    if (entry->whitebox && !local->mlp) throw UsageError(entry->name + " needs an MLP model");
  }
  const Classifier& victim = remote ? static_cast<const Classifier&>(*remote) : local->classifier();
  if (victim.input_size() != test.feature_count()) throw UsageError("model does not match the dataset width");

  const std::vector<std::size_t> indices =
      c.has("indices") ? parse_indices(c.str("indices"), test.size()) : [&] {
        std::vector<std::size_t> all(test.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }();
  const std::size_t threads = std::max<std::size_t>(1, c.count("threads"));
  std::optional<std::size_t> budget;
  if (c.has("queries")) budget = c.count("queries");
  const std::optional<FeasibilityBound> bound = entry->bound(c);
  const std::uint64_t seed = c.seed();

  std::vector<Row> rows(indices.size());
  std::vector<std::exception_ptr> failures(indices.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < indices.size(); k = next++) {
      const std::size_t i = indices[k];
      try {
        AttackContext ctx;
        ctx.model = local && local->mlp ? &*local->mlp : nullptr;
        ctx.victim = &victim;
        ctx.config = &c;
        ctx.query_budget = budget;
        ctx.seed = mix_seed(seed, i);
        Row row;
        row.index = i;
        row.orig_label = test.label(i);
        const int label = static_cast<int>(test.class_index(i));
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const AttackResult r = entry->run(ctx, test.input(i), label);
          row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
          verify(r, test.input(i), bound, i, entry->name);
          row.adv_label = test.label_domain() == LabelDomain::Signed ? 2 * r.adv_label - 1 : r.adv_label;
          row.success = r.success;
          row.norms = perturbation_norms(r.x_adv, test.input(i));
          row.queries = r.queries;
          row.iterations = r.iterations;
        } catch (const DegenerateGradient&) {
          row.error = true;
        } catch (const InvalidStart&) {
          row.error = true;
        } catch (const InitializationError&) {
          row.error = true;
        }
        rows[k] = row;
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::string csv = "index,orig_label,adv_label,success,l0,l2,linf,queries,iterations,wall_time_ms\n";
  std::vector<double> l0, l2, linf, queries;
  std::size_t successes = 0, errors = 0, total_queries = 0;
  for (const Row& r : rows) {
    csv += std::to_string(r.index) + "," + std::to_string(r.orig_label) + "," + std::to_string(r.adv_label) + "," +
           (r.success ? "1" : "0") + "," + format_double(r.norms.l0) + "," + format_double(r.norms.l2) + "," +
           format_double(r.norms.linf) + "," + std::to_string(r.queries) + "," + std::to_string(r.iterations) + "," +
           format_double(std::round(r.wall_time_ms * 1000.0) / 1000.0) + "\n";
    successes += r.success;
    errors += r.error;
    total_queries += r.queries;
    l0.push_back(r.norms.l0);
    l2.push_back(r.norms.l2);
    linf.push_back(r.norms.linf);
    queries.push_back(static_cast<double>(r.queries));
  }
  const double n = static_cast<double>(rows.size());
  json summary = {{"attack", entry->name},
                  {"count", rows.size()},
                  {"successes", successes},
                  {"success_rate", rows.empty() ? 0.0 : static_cast<double>(successes) / n},
                  {"errors", errors},
                  {"mean_l0", mean(l0)},
                  {"mean_l2", mean(l2)},
                  {"mean_linf", mean(linf)},
                  {"median_l0", median(l0)},
                  {"median_l2", median(l2)},
                  {"median_linf", median(linf)},
                  {"median_queries", median(queries)},
                  {"total_queries", total_queries},
                  {"seed", seed}};
  if (bound) {
    summary["eps"] = bound->eps;
    summary["norm"] = to_string(bound->norm);
  }
  const fs::path dir = prepare_out(c);
  write_text_file((dir / "records.csv").string(), csv);
  write_json(dir / "summary.json", summary);
  write_snapshot(dir, c);
  out << entry->name << ": success_rate " << summary["success_rate"].get<double>() << " over " << rows.size()
      << " examples\n";
}

}  // namespace advml::cli
