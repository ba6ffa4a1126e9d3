#include "registry.hpp"

#include <set>

#include "advml/blackbox.hpp"
#include "advml/oracle.hpp"
#include "advml/whitebox.hpp"

namespace advml::cli {

namespace {

NormKind norm_of(const RunConfig& c, const std::string& key) {
  const auto n = parse_norm(c.str(key));
  if (!n) throw UsageError("--" + key + ": unknown norm '" + c.str(key) + "'");
  return *n;
}

std::optional<int> target_of(const RunConfig& c) {
  if (!c.has("target")) return std::nullopt;
  return static_cast<int>(c.integer("target"));
}

int count_int(const RunConfig& c, const std::string& key) { return static_cast<int>(c.count(key)); }

std::optional<NormCap> cap_of(const RunConfig& c) {
  if (!c.has("cap-eps")) return std::nullopt;
  return NormCap{c.real("cap-eps"), norm_of(c, "cap-norm")};
}

std::optional<FeasibilityBound> budget_bound(const RunConfig& c) {
  return FeasibilityBound{c.real("eps"), norm_of(c, "norm")};
}

std::optional<FeasibilityBound> cap_bound(const RunConfig& c) {
  if (!c.has("cap-eps")) return std::nullopt;
  return FeasibilityBound{c.real("cap-eps"), norm_of(c, "cap-norm")};
}

std::optional<FeasibilityBound> no_bound(const RunConfig&) { return std::nullopt; }

const MlpModel& need_model(const AttackContext& ctx) {
  if (!ctx.model) throw UsageError("white-box attacks need a local MLP model");
  return *ctx.model;
}

AttackBudget budget_of(const AttackContext& ctx) {
  const RunConfig& c = *ctx.config;
  AttackBudget b;
  b.eps = c.real("eps");
  b.norm = norm_of(c, "norm");
  if (c.has("iters")) b.max_iter = count_int(c, "iters");
  if (c.has("step")) b.step = c.real("step");
  b.target = target_of(c);
  b.seed = ctx.seed;
  return b;
}

const std::vector<OptionSpec> kCap = {{"cap-eps", "", "optional norm cap"}, {"cap-norm", "l2", "norm of the cap"}};

std::vector<OptionSpec> with(std::vector<OptionSpec> a, const std::vector<OptionSpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<AttackEntry> build() {
  std::vector<AttackEntry> r;
  r.push_back({"fgsm", true, "one signed (Linf) or normalised (L2) gradient step",
               {{"eps", "0.1", "budget"}, {"norm", "linf", "linf or l2"}, {"target", "", "target class"}},
               [](const AttackContext& ctx, const Tensor& x, int y) { return fgsm(need_model(ctx), x, y, budget_of(ctx)); },
               budget_bound});
  const std::vector<OptionSpec> iterative = {{"eps", "0.1", "budget"},
                                             {"norm", "linf", "linf or l2"},
                                             {"iters", "10", "steps"},
                                             {"step", "0.01", "step size"},
                                             {"target", "", "target class"}};
  r.push_back({"bim", true, "iterative FGSM with projection", iterative,
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 return bim_pgd(need_model(ctx), x, y, budget_of(ctx), false);
               },
               budget_bound});
  r.push_back({"pgd", true, "BIM from a uniform random start", iterative,
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 return bim_pgd(need_model(ctx), x, y, budget_of(ctx), true);
               },
               budget_bound});
  r.push_back({"deepfool", true, "iterated linearised boundary projection",
               with({{"iters", "50", "iterations"}, {"overshoot", "0.02", "overshoot factor"}}, kCap),
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 DeepFoolOptions o;
                 o.max_iter = count_int(c, "iters");
                 o.overshoot = c.real("overshoot");
                 o.cap = cap_of(c);
                 return deepfool(need_model(ctx), x, y, o);
               },
               cap_bound});
  r.push_back({"fab", true, "fast adaptive boundary (L2)",
               with({{"iters", "50", "iterations"}, {"restarts", "1", "restarts"}}, kCap),
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 FabOptions o;
                 o.max_iter = count_int(c, "iters");
                 o.restarts = count_int(c, "restarts");
                 o.seed = ctx.seed;
                 o.cap = cap_of(c);
                 return fab_attack(need_model(ctx), x, y, o);
               },
               cap_bound});
  r.push_back({"cw", true, "Carlini-Wagner L2",
               with({{"kappa", "0", "confidence"},
                     {"c-init", "0.1", "initial c"},
                     {"c-steps", "6", "search steps over c"},
                     {"iters", "200", "inner iterations"},
                     {"lr", "0.05", "learning rate"},
                     {"target", "", "target class"}},
                    kCap),
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 CwOptions o;
                 o.kappa = c.real("kappa");
                 o.c_init = c.real("c-init");
                 o.c_steps = count_int(c, "c-steps");
                 o.inner_iters = count_int(c, "iters");
                 o.lr = c.real("lr");
                 o.target = target_of(c);
                 o.cap = cap_of(c);
                 return cw_l2(need_model(ctx), x, y, o);
               },
               cap_bound});
  r.push_back({"lbfgs", true, "box-constrained penalty search toward a target (default: next class)",
               with({{"c-init", "1", "initial c"},
                     {"c-steps", "8", "search steps over c"},
                     {"iters", "100", "inner iterations"},
                     {"lr", "0.05", "learning rate"},
                     {"target", "", "target class"}},
                    kCap),
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 LbfgsOptions o;
                 o.c_init = c.real("c-init");
                 o.c_steps = count_int(c, "c-steps");
                 o.inner_iters = count_int(c, "iters");
                 o.lr = c.real("lr");
                 o.cap = cap_of(c);
                 const MlpModel& m = need_model(ctx);
                 const int t = target_of(c).value_or((y + 1) % static_cast<int>(m.class_count()));
                 return lbfgs_attack(m, x, y, t, o);
               },
               cap_bound});
  r.push_back({"shadow", true, "smooth colour perturbation (3-channel images)",
               {{"steps", "100", "ascent steps"},
                {"lr", "0.05", "step size"},
                {"tv", "0.3", "total variation weight"},
                {"color-mean", "1", "colour mean weight"},
                {"channel-diff", "0.5", "channel difference weight"},
                {"linf-cap", "", "optional Linf bound"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 ShadowOptions o;
                 o.steps = count_int(c, "steps");
                 o.lr = c.real("lr");
                 o.weights = {c.real("tv"), c.real("color-mean"), c.real("channel-diff")};
                 o.linf_cap = c.opt_real("linf-cap");
                 return shadow_attack(need_model(ctx), x, y, o);
               },
               [](const RunConfig& c) -> std::optional<FeasibilityBound> {
                 if (!c.has("linf-cap")) return std::nullopt;
                 return FeasibilityBound{c.real("linf-cap"), NormKind::Linf};
               }});
  r.push_back({"wasserstein", true, "PGD with projected Sinkhorn onto a Wasserstein ball",
               {{"eps-w", "0.1", "Wasserstein radius"},
                {"lambda", "300", "entropy weight"},
                {"region", "5", "transport window"},
                {"steps", "20", "PGD steps"},
                {"lr", "0.05", "step size"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 WassersteinOptions o;
                 o.eps_w = c.real("eps-w");
                 o.lambda = c.real("lambda");
                 o.region = c.count("region");
                 o.steps = count_int(c, "steps");
                 o.lr = c.real("lr");
                 return wasserstein_attack(need_model(ctx), x, y, o);
               },
               no_bound});
  r.push_back({"zoo", false, "zeroth-order coordinate ADAM (score oracle)",
               {{"c", "10", "loss weight"},
                {"kappa", "0", "confidence"},
                {"fd-step", "1e-4", "finite-difference step"},
                {"lr", "0.01", "ADAM step"},
                {"iters", "1000", "iterations"},
                {"batch", "16", "coordinates per iteration"},
                {"hierarchy", "", "attack-space sides, e.g. 4,8"},
                {"importance-sampling", "false", "weight coordinates by region"},
                {"target", "", "target class"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 ZooOptions o;
                 o.c = c.real("c");
                 o.kappa = c.real("kappa");
                 o.h = c.real("fd-step");
                 o.lr = c.real("lr");
                 o.max_iter = count_int(c, "iters");
                 o.batch = c.count("batch");
                 o.hierarchy = c.sizes("hierarchy");
                 o.importance_sampling = c.flag("importance-sampling");
                 o.target = target_of(c);
                 o.seed = ctx.seed;
                 ScoreOracle oracle(*ctx.victim, ctx.query_budget);
                 return zoo_attack(oracle, x, y, o);
               },
               no_bound});
  r.push_back({"square", false, "Linf random search over square windows (score oracle)",
               {{"eps", "0.05", "Linf budget"},
                {"p-init", "0.1", "initial window fraction"},
                {"iters", "1000", "iterations"},
                {"target", "", "target class"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 SquareOptions o;
                 o.eps = c.real("eps");
                 o.p_init = c.real("p-init");
                 o.max_iter = count_int(c, "iters");
                 o.target = target_of(c);
                 o.seed = ctx.seed;
                 ScoreOracle oracle(*ctx.victim, ctx.query_budget);
                 return square_attack(oracle, x, y, o);
               },
               [](const RunConfig& c) -> std::optional<FeasibilityBound> {
                 return FeasibilityBound{c.real("eps"), NormKind::Linf};
               }});
  r.push_back({"boundary", false, "decision-based random walk along the boundary",
               {{"steps", "1000", "walk steps"},
                {"init-samples", "100", "noise draws for the start"},
                {"spherical-step", "0.05", "orthogonal step"},
                {"source-step", "0.05", "step toward the input"},
                {"target", "", "target class"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 BoundaryOptions o;
                 o.max_steps = count_int(c, "steps");
                 o.init_samples = count_int(c, "init-samples");
                 o.spherical_step = c.real("spherical-step");
                 o.source_step = c.real("source-step");
                 o.target = target_of(c);
                 o.seed = ctx.seed;
                 DecisionOracle oracle(*ctx.victim, ctx.query_budget);
                 return boundary_attack(oracle, x, y, o);
               },
               no_bound});
  r.push_back({"hsj", false, "HopSkipJump (decision oracle, L2)",
               {{"rounds", "20", "rounds"},
                {"batch0", "100", "initial gradient batch"},
                {"max-batch", "1000", "largest gradient batch"},
                {"tolerance", "1e-3", "binary search tolerance"},
                {"init-samples", "100", "noise draws for the start"},
                {"target", "", "target class"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 HsjOptions o;
                 o.max_rounds = count_int(c, "rounds");
                 o.batch0 = c.count("batch0");
                 o.max_batch = c.count("max-batch");
                 o.search_tolerance = c.real("tolerance");
                 o.init_samples = count_int(c, "init-samples");
                 o.target = target_of(c);
                 o.seed = ctx.seed;
                 DecisionOracle oracle(*ctx.victim, ctx.query_budget);
                 return hopskipjump(oracle, x, y, o);
               },
               no_bound});
  r.push_back({"spatial", false, "rotation and translation search",
               {{"mode", "worst-of-k", "worst-of-k or grid"},
                {"k", "10", "candidates in worst-of-k"},
                {"da-max", "2", "largest horizontal shift (pixels)"},
                {"db-max", "2", "largest vertical shift (pixels)"},
                {"gamma-max", "30", "largest rotation (degrees)"},
                {"decision", "false", "use a label-only oracle"}},
               [](const AttackContext& ctx, const Tensor& x, int y) {
                 const RunConfig& c = *ctx.config;
                 SpatialOptions o;
                 const std::string mode = c.str("mode");
                 if (mode == "grid") {
                   o.mode = SpatialMode::Grid;
                 } else if (mode != "worst-of-k") {
                   throw UsageError("--mode must be worst-of-k or grid");
                 }
                 o.k = count_int(c, "k");
                 o.ranges.da_max = c.real("da-max");
                 o.ranges.db_max = c.real("db-max");
                 o.ranges.gamma_max = c.real("gamma-max");
                 o.seed = ctx.seed;
                 if (c.flag("decision")) {
                   DecisionOracle oracle(*ctx.victim, ctx.query_budget);
                   return spatial_attack(oracle, x, y, o);
                 }
                 ScoreOracle oracle(*ctx.victim, ctx.query_budget);
                 return spatial_attack(oracle, x, y, o);
               },
               no_bound});
  return r;
}

}  // namespace

const std::vector<AttackEntry>& attack_registry() {
  static const std::vector<AttackEntry> r = build();
  return r;
}

const AttackEntry* find_attack(const std::string& name) {
  for (const auto& e : attack_registry()) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::string registry_listing() {
  std::string s = "available attacks:\n";
  for (const auto& e : attack_registry()) {
    s += "  " + e.name + (e.whitebox ? " (white-box)" : " (black-box)") + "  " + e.summary + "\n";
  }
  return s;
}

std::vector<OptionSpec> all_attack_params() {
  std::vector<OptionSpec> out;
  std::set<std::string> seen;
  for (const auto& e : attack_registry()) {
    for (const auto& p : e.params) {
      if (seen.insert(p.name).second) out.push_back({p.name, "", p.help});
    }
  }
  return out;
}

}  // namespace advml::cli
