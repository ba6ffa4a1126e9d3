#include <algorithm>
#include <map>
#include <ostream>

#include "advml/io.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace advml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ReportRow {
  std::string run;
  std::string attack;
  std::string norm;
  std::optional<double> eps;
  std::size_t count = 0;
  double success_rate = 0.0;
  double median_l2 = 0.0;
  double median_linf = 0.0;
  double median_queries = 0.0;
  std::string monotone = "n/a";
};

ReportRow read_run(const std::string& dir) {
  const fs::path p = fs::path(dir) / "summary.json";
  if (!fs::is_regular_file(p)) throw std::runtime_error("no summary.json");
  const json j = json::parse(read_text_file(p.string()));
  ReportRow r;
  r.run = dir;
  r.attack = j.at("attack").get<std::string>();
  r.norm = j.value("norm", std::string());
  if (j.contains("eps")) r.eps = j.at("eps").get<double>();
  r.count = j.at("count").get<std::size_t>();
  r.success_rate = j.at("success_rate").get<double>();
  r.median_l2 = j.at("median_l2").get<double>();
  r.median_linf = j.at("median_linf").get<double>();
  r.median_queries = j.at("median_queries").get<double>();
  return r;
}

std::string svg_plot(const std::vector<ReportRow>& rows) {
  const double w = 480, h = 320, pad = 40;
  double max_eps = 0.0;
  for (const auto& r : rows) {
    if (r.eps) max_eps = std::max(max_eps, *r.eps);
  }
  if (max_eps <= 0.0) max_eps = 1.0;
  auto px = [&](double e) { return pad + (w - 2 * pad) * e / max_eps; };
  auto py = [&](double s) { return h - pad - (h - 2 * pad) * s; };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<line x1=\"40\" y1=\"280\" x2=\"440\" y2=\"280\" stroke=\"black\"/>\n";
  s += "<line x1=\"40\" y1=\"40\" x2=\"40\" y2=\"280\" stroke=\"black\"/>\n";
  s += "<text x=\"240\" y=\"310\" text-anchor=\"middle\" font-size=\"12\">eps (max " + format_double(max_eps) +
       ")</text>\n";
  s += "<text x=\"12\" y=\"160\" font-size=\"12\" transform=\"rotate(-90 12 160)\">success rate</text>\n";
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::map<std::string, std::vector<const ReportRow*>> groups;
  for (const auto& r : rows) {
    if (r.eps) groups[r.attack + " " + r.norm].push_back(&r);
  }
  std::size_t g = 0;
  for (const auto& [name, pts] : groups) {
    const std::string col = colours[g % 6];
    std::string poly;
    for (const ReportRow* r : pts) poly += format_double(px(*r->eps)) + "," + format_double(py(r->success_rate)) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + col + "\" points=\"" + poly + "\"/>\n";
    for (const ReportRow* r : pts) {
      s += "<circle cx=\"" + format_double(px(*r->eps)) + "\" cy=\"" + format_double(py(r->success_rate)) +
           "\" r=\"3\" fill=\"" + col + "\"/>\n";
    }
    s += "<text x=\"50\" y=\"" + std::to_string(55 + 15 * g) + "\" font-size=\"12\" fill=\"" + col + "\">" + name +
         "</text>\n";
    ++g;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

int cmd_report(const RunConfig& c, const std::vector<std::string>& runs, std::ostream& out, std::ostream& err) {
  if (runs.empty()) throw UsageError("report needs at least one run directory");
  std::vector<ReportRow> rows;
  int status = kOk;
  for (const auto& dir : runs) {
    try {
      rows.push_back(read_run(dir));
    } catch (const std::exception& e) {
      err << "skipped " << dir << ": " << e.what() << "\n";
      status = kUsage;
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.attack, a.norm, a.eps, a.run) < std::tie(b.attack, b.norm, b.eps, b.run);
  });
  // Success should not fall as the budget grows within one (attack, norm).
  std::map<std::string, std::vector<ReportRow*>> groups;
  for (auto& r : rows) {
    if (r.eps) groups[r.attack + "\n" + r.norm].push_back(&r);
  }
  for (auto& [key, g] : groups) {
    if (g.size() < 2) continue;
    bool ok = true;
    for (std::size_t k = 1; k < g.size(); ++k) ok = ok && g[k]->success_rate >= g[k - 1]->success_rate;
    for (ReportRow* r : g) r->monotone = ok ? "yes" : "no";
  }

  std::string csv = "run,attack,norm,eps,count,success_rate,median_l2,median_linf,median_queries,monotone\n";
  for (const auto& r : rows) {
    csv += r.run + "," + r.attack + "," + r.norm + "," + (r.eps ? format_double(*r.eps) : "") + "," +
           std::to_string(r.count) + "," + format_double(r.success_rate) + "," + format_double(r.median_l2) + "," +
           format_double(r.median_linf) + "," + format_double(r.median_queries) + "," + r.monotone + "\n";
  }
  if (rows.empty()) {
    err << "no readable runs\n";
    return kUsage;
  }
  const fs::path dir = prepare_out(c);
  write_text_file((dir / "report.csv").string(), csv);
  if (c.flag("plot")) write_text_file((dir / "report.svg").string(), svg_plot(rows));
  write_snapshot(dir, c);
  out << csv;
  return status;
}

}  // namespace advml::cli
