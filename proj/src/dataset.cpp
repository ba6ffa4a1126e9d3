#include "advml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "advml/error.hpp"
#include "advml/io.hpp"
#include "advml/rng.hpp"

namespace advml {
namespace {

constexpr double kPi = 3.14159265358979323846;

double as_float(double v) { return static_cast<double>(static_cast<float>(v)); }
double unit(double v) { return as_float(std::clamp(v, 0.0, 1.0)); }

// Tokens with at most 9 significant digits were written from float values.
bool float_token(std::string_view tok) {
  int digits = 0;
  bool leading = true;
  for (char ch : tok) {
    if (ch == 'e' || ch == 'E') break;
    if (ch < '0' || ch > '9') continue;
    if (leading && ch == '0') continue;
    leading = false;
    ++digits;
  }
  return digits <= 9;
}

}  // namespace

std::string to_string(LabelDomain d) { return d == LabelDomain::Signed ? "signed" : "zero_based"; }

Dataset::Dataset(std::vector<std::size_t> dims, std::size_t classes, LabelDomain domain)
    : dims_(std::move(dims)), classes_(classes), domain_(domain) {
  if (dims_.empty() || std::find(dims_.begin(), dims_.end(), 0u) != dims_.end()) {
    throw InvalidInput("dataset dims must be positive");
  }
  if (classes_ < 1) throw InvalidInput("dataset needs at least one class");
  if (domain_ == LabelDomain::Signed && classes_ != 2) throw InvalidInput("signed labels imply two classes");
}

bool Dataset::valid_label(int label) const noexcept {
  if (domain_ == LabelDomain::Signed) return label == -1 || label == 1;
  return label >= 0 && static_cast<std::size_t>(label) < classes_;
}

void Dataset::check_input(const Tensor& x) const {
  if (x.size() != feature_count()) throw InvalidInput("example width does not match dataset dims");
  for (double v : x) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InvalidInput("dataset inputs must lie in [0, 1]");
  }
}

void Dataset::add(Tensor x, int label) {
  check_input(x);
  if (!valid_label(label)) throw InvalidInput("label " + std::to_string(label) + " outside the dataset domain");
  if (x.shape() != dims_) x = x.reshaped(dims_);
  inputs_.push_back(std::move(x));
  labels_.push_back(label);
}

void Dataset::set_label(std::size_t i, int label) {
  if (!valid_label(label)) throw InvalidInput("label " + std::to_string(label) + " outside the dataset domain");
  labels_.at(i) = label;
}

void Dataset::set_input(std::size_t i, Tensor x) {
  check_input(x);
  if (x.shape() != dims_) x = x.reshaped(dims_);
  inputs_.at(i) = std::move(x);
}

std::size_t Dataset::class_index(std::size_t i) const {
  const int y = labels_.at(i);
  if (domain_ == LabelDomain::Signed) return y > 0 ? 1 : 0;
  return static_cast<std::size_t>(y);
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out(dims_, classes_, domain_);
  for (std::size_t i : indices) {
    out.inputs_.push_back(inputs_.at(i));
    out.labels_.push_back(labels_.at(i));
  }
  return out;
}

Dataset Dataset::with_domain(LabelDomain domain) const {
  if (domain == domain_) return *this;
  if (classes_ != 2) throw InvalidInput("only two-class datasets convert between label domains");
  Dataset out(dims_, classes_, domain);
  out.inputs_ = inputs_;
  out.labels_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const int c = static_cast<int>(class_index(i));
    out.labels_.push_back(domain == LabelDomain::Signed ? 2 * c - 1 : c);
  }
  return out;
}

Dataset gaussian_blobs(const BlobParams& p, std::uint64_t seed) {
  if (p.n == 0 || p.dims == 0 || p.classes < 2 || p.noise < 0.0 || p.separation < 0.0) {
    throw InvalidInput("bad gaussian_blobs parameters");
  }
  Dataset data({p.dims}, p.classes);
  Rng rng = make_rng(seed, 0xb10b);
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t k = i % p.classes;
    const double angle = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(p.classes);
    std::vector<double> x(p.dims, 0.5);
    x[0] += 0.5 * p.separation * std::cos(angle);
    if (p.dims > 1) x[1] += 0.5 * p.separation * std::sin(angle);
    for (double& v : x) v = unit(v + p.noise * standard_normal(rng));
    data.add(Tensor::from(std::move(x)), static_cast<int>(k));
  }
  return data;
}

Dataset two_moons(const MoonParams& p, std::uint64_t seed) {
  if (p.n == 0 || p.noise < 0.0) throw InvalidInput("bad two_moons parameters");
  Dataset data({2}, 2);
  Rng rng = make_rng(seed, 0x3005);
  for (std::size_t i = 0; i < p.n; ++i) {
    const int k = static_cast<int>(i % 2);
    const double t = uniform(rng, 0.0, kPi);
    double a = k == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double b = k == 0 ? std::sin(t) : 0.5 - std::sin(t);
    a += p.noise * standard_normal(rng);
    b += p.noise * standard_normal(rng);
    // Arcs span [-1, 2] x [-0.5, 1]; map into the unit square with a margin.
    data.add(Tensor::from({unit((a + 1.5) / 4.0), unit((b + 1.0) / 2.5)}), k);
  }
  return data;
}

Dataset synth_digits(const DigitParams& p, std::uint64_t seed) {
  if (p.n == 0 || p.noise < 0.0 || (p.channels != 1 && p.channels != 3) || p.side < 5) {
    throw InvalidInput("bad synth_digits parameters");
  }
  const std::size_t s = p.side;
  std::vector<std::size_t> dims{s, s};
  if (p.channels == 3) dims.push_back(3);
  Dataset data(dims, 4);
  Rng rng = make_rng(seed, 0xd161);
  const long lo = 1, hi = static_cast<long>(s) - 2;
  const long mid = static_cast<long>(s) / 2;
  auto ink = [&](int k, long r, long c) {
    if (r < lo || r > hi || c < lo || c > hi) return false;
    switch (k) {
      case 0: return c == mid - 1 || c == mid;
      case 1: return r == mid - 1 || r == mid;
      case 2: return r == lo || r == hi || c == lo || c == hi;
      default: return r == c || r + c == lo + hi;
    }
  };
  for (std::size_t i = 0; i < p.n; ++i) {
    const int k = static_cast<int>(i % 4);
    const long dr = static_cast<long>(uniform_index(rng, 3)) - 1;
    const long dc = static_cast<long>(uniform_index(rng, 3)) - 1;
    double tint[3] = {1.0, 1.0, 1.0};
    if (p.channels == 3) {
      for (double& t : tint) t = uniform(rng, 0.6, 1.0);
    }
    Tensor x(dims, 0.0);
    for (std::size_t r = 0; r < s; ++r) {
      for (std::size_t c = 0; c < s; ++c) {
        const bool on = ink(k, static_cast<long>(r) - dr, static_cast<long>(c) - dc);
        for (std::size_t ch = 0; ch < p.channels; ++ch) {
          const double base = on ? 0.9 * tint[ch] : 0.05;
          x.at(r, c, ch) = unit(base + p.noise * standard_normal(rng));
        }
      }
    }
    data.add(std::move(x), k);
  }
  return data;
}

Split split(const Dataset& data, double train_fraction, std::uint64_t seed, bool stratified) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidInput("train fraction must lie in (0, 1)");
  Rng rng = make_rng(seed, 0x5917);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  std::vector<std::size_t> train, test;
  if (!stratified) {
    const auto m = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
    train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    test.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
  } else {
    std::vector<std::vector<std::size_t>> by_class(data.class_count());
    for (std::size_t i : order) by_class[data.class_index(i)].push_back(i);
    std::vector<char> in_train(data.size(), 0);
    for (const auto& members : by_class) {
      const auto m = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
      for (std::size_t j = 0; j < m; ++j) in_train[members[j]] = 1;
    }
    for (std::size_t i : order) (in_train[i] ? train : test).push_back(i);
  }
  return {data.subset(train), data.subset(test)};
}

std::string serialize_dataset(const Dataset& data) {
  nlohmann::json header;
  header["version"] = 1;
  header["dims"] = data.dims();
  header["K"] = data.class_count();
  header["n"] = data.size();
  header["label_domain"] = to_string(data.label_domain());
  std::string out = header.dump();
  out += '\n';
  char buf[40];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.label(i));
    for (double v : data.input(i)) {
      const bool exact_float = as_float(v) == v;
      std::snprintf(buf, sizeof buf, exact_float ? ",%.9g" : ",%.16e", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& data, const std::string& path) { write_text_file(path, serialize_dataset(data)); }

Dataset parse_dataset(const std::string& text, bool u8_import) {
  std::size_t line_no = 1, pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("truncated file: last line has no newline", line_no, text.size());
    line = std::string_view(text).substr(pos, nl - pos);
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError("empty dataset file", 1, 0);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad header: ") + e.what(), 1, 0);
  }
  std::vector<std::size_t> dims;
  std::size_t classes = 0, n = 0;
  LabelDomain domain = LabelDomain::ZeroBased;
  try {
    if (header.at("version").get<int>() != 1) throw ParseError("unsupported dataset version", 1, 0);
    dims = header.at("dims").get<std::vector<std::size_t>>();
    classes = header.at("K").get<std::size_t>();
    n = header.at("n").get<std::size_t>();
    const std::string d = header.value("label_domain", std::string("zero_based"));
    if (d == "signed") domain = LabelDomain::Signed;
    else if (d != "zero_based") throw ParseError("unknown label_domain '" + d + "'", 1, 0);
    if (header.value("encoding", std::string()) == "u8") u8_import = true;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad header field: ") + e.what(), 1, 0);
  }
  Dataset data;
  try {
    data = Dataset(dims, classes, domain);
  } catch (const InvalidInput& e) {
    throw ParseError(e.what(), 1, 0);
  }
  const std::size_t width = data.feature_count();
  pos += line.size() + 1;

  while (true) {
    ++line_no;
    const std::size_t line_start = pos;
    if (!next_line(line)) break;
    if (data.size() == n) throw ParseError("more rows than the header declares", line_no, line_start);
    std::vector<double> values;
    values.reserve(width);
    int label = 0;
    std::size_t field = 0, cursor = 0;
    while (cursor <= line.size()) {
      std::size_t comma = line.find(',', cursor);
      if (comma == std::string_view::npos) comma = line.size();
      const std::string_view tok = line.substr(cursor, comma - cursor);
      const std::size_t offset = line_start + cursor;
      if (tok.empty()) throw ParseError("empty field", line_no, offset);
      const char* b = tok.data();
      const char* e = tok.data() + tok.size();
      if (field == 0) {
        auto [p, ec] = std::from_chars(b, e, label);
        if (ec != std::errc() || p != e) throw ParseError("bad label", line_no, offset);
      } else {
        double v = 0.0;
        if (float_token(tok)) {
          float f = 0.0f;
          auto [p, ec] = std::from_chars(b, e, f);
          if (ec != std::errc() || p != e) throw ParseError("bad value", line_no, offset);
          v = f;
        } else {
          auto [p, ec] = std::from_chars(b, e, v);
          if (ec != std::errc() || p != e) throw ParseError("bad value", line_no, offset);
        }
        if (u8_import) {
          if (v != std::floor(v) || v < 0.0 || v > 255.0) throw ParseError("u8 value outside 0..255", line_no, offset);
          v /= 255.0;
        }
        values.push_back(v);
      }
      ++field;
      cursor = comma + 1;
    }
    if (values.size() != width) {
      throw ParseError("row has " + std::to_string(values.size()) + " values, expected " + std::to_string(width),
                       line_no, line_start);
    }
    try {
      data.add(Tensor(std::move(values), dims), label);
    } catch (const InvalidInput& e) {
      throw ParseError(e.what(), line_no, line_start);
    }
    pos += line.size() + 1;
  }
  if (data.size() != n) {
    throw ParseError("truncated file: header declares " + std::to_string(n) + " rows, found " +
                         std::to_string(data.size()),
                     line_no, text.size());
  }
  return data;
}

Dataset load_dataset(const std::string& path, bool u8_import) {
  return parse_dataset(read_text_file(path), u8_import);
}

}  // namespace advml
