#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advml/tensor.hpp"

namespace advml {

// Class labels are 0-based (0..K-1). SVM data uses the signed domain {-1, +1}.
enum class LabelDomain { ZeroBased, Signed };

std::string to_string(LabelDomain d);

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::size_t> dims, std::size_t classes, LabelDomain domain = LabelDomain::ZeroBased);

  void add(Tensor x, int label);

  std::size_t size() const noexcept { return inputs_.size(); }
  bool empty() const noexcept { return inputs_.empty(); }
  std::size_t class_count() const noexcept { return classes_; }
  std::size_t feature_count() const noexcept { return shape_product(dims_); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  LabelDomain label_domain() const noexcept { return domain_; }

  const Tensor& input(std::size_t i) const { return inputs_.at(i); }
  int label(std::size_t i) const { return labels_.at(i); }
  const std::vector<Tensor>& inputs() const noexcept { return inputs_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  void set_label(std::size_t i, int label);
  void set_input(std::size_t i, Tensor x);

  // Class index used for counting: a signed label -1 maps to 0 and +1 to 1.
  std::size_t class_index(std::size_t i) const;
  bool valid_label(int label) const noexcept;

  Dataset subset(const std::vector<std::size_t>& indices) const;
  // Same examples with labels mapped between the signed and zero-based domains.
  Dataset with_domain(LabelDomain domain) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  void check_input(const Tensor& x) const;

  std::vector<std::size_t> dims_;
  std::size_t classes_ = 0;
  LabelDomain domain_ = LabelDomain::ZeroBased;
  std::vector<Tensor> inputs_;
  std::vector<int> labels_;
};

struct BlobParams {
  std::size_t n = 200;
  std::size_t dims = 2;
  std::size_t classes = 2;
  // Centres sit on a circle of this diameter around (0.5, ..., 0.5) in the
  // first two coordinates.
  double separation = 0.5;
  double noise = 0.05;      // per-coordinate standard deviation
};

struct MoonParams {
  std::size_t n = 200;
  double noise = 0.05;
};

struct DigitParams {
  std::size_t n = 400;
  double noise = 0.1;
  std::size_t channels = 1;  // 1 or 3
  std::size_t side = 8;      // at least 5
};

// Values are rounded to float precision so the dataset file stores them exactly.
Dataset gaussian_blobs(const BlobParams& params, std::uint64_t seed);
Dataset two_moons(const MoonParams& params, std::uint64_t seed);
// side x side glyphs of four classes (vertical bar, horizontal bar, box
// outline, diagonal cross), jittered by up to one pixel, with Gaussian pixel
// noise. Shape is {side, side} or {side, side, 3}.
Dataset synth_digits(const DigitParams& params, std::uint64_t seed);

struct Split {
  Dataset train;
  Dataset test;
};

// Seeded shuffle; train gets round(fraction * n) examples. The stratified
// variant splits every class separately.
Split split(const Dataset& data, double train_fraction, std::uint64_t seed, bool stratified = false);

// Header line: {"version":1,"dims":[...],"K":k,"n":n,"label_domain":"zero_based"}
// followed by one "label,v1,v2,..." line per example. Values exactly
// representable as float are written with 9 significant digits and read back
// as float; others are written with 17 and read as double. Loading therefore
// reproduces every value bit for bit.
void save_dataset(const Dataset& data, const std::string& path);
std::string serialize_dataset(const Dataset& data);

// Reads the format above. A header field "encoding":"u8" (or u8_import)
// marks 0-255 integer pixels, which are divided by 255. Any malformed or
// truncated input throws ParseError; nothing is returned partially.
Dataset load_dataset(const std::string& path, bool u8_import = false);
Dataset parse_dataset(const std::string& text, bool u8_import = false);

}  // namespace advml
