#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

#include "advml/dataset.hpp"
#include "advml/error.hpp"
#include "advml/io.hpp"
#include "advml/mlp.hpp"
#include "advml/svm.hpp"

using namespace advml;

namespace {

bool in_unit_box(const Dataset& d) {
  for (const Tensor& x : d.inputs()) {
    for (double v : x) {
      if (v < 0.0 || v > 1.0) return false;
    }
  }
  return true;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("advml_test_" + name)).string();
}

}  // namespace

TEST(Generate, ZeroNoiseBlobsSitOnCentres) {
  const Dataset d = gaussian_blobs({12, 3, 3, 0.6, 0.0}, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.input(i), d.input(i % 3));
    EXPECT_EQ(d.input(i)[2], 0.5);
  }
  EXPECT_EQ(d.input(0)[0], static_cast<double>(0.8f));
}

TEST(Generate, Deterministic) {
  EXPECT_EQ(gaussian_blobs({50, 4, 3, 0.5, 0.1}, 7), gaussian_blobs({50, 4, 3, 0.5, 0.1}, 7));
  EXPECT_EQ(two_moons({50, 0.1}, 7), two_moons({50, 0.1}, 7));
  EXPECT_EQ(synth_digits({20, 0.1, 3}, 7), synth_digits({20, 0.1, 3}, 7));
  EXPECT_FALSE(synth_digits({20, 0.1, 1}, 7) == synth_digits({20, 0.1, 1}, 8));
}

TEST(Generate, InUnitBox) {
  EXPECT_TRUE(in_unit_box(gaussian_blobs({200, 2, 4, 0.9, 0.3}, 3)));
  EXPECT_TRUE(in_unit_box(two_moons({200, 0.3}, 3)));
  EXPECT_TRUE(in_unit_box(synth_digits({50, 0.5, 3}, 3)));
}

TEST(Generate, DigitShapes) {
  const Dataset g = synth_digits({8, 0.0, 1}, 1);
  EXPECT_EQ(g.dims(), (std::vector<std::size_t>{8, 8}));
  EXPECT_EQ(g.class_count(), 4u);
  const Dataset c = synth_digits({8, 0.0, 3}, 1);
  EXPECT_EQ(c.dims(), (std::vector<std::size_t>{8, 8, 3}));
  const Dataset small = synth_digits({8, 0.0, 1, 5}, 1);
  EXPECT_EQ(small.feature_count(), 25u);
}

TEST(Generate, RejectsBadParameters) {
  EXPECT_THROW(gaussian_blobs({0, 2, 2, 0.5, 0.1}, 1), InvalidInput);
  EXPECT_THROW(gaussian_blobs({10, 2, 1, 0.5, 0.1}, 1), InvalidInput);
  EXPECT_THROW(synth_digits({10, 0.1, 2}, 1), InvalidInput);
  EXPECT_THROW(two_moons({10, -1.0}, 1), InvalidInput);
}

TEST(Generate, WellSeparatedBlobsAreSvmSeparable) {
  // Separation 10 sigma between the two centres.
  const Dataset d = gaussian_blobs({100, 2, 2, 0.5, 0.05}, 5).with_domain(LabelDomain::Signed);
  EXPECT_EQ(accuracy(svm_train(d), d), 1.0);
}

TEST(Split, SizesAndUnion) {
  const Dataset d = gaussian_blobs({10, 2, 2, 0.5, 0.1}, 1);
  const Split s = split(d, 0.5, 3);
  EXPECT_EQ(s.train.size(), 5u);
  EXPECT_EQ(s.test.size(), 5u);
  std::vector<std::pair<std::vector<double>, int>> all, parts;
  for (std::size_t i = 0; i < d.size(); ++i) all.emplace_back(d.input(i).vec(), d.label(i));
  for (const Dataset* p : {&s.train, &s.test}) {
    for (std::size_t i = 0; i < p->size(); ++i) parts.emplace_back(p->input(i).vec(), p->label(i));
  }
  std::sort(all.begin(), all.end());
  std::sort(parts.begin(), parts.end());
  EXPECT_EQ(all, parts);
  EXPECT_EQ(split(d, 0.5, 3).train, s.train);
}

TEST(Split, StratifiedPreservesRatios) {
  Dataset d({1}, 3);
  for (int i = 0; i < 90; ++i) d.add(Tensor::from({0.5}), i < 60 ? 0 : (i < 80 ? 1 : 2));
  for (double f : {0.3, 0.5, 0.7}) {
    const Split s = split(d, f, 11, true);
    std::map<int, int> counts;
    for (int y : s.train.labels()) ++counts[y];
    EXPECT_NEAR(counts[0], f * 60, 1.0);
    EXPECT_NEAR(counts[1], f * 20, 1.0);
    EXPECT_NEAR(counts[2], f * 10, 1.0);
  }
}

TEST(DatasetIo, RoundTrip) {
  const Dataset d = synth_digits({13, 0.2, 3}, 4);
  const std::string path = temp_path("roundtrip.csv");
  save_dataset(d, path);
  EXPECT_EQ(load_dataset(path), d);
  std::filesystem::remove(path);

  Dataset odd({2}, 2, LabelDomain::Signed);
  odd.add(Tensor::from({0.1, 1.0 / 3.0}), -1);
  odd.add(Tensor::from({0.0, 1.0}), 1);
  EXPECT_EQ(parse_dataset(serialize_dataset(odd)), odd);
}

TEST(DatasetIo, FormatHeader) {
  const Dataset d = gaussian_blobs({2, 2, 2, 0.5, 0.0}, 1);
  const std::string text = serialize_dataset(d);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "{\"K\":2,\"dims\":[2],\"label_domain\":\"zero_based\",\"n\":2,\"version\":1}");
  EXPECT_NE(text.find("\n0,0.75,0.5\n"), std::string::npos);
}

TEST(DatasetIo, TruncatedFileFails) {
  const std::string text = serialize_dataset(gaussian_blobs({5, 2, 2, 0.5, 0.1}, 1));
  for (std::size_t cut : {text.size() - 1, text.size() - 5, text.find('\n') + 3}) {
    EXPECT_THROW(parse_dataset(text.substr(0, cut)), ParseError) << cut;
  }
  const std::size_t last_row = text.rfind('\n', text.size() - 2) + 1;
  EXPECT_THROW(parse_dataset(text.substr(0, last_row)), ParseError);
}

TEST(DatasetIo, ErrorsCarryLocation) {
  const std::string text = "{\"version\":1,\"dims\":[2],\"K\":2,\"n\":2}\n0,0.1,0.2\n1,0.3,abc\n";
  try {
    parse_dataset(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.byte_offset(), text.find("abc"));
  }
  EXPECT_THROW(parse_dataset("{\"version\":1,\"dims\":[1],\"K\":2,\"n\":1}\n5,0.1\n"), ParseError);
  EXPECT_THROW(parse_dataset("{\"version\":1,\"dims\":[1],\"K\":2,\"n\":1}\n0,1.5\n"), ParseError);
  EXPECT_THROW(parse_dataset("{\"version\":2,\"dims\":[1],\"K\":2,\"n\":0}\n"), ParseError);
  EXPECT_THROW(parse_dataset(""), ParseError);
}

TEST(DatasetIo, U8ImportDividesBy255) {
  const std::string text = "{\"version\":1,\"dims\":[3],\"K\":2,\"n\":1,\"encoding\":\"u8\"}\n1,0,51,255\n";
  const Dataset d = parse_dataset(text);
  EXPECT_EQ(d.input(0)[0], 0.0);
  EXPECT_EQ(d.input(0)[1], 0.2);
  EXPECT_EQ(d.input(0)[2], 1.0);
  const std::string plain = "{\"version\":1,\"dims\":[1],\"K\":2,\"n\":1}\n1,51\n";
  EXPECT_EQ(parse_dataset(plain, true).input(0)[0], 0.2);
  EXPECT_THROW(parse_dataset("{\"version\":1,\"dims\":[1],\"K\":2,\"n\":1}\n1,2.5\n", true), ParseError);
}

TEST(DatasetType, Invariants) {
  Dataset d({2}, 2);
  EXPECT_THROW(d.add(Tensor::from({0.1}), 0), InvalidInput);
  EXPECT_THROW(d.add(Tensor::from({0.1, 1.2}), 0), InvalidInput);
  EXPECT_THROW(d.add(Tensor::from({0.1, 0.2}), 2), InvalidInput);
  EXPECT_THROW(Dataset({2}, 3, LabelDomain::Signed), InvalidInput);
  d.add(Tensor::from({0.1, 0.2}), 1);
  const Dataset s = d.with_domain(LabelDomain::Signed);
  EXPECT_EQ(s.label(0), 1);
  EXPECT_EQ(s.with_domain(LabelDomain::ZeroBased), d);
}
