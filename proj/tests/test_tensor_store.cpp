// Copyright 2026 The attnseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "attnseg/manifest.hpp"
#include "attnseg/mask_io.hpp"
#include "attnseg/tensor_file.hpp"
#include "test_util.hpp"

namespace attnseg {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::scratch_dir;

std::size_t header_len_of(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  return p[6] | (p[7] << 8) | (p[8] << 16) | (p[9] << 24);
}

TEST(TensorFile, LayoutOfSmallTensor) {
  const auto dir = scratch_dir("layout");
  const std::array<std::size_t, 2> shape = {2, 2};
  const std::array<float, 4> values = {0.0f, 0.5f, 0.5f, 1.0f};
  write_tensor(shape, values, dir / "t.atsb");

  const std::string bytes = read_file(dir / "t.atsb");
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(bytes.substr(0, 4), "ATSB");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  const std::size_t hlen = header_len_of(bytes);
  EXPECT_EQ(bytes.size(), 4 + 2 + 4 + hlen + 16);

  const auto header = nlohmann::json::parse(bytes.substr(10, hlen));
  EXPECT_EQ(header["dtype"], "f32");
  EXPECT_EQ(header["layout"], "row-major");
  EXPECT_EQ(header["shape"], nlohmann::json({2, 2}));

  // 0.5f little-endian is 00 00 00 3f.
  EXPECT_EQ(bytes.substr(10 + hlen + 4, 4), std::string("\x00\x00\x00\x3f", 4));

  const Tensor t = read_tensor(dir / "t.atsb");
  EXPECT_EQ(t.shape, (std::vector<std::size_t>{2, 2}));
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(t.values[i]), std::bit_cast<std::uint32_t>(values[i]));
  }
}

TEST(TensorFile, ZeroPayload) {
  const auto dir = scratch_dir("zeros");
  const std::array<std::size_t, 2> shape = {16, 16};
  const std::vector<float> zeros(256, 0.0f);
  write_tensor(shape, zeros, dir / "z.atsb");
  const std::string bytes = read_file(dir / "z.atsb");
  const std::string payload = bytes.substr(10 + header_len_of(bytes));
  EXPECT_EQ(payload, std::string(1024, '\0'));
}

TEST(TensorFile, RejectsNonFiniteWithOffset) {
  const std::array<std::size_t, 1> shape = {2};
  const std::array<float, 2> values = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  try {
    encode_tensor(shape, values);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.offset(), 1u);
  }
  const std::array<float, 2> inf = {std::numeric_limits<float>::infinity(), 0.0f};
  EXPECT_THROW(encode_tensor(shape, inf), NonFiniteError);
}

TEST(TensorFile, RejectsShapeMismatchOnWrite) {
  const std::array<std::size_t, 2> shape = {2, 3};
  const std::array<float, 4> values{};
  EXPECT_THROW(encode_tensor(shape, values), ShapeError);
  const std::array<std::size_t, 2> zero_dim = {0, 4};
  EXPECT_THROW(encode_tensor(zero_dim, std::span<const float>{}), ShapeError);
}

TEST(TensorFile, WriteToMissingDirectoryNamesPath) {
  const std::array<std::size_t, 1> shape = {1};
  const std::array<float, 1> values = {1.0f};
  try {
    write_tensor(shape, values, "/nonexistent-dir/x.atsb");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent-dir/x.atsb");
  }
}

TEST(TensorFile, BadMagic) {
  const std::array<std::size_t, 1> shape = {1};
  const std::array<float, 1> values = {1.0f};
  auto bytes = encode_tensor(shape, values);
  std::copy_n("XXXX", 4, bytes.begin());
  try {
    decode_tensor(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(TensorFile, UnsupportedVersion) {
  const std::array<std::size_t, 1> shape = {1};
  const std::array<float, 1> values = {1.0f};
  auto bytes = encode_tensor(shape, values);
  bytes[4] = 2;
  EXPECT_THROW(decode_tensor(bytes), FormatError);
}

TEST(TensorFile, PayloadLengthMismatch) {
  // Header claims 3x3 (36 bytes) but only 32 payload bytes follow.
  const std::string header = R"({"dtype":"f32","layout":"row-major","shape":[3,3]})";
  std::vector<char> bytes = {'A', 'T', 'S', 'B', 1, 0};
  const auto n = static_cast<std::uint32_t>(header.size());
  for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<char>((n >> s) & 0xff));
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.insert(bytes.end(), 32, '\0');
  try {
    decode_tensor(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("36"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("32"), std::string::npos);
  }
}

TEST(TensorFile, RejectsWrongDtypeAndBadShape) {
  auto make = [](const std::string& header, std::size_t payload) {
    std::vector<char> bytes = {'A', 'T', 'S', 'B', 1, 0};
    const auto n = static_cast<std::uint32_t>(header.size());
    for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<char>((n >> s) & 0xff));
    bytes.insert(bytes.end(), header.begin(), header.end());
    bytes.insert(bytes.end(), payload, '\0');
    return bytes;
  };
  EXPECT_THROW(decode_tensor(make(R"({"dtype":"f64","layout":"row-major","shape":[1]})", 4)),
               FormatError);
  EXPECT_THROW(decode_tensor(make(R"({"dtype":"f32","layout":"col-major","shape":[1]})", 4)),
               FormatError);
  EXPECT_THROW(decode_tensor(make(R"({"dtype":"f32","layout":"row-major","shape":[0]})", 0)),
               FormatError);
  EXPECT_THROW(decode_tensor(make("not json", 4)), FormatError);
}

// Round trip is the identity, bit for bit, on random shapes and payloads.
TEST(TensorFile, RoundTripProperty) {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<std::size_t> dims(1, 4), extent(1, 9);
  std::uniform_int_distribution<std::uint32_t> raw;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> shape(dims(rng));
    std::size_t n = 1;
    for (auto& d : shape) n *= (d = extent(rng));
    std::vector<float> values(n);
    for (auto& v : values) {
      do {
        v = std::bit_cast<float>(raw(rng));
      } while (!std::isfinite(v));
    }
    const Tensor t = decode_tensor(encode_tensor(shape, values));
    ASSERT_EQ(t.shape, shape);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(t.values[i]), std::bit_cast<std::uint32_t>(values[i]));
    }
  }
}

TEST(SelfAttentionFile, ValidatesRows) {
  const auto dir = scratch_dir("selfattn");
  std::vector<float> ok = {0.5f, 0.5f, 0.25f, 0.75f};
  write_self_attention(SelfAttentionMatrix({1, 2}, ok), dir / "ok.atsb");
  EXPECT_EQ(read_self_attention(dir / "ok.atsb").resolution(), (Resolution{1, 2}));

  std::vector<float> bad = {0.5f, 0.4f, 0.25f, 0.75f};
  write_self_attention(SelfAttentionMatrix({1, 2}, bad), dir / "bad.atsb");
  EXPECT_THROW(read_self_attention(dir / "bad.atsb"), FormatError);

  const std::array<std::size_t, 2> flat = {2, 2};
  write_tensor(flat, ok, dir / "flat.atsb");
  EXPECT_THROW(read_self_attention(dir / "flat.atsb"), ShapeError);
}

TEST(MaskPng, DecodesToZeroOne) {
  const auto dir = scratch_dir("maskpng");
  BinaryMask m({3, 4});
  m.set(0, 1, true);
  m.set(2, 3, true);
  write_mask_png(m, dir / "m.png");
  const cv::Mat raw = cv::imread((dir / "m.png").string(), cv::IMREAD_UNCHANGED);
  EXPECT_EQ(raw.at<std::uint8_t>(0, 1), 255);
  EXPECT_EQ(raw.at<std::uint8_t>(0, 0), 0);
  EXPECT_EQ(read_mask_png(dir / "m.png"), m);

  cv::Mat gray(2, 2, CV_8UC1, cv::Scalar(0));
  gray.at<std::uint8_t>(1, 1) = 128;
  cv::imwrite((dir / "gray.png").string(), gray);
  EXPECT_THROW(read_mask_png(dir / "gray.png"), FormatError);

  cv::Mat color(2, 2, CV_8UC3, cv::Scalar(0, 0, 0));
  cv::imwrite((dir / "color.png").string(), color);
  EXPECT_THROW(read_mask_png(dir / "color.png"), FormatError);
}

// Builds a one-sample bundle on disk: 2 token maps, 1 candidate.
class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_ / "pool");
    const ScoreMap cross({16, 16}, 0.25f);
    write_score_map(cross, dir_ / "c0.atsb");
    write_score_map(cross, dir_ / "c1.atsb");
    std::vector<float> self(32 * 32 * 32 * 32, 1.0f / (32 * 32));
    write_self_attention(SelfAttentionMatrix({32, 32}, std::move(self)), dir_ / "self.atsb");
    BinaryMask mask({512, 512});
    mask.set(10, 10, true);
    write_mask_png(mask, dir_ / "pool" / "a.png");
    write_mask_png(mask, dir_ / "gt.png");
    write_mask_png(mask, dir_ / "image.png");
    json_ = {
        {"sample_id", "s1"},
        {"image_path", "image.png"},
        {"cross_attention_paths", {"c0.atsb", "c1.atsb"}},
        {"self_attention_path", "self.atsb"},
        {"candidate_pool_path", "pool"},
        {"phrases",
         {{{"phrase_id", "p0"},
           {"word_token_ids", {0, 1}},
           {"head_index", 1},
           {"word_embeddings", {{1.0, 0.0}, {0.0, 1.0}}},
           {"is_plural", false},
           {"is_thing", true}}}},
        {"gt_mask_paths", {{"p0", "gt.png"}}},
    };
  }

  SampleManifest load() {
    std::ofstream(dir_ / "manifest.json") << json_.dump();
    return load_manifest(dir_ / "manifest.json");
  }

  std::string failing_field() {
    try {
      load();
    } catch (const ValidationError& e) {
      return e.field();
    }
    return "<no error>";
  }

  fs::path dir_;
  nlohmann::json json_;
};

TEST_F(ManifestTest, MinimalManifestLoads) {
  const SampleManifest m = load();
  EXPECT_EQ(m.sample_id, "s1");
  EXPECT_EQ(m.phrase_count(), 1u);
  EXPECT_EQ(m.candidate_count(), 1u);
  EXPECT_EQ(m.image_size, (Resolution{512, 512}));
  EXPECT_EQ(m.phrases[0].head_index, 1u);
  EXPECT_EQ(m.phrases[0].text, "p0");
  EXPECT_EQ(m.self_attention_path, dir_ / "self.atsb");

  const SampleData d = load_sample_data(m);
  EXPECT_EQ(d.cross_maps.size(), 2u);
  EXPECT_EQ(d.pool.count(), 1u);
  EXPECT_EQ(d.gt_masks.at("p0").count(), 1u);
}

TEST_F(ManifestTest, ExplicitImageSize) {
  json_["image_size"] = {512, 512};
  EXPECT_EQ(load().image_size, (Resolution{512, 512}));
  json_["image_size"] = {0, 512};
  EXPECT_EQ(failing_field(), "image_size");
}

TEST_F(ManifestTest, GroundTruthCardinality) {
  json_["phrases"].push_back(json_["phrases"][0]);
  json_["phrases"][1]["phrase_id"] = "p1";
  json_["gt_mask_paths"] = nlohmann::json::object();
  EXPECT_EQ(failing_field(), "gt_mask_paths");
}

TEST_F(ManifestTest, MissingField) {
  json_.erase("self_attention_path");
  EXPECT_EQ(failing_field(), "self_attention_path");
}

TEST_F(ManifestTest, DanglingPathNamesField) {
  json_["cross_attention_paths"][1] = "missing.atsb";
  EXPECT_EQ(failing_field(), "cross_attention_paths[1]");
  json_["cross_attention_paths"][1] = "c1.atsb";
  json_["gt_mask_paths"]["p0"] = "nope.png";
  EXPECT_EQ(failing_field(), "gt_mask_paths.p0");
}

TEST_F(ManifestTest, PhraseReferencingAbsentTokenMap) {
  json_["phrases"][0]["word_token_ids"] = {0, 5};
  EXPECT_EQ(failing_field(), "phrases[0](p0).word_token_ids");
}

TEST_F(ManifestTest, HeadMustBeLastWord) {
  json_["phrases"][0]["head_index"] = 0;
  EXPECT_EQ(failing_field(), "phrases[0](p0).head_index");
}

TEST_F(ManifestTest, EmbeddingDimensionsMustAgree) {
  json_["phrases"][0]["word_embeddings"] = {{1.0, 0.0}, {1.0}};
  EXPECT_EQ(failing_field(), "phrases[0](p0).word_embeddings");
}

TEST_F(ManifestTest, EmptyWordList) {
  json_["phrases"][0]["word_token_ids"] = nlohmann::json::array();
  EXPECT_EQ(failing_field(), "phrases[0](p0).word_token_ids");
}

TEST_F(ManifestTest, CandidateCountMustMatchPool) {
  json_["candidate_count"] = 3;
  EXPECT_EQ(failing_field(), "candidate_count");
}

TEST_F(ManifestTest, EmptyPoolIsLegal) {
  fs::remove(dir_ / "pool" / "a.png");
  json_["candidate_count"] = 0;
  EXPECT_EQ(load().candidate_count(), 0u);
}

TEST_F(ManifestTest, MaskResolutionMustMatchImage) {
  json_["image_size"] = {256, 256};
  const SampleManifest m = load();
  EXPECT_THROW(load_sample_data(m), ShapeError);
}

TEST_F(ManifestTest, BatchIndexListsSamples) {
  load();
  std::ofstream(dir_ / "batch.json") << R"({"samples": ["manifest.json"]})";
  const auto paths = list_samples(dir_ / "batch.json");
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0], dir_ / "manifest.json");
  EXPECT_EQ(list_samples(dir_ / "manifest.json").size(), 1u);
}

}  // namespace
}  // namespace attnseg
