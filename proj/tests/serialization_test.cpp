#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "test_support.hpp"
#include "xfdd/errors.hpp"
#include "xfdd/serialization.hpp"

namespace xfdd {
namespace {

ModelBundle sample_bundle() {
  std::mt19937_64 rng(3);
  ModelBundle b;
  b.model = testing::random_model(NetworkSpec::mirrored(6, {4, 2}, 3, 9), rng);
  b.mode = Mode::kDiagnose;
  b.variable_names = {"a", "b", "c", "d"};
  b.scaling = {{1.0, 2.0}, {-0.5, 0.1}, {1e-17, 3.0}, {0.0, 1.0}};
  b.active_mask = {true, false, true, true};
  b.lag = 1;
  b.class_fault_ids = {1, 4, 7};
  // Not exactly representable in short decimal form.
  b.loss = {0.1, 1.0 / 3.0, 1e-4, 1.0};
  b.seed = 42;
  b.model.params.encoder[0].weights(0, 0) = 0.1 + 0.2;
  return b;
}

TEST(Bundle, JsonRoundTripIsExact) {
  const auto b = sample_bundle();
  const auto text = to_json_string(b);
  const auto back = bundle_from_json_string(text);
  EXPECT_EQ(back.model, b.model);
  EXPECT_EQ(back.mode, b.mode);
  EXPECT_EQ(back.variable_names, b.variable_names);
  EXPECT_EQ(back.scaling, b.scaling);
  EXPECT_EQ(back.active_mask, b.active_mask);
  EXPECT_EQ(back.lag, b.lag);
  EXPECT_EQ(back.class_fault_ids, b.class_fault_ids);
  EXPECT_EQ(back.loss, b.loss);
  EXPECT_EQ(back.seed, b.seed);
  EXPECT_EQ(to_json_string(back), text);
}

TEST(Bundle, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "xfdd_bundle_test.json";
  const auto b = sample_bundle();
  save_bundle(path.string(), b);
  EXPECT_EQ(load_bundle(path.string()).model, b.model);
  std::filesystem::remove(path);
  EXPECT_THROW(load_bundle(path.string()), DataError);
}

TEST(Bundle, CarriesArchitectureString) {
  const auto doc = nlohmann::json::parse(to_json_string(sample_bundle()));
  EXPECT_EQ(doc.at("spec").at("architecture"), "6-4-2*-2-4-6");
  EXPECT_EQ(doc.at("format_version"), kModelFormatVersion);
}

std::string mutate(const std::function<void(nlohmann::json&)>& fn) {
  auto doc = nlohmann::json::parse(to_json_string(sample_bundle()));
  fn(doc);
  return doc.dump();
}

TEST(Bundle, RejectsBrokenDocuments) {
  using nlohmann::json;
  EXPECT_THROW(bundle_from_json_string("{not json"), ConfigError);
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d.erase("lag"); })), ConfigError);
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d["format_version"] = 99; })),
               ConfigError);
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d["mode"] = "predict"; })),
               ConfigError);
  // Weight vector shorter than rows x cols.
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) {
                 d["weights"]["encoder"][0]["weights"].erase(0);
               })),
               ConfigError);
  // Layer shape that does not chain.
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) {
                 auto& l = d["weights"]["encoder"][1];
                 l["cols"] = 3;
                 l["rows"] = 2;
                 l["weights"] = std::vector<double>(6, 0.0);
               })),
               ConfigError);
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d["weights"]["classifier"]["bias"] = {0.0}; })),
               ConfigError);
  // Mask and lag that no longer match the input width.
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d["lag"] = 2; })), ConfigError);
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d["class_fault_ids"] = {1, 4}; })),
               ConfigError);
  EXPECT_THROW(bundle_from_json_string(mutate([](json& d) { d["standardization"].erase(0); })),
               ConfigError);
}

TEST(Digest, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Digest, FileDigestMatchesContent) {
  const auto path = std::filesystem::temp_directory_path() / "xfdd_digest_test.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "foobar";
  }
  EXPECT_EQ(file_digest(path.string()), "85944171f73967e8");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace xfdd
