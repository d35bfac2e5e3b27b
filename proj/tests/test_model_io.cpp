// JSON model-description loader.

#include <gtest/gtest.h>

#include <string>

#include "aeplab/model_io.hpp"

using namespace aeplab;
using nlohmann::json;

namespace {
const std::string kModels = std::string(AEPLAB_SOURCE_DIR) + "/models/";
}

TEST(ModelIo, LoadsIidFixture) {
  auto lm = load_model_file(kModels + "coin.json");
  EXPECT_TRUE(lm.model.is_iid());
  EXPECT_EQ(lm.model.alphabet_size(), 2u);
  EXPECT_DOUBLE_EQ(lm.model.marginal().prob(0), 0.5);
  EXPECT_TRUE(lm.model.marginal().has_exact());
  EXPECT_FALSE(lm.rho.has_value());
}

TEST(ModelIo, LoadsMarkovFixtureWithExactStationary) {
  auto lm = load_model_file(kModels + "bench_source.json");
  EXPECT_EQ(lm.model.kind(), ProcessModel::Kind::Markov);
  ASSERT_TRUE(lm.model.hidden_stationary().has_exact());
  EXPECT_EQ(lm.model.hidden_stationary().exact()[0], Rational(2, 3));
}

TEST(ModelIo, LoadsHmmFixture) {
  auto lm = load_model_file(kModels + "hmm_example.json");
  EXPECT_EQ(lm.model.kind(), ProcessModel::Kind::Hmm);
  EXPECT_EQ(lm.model.alphabet_size(), 3u);
  EXPECT_EQ(lm.model.hidden_count(), 2u);
}

TEST(ModelIo, EmbeddedAndStandaloneRho) {
  auto lm = load_model_file(kModels + "uniform2.json");
  ASSERT_TRUE(lm.rho.has_value());
  EXPECT_EQ(lm.rho->scaled(0, 1), 1);
  auto rho = load_rho_file(kModels + "hamming2.json");
  EXPECT_EQ(rho.common_denominator(), 1);
  auto rho23 = load_rho_file(kModels + "rho23.json");
  EXPECT_EQ(rho23.source_size(), 2u);
  EXPECT_EQ(rho23.repro_size(), 3u);
  EXPECT_EQ(rho23.at(0, 1), Rational(1, 2));
  EXPECT_EQ(rho23.common_denominator(), 2);
}

TEST(ModelIo, BareArrayRho) {
  auto rho = load_rho_json(json::parse(R"([["0","2"],["1/4","0"]])"));
  EXPECT_EQ(rho.at(1, 0), Rational(1, 4));
}

TEST(ModelIo, RejectsBadRowSums) {
  auto j = json::parse(R"({ "kind": "iid", "probs": ["0.5", "0.6"] })");
  EXPECT_THROW(load_model_json(j), std::invalid_argument);
  auto jm = json::parse(R"({ "kind": "markov", "transition": [["0.9","0.2"],["0.2","0.8"]] })");
  EXPECT_THROW(load_model_json(jm), std::invalid_argument);
}

TEST(ModelIo, NearOneRowsLoseExactnessButLoad) {
  // off by 5e-13: inside the 1e-12 gate but not exactly 1
  auto j = json::parse(R"({ "kind": "iid",
    "probs": ["0.2500000000000", "0.7499999999995"] })");
  auto lm = load_model_json(j);
  EXPECT_FALSE(lm.model.marginal().has_exact());
  EXPECT_NEAR(lm.model.marginal().prob(1), 0.75, 1e-11);
}

TEST(ModelIo, AcceptsRationalAndNumericEntries) {
  auto j = json::parse(R"({ "kind": "iid", "probs": ["1/3", "1/3", "1/3"] })");
  auto lm = load_model_json(j);
  ASSERT_TRUE(lm.model.marginal().has_exact());
  EXPECT_EQ(lm.model.marginal().exact()[2], Rational(1, 3));
  auto jn = json::parse(R"({ "kind": "iid", "probs": [0.5, 0.5] })");
  EXPECT_TRUE(load_model_json(jn).model.marginal().has_exact());
}

TEST(ModelIo, NamesOffendingField) {
  try {
    load_model_json(json::parse(R"({ "kind": "iid" })"));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("probs"), std::string::npos);
  }
  try {
    load_model_json(json::parse(R"({ "kind": "warp" })"));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("kind"), std::string::npos);
  }
  EXPECT_THROW(load_model_file(kModels + "no_such_file.json"), std::invalid_argument);
}

TEST(ModelIo, HmmRequiresBothMatrices) {
  auto j = json::parse(R"({ "kind": "hmm", "transition": [["0.5","0.5"],["0.5","0.5"]] })");
  EXPECT_THROW(load_model_json(j), std::invalid_argument);
}
