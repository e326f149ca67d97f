#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "glovesgns/glove.hpp"
#include "glovesgns/pmi.hpp"
#include "support/oracles.hpp"

using namespace glovesgns;
using glove::Params;
using glove::WeightingConfig;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("glovesgns_glove_" + name)).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Dense |V| x |V| table with counts spread over [1, 200).
CoocTable dense_table(std::size_t v, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CoocCell> cells;
  for (WordId i = 0; i < v; ++i)
    for (WordId j = 0; j < v; ++j) cells.push_back({i, j, rng.uniform(1.0, 200.0)});
  return CoocTable::from_cells(v, std::move(cells));
}

Params one_dim(double w, double c, double bw, double bc) {
  Params p(1, 1);
  p.word(0, 0) = w;
  p.context(0, 0) = c;
  p.word_bias[0] = bw;
  p.context_bias[0] = bc;
  return p;
}

}  // namespace

TEST(WeightF, Branches) {
  const WeightingConfig cfg{100.0, 0.75};
  EXPECT_EQ(glove::weight_f(100.0, cfg), 1.0);
  EXPECT_EQ(glove::weight_f(200.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(glove::weight_f(6.25, cfg), 0.125);
  EXPECT_THROW(glove::weight_f(0.0, cfg), PreconditionError);
  EXPECT_THROW(glove::weight_f(-1.0, cfg), PreconditionError);
}

TEST(WeightF, ConfigValidation) {
  EXPECT_THROW((WeightingConfig{0.0, 0.75}.validate()), PreconditionError);
  EXPECT_THROW((WeightingConfig{10.0, 0.0}.validate()), PreconditionError);
  EXPECT_THROW((WeightingConfig{10.0, 1.5}.validate()), PreconditionError);
  EXPECT_NO_THROW((WeightingConfig{10.0, 1.0}.validate()));
}

TEST(LocalCost, Examples) {
  const WeightingConfig cfg{100.0, 0.75};
  // W.C + biases == log count
  EXPECT_NEAR(glove::local_cost(one_dim(1.0, std::log(7.0), 0.0, 0.0), 0, 0, 7.0, cfg), 0.0, 1e-30);
  // count 1, residual 1, f(1) = 100^-0.75
  EXPECT_NEAR(glove::local_cost(one_dim(1.0, 1.0, 0.0, 0.0), 0, 0, 1.0, cfg), 0.031622776601683794, 1e-15);
  // f = 1 branch
  const double r = 1.0 + 0.5 + 0.25 - std::log(150.0);
  EXPECT_NEAR(glove::local_cost(one_dim(1.0, 1.0, 0.5, 0.25), 0, 0, 150.0, cfg), r * r, 1e-12);
  EXPECT_THROW(glove::local_cost(one_dim(1, 1, 0, 0), 0, 0, 0.0, cfg), PreconditionError);
}

TEST(LocalGradients, ZeroResidualGivesZeroGradients) {
  const auto p = one_dim(2.0, std::log(9.0) / 2.0, 0.0, 0.0);
  const auto g = glove::local_gradients(p, 0, 0, 9.0, {100.0, 0.75});
  EXPECT_NEAR(g.word[0], 0.0, 1e-15);
  EXPECT_NEAR(g.context[0], 0.0, 1e-15);
  EXPECT_NEAR(g.word_bias, 0.0, 1e-15);
}

TEST(LocalGradients, HandComputedBiasGradient) {
  // W=2, C=3, count=e: residual 5, f=1 (x_max=1), g = 2*5.
  const auto g = glove::local_gradients(one_dim(2.0, 3.0, 0.0, 0.0), 0, 0, std::numbers::e, {1.0, 0.75});
  EXPECT_NEAR(g.word_bias, 10.0, 1e-12);
  EXPECT_NEAR(g.context_bias, 10.0, 1e-12);
  EXPECT_NEAR(g.word[0], 30.0, 1e-12);
  EXPECT_NEAR(g.context[0], 20.0, 1e-12);
}

TEST(LocalGradients, MatchCentralFiniteDifferences) {
  Rng rng(123);
  const double h = 1e-4;
  auto close = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) <= std::max(1e-5 * std::abs(analytic), 1e-8);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t v = 1 + rng.below(4), d = 1 + rng.below(8);
    Params p = Params::random(v, d, rng.next());
    for (double& x : p.word.data()) x = rng.uniform(-1, 1);
    for (double& x : p.context.data()) x = rng.uniform(-1, 1);
    const WordId i = static_cast<WordId>(rng.below(v)), j = static_cast<WordId>(rng.below(v));
    const double count = std::exp(rng.uniform(-2.0, 6.0));
    const WeightingConfig cfg{rng.uniform() < 0.5 ? 10.0 : 100.0, 0.75};
    const auto g = glove::local_gradients(p, i, j, count, cfg);

    auto probe = [&](double& slot) {
      const double saved = slot;
      const double num = glovesgns::testing::central_difference(
          [&](double x) {
            slot = x;
            return glove::local_cost(p, i, j, count, cfg);
          },
          saved, h);
      slot = saved;
      return num;
    };
    for (std::size_t k = 0; k < d; ++k) {
      ASSERT_TRUE(close(g.word[k], probe(p.word(i, k)))) << "trial " << trial << " W" << k;
      ASSERT_TRUE(close(g.context[k], probe(p.context(j, k)))) << "trial " << trial << " C" << k;
    }
    ASSERT_TRUE(close(g.word_bias, probe(p.word_bias[i]))) << trial;
    ASSERT_TRUE(close(g.context_bias, probe(p.context_bias[j]))) << trial;
  }
}

TEST(Train, PreconditionsAreChecked) {
  const auto table = CoocTable::from_cells(1, {{0, 0, 5.0}});
  glove::TrainConfig cfg;
  cfg.dim = 4;
  cfg.iterations = 0;
  EXPECT_THROW(glove::train(table, cfg, {}), PreconditionError);
  cfg.iterations = 1;
  cfg.eta = 0.0;
  EXPECT_THROW(glove::train(table, cfg, {}), PreconditionError);
  cfg.eta = 0.05;
  EXPECT_THROW(glove::train(CoocTable(3), cfg, {}), PreconditionError);
}

TEST(Train, SingleCellIsFitExactly) {
  const auto table = CoocTable::from_cells(1, {{0, 0, 5.0}});
  glove::TrainConfig cfg;
  cfg.dim = 4;
  cfg.iterations = 200;
  cfg.eta = 0.5;
  const WeightingConfig w{100.0, 0.75};
  const auto p = glove::train(table, cfg, w);
  EXPECT_LT(glove::local_cost(p, 0, 0, 5.0, w), 1e-6);
}

TEST(Train, FullRankProblemReachesExactSolution) {
  const auto table = dense_table(10, 17);
  glove::TrainConfig cfg;
  cfg.dim = 10;
  cfg.iterations = 3000;
  cfg.eta = 0.1;
  const WeightingConfig w{100.0, 0.75};

  std::vector<double> costs;
  const auto p = glove::train(table, cfg, w, [&](int, const Params& params, double) {
    costs.push_back(glove::total_cost(params, table, w));
  });
  ASSERT_EQ(costs.size(), 3000u);

  EXPECT_LT(costs.back() / static_cast<double>(table.size()), 1e-3);
  EXPECT_LT(pmi::residual_report(p, table).max_abs, 0.05);

  std::size_t non_increasing = 0;
  for (std::size_t e = 1; e < costs.size(); ++e) non_increasing += costs[e] <= costs[e - 1];
  EXPECT_GE(static_cast<double>(non_increasing), 0.95 * static_cast<double>(costs.size() - 1));
}

TEST(Train, CallbackSeesEveryEpoch) {
  const auto table = dense_table(4, 2);
  glove::TrainConfig cfg;
  cfg.dim = 3;
  cfg.iterations = 7;
  std::vector<int> epochs;
  glove::train(table, cfg, {}, [&](int e, const Params& p, double cost) {
    epochs.push_back(e);
    EXPECT_TRUE(p.all_finite());
    EXPECT_GE(cost, 0.0);
  });
  EXPECT_EQ(epochs, (std::vector<int>{1, 2, 3, 4, 5, 6, 7}));
}

TEST(Train, SingleThreadIsDeterministic) {
  const auto table = dense_table(8, 5);
  glove::TrainConfig cfg;
  cfg.dim = 6;
  cfg.iterations = 20;
  cfg.seed = 99;
  const auto a = glove::train(table, cfg, {});
  const auto b = glove::train(table, cfg, {});
  EXPECT_EQ(a, b);
  cfg.seed = 100;
  EXPECT_FALSE(glove::train(table, cfg, {}) == a);
}

TEST(Train, HogwildThreadsStillConverge) {
  const auto table = dense_table(10, 17);
  glove::TrainConfig cfg;
  cfg.dim = 10;
  cfg.iterations = 500;
  cfg.eta = 0.1;
  cfg.threads = 4;
  const WeightingConfig w{100.0, 0.75};
  const auto p = glove::train(table, cfg, w);
  EXPECT_TRUE(p.all_finite());
  EXPECT_LT(glove::total_cost(p, table, w) / static_cast<double>(table.size()), 0.05);
}

TEST(Train, NonFiniteUpdateAborts) {
  const auto table = dense_table(3, 1);
  glove::TrainConfig cfg;
  cfg.dim = 2;
  cfg.iterations = 5;
  cfg.eta = 1e300;
  cfg.clip_bound = 0.0;
  try {
    glove::train(table, cfg, {1.0, 0.75});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_GE(e.epoch(), 1);
    EXPECT_LT(e.word(), 3u);
  }
}

TEST(Output, EmbeddingAndBiasFormats) {
  const Vocabulary vocab({{"a", 1}});
  Params p(1, 2);
  p.word_bias[0] = 1.5;
  const auto vec_path = temp_path("vec.txt");
  const auto bias_path = temp_path("bias.txt");
  glove::save_embeddings(p, vocab, vec_path);
  glove::save_biases(p, vocab, bias_path);
  EXPECT_EQ(read_file(vec_path), "a 0 0\n");
  EXPECT_EQ(read_file(bias_path), "a 1.5\n");
}

TEST(Output, RoundTripIsBitExact) {
  const auto table = dense_table(5, 3);
  glove::TrainConfig cfg;
  cfg.dim = 3;
  cfg.iterations = 3;
  const auto p = glove::train(table, cfg, {});
  const Vocabulary vocab({{"e", 9}, {"d", 8}, {"c", 7}, {"b", 6}, {"a", 5}});
  const auto vec_path = temp_path("rt_vec.txt");
  const auto bias_path = temp_path("rt_bias.txt");
  glove::save_embeddings(p, vocab, vec_path);
  glove::save_biases(p, vocab, bias_path, glove::BiasKind::context);
  const auto vecs = load_vectors(vec_path);
  EXPECT_EQ(vecs.values, p.word);
  EXPECT_EQ(vecs.tokens[4], "a");
  EXPECT_EQ(load_scalars(bias_path).values, p.context_bias);
}
