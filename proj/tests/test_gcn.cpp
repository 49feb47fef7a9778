#include <gtest/gtest.h>

#include "support.hpp"

using namespace egad;
namespace oracle = egad::testing::oracle;
using egad::testing::random_matrix;
using egad::testing::random_snapshot;

namespace {

Matrix run_gcn(const SnapshotGraph& g, const Matrix& w1, const Matrix& w2) {
  Recorder rec;
  Var a = rec.constant(normalize_adjacency(g));
  const auto rows = g.global_rows();
  return gcn_forward(a, snapshot_features(g), rec.constant(w1), rec.constant(w2), rows).value();
}

}  // namespace

TEST(Features, Identity) {
  SnapshotGraph g(0, {Edge{NodeId{0}, NodeId{1}, 0.5}, Edge{NodeId{1}, NodeId{2}, 0.5}});
  const Features f = identity_features(g);
  EXPECT_TRUE(f.is_identity());
  EXPECT_EQ(f.n, 3u);
  EXPECT_EQ(f.width(), 3u);

  SnapshotGraph explicit_x(0, {Edge{NodeId{0}, NodeId{1}, 0.5}}, {}, Matrix{{1, 2, 3}, {4, 5, 6}});
  const Features x = snapshot_features(explicit_x);
  EXPECT_FALSE(x.is_identity());
  EXPECT_EQ(x.width(), 3u);
  EXPECT_THROW(identity_features(explicit_x), ContractError);
}

TEST(GcnForward, Examples) {
  SnapshotGraph single(0, {}, {NodeId{0}});
  EXPECT_EQ(run_gcn(single, Matrix{{2.0}}, Matrix{{3.0}}), (Matrix{{6.0}}));
  EXPECT_EQ(run_gcn(single, Matrix{{-2.0}}, Matrix{{3.0}}), (Matrix{{0.0}}));
}

TEST(GcnForward, ShapeErrors) {
  SnapshotGraph g(0, {Edge{NodeId{0}, NodeId{1}, 0.5}});
  Recorder rec;
  Var a = rec.constant(normalize_adjacency(g));
  const std::vector<std::size_t> rows{0, 1};
  EXPECT_THROW(gcn_forward(a, identity_features(g), rec.constant(Matrix(2, 3)), rec.constant(Matrix(4, 2)), rows),
               ShapeError);
  const std::vector<std::size_t> short_rows{0};
  EXPECT_THROW(gcn_forward(a, identity_features(g), rec.constant(Matrix(2, 3)), rec.constant(Matrix(3, 2)), short_rows),
               ShapeError);
  EXPECT_THROW(gcn_forward(a, Features{3, std::nullopt}, rec.constant(Matrix(2, 3)), rec.constant(Matrix(3, 2)), rows),
               ShapeError);
}

TEST(GcnForward, ExplicitFeaturesPassThrough) {
  const Matrix x{{1, 0}, {0, 1}};
  SnapshotGraph g(0, {Edge{NodeId{0}, NodeId{1}, 1.0}}, {}, x);
  const Matrix w1{{1, -1, 2}, {0.5, 3, -2}};
  const Matrix w2{{1}, {2}, {-1}};
  // Identity features over nodes {0, 1} select the same W1 rows.
  SnapshotGraph same(0, {Edge{NodeId{0}, NodeId{1}, 1.0}});
  EXPECT_EQ(run_gcn(g, w1, w2), run_gcn(same, w1, w2));
}

TEST(GcnForward, MatchesOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n_global = 1 + rng() % 20;
    const std::size_t n = 1 + rng() % n_global;
    const SnapshotGraph g = random_snapshot(n, n_global, 0.3, rng);
    const std::size_t d1 = 1 + rng() % 8, d2 = 1 + rng() % d1;
    const Matrix w1 = random_matrix(n_global, d1, rng), w2 = random_matrix(d1, d2, rng);
    const Matrix z = run_gcn(g, w1, w2);
    ASSERT_EQ(z.rows(), n);
    ASSERT_EQ(z.cols(), d2);
    EXPECT_LT(oracle::max_abs_diff(oracle::gcn(g, w1, w2), z), 1e-10);
  }
}

TEST(CountParams, Examples) {
  ModelConfig c;
  c.window = 2;
  c.heads = 2;
  c.d1 = 32;
  c.d2 = 16;
  EXPECT_EQ(count_params(c, 100), 9088u);
  c.window = 0;
  EXPECT_EQ(count_params(c, 100), 100u * 32 + 32 * 16);
  c.heads = 7;
  EXPECT_EQ(count_params(c, 100), 100u * 32 + 32 * 16);
}

TEST(CountParams, StrictlyIncreasingInEachArgument) {
  ModelConfig base;
  base.window = 2;
  base.heads = 2;
  base.d1 = 8;
  base.d2 = 4;
  const std::uint64_t n = 50;
  const std::uint64_t ref = count_params(base, n);
  EXPECT_GT(count_params(base, n + 1), ref);
  for (auto field : {&ModelConfig::window, &ModelConfig::heads, &ModelConfig::d1, &ModelConfig::d2}) {
    ModelConfig c = base;
    c.*field += 1;
    EXPECT_GT(count_params(c, n), ref);
  }
}
