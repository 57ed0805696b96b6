#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "lpdist/distortion.hpp"

using namespace lpdist;

namespace {

Group lamp(int n) { return Group(make_spec(Family::LamplighterFin, {.m = 2, .n = n})); }

// Brute force over symmetric three-leaf star embeddings: leaves on a circle
// of radius 1 at 120 degrees, center on the axis at height h.
double star_oracle() {
  double best = 1e9;
  for (int i = 0; i <= 200000; ++i) {
    const double h = i * 1e-5;
    const double center_leaf = std::sqrt(1 + h * h);      // source distance 1
    const double leaf_leaf = std::sqrt(3.0) / 2;         // image distance / source distance 2
    const double hi = std::max(center_leaf, leaf_leaf), lo = std::min(center_leaf, leaf_leaf);
    best = std::min(best, hi / lo);
  }
  return best;
}

Eigen::MatrixXd points_of(const EmbeddingBundle& b) {
  const Group& g = b.group;
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(g.order()), embed_point(b, g.identity()).size());
  for (std::uint64_t c = 0; c < g.order(); ++c) pts.row(static_cast<Eigen::Index>(c)) = embed_point(b, g.decode(c));
  return pts;
}

}  // namespace

TEST(Metric, BuildersAndValidation) {
  MetricTable p = path_metric(5);
  EXPECT_EQ(p.d(0, 4), 4);
  MetricTable c = cycle_metric(6);
  EXPECT_EQ(c.d(0, 3), 3);
  EXPECT_EQ(c.d(1, 5), 2);
  MetricTable s = star_metric(3);
  EXPECT_EQ(s.d(0, 2), 1);
  EXPECT_EQ(s.d(1, 3), 2);
  EXPECT_EQ(parse_metric("cycle:4").d, cycle_metric(4).d);
  EXPECT_THROW(parse_metric("tree:4"), Error);
  EXPECT_THROW(parse_metric("path"), Error);
  Eigen::MatrixXd bad(3, 3);
  bad << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  EXPECT_THROW(metric_from_matrix(bad), Error);
  MetricTable j = metric_from_json(R"({"distances": [[0, 2], [2, 0]], "labels": ["a", "b"]})");
  EXPECT_EQ(j.labels[1], "b");
  EXPECT_THROW(metric_from_json(R"({"distances": [[0, 2], [2, 0]], "extra": 1})"), Error);
  EXPECT_THROW(metric_from_json("not json"), Error);
}

TEST(Pairwise, PathIsIsometricOnALine) {
  MetricTable m = path_metric(6);
  Eigen::MatrixXd x(6, 1);
  for (int i = 0; i < 6; ++i) x(i, 0) = i;
  EXPECT_DOUBLE_EQ(distortion_pairwise(x, m, 2).dist, 1.0);
  EXPECT_DOUBLE_EQ(distortion_pairwise(x * 3.5, m, 3).dist, 1.0);
}

TEST(Pairwise, SquareCorners) {
  MetricTable m = cycle_metric(4);
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 1, 1, 0, 1;
  DistortionReport r = distortion_pairwise(x, m, 2);
  EXPECT_NEAR(r.dist, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(distortion_pairwise(x * 0.01, m, 2).dist, r.dist, 1e-12);
  // Witnesses reproduce the ratios.
  EXPECT_DOUBLE_EQ(r.expand_image / r.expand_source, r.expansion);
  EXPECT_DOUBLE_EQ(r.contract_source / r.contract_image, r.contraction);
  EXPECT_EQ(r.witness_contract[0], "0");
  EXPECT_EQ(r.witness_contract[1], "2");
}

TEST(Pairwise, Errors) {
  MetricTable m = path_metric(3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
  try {
    distortion_pairwise(x, m, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
  EXPECT_THROW(distortion_pairwise(Eigen::MatrixXd::Zero(2, 1), m, 2), Error);
}

TEST(Pairwise, ScaleRestriction) {
  MetricTable m = cycle_metric(4);
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 1, 1, 0, 1;
  EXPECT_DOUBLE_EQ(distortion_pairwise(x, m, 2, 1).dist, 1.0);
}

TEST(Equivariant, AgreesWithPairwise) {
  for (const Group& g : {lamp(4), Group(make_spec(Family::BsFin, {.m = 2, .n = 3}))}) {
    EmbeddingBundle b = build_bundle(g, 2);
    BallTable t = bfs_ball(g, kWholeGroup);
    DistortionReport eq = distortion_equivariant(b, t);
    MetricTable m{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.order()), static_cast<Eigen::Index>(g.order())), {}};
    for (std::uint64_t a = 0; a < g.order(); ++a)
      for (std::uint64_t c = 0; c < g.order(); ++c)
        m.d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
            t.length[t.find(g.decode(g.mul_code(g.inv_code(a), c)))];
    DistortionReport pw = distortion_pairwise(points_of(b), m, 2);
    EXPECT_NEAR(pw.expansion, eq.expansion, 1e-9 * eq.expansion);
    EXPECT_NEAR(pw.contraction, eq.contraction, 1e-9 * eq.contraction);
    EXPECT_NEAR(pw.dist, eq.dist, 1e-9 * eq.dist);
    EXPECT_LE(eq.dist, apriori_bound(b).dist_bound + 1e-9);
    EXPECT_GE(eq.dist, 1.0);
    // Witness re-evaluation.
    Element w = g.parse(eq.witness_expand[1]);
    EXPECT_DOUBLE_EQ(embed_norm(b, w) / t.length[t.find(w)], eq.expansion);
  }
}

TEST(Equivariant, ScaleOne) {
  Group g = lamp(4);
  EmbeddingBundle b = build_bundle(g, 2);
  DistortionReport r = distortion_equivariant(b, bfs_ball(g, kWholeGroup), 1);
  EXPECT_EQ(r.R, 1);
  EXPECT_GE(r.dist, 1.0);
}

TEST(Equivariant, ZeroBlockIsReported) {
  Group g = lamp(4);
  BundleOptions o;
  o.R = 2;
  EmbeddingBundle b = build_bundle(g, 2, o);
  zero_block(b, 0);
  try {
    distortion_equivariant(b, bfs_ball(g, kWholeGroup));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroNorm);
  }
}

TEST(Optimize, Examples) {
  EXPECT_LE(optimize_embedding(path_metric(4), 2, 1).report.dist, 1 + 1e-6);
  EXPECT_LE(optimize_embedding(cycle_metric(4), 2, 2).report.dist, 1.4143);
  EXPECT_LE(optimize_embedding(complete_metric(3), 2, 2).report.dist, 1 + 1e-6);
  // Re-measured, so the report is the exact distortion of the returned points.
  auto o = optimize_embedding(cycle_metric(6), 3, 2);
  EXPECT_DOUBLE_EQ(distortion_pairwise(o.points, cycle_metric(6), 3).dist, o.report.dist);
  EXPECT_EQ(optimize_embedding(cycle_metric(5), 2, 2).report.dist, optimize_embedding(cycle_metric(5), 2, 2).report.dist);
}

TEST(ExactC2, Examples) {
  EXPECT_NEAR(exact_c2(path_metric(5)).value, 1.0, 1e-6);
  EXPECT_NEAR(exact_c2(cycle_metric(4), 1e-5).value, std::sqrt(2.0), 1e-4);
  const double star = star_oracle();
  EXPECT_NEAR(star, 2 / std::sqrt(3.0), 1e-4);
  EXPECT_NEAR(exact_c2(star_metric(3), 1e-5).value, star, 1e-3);
}

TEST(ExactC2, CertificateGramIsPsdAndMatchesValue) {
  MetricTable m = cycle_metric(5);
  C2Result r = exact_c2(m, 1e-5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.gram);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * r.gram.norm());
  EXPECT_NEAR(gram_distortion(r.gram, m), r.value, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.lower, r.value + 1e-5);
}

TEST(ExactC2, BelowOptimizer) {
  for (const char* spec : {"path:5", "cycle:4", "star:3", "cycle:6", "star:4"}) {
    MetricTable m = parse_metric(spec);
    const double tol = 1e-5;
    double c2 = exact_c2(m, tol).value;
    double opt = optimize_embedding(m, 2, static_cast<int>(m.size()) - 1).report.dist;
    EXPECT_LE(c2, opt + tol) << spec;
  }
}

TEST(ExactC2, MonotoneUnderSubspaces) {
  std::mt19937_64 rng(12);
  for (const char* spec : {"cycle:6", "star:4", "cycle:7"}) {
    MetricTable m = parse_metric(spec);
    const double tol = 1e-5;
    const double full = exact_c2(m, tol).value;
    for (int rep = 0; rep < 3; ++rep) {
      const Eigen::Index drop = static_cast<Eigen::Index>(rng() % m.size());
      const Eigen::Index n = m.d.rows() - 1;
      Eigen::MatrixXd d(n, n);
      for (Eigen::Index i = 0, a = 0; i <= n; ++i) {
        if (i == drop) continue;
        for (Eigen::Index j = 0, b = 0; j <= n; ++j) {
          if (j == drop) continue;
          d(a, b++) = m.d(i, j);
        }
        ++a;
      }
      EXPECT_LE(exact_c2(metric_from_matrix(d), tol).value, full + tol) << spec;
    }
  }
}

TEST(ExactC2, Limits) {
  EXPECT_THROW(exact_c2(path_metric(17)), Error);
  EXPECT_THROW(exact_c2(path_metric(4), 1e-8), Error);
}

TEST(Report, Json) {
  MetricTable m = cycle_metric(4);
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 1, 1, 0, 1;
  std::string j = report_json(distortion_pairwise(x, m, 2));
  for (const char* key : {"\"R\": null", "\"expansion\"", "\"contraction\"", "\"dist\"", "\"witness_expand\"",
                          "\"witness_contract\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
}
