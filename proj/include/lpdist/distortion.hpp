#pragma once

// Distortion of maps into l^p at scale R:
//   expansion   = sup_{0 < d(x,y) <= R} ||F(x) - F(y)|| / d(x,y)
//   contraction = sup_{0 < d(x,y) <= R} d(x,y) / ||F(x) - F(y)||
//   dist        = expansion * contraction

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lpdist/cayley.hpp"
#include "lpdist/embed.hpp"

namespace lpdist {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct DistortionReport {
  double R = kUnbounded;
  double expansion = 0;
  double contraction = 0;
  double dist = 0;
  std::array<std::string, 2> witness_expand;
  std::array<std::string, 2> witness_contract;
  // Distances of the witness pairs, so the ratios can be re-evaluated.
  double expand_source = 0, expand_image = 0;
  double contract_source = 0, contract_image = 0;
};

struct MetricTable {
  Eigen::MatrixXd d;
  std::vector<std::string> labels;  // defaults to "0", "1", ...

  std::size_t size() const { return static_cast<std::size_t>(d.rows()); }
  double max_distance() const { return d.maxCoeff(); }
};

/// Throws DegenerateInput unless d is a metric (symmetric, zero diagonal,
/// positive off the diagonal, triangle inequality up to 1e-12 relative).
void validate(const MetricTable& metric);
MetricTable metric_from_matrix(Eigen::MatrixXd d);

MetricTable path_metric(int n);
MetricTable cycle_metric(int n);
MetricTable star_metric(int leaves);  // center is point 0
MetricTable complete_metric(int n);   // all distances 1
/// "path:5", "cycle:4", "star:3", "complete:3".
MetricTable parse_metric(const std::string& text);
/// {"distances": [[...], ...], "labels": [...]} ("labels" optional).
MetricTable metric_from_json(const std::string& text);
/// Word metric restricted to the first `count` elements of the table (all if count == 0).
MetricTable group_metric(const Group& group, const BallTable& table, std::size_t count = 0);

/// Equivariant case: pairs reduce to g != e with |g| <= R, and
/// ||F(x) - F(y)|| = ||F(x^{-1} y)||. Throws ZeroNorm if some norm vanishes.
DistortionReport distortion_equivariant(const EmbeddingBundle& bundle, const BallTable& table,
                                        double R = kUnbounded);

/// Same reduction for a cyclically indexed orbit: lengths[i] = |g_i|, norms[i] = ||F(g_i)||.
/// Index 0 must be the identity (length 0).
DistortionReport distortion_from_norms(std::span<const int> lengths, std::span<const double> norms,
                                       std::span<const std::string> labels, double R = kUnbounded);

/// Brute force over pairs; rows of `points` are the images.
DistortionReport distortion_pairwise(const Eigen::MatrixXd& points, const MetricTable& metric, double p,
                                     double R = kUnbounded);

struct OptimizeOptions {
  std::uint64_t seed = 1;
  int restarts = 8;
  int iterations = 400;  // per temperature stage
  std::vector<double> betas = {4, 16, 64, 256};
};

struct OptimizedEmbedding {
  Eigen::MatrixXd points;
  DistortionReport report;  // exact re-measurement of `points`
};

/// Heuristic upper bound for c_p: classical scaling start, then restarts from
/// seeded random starts, minimizing a soft-max surrogate of log dist.
OptimizedEmbedding optimize_embedding(const MetricTable& metric, double p, int dim, const OptimizeOptions& opts = {});

struct C2Result {
  double value = 0;  // distortion of the certificate embedding (an upper bound for c_2)
  double lower = 1;  // largest sqrt(T) judged infeasible
  double upper = 0;
  Eigen::MatrixXd gram;  // certificate Gram matrix
  bool converged = false;
};

/// Minimal Euclidean distortion by bisection on T with alternating
/// projections between {d^2 <= D <= T d^2} and the squared-distance cone.
C2Result exact_c2(const MetricTable& metric, double tol = 1e-6);

/// Distortion of the points with Gram matrix g against the metric (p = 2).
double gram_distortion(const Eigen::MatrixXd& gram, const MetricTable& metric);

std::string report_json(const DistortionReport& report);

}  // namespace lpdist
