#pragma once

// Equivariant embeddings of the finite quotients into l^p:
//
//   F(g) = (+)_k coef_k (f_k - lambda(g) f_k)   [(+) circle(t(g)) for SOL]
//
// Block 0 is the dirac at the identity with coefficient 1. Block k >= 1 uses
// a profile certificate f_k supported in the open ball B(1, 2^k) with
// gradient 1, weighted by coef_k = 2^k / J_k where J_k = ||f_k||_p. Each block
// is the orbit of 0 under an affine isometric action whose linear part is the
// left regular representation, so ||F(g) - F(h)|| = ||F(g^{-1} h)||.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpdist/cayley.hpp"
#include "lpdist/group.hpp"
#include "lpdist/profile.hpp"

namespace lpdist {

/// Orbit of the origin under rotation by -2 pi / q about (q, 0), scaled so
/// that consecutive points are at distance 1.
struct CircleMap {
  std::int64_t q = 0;
  double c_q = 0;  // 2 q sin(pi / q)

  explicit CircleMap(std::int64_t q);
  Eigen::Vector2d point(std::int64_t t) const;
  /// Linear part of the action of t (a rotation).
  Eigen::Matrix2d rotation(std::int64_t t) const;
};

Eigen::Vector2d circle_embed(std::int64_t q, std::int64_t t);

struct EmbeddingBlock {
  int radius = 1;               // support lies in the open ball B(1, radius)
  double coef = 1;
  double certified_J = 1;       // ||f_k||_p
  double gradient = 1;          // max_s ||lambda(s) f_k - f_k||_p
  std::vector<std::uint64_t> codes;  // support, as group codes
  std::vector<double> values;
};

struct EmbeddingBundle {
  Group group;
  double p = 2;
  int R = 0;
  int K = 0;
  std::vector<EmbeddingBlock> blocks;  // blocks[0] is the dirac
  std::optional<CircleMap> circle;
  double C_hat = 0;  // max_k 2^k / J_k over the certificate blocks

  // Dense copies of the block functions, indexed by code.
  std::vector<std::vector<double>> dense;
  std::vector<std::vector<char>> in_support;
};

struct BundleOptions {
  std::optional<int> R;  // default: diameter, or diam_N for sol-fin
  ProfileOptions profile;
};

/// K = max(0, floor(log2 R) - 1) certificate blocks at radii 2^k, so every
/// block radius is at most R / 2.
EmbeddingBundle build_bundle(const Group& group, double p, const BundleOptions& opts = {});

/// Assembles a bundle from explicit blocks (block 0 must be the dirac).
EmbeddingBundle assemble_bundle(const Group& group, double p, int R, std::vector<EmbeddingBlock> blocks,
                                std::optional<CircleMap> circle);

/// Replaces block k by the zero function (diagnostics).
void zero_block(EmbeddingBundle& bundle, int k);

/// Per-block norms coef_k ||f_k - lambda(g) f_k||_p, then the circle term if present.
std::vector<double> block_contributions(const EmbeddingBundle& bundle, std::uint64_t g);

double embed_norm(const EmbeddingBundle& bundle, std::uint64_t g);
double embed_norm(const EmbeddingBundle& bundle, const Element& g);
/// embed_norm for every code, in code order. Uses THREADS worker threads if set.
std::vector<double> embed_norms(const EmbeddingBundle& bundle);

inline constexpr std::uint64_t kMaxPointCoordinates = std::uint64_t{1} << 24;

/// Coordinates of F(g): one |G|-vector per block, then two circle coordinates.
Eigen::VectorXd embed_point(const EmbeddingBundle& bundle, const Element& g);
/// Linear part of the action: lambda(g) on each block, rotation on the circle.
Eigen::VectorXd act_linear(const EmbeddingBundle& bundle, const Element& g, const Eigen::VectorXd& v);

struct AprioriBound {
  double lip_bound = 0;
  double colip_bound = 0;
  double dist_bound = 0;
  double closed_form = 0;
};

/// 2 C (2 ln(R / 2))^{1/p}.
double closed_form_bound(double C, double R, double p);

AprioriBound apriori_bound(const EmbeddingBundle& bundle);

std::string bundle_manifest_json(const EmbeddingBundle& bundle);

}  // namespace lpdist
