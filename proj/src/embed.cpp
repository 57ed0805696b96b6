#include "lpdist/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <numbers>
#include <thread>

namespace lpdist {

namespace {

double pow_p(double v, double p) { return p == 2 ? v * v : std::pow(std::abs(v), p); }

std::int64_t circle_coordinate(const Group& group, std::uint64_t code) {
  return std::get<SolFin>(group.decode(code)).t;
}

unsigned worker_count() {
  if (const char* env = std::getenv("THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ||f - lambda(g) f||_p^p for one block.
double block_power(const EmbeddingBundle& b, std::size_t k, std::uint64_t g, std::uint64_t ginv) {
  const auto& blk = b.blocks[k];
  const auto& dense = b.dense[k];
  const auto& mask = b.in_support[k];
  const Group& G = b.group;
  double acc = 0;
  // Points of g * supp: y = g x contributes |f(g x) - f(x)|^p.
  for (std::size_t i = 0; i < blk.codes.size(); ++i) {
    std::uint64_t y = G.mul_code(g, blk.codes[i]);
    acc += pow_p(dense[y] - blk.values[i], b.p);
  }
  // Points of supp outside g * supp contribute |f(y)|^p.
  for (std::size_t i = 0; i < blk.codes.size(); ++i) {
    if (!mask[G.mul_code(ginv, blk.codes[i])]) acc += pow_p(blk.values[i], b.p);
  }
  return acc;
}

}  // namespace

CircleMap::CircleMap(std::int64_t q_) : q(q_) {
  if (q < 3) throw Error(ErrorCode::BadParam, "circle map needs q >= 3");
  c_q = 2.0 * static_cast<double>(q) * std::sin(std::numbers::pi / static_cast<double>(q));
}

Eigen::Vector2d CircleMap::point(std::int64_t t) const {
  double theta = 2.0 * std::numbers::pi * static_cast<double>(((t % q) + q) % q) / static_cast<double>(q);
  double r = static_cast<double>(q);
  return Eigen::Vector2d(r * (1.0 - std::cos(theta)), r * std::sin(theta)) / c_q;
}

Eigen::Matrix2d CircleMap::rotation(std::int64_t t) const {
  double theta = 2.0 * std::numbers::pi * static_cast<double>(((t % q) + q) % q) / static_cast<double>(q);
  Eigen::Matrix2d r;
  r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return r;
}

Eigen::Vector2d circle_embed(std::int64_t q, std::int64_t t) { return CircleMap(q).point(t); }

EmbeddingBundle assemble_bundle(const Group& group, double p, int R, std::vector<EmbeddingBlock> blocks,
                                std::optional<CircleMap> circle) {
  if (!group.finite()) throw Error(ErrorCode::BadParam, "embeddings need a finite group");
  if (blocks.empty()) throw Error(ErrorCode::BadParam, "bundle needs the dirac block");
  EmbeddingBundle b{group, p, R, static_cast<int>(blocks.size()) - 1, std::move(blocks), circle, 0, {}, {}};
  const std::size_t order = group.order();
  for (std::size_t k = 0; k < b.blocks.size(); ++k) {
    const auto& blk = b.blocks[k];
    if (k >= 1) b.C_hat = std::max(b.C_hat, blk.radius / blk.certified_J);
    std::vector<double> dense(order, 0.0);
    std::vector<char> mask(order, 0);
    for (std::size_t i = 0; i < blk.codes.size(); ++i) {
      dense[blk.codes[i]] = blk.values[i];
      mask[blk.codes[i]] = 1;
    }
    b.dense.push_back(std::move(dense));
    b.in_support.push_back(std::move(mask));
  }
  return b;
}

EmbeddingBundle build_bundle(const Group& group, double p, const BundleOptions& opts) {
  if (!group.finite()) throw Error(ErrorCode::BadParam, "build_bundle needs a finite group");
  if (!(p >= 2) || !std::isfinite(p)) throw Error(ErrorCode::BadParam, "build_bundle needs 2 <= p < inf");
  BallTable full = bfs_ball(group, kWholeGroup);
  DiameterReport diam = diameter(group, full);
  const bool sol = group.family() == Family::SolFin;
  int R = opts.R ? *opts.R : (sol ? *diam.diam_N : diam.diameter);
  if (R < 2 || R > diam.diameter)
    throw Error(ErrorCode::BadScale, "scale R = " + std::to_string(R) + " outside [2, diameter = " +
                                         std::to_string(diam.diameter) + "]");
  int K = 0;
  while ((2 << (K + 1)) <= R) ++K;  // largest K with 2^{K+1} <= R

  const double two_p = std::pow(2.0, 1.0 / p);
  std::vector<EmbeddingBlock> blocks;
  blocks.push_back(EmbeddingBlock{1, 1.0, 1.0, two_p, {group.identity_code()}, {1.0}});
  if (K >= 1) {
    std::vector<int> radii;
    for (int k = 1; k <= K; ++k) radii.push_back(1 << k);
    ProfileCurve curve = profile_curve(group, p, radii, opts.profile);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const TestVector& tv = curve.vectors[i];
      EmbeddingBlock blk;
      blk.radius = radii[i];
      blk.certified_J = tv.certified_J;
      blk.gradient = tv.gradient_max;
      blk.coef = radii[i] / tv.certified_J;
      for (std::size_t j = 0; j < tv.support.size(); ++j) {
        double v = tv.values[static_cast<Eigen::Index>(j)];
        if (v == 0) continue;
        blk.codes.push_back(group.encode(tv.support[j]));
        blk.values.push_back(v);
      }
      blocks.push_back(std::move(blk));
    }
  }
  std::optional<CircleMap> circle;
  if (sol) circle.emplace(group.spec().oA);
  return assemble_bundle(group, p, R, std::move(blocks), circle);
}

void zero_block(EmbeddingBundle& bundle, int k) {
  if (k < 0 || k >= static_cast<int>(bundle.blocks.size())) throw Error(ErrorCode::BadParam, "no such block");
  auto& blk = bundle.blocks[k];
  for (double& v : blk.values) v = 0;
  std::fill(bundle.dense[k].begin(), bundle.dense[k].end(), 0.0);
}

std::vector<double> block_contributions(const EmbeddingBundle& b, std::uint64_t g) {
  std::uint64_t ginv = b.group.inv_code(g);
  std::vector<double> out;
  out.reserve(b.blocks.size() + 1);
  for (std::size_t k = 0; k < b.blocks.size(); ++k)
    out.push_back(b.blocks[k].coef * std::pow(block_power(b, k, g, ginv), 1.0 / b.p));
  if (b.circle) out.push_back(b.circle->point(circle_coordinate(b.group, g)).norm());
  return out;
}

double embed_norm(const EmbeddingBundle& b, std::uint64_t g) {
  std::vector<double> parts = block_contributions(b, g);
  return lp_norm(parts, b.p);
}

double embed_norm(const EmbeddingBundle& b, const Element& g) { return embed_norm(b, b.group.encode(g)); }

std::vector<double> embed_norms(const EmbeddingBundle& b) {
  const std::uint64_t order = b.group.order();
  std::vector<double> out(order);
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), order));
  if (workers <= 1) {
    for (std::uint64_t g = 0; g < order; ++g) out[g] = embed_norm(b, g);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::uint64_t g = w; g < order; g += workers) out[g] = embed_norm(b, g);
    });
  for (auto& t : pool) t.join();
  return out;
}

Eigen::VectorXd embed_point(const EmbeddingBundle& b, const Element& g) {
  const std::uint64_t order = b.group.order();
  const std::uint64_t nblocks = b.blocks.size();
  if (order * nblocks > kMaxPointCoordinates)
    throw Error(ErrorCode::CapExceeded, "embed_point needs |G| * (K + 1) <= 2^24");
  const std::uint64_t gc = b.group.encode(g);
  const std::uint64_t ginv = b.group.inv_code(gc);
  Eigen::VectorXd out(static_cast<Eigen::Index>(order * nblocks + (b.circle ? 2 : 0)));
  for (std::uint64_t k = 0; k < nblocks; ++k) {
    const auto& dense = b.dense[k];
    const double coef = b.blocks[k].coef;
    for (std::uint64_t y = 0; y < order; ++y)
      out[static_cast<Eigen::Index>(k * order + y)] = coef * (dense[y] - dense[b.group.mul_code(ginv, y)]);
  }
  if (b.circle) out.tail<2>() = b.circle->point(circle_coordinate(b.group, gc));
  return out;
}

Eigen::VectorXd act_linear(const EmbeddingBundle& b, const Element& g, const Eigen::VectorXd& v) {
  const std::uint64_t order = b.group.order();
  const std::uint64_t nblocks = b.blocks.size();
  const std::uint64_t gc = b.group.encode(g);
  const std::uint64_t ginv = b.group.inv_code(gc);
  Eigen::VectorXd out(v.size());
  for (std::uint64_t k = 0; k < nblocks; ++k)
    for (std::uint64_t y = 0; y < order; ++y)
      out[static_cast<Eigen::Index>(k * order + y)] =
          v[static_cast<Eigen::Index>(k * order + b.group.mul_code(ginv, y))];
  if (b.circle) out.tail<2>() = b.circle->rotation(circle_coordinate(b.group, gc)) * v.tail<2>();
  return out;
}

double closed_form_bound(double C, double R, double p) {
  double l = std::log(R / 2.0);
  return 2.0 * C * std::pow(2.0 * std::max(l, 0.0), 1.0 / p);
}

AprioriBound apriori_bound(const EmbeddingBundle& b) {
  AprioriBound a;
  std::vector<double> terms;
  for (const auto& blk : b.blocks) terms.push_back(blk.coef * blk.gradient);
  if (b.circle) terms.push_back(1.0);
  a.lip_bound = lp_norm(terms, b.p);
  a.colip_bound = 8.0 * std::pow(2.0, -1.0 / b.p);
  if (b.circle) a.colip_bound = std::max(a.colip_bound, std::numbers::pi);
  a.dist_bound = a.lip_bound * a.colip_bound;
  a.closed_form = closed_form_bound(b.C_hat, b.R, b.p);
  return a;
}

std::string bundle_manifest_json(const EmbeddingBundle& b) {
  nlohmann::ordered_json j;
  j["p"] = b.p;
  j["R"] = b.R;
  j["K"] = b.K;
  j["C_hat"] = b.C_hat;
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& blk : b.blocks) {
    std::size_t support = static_cast<std::size_t>(std::count_if(blk.values.begin(), blk.values.end(),
                                                                 [](double v) { return v != 0; }));
    blocks.push_back({{"radius", blk.radius},
                      {"certified_J", blk.certified_J},
                      {"coef", blk.coef},
                      {"support_size", support}});
  }
  j["blocks"] = blocks;
  if (b.circle) j["circle"] = {{"q", b.circle->q}, {"c_q", b.circle->c_q}};
  return j.dump(2);
}

}  // namespace lpdist
