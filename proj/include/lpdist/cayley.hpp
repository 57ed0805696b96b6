#pragma once

// Word metrics on Cayley graphs: BFS balls, diameters, relative girth of a
// quotient, and the kernel-growth scan for SOL.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpdist/group.hpp"

namespace lpdist {

inline constexpr int kWholeGroup = -1;
inline constexpr std::size_t kDefaultVertexCap = std::size_t{1} << 22;
inline constexpr int kMaxInfiniteRadius = 40;

/// Closed ball B(1, radius) in BFS order. Generators are tried in the order
/// of Group::generators(), so the element order is deterministic.
struct BallTable {
  GroupSpec spec;
  int radius = 0;
  std::vector<Element> elements;
  std::unordered_map<Element, std::int32_t, ElementHash> index;
  std::vector<int> length;
  std::vector<std::uint64_t> sphere;
  /// right[i * num_generators + j]: index of elements[i] * s_j, or -1 if outside.
  std::vector<std::int32_t> right;
  int num_generators = 0;
  bool complete = false;

  std::size_t size() const { return elements.size(); }
  std::int32_t find(const Element& x) const {
    auto it = index.find(x);
    return it == index.end() ? -1 : it->second;
  }
  std::int32_t neighbor(std::size_t i, int j) const { return right[i * num_generators + j]; }
};

/// radius == kWholeGroup enumerates a finite group completely.
BallTable bfs_ball(const Group& group, int radius, std::size_t vertex_cap = kDefaultVertexCap);

/// |x^{-1} y| when the table reaches far enough, otherwise nullopt.
std::optional<int> table_distance(const Group& group, const BallTable& table, const Element& x, const Element& y);

struct DiameterReport {
  GroupSpec spec;
  int diameter = 0;
  /// sol-fin: largest word length on the kernel N_n = {(v, 0)}.
  std::optional<int> diam_N;
};

// Cayley graphs are vertex transitive, so the eccentricity of the identity
// is the diameter.
DiameterReport diameter(const Group& group, const BallTable& full);
DiameterReport diameter(const Group& group);

struct GirthWitness {
  Element x, y;
  int parent_distance = 0;
  int quotient_distance = 0;
  bool collision = false;  // x != y but project(x) == project(y)
};

struct GirthReport {
  GroupSpec parent, quotient;
  int cap = 0;
  int g_lower = 0;
  std::optional<GirthWitness> witness;  // failing pair at radius g_lower + 1
};

/// Largest r <= cap such that project() maps B_parent(1, r) isometrically onto
/// B_quotient(1, r).
GirthReport girth(const Group& parent, const Group& quotient, int cap);

/// True when project() is injective on the closed ball of the given radius.
/// Injectivity on B(1, 2r) implies the r-balls are isometric.
bool injective_on_ball(const Group& parent, const Group& quotient, const BallTable& parent_ball, int radius);

struct ExpRadicalRow {
  int r = 0;
  double min_log_norm = 0;
  double max_log_norm = 0;
  std::size_t count = 0;
};

struct ExpRadicalReport {
  GroupSpec spec;
  std::vector<ExpRadicalRow> rows;  // radii with no nonzero kernel element are omitted
  /// max_r max_log_norm / r: empirical constant for B_{N,SOL}(r) in B_N(e^{alpha r}).
  double alpha_upper = 0;
  /// max_r r / min_log_norm over rows with min_log_norm > 0: constant for the reverse inclusion.
  double alpha_lower = 0;
  /// Least-squares slope of max_log_norm against r.
  double slope = 0;
};

ExpRadicalReport exp_radical_scan(const Group& sol, int r_max);

/// Smallest alpha with r / alpha <= max_log_norm(r) <= alpha * r for every row with r >= r_min.
double sandwich_alpha(const ExpRadicalReport& report, int r_min);

std::string sphere_csv(const BallTable& table);
std::string exp_radical_csv(const ExpRadicalReport& report);

}  // namespace lpdist
