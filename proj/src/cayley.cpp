#include "lpdist/cayley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "lpdist/format.hpp"

namespace lpdist {

BallTable bfs_ball(const Group& group, int radius, std::size_t vertex_cap) {
  if (radius == kWholeGroup) {
    if (!group.finite())
      throw Error(ErrorCode::InfiniteNeedsRadius, std::string(family_name(group.family())) + " needs a radius");
    if (group.order() > vertex_cap) throw Error(ErrorCode::CapExceeded, "group larger than vertex cap");
  } else if (radius < 0) {
    throw Error(ErrorCode::BadParam, "negative radius");
  } else if (!group.finite() && radius > kMaxInfiniteRadius) {
    throw Error(ErrorCode::CapExceeded, "infinite-parent BFS limited to radius " + std::to_string(kMaxInfiniteRadius));
  }
  const auto& gens = group.generators();
  const int ngen = static_cast<int>(gens.size());
  const int limit = radius == kWholeGroup ? std::numeric_limits<int>::max() : radius;

  BallTable t;
  t.spec = group.spec();
  t.num_generators = ngen;
  t.elements.push_back(group.identity());
  t.index.emplace(t.elements.back(), 0);
  t.length.push_back(0);

  for (std::size_t i = 0; i < t.elements.size(); ++i) {
    const int d = t.length[i];
    for (int j = 0; j < ngen; ++j) {
      Element y = group.mul(t.elements[i], gens[j]);
      auto it = t.index.find(y);
      std::int32_t idx = -1;
      if (it != t.index.end()) {
        idx = it->second;
      } else if (d < limit) {
        if (t.elements.size() >= vertex_cap) throw Error(ErrorCode::CapExceeded, "BFS exceeded vertex cap");
        idx = static_cast<std::int32_t>(t.elements.size());
        t.index.emplace(y, idx);
        t.elements.push_back(std::move(y));
        t.length.push_back(d + 1);
      }
      t.right.push_back(idx);
    }
  }
  const int max_len = t.length.back();
  t.radius = radius == kWholeGroup ? max_len : radius;
  t.sphere.assign(static_cast<std::size_t>(t.radius) + 1, 0);
  for (int d : t.length) ++t.sphere[d];
  t.complete = group.finite() && t.elements.size() == group.order();
  if (radius == kWholeGroup && !t.complete)
    throw Error(ErrorCode::DegenerateGenerators, "generators do not generate the group");
  return t;
}

std::optional<int> table_distance(const Group& group, const BallTable& table, const Element& x, const Element& y) {
  auto i = table.find(group.mul(group.inv(x), y));
  if (i < 0) return std::nullopt;
  return table.length[i];
}

DiameterReport diameter(const Group& group, const BallTable& full) {
  if (!full.complete) throw Error(ErrorCode::BadParam, "diameter needs a complete ball table");
  DiameterReport r;
  r.spec = group.spec();
  r.diameter = *std::max_element(full.length.begin(), full.length.end());
  if (group.family() == Family::SolFin) {
    int dn = 0;
    for (std::size_t i = 0; i < full.size(); ++i)
      if (std::get<SolFin>(full.elements[i]).t == 0) dn = std::max(dn, full.length[i]);
    r.diam_N = dn;
  }
  return r;
}

DiameterReport diameter(const Group& group) { return diameter(group, bfs_ball(group, kWholeGroup)); }

bool injective_on_ball(const Group& parent, const Group& quotient, const BallTable& parent_ball, int radius) {
  std::unordered_set<Element, ElementHash> seen;
  for (std::size_t i = 0; i < parent_ball.size(); ++i) {
    if (parent_ball.length[i] > radius) break;
    if (!seen.insert(project(parent, quotient, parent_ball.elements[i])).second) return false;
  }
  return true;
}

GirthReport girth(const Group& parent, const Group& quotient, int cap) {
  check_projection(parent, quotient);
  if (cap < 0) throw Error(ErrorCode::BadParam, "negative girth cap");
  GirthReport rep;
  rep.parent = parent.spec();
  rep.quotient = quotient.spec();
  rep.cap = cap;

  // Distances between points of B(1, r) are lengths of elements of B(1, 2r).
  BallTable pb = bfs_ball(parent, 2 * cap);
  BallTable qb = quotient.finite() && quotient.order() <= kDefaultVertexCap ? bfs_ball(quotient, kWholeGroup)
                                                                          : bfs_ball(quotient, 2 * cap);
  if (qb.complete) qb.radius = std::max(qb.radius, 2 * cap);

  std::vector<Element> image(pb.size());
  for (std::size_t i = 0; i < pb.size(); ++i) image[i] = project(parent, quotient, pb.elements[i]);

  for (int r = 1; r <= cap; ++r) {
    if (injective_on_ball(parent, quotient, pb, 2 * r)) {
      rep.g_lower = r;
      continue;
    }
    std::size_t end = 0;
    while (end < pb.size() && pb.length[end] <= r) ++end;
    for (std::size_t i = 0; i < end && !rep.witness; ++i) {
      Element xinv = parent.inv(pb.elements[i]);
      Element qxinv = quotient.inv(image[i]);
      for (std::size_t j = 0; j < end; ++j) {
        if (i == j) continue;
        int dp = pb.length[pb.find(parent.mul(xinv, pb.elements[j]))];
        int dq = qb.length[qb.find(quotient.mul(qxinv, image[j]))];
        if (dp != dq) {
          rep.witness = GirthWitness{pb.elements[i], pb.elements[j], dp, dq, dq == 0};
          break;
        }
      }
    }
    if (rep.witness) break;
    rep.g_lower = r;
  }
  return rep;
}

ExpRadicalReport exp_radical_scan(const Group& sol, int r_max) {
  if (sol.family() != Family::SolInf && sol.family() != Family::SolFin)
    throw Error(ErrorCode::FamilyMismatch, "exp_radical_scan needs a SOL group");
  if (sol.family() == Family::SolInf && r_max > 20)
    throw Error(ErrorCode::CapExceeded, "sol-inf scan limited to r_max <= 20");
  BallTable b = sol.finite() ? bfs_ball(sol, kWholeGroup) : bfs_ball(sol, r_max);
  const std::int64_t n = sol.spec().n;
  auto centered = [n](std::int64_t v) { return v > n / 2 ? v - n : v; };

  ExpRadicalReport rep;
  rep.spec = sol.spec();
  const int top = std::min(r_max, b.radius);
  std::vector<ExpRadicalRow> rows(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const int d = b.length[i];
    if (d > top) break;
    std::int64_t v0, v1, t;
    if (sol.finite()) {
      const auto& e = std::get<SolFin>(b.elements[i]);
      v0 = centered(e.v0), v1 = centered(e.v1), t = e.t;
    } else {
      const auto& e = std::get<SolInf>(b.elements[i]);
      v0 = e.v0, v1 = e.v1, t = e.t;
    }
    if (t != 0 || (v0 == 0 && v1 == 0)) continue;
    double ln = std::log(static_cast<double>(std::max(std::abs(v0), std::abs(v1))));
    auto& row = rows[d];
    if (row.count == 0) {
      row.min_log_norm = row.max_log_norm = ln;
    } else {
      row.min_log_norm = std::min(row.min_log_norm, ln);
      row.max_log_norm = std::max(row.max_log_norm, ln);
    }
    row.r = d;
    ++row.count;
  }
  for (auto& row : rows)
    if (row.count > 0) rep.rows.push_back(row);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : rep.rows) {
    rep.alpha_upper = std::max(rep.alpha_upper, row.max_log_norm / row.r);
    if (row.min_log_norm > 0) rep.alpha_lower = std::max(rep.alpha_lower, row.r / row.min_log_norm);
    sx += row.r;
    sy += row.max_log_norm;
    sxx += double(row.r) * row.r;
    sxy += row.r * row.max_log_norm;
  }
  const double k = static_cast<double>(rep.rows.size());
  if (rep.rows.size() >= 2) rep.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return rep;
}

double sandwich_alpha(const ExpRadicalReport& report, int r_min) {
  double alpha = 1;
  for (const auto& row : report.rows) {
    if (row.r < r_min) continue;
    if (row.max_log_norm <= 0) return std::numeric_limits<double>::infinity();
    alpha = std::max({alpha, row.max_log_norm / row.r, row.r / row.max_log_norm});
  }
  return alpha;
}

std::string sphere_csv(const BallTable& table) {
  std::string out = "r,sphere,cumulative\n";
  std::uint64_t cum = 0;
  for (std::size_t r = 0; r < table.sphere.size(); ++r) {
    cum += table.sphere[r];
    out += std::to_string(r) + "," + std::to_string(table.sphere[r]) + "," + std::to_string(cum) + "\n";
  }
  return out;
}

std::string exp_radical_csv(const ExpRadicalReport& report) {
  std::string out = "r,min_log_norm,max_log_norm\n";
  for (const auto& row : report.rows)
    out += std::to_string(row.r) + "," + format_double(row.min_log_norm) + "," + format_double(row.max_log_norm) + "\n";
  return out;
}

}  // namespace lpdist
