// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lpdist/distortion.hpp"
#include "oracles.hpp"

using namespace lpdist;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "first failure: " << what << "; ";
    ok = ok && cond;
  }
};

Group lamp(int n) { return Group(make_spec(Family::LamplighterFin, {.m = 2, .n = n})); }
Group bs(int n) { return Group(make_spec(Family::BsFin, {.m = 2, .n = n})); }
Group sol(int n) { return Group(make_spec(Family::SolFin, {.n = n})); }
Group parent(Family f) { return Group(make_spec(f, {.m = 2})); }

double band(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Element random_element(const Group& g, std::mt19937_64& rng) {
  if (g.finite()) return g.decode(rng() % g.order());
  return oracle::random_word(g, rng, 1 + static_cast<int>(rng() % 24));
}

// 1: axioms, projection homomorphism, serialization, 1000 cases per family.
void axioms(Outcome& o) {
  std::mt19937_64 rng(1);
  const std::vector<std::pair<Group, Group>> pairs = {
      {parent(Family::LamplighterInf), lamp(7)},
      {parent(Family::BsInf), bs(6)},
      {parent(Family::SolInf), sol(7)},
  };
  std::size_t cases = 0;
  for (const auto& [P, Q] : pairs) {
    for (const Group* g : {&P, &Q}) {
      const std::string name = family_name(g->family());
      for (int i = 0; i < 1000; ++i, ++cases) {
        Element x = random_element(*g, rng), y = random_element(*g, rng), z = random_element(*g, rng);
        o.require(g->mul(g->mul(x, y), z) == g->mul(x, g->mul(y, z)), name + " associativity");
        o.require(g->mul(x, g->identity()) == x && g->mul(g->identity(), x) == x, name + " identity");
        o.require(g->mul(x, g->inv(x)) == g->identity() && g->mul(g->inv(x), x) == g->identity(), name + " inverse");
        o.require(g->parse(g->to_string(x)) == x, name + " round-trip");
        if (g->finite()) o.require(g->decode(g->encode(x)) == x, name + " code round-trip");
      }
    }
    for (int i = 0; i < 1000; ++i, ++cases) {
      Element x = random_element(P, rng), y = random_element(P, rng);
      o.require(project(P, Q, P.mul(x, y)) == Q.mul(project(P, Q, x), project(P, Q, y)),
                std::string(family_name(Q.family())) + " projection homomorphism");
    }
  }
  o.detail << cases << " cases";
}

// 2: diameter bounds and the SOL logarithmic band.
void diameters(Outcome& o) {
  int worst_l = 0, worst_b = 0;
  for (int n = 2; n <= 12; ++n) {
    const int d = diameter(lamp(n)).diameter;
    o.require(d <= 5 * n, "lamplighter n=" + std::to_string(n));
    worst_l = std::max(worst_l, d - 5 * n);
  }
  for (int n = 2; n <= 14; ++n) {
    const int d = diameter(bs(n)).diameter;
    o.require(d <= 3 * n, "bs n=" + std::to_string(n));
    worst_b = std::max(worst_b, d - 3 * n);
  }
  std::vector<double> ratios;
  for (int n : {3, 5, 7, 11, 13}) ratios.push_back(*diameter(sol(n)).diam_N / std::log(double(n)));
  const double b = band(ratios);
  o.require(b <= 3, "sol band " + fmt(b));
  o.detail << "max(diam-5n)=" << worst_l << " max(diam-3n)=" << worst_b << " sol diam_N/ln n band=" << fmt(b);
}

// 3: relative girth lower bounds.
void girths(Outcome& o) {
  for (auto [pf, qf] : {std::pair{Family::LamplighterInf, Family::LamplighterFin}, std::pair{Family::BsInf, Family::BsFin}}) {
    Group P = parent(pf);
    for (int n : {3, 4, 5, 6}) {
      const int g = girth(P, Group(make_spec(qf, {.m = 2, .n = n})), 6).g_lower;
      o.detail << family_name(qf) << " n=" << n << ":" << g << " ";
      o.require(g >= std::min(n, 6), std::string(family_name(qf)) + " n=" + std::to_string(n) + " needs " +
                                         std::to_string(std::min(n, 6)));
    }
  }
  Group P = parent(Family::SolInf);
  for (int n : {5, 7}) {
    const int g = girth(P, sol(n), 3).g_lower;
    o.detail << "sol-fin n=" << n << ":" << g << " ";
    o.require(g >= 2, "sol-fin n=" + std::to_string(n));
  }
}

// 4: certificate re-validation and the flatness of C_hat.
void profiles(Outcome& o) {
  std::vector<double> chats;
  for (int n : {6, 8, 10, 12}) {
    Group g = lamp(n);
    BallTable t = bfs_ball(g, kWholeGroup);
    const int diam = diameter(g, t).diameter;
    std::vector<int> radii;
    for (int r = 2; 2 * r <= diam; r *= 2) radii.push_back(r);
    ProfileCurve c = profile_curve(g, 2, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const TestVector& tv = c.vectors[i];
      const std::string at = "n=" + std::to_string(n) + " r=" + std::to_string(radii[i]);
      SparseFunction f = tv.as_function();
      for (const auto& [x, v] : f) o.require(t.length[t.find(x)] < radii[i], at + " support");
      o.require(std::abs(tv.gradient_max - 1) <= 1e-9, at + " gradient_max");
      RayleighForms rf = rayleigh(g, f, 2);
      o.require(std::abs(rf.max_form - tv.certified_J) <= 1e-9 * tv.certified_J, at + " certified_J");
      if (i > 0) o.require(tv.certified_J >= c.certified_J(i - 1), at + " monotone");
    }
    chats.push_back(c.C_hat);
    o.detail << "n=" << n << " C_hat=" << fmt(c.C_hat) << " ";
  }
  const double b = band(chats);
  o.require(b <= 2, "C_hat band " + fmt(b));
  o.detail << "band=" << fmt(b);
}

// 5: invariants of the block construction.
void construction(Outcome& o) {
  {
    Group g = lamp(6);
    EmbeddingBundle b = build_bundle(g, 2);
    AprioriBound a = apriori_bound(b);
    BallTable t = bfs_ball(g, kWholeGroup);
    std::vector<double> norms = embed_norms(b);
    o.require(embed_norm(b, g.identity()) == 0, "F(e) = 0");
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      Element x = g.decode(rng() % g.order()), y = g.decode(rng() % g.order());
      Eigen::VectorXd lhs = embed_point(b, g.mul(x, y));
      Eigen::VectorXd rhs = act_linear(b, x, embed_point(b, y)) + embed_point(b, x);
      o.require((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, lhs.cwiseAbs().maxCoeff()), "cocycle");
    }
    const double colip = std::pow(2.0, 0.5);
    for (std::size_t i = 1; i < t.size(); ++i) {
      const double nrm = norms[g.encode(t.elements[i])];
      const int len = t.length[i];
      o.require(nrm > 0, "injectivity");
      o.require(nrm <= len * a.lip_bound * (1 + 1e-12), "Lipschitz");
      o.require(nrm >= colip * std::max(1.0, len / 8.0) * (1 - 1e-12), "co-Lipschitz");
    }
    o.detail << "L_{2,6} order=" << g.order() << " K=" << b.K << " lip_bound=" << fmt(a.lip_bound) << "; ";
  }
  Group g = lamp(4);
  EmbeddingBundle b = build_bundle(g, 2);
  std::vector<Eigen::VectorXd> pts;
  for (std::uint64_t c = 0; c < g.order(); ++c) pts.push_back(embed_point(b, g.decode(c)));
  std::vector<double> norms = embed_norms(b);
  double worst = 0;
  for (std::uint64_t x = 0; x < g.order(); ++x)
    for (std::uint64_t y = 0; y < g.order(); ++y) {
      const double pair = (pts[x] - pts[y]).norm();
      const double eq = norms[g.mul_code(g.inv_code(x), y)];
      worst = std::max(worst, std::abs(pair - eq) / std::max(eq, 1e-300));
      if (x != y) o.require(eq > 0, "injectivity L_{2,4}");
    }
  o.require(worst <= 1e-9, "equivariance " + fmt(worst));
  o.detail << "L_{2,4} equivariance max rel err=" << fmt(worst);
}

// 6: measured distortion never exceeds the a priori bound.
void bound_consistency(Outcome& o) {
  std::vector<Group> groups;
  for (int n = 2; n <= 12; ++n) groups.push_back(lamp(n));
  for (int n = 2; n <= 12; ++n) groups.push_back(bs(n));
  for (int n : {5, 7, 11}) groups.push_back(sol(n));
  double tightest = 0;
  for (const Group& g : groups) {
    EmbeddingBundle b = build_bundle(g, 2);
    const double d = distortion_equivariant(b, bfs_ball(g, kWholeGroup)).dist;
    const double bound = apriori_bound(b).dist_bound;
    o.require(d <= bound + 1e-9, std::string(family_name(g.family())) + " n=" + std::to_string(g.spec().n));
    tightest = std::max(tightest, d / bound);
  }
  o.detail << groups.size() << " bundles, max dist/dist_bound=" << fmt(tightest);
}

// 7: logarithmic scaling band on the lamplighters.
void scaling(Outcome& o) {
  for (double p : {2.0, 3.0}) {
    std::vector<double> ratios;
    for (int n : {4, 6, 8, 10, 12}) {
      Group g = lamp(n);
      BallTable t = bfs_ball(g, kWholeGroup);
      const int diam = diameter(g, t).diameter;
      EmbeddingBundle b = build_bundle(g, p);
      const double d = distortion_equivariant(b, t).dist;
      const double closed = apriori_bound(b).closed_form;
      o.require(d <= closed, "p=" + fmt(p) + " n=" + std::to_string(n) + " closed form " + fmt(d) + " > " + fmt(closed));
      ratios.push_back(d / std::pow(std::log(double(diam)), 1 / p));
    }
    const double bw = band(ratios);
    o.require(bw <= 3, "p=" + fmt(p) + " band " + fmt(bw));
    o.detail << "p=" << p << " band=" << fmt(bw) << " ";
  }
}

// 8: SOL with the circle summand.
void sol_composite(Outcome& o) {
  std::vector<double> ratios;
  for (int n : {5, 7, 11, 13}) {
    Group g = sol(n);
    EmbeddingBundle b = build_bundle(g, 2);
    o.require(b.circle.has_value(), "circle present");
    std::vector<double> norms = embed_norms(b);
    for (std::uint64_t c = 0; c < g.order(); ++c)
      if (c != g.identity_code()) o.require(norms[c] > 0, "injectivity n=" + std::to_string(n));
    const double d = distortion_equivariant(b, bfs_ball(g, kWholeGroup)).dist;
    o.require(d <= apriori_bound(b).dist_bound + 1e-9, "bound n=" + std::to_string(n));
    ratios.push_back(d / std::sqrt(std::log(std::log(double(g.order()))) + 1));
  }
  const double bw = band(ratios);
  o.require(bw <= 4, "band " + fmt(bw));
  o.detail << "band=" << fmt(bw) << " (four sizes only)";
}

// 9: Euclidean distortion solver on small metrics.
void c2_oracle(Outcome& o) {
  struct Case {
    const char* metric;
    double expected, tol;
  };
  for (const Case& c : {Case{"path:5", 1.0, 1e-6}, Case{"cycle:4", 1.41421, 1e-4}, Case{"star:3", 1.1547, 1e-3}}) {
    MetricTable m = parse_metric(c.metric);
    const auto start = std::chrono::steady_clock::now();
    const double solver_tol = 1e-6;
    const double v = exact_c2(m, solver_tol).value;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double opt = optimize_embedding(m, 2, static_cast<int>(m.size()) - 1).report.dist;
    o.require(std::abs(v - c.expected) <= c.tol, std::string(c.metric) + " value " + fmt(v));
    o.require(secs < 10, std::string(c.metric) + " time");
    o.require(v <= opt + solver_tol, std::string(c.metric) + " above optimizer");
    o.detail << c.metric << "=" << fmt(v) << " (" << fmt(secs) << "s, opt " << fmt(opt) << ") ";
  }
}

// 10: logarithmic sandwich on the exponential radical.
void exp_radical(Outcome& o) {
  ExpRadicalReport rep = exp_radical_scan(parent(Family::SolInf), 12);
  const double alpha = sandwich_alpha(rep, 3);
  for (const auto& row : rep.rows) {
    if (row.r < 3) continue;
    o.require(row.max_log_norm >= row.r / alpha && row.max_log_norm <= alpha * row.r, "r=" + std::to_string(row.r));
  }
  o.require(alpha <= 3, "alpha " + fmt(alpha));
  o.detail << "alpha=" << fmt(alpha);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "group axioms and projections", 5, axioms},
      {2, "diameter bounds", 120, diameters},
      {3, "relative girth", 120, girths},
      {4, "profile certificates", 180, profiles},
      {5, "embedding invariants", 120, construction},
      {6, "bound consistency", 300, bound_consistency},
      {7, "lamplighter scaling band", 600, scaling},
      {8, "sol composite embedding", 600, sol_composite},
      {9, "euclidean distortion oracle", 30, c2_oracle},
      {10, "exponential radical sandwich", 120, exp_radical},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < c.limit_s, "time limit " + fmt(c.limit_s) + "s");
    failures += !o.ok;
    std::printf("%s %2d %s [%.2fs] %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
