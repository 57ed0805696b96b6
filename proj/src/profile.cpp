#include "lpdist/profile.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "lpdist/format.hpp"

namespace lpdist {

namespace {

// Running sum of |x_i|^p kept as scale^p * sum, so that no term overflows.
class LpAccumulator {
 public:
  explicit LpAccumulator(double p) : p_(p) {}

  void add(double v) {
    v = std::abs(v);
    if (v == 0) return;
    if (v > scale_) {
      sum_ = sum_ * std::pow(scale_ / v, p_) + 1.0;
      scale_ = v;
    } else {
      sum_ += std::pow(v / scale_, p_);
    }
  }

  double norm() const { return scale_ == 0 ? 0.0 : scale_ * std::pow(sum_, 1.0 / p_); }

 private:
  double p_;
  double scale_ = 0;
  double sum_ = 0;
};

double combine_norms(std::span<const double> norms, double p) { return lp_norm(norms, p); }

void check_exponent(double p) {
  if (!(p >= 1) || !std::isfinite(p)) throw Error(ErrorCode::BadParam, "exponent p must lie in [1, inf)");
}

struct DirichletResult {
  Eigen::VectorXd v;
  bool converged = false;
};

DirichletResult dirichlet_iterate(const BallDomain& domain, double tol, int max_iter) {
  const int n = static_cast<int>(domain.size());
  DirichletResult res;
  if (n == 1) {
    res.v = Eigen::VectorXd::Ones(1);
    res.converged = true;
    return res;
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& edges : domain.edges) {
    for (auto [a, b] : edges) {
      if (a >= 0) trips.emplace_back(a, a, 1.0);
      if (b >= 0) trips.emplace_back(b, b, 1.0);
      if (a >= 0 && b >= 0) {
        trips.emplace_back(a, b, -1.0);
        trips.emplace_back(b, a, -1.0);
      }
    }
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "Dirichlet form not positive definite");

  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = solver.solve(v);
    v = w / w.norm();
    Eigen::VectorXd lv = L * v;
    double lambda = v.dot(lv);
    if ((lv - lambda * v).norm() <= tol) {
      res.converged = true;
      break;
    }
  }
  res.v = v.cwiseAbs();
  return res;
}

}  // namespace

double lp_norm(std::span<const double> x, double p) {
  LpAccumulator acc(p);
  for (double v : x) acc.add(v);
  return acc.norm();
}

double lp_norm(const SparseFunction& f, double p) {
  LpAccumulator acc(p);
  for (const auto& [x, v] : f) acc.add(v);
  return acc.norm();
}

SparseFunction translate(const Group& group, const Element& s, const SparseFunction& f) {
  SparseFunction out;
  for (const auto& [x, v] : f) out.emplace(group.mul(s, x), v);
  return out;
}

RayleighForms rayleigh(const Group& group, const SparseFunction& f, double p) {
  check_exponent(p);
  RayleighForms r;
  r.norm = lp_norm(f, p);
  if (r.norm == 0) throw Error(ErrorCode::BadParam, "rayleigh needs f != 0");
  std::vector<double> grads;
  for (const auto& s : group.generators()) {
    SparseFunction diff = translate(group, s, f);
    for (const auto& [x, v] : f) diff[x] -= v;
    grads.push_back(lp_norm(diff, p));
  }
  r.gradient_max = *std::max_element(grads.begin(), grads.end());
  if (r.gradient_max == 0) throw Error(ErrorCode::ZeroGradient, "f is invariant under every generator");
  r.max_form = r.norm / r.gradient_max;
  r.sum_form = r.norm / combine_norms(grads, p);
  return r;
}

BallDomain make_domain(const Group& group, const BallTable& table, int radius) {
  if (radius < 1) throw Error(ErrorCode::BadParam, "profile radius must be >= 1");
  if (!table.complete && table.radius < radius - 1)
    throw Error(ErrorCode::BadParam, "ball table too small for the requested radius");
  BallDomain d;
  d.spec = group.spec();
  d.radius = radius;
  std::size_t count = 0;
  while (count < table.size() && table.length[count] < radius) ++count;
  d.points.assign(table.elements.begin(), table.elements.begin() + static_cast<std::ptrdiff_t>(count));
  if (table.complete && count == table.size())
    throw Error(ErrorCode::BadScale, "open ball covers the whole group");

  auto lookup = [&](const Element& x) -> int {
    auto i = table.find(x);
    return (i >= 0 && static_cast<std::size_t>(i) < count) ? i : -1;
  };
  for (const auto& s : group.generators()) {
    Element sinv = group.inv(s);
    std::vector<std::pair<int, int>> edges;
    for (std::size_t x = 0; x < count; ++x)
      edges.emplace_back(lookup(group.mul(sinv, d.points[x])), static_cast<int>(x));
    for (std::size_t y = 0; y < count; ++y)
      if (lookup(group.mul(s, d.points[y])) < 0) edges.emplace_back(static_cast<int>(y), -1);
    d.edges.push_back(std::move(edges));
  }
  return d;
}

DomainForms evaluate(const BallDomain& domain, const Eigen::VectorXd& f, double p) {
  check_exponent(p);
  DomainForms out;
  out.norm = lp_norm(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())), p);
  std::vector<double> grads;
  grads.reserve(domain.edges.size());
  for (const auto& edges : domain.edges) {
    LpAccumulator acc(p);
    for (auto [a, b] : edges) acc.add((a >= 0 ? f[a] : 0.0) - (b >= 0 ? f[b] : 0.0));
    grads.push_back(acc.norm());
  }
  out.gradient_max = *std::max_element(grads.begin(), grads.end());
  out.gradient_sum = combine_norms(grads, p);
  return out;
}

SparseFunction TestVector::as_function() const {
  SparseFunction f;
  for (std::size_t i = 0; i < support.size(); ++i)
    if (values[static_cast<Eigen::Index>(i)] != 0) f.emplace(support[i], values[static_cast<Eigen::Index>(i)]);
  return f;
}

TestVector make_test_vector(const BallDomain& domain, const Eigen::VectorXd& f, double p) {
  DomainForms forms = evaluate(domain, f, p);
  if (forms.gradient_max == 0) throw Error(ErrorCode::ZeroGradient, "test vector has zero gradient");
  TestVector tv;
  tv.spec = domain.spec;
  tv.radius = domain.radius;
  tv.p = p;
  tv.support = domain.points;
  tv.values = f / forms.gradient_max;
  forms = evaluate(domain, tv.values, p);
  tv.certified_J = forms.norm;
  tv.gradient_max = forms.gradient_max;
  return tv;
}

Eigen::VectorXd dirichlet_pc(const BallDomain& domain, double tol, int max_iter) {
  DirichletResult r = dirichlet_iterate(domain, tol, max_iter);
  if (!r.converged)
    throw Error(ErrorCode::NoConvergence, "Dirichlet iteration did not reach tolerance " + format_double(tol));
  return r.v;
}

namespace {

class Ascent {
 public:
  Ascent(const BallDomain& domain, double p) : d_(domain), p_(p), grads_(domain.edges.size()) {}

  // Smoothed objective (1/p) log ||f||^p - softmax_beta_s (1/p) log ||D_s f||^p.
  double objective(const Eigen::VectorXd& f, double beta) {
    double nrm = f.array().abs().pow(p_).sum();
    for (std::size_t s = 0; s < d_.edges.size(); ++s) {
      double g = 0;
      for (auto [a, b] : d_.edges[s]) g += std::pow(std::abs(val(f, a) - val(f, b)), p_);
      grads_[s] = std::log(g) / p_;
    }
    return std::log(nrm) / p_ - softmax(beta);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& f, double beta) {
    const Eigen::Index n = f.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    double nrm = f.array().abs().pow(p_).sum();
    for (Eigen::Index i = 0; i < n; ++i) out[i] = dpow(f[i]) / (p_ * nrm);
    objective(f, beta);
    double sm = softmax(beta);
    for (std::size_t s = 0; s < d_.edges.size(); ++s) {
      double w = std::exp(beta * (grads_[s] - sm));
      double g = std::exp(p_ * grads_[s]);
      double k = w / (p_ * g);
      for (auto [a, b] : d_.edges[s]) {
        double dd = dpow(val(f, a) - val(f, b)) * k;
        if (a >= 0) out[a] -= dd;
        if (b >= 0) out[b] += dd;
      }
    }
    return out;
  }

 private:
  static double val(const Eigen::VectorXd& f, int i) { return i >= 0 ? f[i] : 0.0; }
  double dpow(double x) const {
    if (x == 0) return 0;
    return p_ * std::pow(std::abs(x), p_ - 1) * (x > 0 ? 1.0 : -1.0);
  }
  double softmax(double beta) const {
    double mx = *std::max_element(grads_.begin(), grads_.end());
    double acc = 0;
    for (double g : grads_) acc += std::exp(beta * (g - mx));
    return mx + std::log(acc) / beta;
  }

  const BallDomain& d_;
  double p_;
  std::vector<double> grads_;
};

Eigen::VectorXd normalized(const Eigen::VectorXd& f, double p) {
  return f / lp_norm(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())), p);
}

}  // namespace

TestVector optimize_profile_from(const BallDomain& domain, const Eigen::VectorXd& start, double p,
                                 const ProfileOptions& opts) {
  check_exponent(p);
  if (static_cast<std::size_t>(start.size()) != domain.size())
    throw Error(ErrorCode::BadParam, "start vector does not match the domain");
  Eigen::VectorXd dirac = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain.size()));
  dirac[0] = 1;
  TestVector best = make_test_vector(domain, dirac, p);
  if (domain.size() == 1) return best;

  Eigen::VectorXd x = normalized(start, p);
  {
    TestVector tv = make_test_vector(domain, x, p);
    if (tv.certified_J > best.certified_J) best = std::move(tv);
  }

  Ascent ascent(domain, p);
  double step = 0.25;
  std::vector<double> history;
  bool stalled = false;
  for (int it = 0; it < opts.max_outer; ++it) {
    double frac = opts.max_outer > 1 ? double(it) / (opts.max_outer - 1) : 1.0;
    double beta = opts.beta_start * std::pow(opts.beta_end / opts.beta_start, frac);
    double current = ascent.objective(x, beta);
    Eigen::VectorXd g = ascent.gradient(x, beta);
    double gmax = g.cwiseAbs().maxCoeff();
    if (gmax == 0) {
      stalled = true;
      break;
    }
    Eigen::VectorXd dir = g / gmax * x.cwiseAbs().maxCoeff();
    bool accepted = false;
    while (step > 1e-12) {
      Eigen::VectorXd y = normalized(x + step * dir, p);
      if (ascent.objective(y, beta) > current) {
        x = std::move(y);
        accepted = true;
        step = std::min(step * 1.5, 1.0);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (frac >= 1.0) {
        stalled = true;
        break;
      }
      step = 1e-3;
      continue;
    }
    TestVector tv = make_test_vector(domain, x, p);
    if (tv.certified_J > best.certified_J) best = std::move(tv);
    history.push_back(best.certified_J);
  }
  // Converged if the last tenth of the run no longer moved the certificate.
  std::size_t window = std::max<std::size_t>(history.size() / 10, 1);
  if (!stalled && history.size() > window) {
    double old = history[history.size() - 1 - window];
    best.converged = (history.back() - old) <= opts.rel_tol * history.back();
  }
  return best;
}

TestVector optimize_profile(const BallDomain& domain, double p, const ProfileOptions& opts) {
  DirichletResult start = dirichlet_iterate(domain, 1e-10, 10000);
  TestVector tv = optimize_profile_from(domain, start.v, p, opts);
  tv.converged = tv.converged && start.converged;
  return tv;
}

ProfileCurve profile_curve(const Group& group, double p, const std::vector<int>& radii, const ProfileOptions& opts) {
  check_exponent(p);
  if (radii.empty()) throw Error(ErrorCode::BadParam, "no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 1) throw Error(ErrorCode::BadParam, "radii must be >= 1");
    if (i > 0 && radii[i] <= radii[i - 1]) throw Error(ErrorCode::BadParam, "radii must be increasing");
  }
  BallTable table;
  if (group.finite()) {
    table = bfs_ball(group, kWholeGroup);
    int diam = *std::max_element(table.length.begin(), table.length.end());
    if (2 * radii.back() > diam)
      throw Error(ErrorCode::BadScale, "radius " + std::to_string(radii.back()) + " exceeds diameter/2 = " +
                                           format_double(diam / 2.0));
  } else {
    table = bfs_ball(group, radii.back());
  }

  ProfileCurve curve;
  curve.spec = group.spec();
  curve.p = p;
  curve.radii = radii;
  for (int r : radii) {
    BallDomain dom = make_domain(group, table, r);
    TestVector tv = optimize_profile(dom, p, opts);
    if (!curve.vectors.empty()) {
      const TestVector& prev = curve.vectors.back();
      if (prev.certified_J > tv.certified_J) {
        Eigen::VectorXd carried = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dom.size()));
        carried.head(prev.values.size()) = prev.values;
        TestVector reused = make_test_vector(dom, carried, p);
        reused.converged = tv.converged;
        tv = std::move(reused);
      }
    }
    if (r >= 2) curve.C_hat = std::max(curve.C_hat, r / tv.certified_J);
    curve.vectors.push_back(std::move(tv));
  }
  return curve;
}

std::string profile_csv(const ProfileCurve& curve) {
  std::string out = "r,certified_J,ratio_r_over_J\n";
  for (std::size_t i = 0; i < curve.radii.size(); ++i) {
    double j = curve.certified_J(i);
    out += std::to_string(curve.radii[i]) + "," + format_double(j) + "," + format_double(curve.radii[i] / j) + "\n";
  }
  return out;
}

std::string test_vector_json(const Group& group, const TestVector& tv) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < tv.support.size(); ++i) {
    double v = tv.values[static_cast<Eigen::Index>(i)];
    if (v != 0) j[group.to_string(tv.support[i])] = v;
  }
  return j.dump(2);
}

}  // namespace lpdist
