#include "lpdist/distortion.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

namespace lpdist {

namespace {

// Running sup of one ratio; ties keep the first candidate offered.
struct Sup {
  double value = -1;
  double source = 0, image = 0;
  std::array<std::string, 2> pair;

  bool offer(double ratio, double src, double img) {
    if (ratio <= value) return false;
    value = ratio, source = src, image = img;
    return true;
  }
};

DistortionReport finish(double R, const Sup& ex, const Sup& co) {
  if (ex.value < 0) throw Error(ErrorCode::BadScale, "no pairs at distance <= R");
  DistortionReport r;
  r.R = R;
  r.expansion = ex.value;
  r.contraction = co.value;
  r.dist = ex.value * co.value;
  r.witness_expand = ex.pair;
  r.witness_contract = co.pair;
  r.expand_source = ex.source, r.expand_image = ex.image;
  r.contract_source = co.source, r.contract_image = co.image;
  return r;
}

std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

double lp_distance(const Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j, double p) {
  Eigen::VectorXd diff = (x.row(i) - x.row(j)).transpose();
  return lp_norm(std::span<const double>(diff.data(), static_cast<std::size_t>(diff.size())), p);
}

}  // namespace

void validate(const MetricTable& m) {
  const Eigen::Index n = m.d.rows();
  if (m.d.cols() != n) throw Error(ErrorCode::DegenerateInput, "distance matrix is not square");
  if (!m.labels.empty() && m.labels.size() != static_cast<std::size_t>(n))
    throw Error(ErrorCode::DegenerateInput, "label count does not match the matrix");
  const double scale = n > 0 ? m.d.cwiseAbs().maxCoeff() : 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m.d(i, i) != 0) throw Error(ErrorCode::DegenerateInput, "nonzero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(m.d(i, j))) throw Error(ErrorCode::DegenerateInput, "non-finite distance");
      if (m.d(i, j) != m.d(j, i)) throw Error(ErrorCode::DegenerateInput, "asymmetric distances");
      if (i != j && m.d(i, j) <= 0) throw Error(ErrorCode::DegenerateInput, "coincident points");
      for (Eigen::Index k = 0; k < n; ++k)
        if (m.d(i, k) > m.d(i, j) + m.d(j, k) + 1e-12 * scale)
          throw Error(ErrorCode::DegenerateInput, "triangle inequality fails");
    }
  }
}

MetricTable metric_from_matrix(Eigen::MatrixXd d) {
  MetricTable m{std::move(d), {}};
  m.labels = index_labels(m.size());
  validate(m);
  return m;
}

MetricTable path_metric(int n) {
  if (n < 1) throw Error(ErrorCode::BadParam, "path needs at least one point");
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = std::abs(i - j);
  return metric_from_matrix(std::move(d));
}

MetricTable cycle_metric(int n) {
  if (n < 3) throw Error(ErrorCode::BadParam, "cycle needs at least three points");
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = std::min(std::abs(i - j), n - std::abs(i - j));
  return metric_from_matrix(std::move(d));
}

MetricTable star_metric(int leaves) {
  if (leaves < 1) throw Error(ErrorCode::BadParam, "star needs a leaf");
  const int n = leaves + 1;
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, 2.0);
  d.row(0).setOnes();
  d.col(0).setOnes();
  d.diagonal().setZero();
  return metric_from_matrix(std::move(d));
}

MetricTable complete_metric(int n) {
  if (n < 1) throw Error(ErrorCode::BadParam, "complete metric needs a point");
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(n, n);
  d.diagonal().setZero();
  return metric_from_matrix(std::move(d));
}

MetricTable parse_metric(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "expected kind:size, got '" + text + "'");
  std::string kind = text.substr(0, colon);
  int size = 0;
  try {
    std::size_t used = 0;
    size = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "bad size in '" + text + "'");
  }
  if (kind == "path") return path_metric(size);
  if (kind == "cycle") return cycle_metric(size);
  if (kind == "star") return star_metric(size);
  if (kind == "complete") return complete_metric(size);
  throw Error(ErrorCode::ParseError, "unknown metric kind '" + kind + "'");
}

MetricTable metric_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object() || !j.contains("distances") || !j["distances"].is_array())
    throw Error(ErrorCode::ParseError, "metric JSON needs a \"distances\" array");
  for (const auto& [key, _] : j.items())
    if (key != "distances" && key != "labels") throw Error(ErrorCode::ParseError, "unknown key '" + key + "'");
  const auto& rows = j["distances"];
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorCode::ParseError, "distance matrix must be square");
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) throw Error(ErrorCode::ParseError, "non-numeric distance");
      d(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  MetricTable m{std::move(d), {}};
  if (j.contains("labels")) {
    try {
      m.labels = j["labels"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  } else {
    m.labels = index_labels(m.size());
  }
  validate(m);
  return m;
}

MetricTable group_metric(const Group& group, const BallTable& table, std::size_t count) {
  if (count == 0) count = table.size();
  if (count > table.size()) throw Error(ErrorCode::BadParam, "more points than the table holds");
  const auto n = static_cast<Eigen::Index>(count);
  MetricTable m{Eigen::MatrixXd::Zero(n, n), {}};
  for (std::size_t i = 0; i < count; ++i) {
    m.labels.push_back(group.to_string(table.elements[i]));
    Element xinv = group.inv(table.elements[i]);
    for (std::size_t j = 0; j < count; ++j) {
      auto k = table.find(group.mul(xinv, table.elements[j]));
      if (k < 0) throw Error(ErrorCode::BadParam, "ball table too small for the requested points");
      m.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.length[k];
    }
  }
  return m;
}

DistortionReport distortion_equivariant(const EmbeddingBundle& bundle, const BallTable& table, double R) {
  const Group& G = bundle.group;
  if (!table.complete || !(table.spec == G.spec()))
    throw Error(ErrorCode::BadParam, "distortion_equivariant needs the complete ball table of the group");
  const int diam = *std::max_element(table.length.begin(), table.length.end());
  if (std::isinf(R)) R = diam;
  if (R > diam) throw Error(ErrorCode::BadScale, "scale exceeds the diameter");

  const std::vector<double> norms = embed_norms(bundle);
  Sup ex, co;
  std::int32_t ex_at = -1, co_at = -1;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const int len = table.length[i];
    if (len > R) break;
    const double nrm = norms[G.encode(table.elements[i])];
    if (!(nrm > 0))
      throw Error(ErrorCode::ZeroNorm, "embedding vanishes at " + G.to_string(table.elements[i]));
    const double e = nrm / len, c = len / nrm;
    // Ties go to the lexicographically smaller element.
    if (e > ex.value || (e == ex.value && table.elements[i] < table.elements[ex_at])) {
      ex.value = e, ex.source = len, ex.image = nrm;
      ex_at = static_cast<std::int32_t>(i);
    }
    if (c > co.value || (c == co.value && table.elements[i] < table.elements[co_at])) {
      co.value = c, co.source = len, co.image = nrm;
      co_at = static_cast<std::int32_t>(i);
    }
  }
  const std::string e0 = G.to_string(G.identity());
  if (ex_at >= 0) ex.pair = {e0, G.to_string(table.elements[ex_at])};
  if (co_at >= 0) co.pair = {e0, G.to_string(table.elements[co_at])};
  return finish(R, ex, co);
}

DistortionReport distortion_from_norms(std::span<const int> lengths, std::span<const double> norms,
                                       std::span<const std::string> labels, double R) {
  if (lengths.size() != norms.size() || labels.size() != norms.size())
    throw Error(ErrorCode::BadParam, "lengths, norms and labels differ in size");
  if (lengths.empty() || lengths[0] != 0) throw Error(ErrorCode::BadParam, "index 0 must be the identity");
  Sup ex, co;
  for (std::size_t i = 1; i < lengths.size(); ++i) {
    const int len = lengths[i];
    if (len <= 0) throw Error(ErrorCode::DegenerateInput, "repeated identity");
    if (len > R) continue;
    if (!(norms[i] > 0)) throw Error(ErrorCode::ZeroNorm, "embedding vanishes at " + labels[i]);
    if (ex.offer(norms[i] / len, len, norms[i])) ex.pair = {labels[0], labels[i]};
    if (co.offer(len / norms[i], len, norms[i])) co.pair = {labels[0], labels[i]};
  }
  return finish(R, ex, co);
}

DistortionReport distortion_pairwise(const Eigen::MatrixXd& points, const MetricTable& metric, double p, double R) {
  const Eigen::Index n = points.rows();
  if (static_cast<std::size_t>(n) != metric.size()) throw Error(ErrorCode::BadParam, "point and metric sizes differ");
  if (!(p >= 1)) throw Error(ErrorCode::BadParam, "p must be at least 1");
  const auto labels = metric.labels.empty() ? index_labels(metric.size()) : metric.labels;
  Sup ex, co;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = metric.d(i, j);
      if (d > R) continue;
      const double e = lp_distance(points, i, j, p);
      if (!(e > 0))
        throw Error(ErrorCode::DegenerateInput, "points " + labels[i] + " and " + labels[j] + " coincide");
      if (ex.offer(e / d, d, e)) ex.pair = {labels[i], labels[j]};
      if (co.offer(d / e, d, e)) co.pair = {labels[i], labels[j]};
    }
  return finish(R, ex, co);
}

namespace {

// Soft-max surrogate of log(expansion) + log(contraction) and its gradient.
struct Surrogate {
  const MetricTable& metric;
  double p;
  double beta;

  double operator()(const Eigen::MatrixXd& x, Eigen::MatrixXd* grad) const {
    const Eigen::Index n = x.rows();
    const std::size_t pairs = static_cast<std::size_t>(n * (n - 1) / 2);
    std::vector<double> logr;
    logr.reserve(pairs);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double e = lp_distance(x, i, j, p);
        logr.push_back(e > 0 ? std::log(e / metric.d(i, j)) : -1e3);
      }
    const double hi = *std::max_element(logr.begin(), logr.end());
    const double lo = *std::min_element(logr.begin(), logr.end());
    double sp = 0, sm = 0;
    for (double l : logr) {
      sp += std::exp(beta * (l - hi));
      sm += std::exp(-beta * (l - lo));
    }
    const double value = hi + std::log(sp) / beta - lo + std::log(sm) / beta;
    if (grad) {
      grad->setZero(x.rows(), x.cols());
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
          const double w = std::exp(beta * (logr[k] - hi)) / sp - std::exp(-beta * (logr[k] - lo)) / sm;
          Eigen::RowVectorXd u = x.row(i) - x.row(j);
          const double e = lp_distance(x, i, j, p);
          if (!(e > 0)) continue;
          Eigen::RowVectorXd g =
              u.unaryExpr([this](double v) { return std::copysign(std::pow(std::abs(v), p - 1), v); }) /
              std::pow(e, p);
          grad->row(i) += w * g;
          grad->row(j) -= w * g;
        }
    }
    return value;
  }
};

Eigen::MatrixXd classical_scaling(const MetricTable& metric, int dim) {
  const Eigen::Index n = metric.d.rows();
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd B = -0.5 * J * metric.d.cwiseProduct(metric.d) * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, dim);
  for (int c = 0; c < dim && c < n; ++c) {
    const Eigen::Index k = n - 1 - c;  // eigenvalues ascend
    x.col(c) = es.eigenvectors().col(k) * std::sqrt(std::max(es.eigenvalues()[k], 0.0));
  }
  return x;
}

double safe_distortion(const Eigen::MatrixXd& x, const MetricTable& metric, double p) {
  try {
    return distortion_pairwise(x, metric, p).dist;
  } catch (const Error&) {
    return kUnbounded;
  }
}

}  // namespace

OptimizedEmbedding optimize_embedding(const MetricTable& metric, double p, int dim, const OptimizeOptions& opts) {
  const Eigen::Index n = static_cast<Eigen::Index>(metric.size());
  if (n < 2) throw Error(ErrorCode::BadParam, "need at least two points");
  if (n > 512) throw Error(ErrorCode::CapExceeded, "optimize_embedding is limited to 512 points");
  if (dim < 1) throw Error(ErrorCode::BadParam, "dim must be positive");
  if (!(p >= 1) || !std::isfinite(p)) throw Error(ErrorCode::BadParam, "p must be in [1, inf)");

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  const double spread = metric.d.sum() / static_cast<double>(n * n);

  Eigen::MatrixXd best = classical_scaling(metric, dim);
  double best_dist = safe_distortion(best, metric, p);
  if (!std::isfinite(best_dist)) {
    // Degenerate scaling (e.g. dim too small): perturb so points separate.
    for (Eigen::Index i = 0; i < best.size(); ++i) best(i) += 1e-3 * spread * normal(rng);
    best_dist = safe_distortion(best, metric, p);
  }

  for (int r = 0; r < std::max(opts.restarts, 1); ++r) {
    Eigen::MatrixXd x;
    if (r == 0) {
      x = best;
    } else {
      x.resize(n, dim);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = spread * normal(rng);
    }
    for (double beta : opts.betas) {
      Surrogate f{metric, p, beta};
      Eigen::MatrixXd grad;
      double value = f(x, &grad);
      double step = spread;
      for (int it = 0; it < opts.iterations; ++it) {
        const double g2 = grad.squaredNorm();
        if (!(g2 > 1e-24)) break;
        bool moved = false;
        for (int tries = 0; tries < 40; ++tries) {
          Eigen::MatrixXd trial = x - step / std::sqrt(g2) * grad;
          const double v = f(trial, nullptr);
          if (v < value - 1e-4 * step * std::sqrt(g2) / spread) {
            x = std::move(trial);
            value = v;
            moved = true;
            step *= 1.5;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
        f(x, &grad);
      }
      const double d = safe_distortion(x, metric, p);
      if (d < best_dist) best_dist = d, best = x;
    }
  }
  if (!std::isfinite(best_dist)) throw Error(ErrorCode::NoConvergence, "no injective embedding found");
  return {best, distortion_pairwise(best, metric, p)};
}

double gram_distortion(const Eigen::MatrixXd& g, const MetricTable& metric) {
  const Eigen::Index n = g.rows();
  double hi = 0, lo = kUnbounded;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double sq = g(i, i) + g(j, j) - 2 * g(i, j);
      const double ratio = sq / (metric.d(i, j) * metric.d(i, j));
      hi = std::max(hi, ratio);
      lo = std::min(lo, ratio);
    }
  if (!(lo > 0)) return kUnbounded;
  return std::sqrt(hi / lo);
}

namespace {

class C2Feasibility {
 public:
  C2Feasibility(const MetricTable& metric, double tol)
      : n_(static_cast<Eigen::Index>(metric.size())), metric_(metric), tol_(tol) {
    d2_ = metric.d.cwiseProduct(metric.d);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n_, 1.0 / std::sqrt(double(n_)));
    w[n_ - 1] -= 1.0;
    householder_ = Eigen::MatrixXd::Identity(n_, n_) - 2.0 * w * w.transpose() / w.squaredNorm();
    centering_ = Eigen::MatrixXd::Identity(n_, n_) - Eigen::MatrixXd::Constant(n_, n_, 1.0 / n_);
  }

  struct Outcome {
    bool feasible = false;
    double dist = kUnbounded;
    Eigen::MatrixXd gram;
  };

  // Dykstra iterations; feasible once an embedding read off a cone iterate
  // has distortion at most sqrt(T) + tol / 2.
  Outcome test(double T) const {
    const double target = std::sqrt(T) + tol_ / 2;
    const double scale = d2_.norm();
    Eigen::MatrixXd x = d2_, pb = Eigen::MatrixXd::Zero(n_, n_), pk = pb;
    Outcome best;
    double window_gap = kUnbounded;
    for (int it = 1; it <= kMaxIter; ++it) {
      Eigen::MatrixXd y = box(x + pb, T);
      pb = x + pb - y;
      Eigen::MatrixXd xn = cone(y + pk);
      pk = y + pk - xn;
      x = std::move(xn);
      if (it % 10 == 0 || it == 1) {
        Eigen::MatrixXd g = gram(x);
        const double d = gram_distortion(g, metric_);
        if (d < best.dist) best.dist = d, best.gram = std::move(g);
        if (best.dist <= target) {
          best.feasible = true;
          return best;
        }
      }
      if (it % kWindow == 0) {
        const double gap = (x - box(x, T)).norm() / scale;
        if (gap > 0.99 * window_gap) return best;
        window_gap = gap;
      }
    }
    return best;
  }

  Eigen::MatrixXd gram(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd g = -0.5 * centering_ * x * centering_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }

 private:
  static constexpr int kMaxIter = 20000;
  static constexpr int kWindow = 200;

  Eigen::MatrixXd box(const Eigen::MatrixXd& y, double T) const {
    Eigen::MatrixXd s = 0.5 * (y + y.transpose());
    s = s.cwiseMax(d2_).cwiseMin(T * d2_);
    s.diagonal().setZero();
    return s;
  }

  // Nearest matrix that is negative semidefinite on the complement of 1.
  Eigen::MatrixXd cone(const Eigen::MatrixXd& y) const {
    Eigen::MatrixXd m = householder_ * (0.5 * (y + y.transpose())) * householder_;
    const Eigen::Index k = n_ - 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.topLeftCorner(k, k));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMin(0.0);
    m.topLeftCorner(k, k) = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return householder_ * m * householder_;
  }

  Eigen::Index n_;
  const MetricTable& metric_;
  double tol_;
  Eigen::MatrixXd d2_, householder_, centering_;
};

}  // namespace

C2Result exact_c2(const MetricTable& metric, double tol) {
  validate(metric);
  const Eigen::Index n = static_cast<Eigen::Index>(metric.size());
  if (n > 16) throw Error(ErrorCode::CapExceeded, "exact_c2 is limited to 16 points");
  if (!(tol >= 1e-6)) throw Error(ErrorCode::BadParam, "tol must be at least 1e-6");
  C2Result res;
  if (n <= 2) {
    res.value = res.lower = res.upper = 1;
    res.gram = Eigen::MatrixXd::Zero(n, n);
    if (n == 2) res.gram(1, 1) = metric.d(0, 1) * metric.d(0, 1);
    res.converged = true;
    return res;
  }

  // Regular simplex with edge max d is always available.
  double dmin = kUnbounded;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) dmin = std::min(dmin, metric.d(i, j));
  const double dmax = metric.max_distance();
  res.gram = Eigen::MatrixXd::Identity(n, n) * (dmax * dmax / 2);
  res.value = res.upper = dmax / dmin;
  res.lower = 1;

  C2Feasibility feas(metric, tol);
  auto record = [&](const C2Feasibility::Outcome& o) {
    if (o.dist < res.value) res.value = o.dist, res.gram = o.gram;
  };

  auto first = feas.test(1.0);
  record(first);
  if (first.feasible) {
    res.upper = res.value;
    res.converged = true;
    return res;
  }
  for (int step = 0; step < 200 && res.upper - res.lower > tol / 2; ++step) {
    const double mid = 0.5 * (res.lower + res.upper);
    auto o = feas.test(mid * mid);
    record(o);
    if (o.feasible)
      res.upper = mid;
    else
      res.lower = mid;
  }
  res.converged = res.upper - res.lower <= tol / 2;
  if (!res.converged)
    throw Error(ErrorCode::NoConvergence, "bisection stalled in [" + std::to_string(res.lower) + ", " +
                                              std::to_string(res.upper) + "]");
  return res;
}

std::string report_json(const DistortionReport& r) {
  nlohmann::ordered_json j;
  if (std::isfinite(r.R))
    j["R"] = r.R;
  else
    j["R"] = nullptr;
  j["expansion"] = r.expansion;
  j["contraction"] = r.contraction;
  j["dist"] = r.dist;
  j["witness_expand"] = {r.witness_expand[0], r.witness_expand[1]};
  j["witness_contract"] = {r.witness_contract[0], r.witness_contract[1]};
  return j.dump(2);
}

}  // namespace lpdist
