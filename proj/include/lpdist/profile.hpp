#pragma once

// Certified lower bounds for the l^p isoperimetric profile in balls,
//   J(r) = sup_{supp f in B(1,r)} ||f||_p / max_s ||lambda(s) f - f||_p,
// where (lambda(g) f)(x) = f(g^{-1} x) and B(1,r) is the open ball.

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lpdist/cayley.hpp"
#include "lpdist/group.hpp"

namespace lpdist {

using SparseFunction = std::map<Element, double>;

/// ||x||_p computed as M * (sum |x_i / M|^p)^{1/p}, M = max |x_i|.
double lp_norm(std::span<const double> x, double p);
double lp_norm(const SparseFunction& f, double p);

/// lambda(s) f : x -> f(s^{-1} x).
SparseFunction translate(const Group& group, const Element& s, const SparseFunction& f);

struct RayleighForms {
  double norm = 0;           // ||f||_p
  double gradient_max = 0;   // max_s ||lambda(s) f - f||_p
  double max_form = 0;       // norm / gradient_max
  double sum_form = 0;       // norm / (sum_s ||lambda(s) f - f||_p^p)^{1/p}
};

/// Evaluated from scratch with group multiplication; throws ZeroGradient for constant f.
RayleighForms rayleigh(const Group& group, const SparseFunction& f, double p);

/// Functions supported on the open ball {x : |x| < radius}, indexed in BFS
/// order. For each generator s, ||lambda(s) f - f||_p^p is the sum of
/// |f(a) - f(b)|^p over edges(s), with index -1 standing for a point outside
/// the support.
struct BallDomain {
  GroupSpec spec;
  int radius = 0;
  std::vector<Element> points;
  std::vector<std::vector<std::pair<int, int>>> edges;

  std::size_t size() const { return points.size(); }
};

/// The table must contain B(1, radius - 1); radius >= 1.
BallDomain make_domain(const Group& group, const BallTable& table, int radius);

struct DomainForms {
  double norm = 0;
  double gradient_max = 0;
  double gradient_sum = 0;  // (sum_s ||lambda(s) f - f||^p)^{1/p}
  double max_form() const { return norm / gradient_max; }
  double sum_form() const { return norm / gradient_sum; }
};

DomainForms evaluate(const BallDomain& domain, const Eigen::VectorXd& f, double p);

struct TestVector {
  GroupSpec spec;
  int radius = 0;
  double p = 2;
  std::vector<Element> support;  // every point of the domain, including zeros
  Eigen::VectorXd values;
  double certified_J = 0;     // ||f||_p after normalization
  double gradient_max = 0;    // 1 up to rounding
  bool converged = true;

  SparseFunction as_function() const;
};

/// Rescales f so that its gradient is 1 and records ||f||_p.
TestVector make_test_vector(const BallDomain& domain, const Eigen::VectorXd& f, double p);

/// Principal Dirichlet vector: minimizer of sum_s ||lambda(s) f - f||_2^2 / ||f||_2^2
/// over f supported in the domain. Nonnegative, unit l^2 norm.
Eigen::VectorXd dirichlet_pc(const BallDomain& domain, double tol = 1e-10, int max_iter = 10000);

struct ProfileOptions {
  int max_outer = 500;
  double rel_tol = 1e-4;  // stall test on the certificate over the last tenth of the run
  double beta_start = 8;     // soft-max temperature on log gradients
  double beta_end = 400;
};

/// Ascent on log max_form starting from the Dirichlet vector. The result is
/// never worse than the dirac at the identity.
TestVector optimize_profile(const BallDomain& domain, double p, const ProfileOptions& opts = {});

/// Ascent from a caller-provided start (used to check homogeneity).
TestVector optimize_profile_from(const BallDomain& domain, const Eigen::VectorXd& start, double p,
                                 const ProfileOptions& opts = {});

struct ProfileCurve {
  GroupSpec spec;
  double p = 2;
  std::vector<int> radii;
  std::vector<TestVector> vectors;
  double C_hat = 0;  // max over radii >= 2 of r / certified_J(r)

  double certified_J(std::size_t i) const { return vectors[i].certified_J; }
};

/// Radii must be increasing; on finite groups each must be <= diameter / 2.
/// Each certificate is at least as good as the previous one carried over.
ProfileCurve profile_curve(const Group& group, double p, const std::vector<int>& radii,
                           const ProfileOptions& opts = {});

std::string profile_csv(const ProfileCurve& curve);
/// {"element string": value, ...} for the nonzero entries.
std::string test_vector_json(const Group& group, const TestVector& tv);

}  // namespace lpdist
