#pragma once

// Exact arithmetic for the finite quotients L_{m,n} = C_m wr C_n,
// BS(m,n) = C_q x| C_n (q = m^n - 1) and SOL_{A,n} = C_n^2 x|_A C_{o(A,n)},
// together with their infinite parents C_m wr Z, Z[1/m] x| Z and Z^2 x|_A Z.

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lpdist/error.hpp"

namespace lpdist {

enum class Family { LamplighterFin, BsFin, SolFin, LamplighterInf, BsInf, SolInf };

const char* family_name(Family f);
Family parse_family(std::string_view name);
bool is_finite(Family f);
/// Infinite group that the finite family is a quotient of.
Family parent_family(Family f);

using Mat2 = Eigen::Matrix<std::int64_t, 2, 2>;

inline Mat2 default_sol_matrix() {
  Mat2 a;
  a << 2, 1, 1, 1;
  return a;
}

inline constexpr std::uint64_t kDefaultOrderCap = std::uint64_t{1} << 22;
inline constexpr std::int64_t kDefaultMatrixOrderCap = 10'000'000;

struct SpecParams {
  int m = 2;
  int n = 0;
  Mat2 A = default_sol_matrix();
  std::uint64_t cap = kDefaultOrderCap;
  // SOL only: also use (+-e2, 0) as generators.
  bool sol_extra_generator = false;
};

struct GroupSpec {
  Family family = Family::LamplighterFin;
  int m = 2;
  int n = 0;
  Mat2 A = default_sol_matrix();
  bool sol_extra_generator = false;
  std::uint64_t cap = kDefaultOrderCap;

  // Derived.
  std::int64_t q = 0;        // bs-fin modulus m^n - 1
  std::int64_t oA = 0;       // sol-fin: order of A in SL_2(Z/n)
  std::uint64_t order = 0;   // |G|, 0 for the infinite parents

  bool operator==(const GroupSpec& o) const;
};

/// Validates parameters and fills in the derived fields.
GroupSpec make_spec(Family family, const SpecParams& params);

/// Least k >= 1 with A^k = I (mod n).
std::int64_t matrix_order(const Mat2& A, std::int64_t n, std::int64_t cap = kDefaultMatrixOrderCap);

// ---------------------------------------------------------------------------
// Elements. Residues are always kept in [0, modulus).

struct LampFin {
  std::vector<int> lamps;  // length n, entries mod m
  std::int64_t pos = 0;    // mod n
  auto operator<=>(const LampFin&) const = default;
};

struct LampInf {
  std::map<std::int64_t, int> lamps;  // nonzero lamps only
  std::int64_t pos = 0;
  auto operator<=>(const LampInf&) const = default;
};

struct BsFin {
  std::int64_t a = 0;  // mod q
  std::int64_t t = 0;  // mod n
  auto operator<=>(const BsFin&) const = default;
};

/// a = u / m^e with e = 0 or m not dividing u.
struct BsInf {
  __int128 u = 0;
  int e = 0;
  std::int64_t t = 0;
  auto operator<=>(const BsInf&) const = default;
};

struct SolFin {
  std::int64_t v0 = 0, v1 = 0;  // mod n
  std::int64_t t = 0;           // mod o(A,n)
  auto operator<=>(const SolFin&) const = default;
};

struct SolInf {
  std::int64_t v0 = 0, v1 = 0;
  std::int64_t t = 0;
  auto operator<=>(const SolInf&) const = default;
};

using Element = std::variant<LampFin, LampInf, BsFin, BsInf, SolFin, SolInf>;

Family family_of(const Element& x);

struct ElementHash {
  std::size_t operator()(const Element& x) const noexcept;
};

// ---------------------------------------------------------------------------

class Group {
 public:
  explicit Group(GroupSpec spec);

  const GroupSpec& spec() const { return spec_; }
  Family family() const { return spec_.family; }
  bool finite() const { return is_finite(spec_.family); }
  std::uint64_t order() const { return spec_.order; }

  Element identity() const;
  Element mul(const Element& x, const Element& y) const;
  Element inv(const Element& x) const;

  /// Symmetric generating set: lamp/translation generator and its inverse,
  /// then the cyclic generator and its inverse, duplicates removed.
  const std::vector<Element>& generators() const { return gens_; }

  /// Throws FamilyMismatch unless x belongs to this group.
  void check(const Element& x) const;

  // Dense integer codes in [0, order()), finite families only.
  std::uint64_t encode(const Element& x) const;
  Element decode(std::uint64_t code) const;
  std::uint64_t mul_code(std::uint64_t a, std::uint64_t b) const;
  std::uint64_t inv_code(std::uint64_t a) const;
  std::uint64_t identity_code() const { return encode(identity()); }

  std::string to_string(const Element& x) const;
  Element parse(std::string_view text) const;

  /// Sol families: A^s (exact for sol-inf, reduced mod n for sol-fin).
  Mat2 matrix_power(std::int64_t s) const;

 private:
  GroupSpec spec_;
  std::vector<Element> gens_;
  std::vector<std::int64_t> mpow_;        // bs-fin: m^s mod q
  std::vector<std::uint64_t> lamp_place_; // lamplighter-fin: m^i, i <= n
  std::vector<Mat2> apow_;                // sol-fin: A^s mod n
  Mat2 ainv_;                             // sol-inf: A^{-1}
};

/// Quotient map parent -> quotient (L_m -> L_{m,n}, BS_m -> BS(m,n),
/// SOL_A -> SOL_{A,n}), or the identity when both specs coincide.
Element project(const Group& parent, const Group& quotient, const Element& x);

/// Throws IncompatibleSpecs unless project(parent, quotient, .) is defined.
void check_projection(const Group& parent, const Group& quotient);

}  // namespace lpdist
