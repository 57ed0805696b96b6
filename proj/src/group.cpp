#include "lpdist/group.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <numeric>

namespace lpdist {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadParam: return "BadParam";
    case ErrorCode::BadMatrix: return "BadMatrix";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::FamilyMismatch: return "FamilyMismatch";
    case ErrorCode::IncompatibleSpecs: return "IncompatibleSpecs";
    case ErrorCode::DegenerateGenerators: return "DegenerateGenerators";
    case ErrorCode::InfiniteNeedsRadius: return "InfiniteNeedsRadius";
    case ErrorCode::ZeroGradient: return "ZeroGradient";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BadScale: return "BadScale";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

std::int64_t mod(std::int64_t a, std::int64_t n) {
  std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

std::int64_t add_checked(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "64-bit addition");
  return r;
}

std::int64_t mul_checked(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "64-bit multiplication");
  return r;
}

__int128 add_checked(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "128-bit addition");
  return r;
}

__int128 mul_checked(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "128-bit multiplication");
  return r;
}

__int128 ipow128(int m, int k) {
  __int128 r = 1;
  for (int i = 0; i < k; ++i) r = mul_checked(r, __int128{m});
  return r;
}

Mat2 mat_mul_checked(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      r(i, j) = add_checked(mul_checked(a(i, 0), b(0, j)), mul_checked(a(i, 1), b(1, j)));
  return r;
}

Mat2 mat_mul_mod(const Mat2& a, const Mat2& b, std::int64_t n) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r(i, j) = (a(i, 0) * b(0, j) + a(i, 1) * b(1, j)) % n;
  return r;
}

Mat2 mat_mod(const Mat2& a, std::int64_t n) {
  return a.unaryExpr([n](std::int64_t v) { return mod(v, n); });
}

void reduce(BsInf& x, int m) {
  if (x.u == 0) {
    x.e = 0;
    return;
  }
  while (x.e > 0 && x.u % m == 0) {
    x.u /= m;
    --x.e;
  }
}

// a * m^s for a = u / m^e.
BsInf scale_pow(const BsInf& a, std::int64_t s, int m) {
  BsInf r = a;
  if (r.u == 0) return r;
  if (s >= 0) {
    if (r.e >= s) {
      r.e -= static_cast<int>(s);
    } else {
      r.u = mul_checked(r.u, ipow128(m, static_cast<int>(s - r.e)));
      r.e = 0;
    }
  } else {
    if (-s > 4096) throw Error(ErrorCode::Overflow, "bs-inf exponent");
    r.e += static_cast<int>(-s);
    reduce(r, m);
  }
  return r;
}

BsInf add_rational(const BsInf& a, const BsInf& b, int m) {
  BsInf r;
  int top = std::max(a.e, b.e);
  r.u = add_checked(mul_checked(a.u, ipow128(m, top - a.e)), mul_checked(b.u, ipow128(m, top - b.e)));
  r.e = top;
  reduce(r, m);
  return r;
}

std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

[[noreturn]] void parse_fail(std::string_view text) {
  throw Error(ErrorCode::ParseError, "cannot parse element '" + std::string(text) + "'");
}

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) parse_fail(whole);
  return v;
}

__int128 parse_int128(std::string_view s, std::string_view whole) {
  if (s.empty()) parse_fail(whole);
  bool neg = s.front() == '-';
  if (neg) s.remove_prefix(1);
  if (s.empty()) parse_fail(whole);
  __int128 v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') parse_fail(whole);
    v = add_checked(mul_checked(v, __int128{10}), __int128{c - '0'});
  }
  return neg ? -v : v;
}

// Splits "key:value|key:value" into the two values, checking the keys.
std::pair<std::string_view, std::string_view> split_fields(std::string_view text, std::string_view k1,
                                                           std::string_view k2) {
  auto bar = text.find('|');
  if (bar == std::string_view::npos) parse_fail(text);
  auto a = text.substr(0, bar);
  auto b = text.substr(bar + 1);
  if (a.substr(0, k1.size()) != k1 || b.substr(0, k2.size()) != k2) parse_fail(text);
  return {a.substr(k1.size()), b.substr(k2.size())};
}

std::pair<std::int64_t, std::int64_t> parse_pair(std::string_view s, std::string_view whole) {
  if (s.size() < 5 || s.front() != '(' || s.back() != ')') parse_fail(whole);
  s = s.substr(1, s.size() - 2);
  auto comma = s.find(',');
  if (comma == std::string_view::npos) parse_fail(whole);
  return {parse_int(s.substr(0, comma), whole), parse_int(s.substr(comma + 1), whole)};
}

void hash_mix(std::size_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::LamplighterFin: return "lamplighter-fin";
    case Family::BsFin: return "bs-fin";
    case Family::SolFin: return "sol-fin";
    case Family::LamplighterInf: return "lamplighter-inf";
    case Family::BsInf: return "bs-inf";
    case Family::SolInf: return "sol-inf";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::LamplighterFin, Family::BsFin, Family::SolFin, Family::LamplighterInf, Family::BsInf,
                   Family::SolInf}) {
    if (name == family_name(f)) return f;
  }
  throw Error(ErrorCode::BadParam, "unknown family '" + std::string(name) + "'");
}

bool is_finite(Family f) {
  return f == Family::LamplighterFin || f == Family::BsFin || f == Family::SolFin;
}

Family parent_family(Family f) {
  switch (f) {
    case Family::LamplighterFin: return Family::LamplighterInf;
    case Family::BsFin: return Family::BsInf;
    case Family::SolFin: return Family::SolInf;
    default: return f;
  }
}

Family family_of(const Element& x) {
  return static_cast<Family>(std::array{Family::LamplighterFin, Family::LamplighterInf, Family::BsFin, Family::BsInf,
                                        Family::SolFin, Family::SolInf}[x.index()]);
}

bool GroupSpec::operator==(const GroupSpec& o) const {
  bool uses_m = family != Family::SolFin && family != Family::SolInf;
  return family == o.family && n == o.n && (uses_m ? m == o.m : (A == o.A && sol_extra_generator == o.sol_extra_generator));
}

std::int64_t matrix_order(const Mat2& A, std::int64_t n, std::int64_t cap) {
  if (n < 2) throw Error(ErrorCode::BadParam, "matrix_order needs n >= 2");
  Mat2 a = mat_mod(A, n);
  std::int64_t det = mod(a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0), n);
  if (std::gcd(det, n) != 1) throw Error(ErrorCode::BadMatrix, "matrix not invertible mod n");
  Mat2 power = a;
  for (std::int64_t k = 1; k <= cap; ++k) {
    if (power == Mat2::Identity()) return k;
    power = mat_mul_mod(power, a, n);
  }
  throw Error(ErrorCode::CapExceeded, "matrix order exceeds cap " + std::to_string(cap));
}

GroupSpec make_spec(Family family, const SpecParams& params) {
  GroupSpec s;
  s.family = family;
  s.cap = params.cap;
  bool sol = family == Family::SolFin || family == Family::SolInf;
  if (!sol) {
    if (params.m < 2) throw Error(ErrorCode::BadParam, "m must be >= 2");
    s.m = params.m;
  } else {
    const Mat2& A = params.A;
    std::int64_t det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    std::int64_t tr = A(0, 0) + A(1, 1);
    bool ok = (det == 1 && std::abs(tr) > 2) || (det == -1 && tr != 0);
    if (!ok) throw Error(ErrorCode::BadMatrix, "need det = +-1 and eigenvalues off the unit circle");
    s.A = A;
    s.sol_extra_generator = params.sol_extra_generator;
  }
  if (!is_finite(family)) return s;

  if (params.n < 2) throw Error(ErrorCode::BadParam, "n must be >= 2");
  s.n = params.n;
  auto over_cap = [&](unsigned __int128 v) {
    if (v > s.cap) throw Error(ErrorCode::CapExceeded, "group order exceeds cap " + std::to_string(s.cap));
  };
  unsigned __int128 mn = 1;
  if (!sol) {
    for (int i = 0; i < s.n; ++i) {
      mn *= static_cast<unsigned>(s.m);
      over_cap(mn);
    }
  }
  switch (family) {
    case Family::LamplighterFin:
      over_cap(mn * s.n);
      s.order = static_cast<std::uint64_t>(mn * s.n);
      break;
    case Family::BsFin:
      s.q = static_cast<std::int64_t>(mn - 1);
      over_cap(static_cast<unsigned __int128>(s.q) * s.n);
      s.order = static_cast<std::uint64_t>(s.q) * s.n;
      break;
    case Family::SolFin: {
      unsigned __int128 nn = static_cast<unsigned __int128>(s.n) * s.n;
      over_cap(nn);
      // |G| <= cap bounds the order search as well.
      std::int64_t order_cap = std::min<std::int64_t>(kDefaultMatrixOrderCap, static_cast<std::int64_t>(s.cap / nn));
      try {
        s.oA = matrix_order(s.A, s.n, std::max<std::int64_t>(order_cap, 1));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::CapExceeded)
          throw Error(ErrorCode::CapExceeded, "group order exceeds cap " + std::to_string(s.cap));
        throw;
      }
      s.order = static_cast<std::uint64_t>(nn) * static_cast<std::uint64_t>(s.oA);
      break;
    }
    default: break;
  }
  return s;
}

std::size_t ElementHash::operator()(const Element& x) const noexcept {
  std::size_t h = x.index();
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, LampFin>) {
          for (int v : e.lamps) hash_mix(h, static_cast<std::uint64_t>(v));
          hash_mix(h, static_cast<std::uint64_t>(e.pos));
        } else if constexpr (std::is_same_v<T, LampInf>) {
          for (const auto& [k, v] : e.lamps) {
            hash_mix(h, static_cast<std::uint64_t>(k));
            hash_mix(h, static_cast<std::uint64_t>(v));
          }
          hash_mix(h, static_cast<std::uint64_t>(e.pos));
        } else if constexpr (std::is_same_v<T, BsFin>) {
          hash_mix(h, static_cast<std::uint64_t>(e.a));
          hash_mix(h, static_cast<std::uint64_t>(e.t));
        } else if constexpr (std::is_same_v<T, BsInf>) {
          hash_mix(h, static_cast<std::uint64_t>(e.u));
          hash_mix(h, static_cast<std::uint64_t>(e.u >> 64));
          hash_mix(h, static_cast<std::uint64_t>(e.e));
          hash_mix(h, static_cast<std::uint64_t>(e.t));
        } else {
          hash_mix(h, static_cast<std::uint64_t>(e.v0));
          hash_mix(h, static_cast<std::uint64_t>(e.v1));
          hash_mix(h, static_cast<std::uint64_t>(e.t));
        }
      },
      x);
  return h;
}

// ---------------------------------------------------------------------------

Group::Group(GroupSpec spec) : spec_(std::move(spec)) {
  const int m = spec_.m;
  const int n = spec_.n;
  std::vector<Element> candidates;
  switch (spec_.family) {
    case Family::LamplighterFin: {
      lamp_place_.resize(n + 1);
      lamp_place_[0] = 1;
      for (int i = 1; i <= n; ++i) lamp_place_[i] = lamp_place_[i - 1] * m;
      LampFin lamp{std::vector<int>(n, 0), 0};
      lamp.lamps[0] = 1;
      LampFin lamp_inv = lamp;
      lamp_inv.lamps[0] = m - 1;
      candidates = {lamp, lamp_inv, LampFin{std::vector<int>(n, 0), 1}, LampFin{std::vector<int>(n, 0), n - 1}};
      break;
    }
    case Family::LamplighterInf: {
      candidates = {LampInf{{{0, 1}}, 0}, LampInf{{{0, m - 1}}, 0}, LampInf{{}, 1}, LampInf{{}, -1}};
      break;
    }
    case Family::BsFin: {
      mpow_.resize(n);
      mpow_[0] = 1 % spec_.q;
      for (int i = 1; i < n; ++i) mpow_[i] = (mpow_[i - 1] * m) % spec_.q;
      candidates = {BsFin{1 % spec_.q, 0}, BsFin{spec_.q - 1, 0}, BsFin{0, 1}, BsFin{0, n - 1}};
      break;
    }
    case Family::BsInf: {
      candidates = {BsInf{1, 0, 0}, BsInf{-1, 0, 0}, BsInf{0, 0, 1}, BsInf{0, 0, -1}};
      break;
    }
    case Family::SolFin: {
      apow_.resize(static_cast<std::size_t>(spec_.oA));
      apow_[0] = Mat2::Identity();
      Mat2 a = mat_mod(spec_.A, n);
      for (std::int64_t i = 1; i < spec_.oA; ++i) apow_[i] = mat_mul_mod(apow_[i - 1], a, n);
      candidates = {SolFin{1 % n, 0, 0}, SolFin{n - 1, 0, 0}};
      if (spec_.sol_extra_generator) {
        candidates.push_back(SolFin{0, 1 % n, 0});
        candidates.push_back(SolFin{0, n - 1, 0});
      }
      candidates.push_back(SolFin{0, 0, 1 % spec_.oA});
      candidates.push_back(SolFin{0, 0, spec_.oA - 1});
      break;
    }
    case Family::SolInf: {
      const Mat2& A = spec_.A;
      std::int64_t det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
      ainv_ << det * A(1, 1), -det * A(0, 1), -det * A(1, 0), det * A(0, 0);
      candidates = {SolInf{1, 0, 0}, SolInf{-1, 0, 0}};
      if (spec_.sol_extra_generator) {
        candidates.push_back(SolInf{0, 1, 0});
        candidates.push_back(SolInf{0, -1, 0});
      }
      candidates.push_back(SolInf{0, 0, 1});
      candidates.push_back(SolInf{0, 0, -1});
      break;
    }
  }
  const Element e = identity();
  for (auto& c : candidates) {
    if (c == e) continue;
    if (std::find(gens_.begin(), gens_.end(), c) != gens_.end()) continue;
    gens_.push_back(std::move(c));
  }
  if (gens_.empty()) throw Error(ErrorCode::DegenerateGenerators, "generating set is empty");
}

Element Group::identity() const {
  switch (spec_.family) {
    case Family::LamplighterFin: return LampFin{std::vector<int>(spec_.n, 0), 0};
    case Family::LamplighterInf: return LampInf{};
    case Family::BsFin: return BsFin{};
    case Family::BsInf: return BsInf{};
    case Family::SolFin: return SolFin{};
    case Family::SolInf: return SolInf{};
  }
  return BsFin{};
}

void Group::check(const Element& x) const {
  if (family_of(x) != spec_.family)
    throw Error(ErrorCode::FamilyMismatch, std::string("element of ") + family_name(family_of(x)) + " used with " +
                                               family_name(spec_.family));
  if (auto* l = std::get_if<LampFin>(&x); l && static_cast<int>(l->lamps.size()) != spec_.n)
    throw Error(ErrorCode::FamilyMismatch, "lamp vector length differs from n");
}

Mat2 Group::matrix_power(std::int64_t s) const {
  if (spec_.family == Family::SolFin) return apow_[static_cast<std::size_t>(mod(s, spec_.oA))];
  Mat2 base = s >= 0 ? spec_.A : ainv_;
  std::int64_t k = s >= 0 ? s : -s;
  Mat2 r = Mat2::Identity();
  while (k > 0) {
    if (k & 1) r = mat_mul_checked(r, base);
    k >>= 1;
    if (k > 0) base = mat_mul_checked(base, base);
  }
  return r;
}

Element Group::mul(const Element& x, const Element& y) const {
  check(x);
  check(y);
  const int m = spec_.m;
  const int n = spec_.n;
  switch (spec_.family) {
    case Family::LamplighterFin: {
      const auto& a = std::get<LampFin>(x);
      const auto& b = std::get<LampFin>(y);
      LampFin r{std::vector<int>(n), (a.pos + b.pos) % n};
      for (int i = 0; i < n; ++i) r.lamps[i] = (a.lamps[i] + b.lamps[mod(i - a.pos, n)]) % m;
      return r;
    }
    case Family::LamplighterInf: {
      const auto& a = std::get<LampInf>(x);
      const auto& b = std::get<LampInf>(y);
      LampInf r{a.lamps, add_checked(a.pos, b.pos)};
      for (const auto& [k, v] : b.lamps) {
        std::int64_t key = add_checked(k, a.pos);
        int nv = (r.lamps[key] + v) % m;
        if (nv == 0)
          r.lamps.erase(key);
        else
          r.lamps[key] = nv;
      }
      return r;
    }
    case Family::BsFin: {
      const auto& a = std::get<BsFin>(x);
      const auto& b = std::get<BsFin>(y);
      return BsFin{(a.a + mpow_[a.t] * b.a) % spec_.q, (a.t + b.t) % n};
    }
    case Family::BsInf: {
      const auto& a = std::get<BsInf>(x);
      const auto& b = std::get<BsInf>(y);
      BsInf r = add_rational(a, scale_pow(b, a.t, m), m);
      r.t = add_checked(a.t, b.t);
      return r;
    }
    case Family::SolFin: {
      const auto& a = std::get<SolFin>(x);
      const auto& b = std::get<SolFin>(y);
      const Mat2& P = apow_[a.t];
      return SolFin{(a.v0 + P(0, 0) * b.v0 + P(0, 1) * b.v1) % n, (a.v1 + P(1, 0) * b.v0 + P(1, 1) * b.v1) % n,
                    (a.t + b.t) % spec_.oA};
    }
    case Family::SolInf: {
      const auto& a = std::get<SolInf>(x);
      const auto& b = std::get<SolInf>(y);
      Mat2 P = matrix_power(a.t);
      std::int64_t w0 = add_checked(mul_checked(P(0, 0), b.v0), mul_checked(P(0, 1), b.v1));
      std::int64_t w1 = add_checked(mul_checked(P(1, 0), b.v0), mul_checked(P(1, 1), b.v1));
      return SolInf{add_checked(a.v0, w0), add_checked(a.v1, w1), add_checked(a.t, b.t)};
    }
  }
  return x;
}

Element Group::inv(const Element& x) const {
  check(x);
  const int m = spec_.m;
  const int n = spec_.n;
  switch (spec_.family) {
    case Family::LamplighterFin: {
      const auto& a = std::get<LampFin>(x);
      LampFin r{std::vector<int>(n), mod(-a.pos, n)};
      for (int i = 0; i < n; ++i) r.lamps[i] = mod(-a.lamps[(i + a.pos) % n], m);
      return r;
    }
    case Family::LamplighterInf: {
      const auto& a = std::get<LampInf>(x);
      LampInf r{{}, -a.pos};
      for (const auto& [k, v] : a.lamps) r.lamps[k - a.pos] = mod(-v, m);
      return r;
    }
    case Family::BsFin: {
      const auto& a = std::get<BsFin>(x);
      std::int64_t t = mod(-a.t, n);
      return BsFin{mod(-(mpow_[t] * a.a % spec_.q), spec_.q), t};
    }
    case Family::BsInf: {
      const auto& a = std::get<BsInf>(x);
      BsInf r = scale_pow(a, -a.t, m);
      r.u = -r.u;
      r.t = -a.t;
      return r;
    }
    case Family::SolFin: {
      const auto& a = std::get<SolFin>(x);
      std::int64_t t = mod(-a.t, spec_.oA);
      const Mat2& P = apow_[t];
      return SolFin{mod(-(P(0, 0) * a.v0 + P(0, 1) * a.v1), n), mod(-(P(1, 0) * a.v0 + P(1, 1) * a.v1), n), t};
    }
    case Family::SolInf: {
      const auto& a = std::get<SolInf>(x);
      Mat2 P = matrix_power(-a.t);
      std::int64_t w0 = add_checked(mul_checked(P(0, 0), a.v0), mul_checked(P(0, 1), a.v1));
      std::int64_t w1 = add_checked(mul_checked(P(1, 0), a.v0), mul_checked(P(1, 1), a.v1));
      return SolInf{-w0, -w1, -a.t};
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Codes.

std::uint64_t Group::encode(const Element& x) const {
  check(x);
  switch (spec_.family) {
    case Family::LamplighterFin: {
      const auto& a = std::get<LampFin>(x);
      std::uint64_t c = 0;
      for (int i = spec_.n - 1; i >= 0; --i) c = c * spec_.m + static_cast<std::uint64_t>(a.lamps[i]);
      return c + lamp_place_[spec_.n] * static_cast<std::uint64_t>(a.pos);
    }
    case Family::BsFin: {
      const auto& a = std::get<BsFin>(x);
      return static_cast<std::uint64_t>(a.a) + static_cast<std::uint64_t>(spec_.q) * static_cast<std::uint64_t>(a.t);
    }
    case Family::SolFin: {
      const auto& a = std::get<SolFin>(x);
      std::uint64_t n = static_cast<std::uint64_t>(spec_.n);
      return static_cast<std::uint64_t>(a.v0) + n * static_cast<std::uint64_t>(a.v1) +
             n * n * static_cast<std::uint64_t>(a.t);
    }
    default: throw Error(ErrorCode::BadParam, "codes exist for finite families only");
  }
}

Element Group::decode(std::uint64_t code) const {
  if (!finite()) throw Error(ErrorCode::BadParam, "codes exist for finite families only");
  if (code >= spec_.order) throw Error(ErrorCode::BadParam, "code out of range");
  switch (spec_.family) {
    case Family::LamplighterFin: {
      LampFin r{std::vector<int>(spec_.n), static_cast<std::int64_t>(code / lamp_place_[spec_.n])};
      std::uint64_t c = code % lamp_place_[spec_.n];
      for (int i = 0; i < spec_.n; ++i) {
        r.lamps[i] = static_cast<int>(c % spec_.m);
        c /= spec_.m;
      }
      return r;
    }
    case Family::BsFin: {
      std::uint64_t q = static_cast<std::uint64_t>(spec_.q);
      return BsFin{static_cast<std::int64_t>(code % q), static_cast<std::int64_t>(code / q)};
    }
    default: {
      std::uint64_t n = static_cast<std::uint64_t>(spec_.n);
      return SolFin{static_cast<std::int64_t>(code % n), static_cast<std::int64_t>((code / n) % n),
                    static_cast<std::int64_t>(code / (n * n))};
    }
  }
}

std::uint64_t Group::mul_code(std::uint64_t a, std::uint64_t b) const {
  switch (spec_.family) {
    case Family::LamplighterFin: {
      const std::uint64_t full = lamp_place_[spec_.n];
      const std::uint64_t n = static_cast<std::uint64_t>(spec_.n);
      std::uint64_t la = a % full, pa = a / full;
      std::uint64_t lb = b % full, pb = b / full;
      // Rotate b's lamps forward by pa positions.
      std::uint64_t split = lamp_place_[n - pa];
      std::uint64_t shifted = (lb % split) * lamp_place_[pa] + lb / split;
      std::uint64_t lamps;
      if (spec_.m == 2) {
        lamps = la ^ shifted;
      } else {
        lamps = 0;
        const std::uint64_t m = static_cast<std::uint64_t>(spec_.m);
        for (std::uint64_t i = 0, x = la, y = shifted; i < n; ++i, x /= m, y /= m)
          lamps += ((x % m + y % m) % m) * lamp_place_[i];
      }
      return lamps + full * ((pa + pb) % n);
    }
    case Family::BsFin: {
      const std::uint64_t q = static_cast<std::uint64_t>(spec_.q);
      std::uint64_t aa = a % q, ta = a / q, ab = b % q, tb = b / q;
      std::uint64_t r = (aa + static_cast<std::uint64_t>(mpow_[ta]) * ab) % q;
      return r + q * ((ta + tb) % static_cast<std::uint64_t>(spec_.n));
    }
    case Family::SolFin: {
      const std::int64_t n = spec_.n;
      const std::uint64_t nn = static_cast<std::uint64_t>(n * n);
      std::int64_t ra = static_cast<std::int64_t>(a % nn), ta = static_cast<std::int64_t>(a / nn);
      std::int64_t rb = static_cast<std::int64_t>(b % nn), tb = static_cast<std::int64_t>(b / nn);
      const Mat2& P = apow_[ta];
      std::int64_t b0 = rb % n, b1 = rb / n;
      std::int64_t v0 = (ra % n + P(0, 0) * b0 + P(0, 1) * b1) % n;
      std::int64_t v1 = (ra / n + P(1, 0) * b0 + P(1, 1) * b1) % n;
      return static_cast<std::uint64_t>(v0 + n * v1) + nn * static_cast<std::uint64_t>((ta + tb) % spec_.oA);
    }
    default: throw Error(ErrorCode::BadParam, "codes exist for finite families only");
  }
}

std::uint64_t Group::inv_code(std::uint64_t a) const { return encode(inv(decode(a))); }

// ---------------------------------------------------------------------------
// Canonical strings.

std::string Group::to_string(const Element& x) const {
  check(x);
  return std::visit(
      [&](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, LampFin>) {
          std::string s = "lamps:";
          for (std::size_t i = 0; i < e.lamps.size(); ++i) {
            if (spec_.m > 10 && i > 0) s += ',';
            s += std::to_string(e.lamps[i]);
          }
          return s + "|pos:" + std::to_string(e.pos);
        } else if constexpr (std::is_same_v<T, LampInf>) {
          std::string s = "lamps:{";
          bool first = true;
          for (const auto& [k, v] : e.lamps) {
            if (!first) s += ',';
            first = false;
            s += std::to_string(k) + ":" + std::to_string(v);
          }
          return s + "}|pos:" + std::to_string(e.pos);
        } else if constexpr (std::is_same_v<T, BsFin>) {
          return "a:" + std::to_string(e.a) + "|t:" + std::to_string(e.t);
        } else if constexpr (std::is_same_v<T, BsInf>) {
          std::string s = "a:" + int128_to_string(e.u);
          if (e.e > 0) s += "/" + std::to_string(spec_.m) + "^" + std::to_string(e.e);
          return s + "|t:" + std::to_string(e.t);
        } else {
          return "v:(" + std::to_string(e.v0) + "," + std::to_string(e.v1) + ")|t:" + std::to_string(e.t);
        }
      },
      x);
}

Element Group::parse(std::string_view text) const {
  const int m = spec_.m;
  const int n = spec_.n;
  Element out;
  switch (spec_.family) {
    case Family::LamplighterFin: {
      auto [lamps, pos] = split_fields(text, "lamps:", "pos:");
      LampFin r{{}, parse_int(pos, text)};
      if (m > 10) {
        std::size_t start = 0;
        while (start <= lamps.size()) {
          auto comma = lamps.find(',', start);
          auto end = comma == std::string_view::npos ? lamps.size() : comma;
          r.lamps.push_back(static_cast<int>(parse_int(lamps.substr(start, end - start), text)));
          start = end + 1;
        }
      } else {
        for (char c : lamps) {
          if (c < '0' || c > '9') parse_fail(text);
          r.lamps.push_back(c - '0');
        }
      }
      if (static_cast<int>(r.lamps.size()) != n || r.pos < 0 || r.pos >= n) parse_fail(text);
      for (int v : r.lamps)
        if (v < 0 || v >= m) parse_fail(text);
      out = std::move(r);
      break;
    }
    case Family::LamplighterInf: {
      auto [lamps, pos] = split_fields(text, "lamps:", "pos:");
      if (lamps.size() < 2 || lamps.front() != '{' || lamps.back() != '}') parse_fail(text);
      lamps = lamps.substr(1, lamps.size() - 2);
      LampInf r{{}, parse_int(pos, text)};
      std::size_t start = 0;
      while (!lamps.empty() && start <= lamps.size()) {
        auto comma = lamps.find(',', start);
        auto end = comma == std::string_view::npos ? lamps.size() : comma;
        auto item = lamps.substr(start, end - start);
        auto colon = item.find(':');
        if (colon == std::string_view::npos) parse_fail(text);
        std::int64_t k = parse_int(item.substr(0, colon), text);
        std::int64_t v = parse_int(item.substr(colon + 1), text);
        if (v <= 0 || v >= m || r.lamps.count(k)) parse_fail(text);
        r.lamps[k] = static_cast<int>(v);
        start = end + 1;
      }
      out = std::move(r);
      break;
    }
    case Family::BsFin: {
      auto [a, t] = split_fields(text, "a:", "t:");
      BsFin r{parse_int(a, text), parse_int(t, text)};
      if (r.a < 0 || r.a >= spec_.q || r.t < 0 || r.t >= n) parse_fail(text);
      out = r;
      break;
    }
    case Family::BsInf: {
      auto [a, t] = split_fields(text, "a:", "t:");
      BsInf r;
      r.t = parse_int(t, text);
      auto slash = a.find('/');
      if (slash == std::string_view::npos) {
        r.u = parse_int128(a, text);
      } else {
        r.u = parse_int128(a.substr(0, slash), text);
        auto den = a.substr(slash + 1);
        auto caret = den.find('^');
        if (caret == std::string_view::npos || parse_int(den.substr(0, caret), text) != m) parse_fail(text);
        r.e = static_cast<int>(parse_int(den.substr(caret + 1), text));
        if (r.e <= 0 || r.u % m == 0) parse_fail(text);
      }
      out = r;
      break;
    }
    case Family::SolFin:
    case Family::SolInf: {
      auto [v, t] = split_fields(text, "v:", "t:");
      auto [v0, v1] = parse_pair(v, text);
      std::int64_t tt = parse_int(t, text);
      if (spec_.family == Family::SolFin) {
        if (v0 < 0 || v0 >= n || v1 < 0 || v1 >= n || tt < 0 || tt >= spec_.oA) parse_fail(text);
        out = SolFin{v0, v1, tt};
      } else {
        out = SolInf{v0, v1, tt};
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void check_projection(const Group& parent, const Group& quotient) {
  const GroupSpec& p = parent.spec();
  const GroupSpec& q = quotient.spec();
  if (p == q) return;
  bool ok = q.family != p.family && is_finite(q.family) && parent_family(q.family) == p.family;
  if (ok) {
    if (q.family == Family::SolFin)
      ok = p.A == q.A && p.sol_extra_generator == q.sol_extra_generator;
    else
      ok = p.m == q.m;
  }
  if (!ok)
    throw Error(ErrorCode::IncompatibleSpecs,
                std::string("no projection ") + family_name(p.family) + " -> " + family_name(q.family));
}

Element project(const Group& parent, const Group& quotient, const Element& x) {
  check_projection(parent, quotient);
  parent.check(x);
  if (parent.spec() == quotient.spec()) return x;
  const GroupSpec& q = quotient.spec();
  switch (q.family) {
    case Family::LamplighterFin: {
      const auto& a = std::get<LampInf>(x);
      LampFin r{std::vector<int>(q.n, 0), mod(a.pos, q.n)};
      for (const auto& [k, v] : a.lamps) {
        auto& slot = r.lamps[mod(k, q.n)];
        slot = (slot + v) % q.m;
      }
      return r;
    }
    case Family::BsFin: {
      const auto& a = std::get<BsInf>(x);
      __int128 u = a.u % q.q;
      if (u < 0) u += q.q;
      // m^{-1} = m^{n-1} mod q since m^n = 1.
      std::int64_t k = mod(-static_cast<std::int64_t>(a.e), q.n);
      __int128 pw = 1;
      for (std::int64_t i = 0; i < k; ++i) pw = pw * q.m % q.q;
      return BsFin{static_cast<std::int64_t>(u * pw % q.q), mod(a.t, q.n)};
    }
    case Family::SolFin: {
      const auto& a = std::get<SolInf>(x);
      return SolFin{mod(a.v0, q.n), mod(a.v1, q.n), mod(a.t, q.oA)};
    }
    default: break;
  }
  throw Error(ErrorCode::IncompatibleSpecs, "unsupported projection");
}

}  // namespace lpdist
