#include "lpdist/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "lpdist/distortion.hpp"
#include "lpdist/format.hpp"

namespace lpdist {

namespace {

using ojson = nlohmann::ordered_json;

struct Config {
  std::string family = "lamplighter-fin";
  int m = 2;
  std::string n;
  double p = 2;
  std::optional<int> radius;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  std::optional<std::uint64_t> cap;
  std::string out;
  std::string format = "json";
  std::string matrix;
  bool sol_extra = false;
  std::string metric;
  std::string metric_file;
  std::vector<int> zero_block;
  std::string plot_script;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::NoConvergence:
    case ErrorCode::ZeroNorm:
    case ErrorCode::ZeroGradient:
      return kExitNumerical;
    case ErrorCode::CapExceeded:
    case ErrorCode::Overflow:
      return kExitCap;
    default:
      return kExitUsage;
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, std::string("bad ") + what + " '" + s + "'");
}

std::vector<int> parse_n_list(const std::string& s) {
  if (s.empty()) throw Error(ErrorCode::BadParam, "--n is required");
  std::vector<int> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_int(item, "n"));
  return out;
}

int single_n(const Config& c, Family f) {
  if (!is_finite(f)) {
    if (!c.n.empty()) throw Error(ErrorCode::BadParam, "--n is meaningless for an infinite family");
    return 0;
  }
  auto v = parse_n_list(c.n);
  if (v.size() != 1) throw Error(ErrorCode::BadParam, "expected a single --n");
  return v[0];
}

SpecParams params(const Config& c, int n) {
  SpecParams sp;
  sp.m = c.m;
  sp.n = n;
  sp.sol_extra_generator = c.sol_extra;
  if (c.cap) sp.cap = *c.cap;
  if (!c.matrix.empty()) {
    auto parts = split(c.matrix, ',');
    if (parts.size() != 4) throw Error(ErrorCode::ParseError, "--matrix takes a,b,c,d");
    sp.A << parse_int(parts[0], "matrix entry"), parse_int(parts[1], "matrix entry"),
        parse_int(parts[2], "matrix entry"), parse_int(parts[3], "matrix entry");
  }
  return sp;
}

Group make_group(const Config& c) {
  Family f = parse_family(c.family);
  return Group(make_spec(f, params(c, single_n(c, f))));
}

void check_p(double p, double lo) {
  if (!(p >= lo && p <= 8))
    throw Error(ErrorCode::BadParam, "p must lie in [" + format_double(lo) + ", 8], got " + format_double(p));
}

bool csv(const Config& c) { return c.format == "csv"; }

ojson spec_json(const Group& g) {
  const GroupSpec& s = g.spec();
  ojson j;
  j["family"] = family_name(s.family);
  j["m"] = s.m;
  if (g.finite()) j["n"] = s.n;
  if (s.family == Family::SolFin || s.family == Family::SolInf) j["A"] = {s.A(0, 0), s.A(0, 1), s.A(1, 0), s.A(1, 1)};
  if (s.family == Family::BsFin) j["q"] = s.q;
  if (s.family == Family::SolFin) j["oA"] = s.oA;
  if (g.finite())
    j["order"] = s.order;
  else
    j["order"] = nullptr;
  return j;
}

std::string cmd_group_info(const Config& c) {
  Group g = make_group(c);
  ojson j = spec_json(g);
  auto gens = ojson::array();
  for (const auto& s : g.generators()) gens.push_back(g.to_string(s));
  j["generators"] = gens;
  if (!csv(c)) return j.dump(2) + "\n";
  std::string out = "key,value\n";
  for (const auto& [k, v] : j.items()) {
    if (v.is_array() && k == "generators") {
      std::string joined;
      for (const auto& s : v) joined += (joined.empty() ? "" : " ") + s.get<std::string>();
      out += k + "," + joined + "\n";
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& s : v) joined += (joined.empty() ? "" : " ") + s.dump();
      out += k + "," + joined + "\n";
    } else {
      out += k + "," + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    }
  }
  return out;
}

std::string cmd_cayley_ball(const Config& c) {
  Group g = make_group(c);
  const int r = c.radius.value_or(kWholeGroup);
  BallTable t = bfs_ball(g, r, c.cap.value_or(kDefaultVertexCap));
  if (csv(c)) return sphere_csv(t);
  ojson j = spec_json(g);
  j["radius"] = t.radius;
  j["size"] = t.size();
  j["sphere"] = t.sphere;
  return j.dump(2) + "\n";
}

std::string cmd_cayley_diam(const Config& c) {
  Group g = make_group(c);
  DiameterReport d = diameter(g, bfs_ball(g, kWholeGroup, c.cap.value_or(kDefaultVertexCap)));
  if (csv(c))
    return "diameter,diam_N\n" + std::to_string(d.diameter) + "," + (d.diam_N ? std::to_string(*d.diam_N) : "") +
           "\n";
  ojson j = spec_json(g);
  j["diameter"] = d.diameter;
  if (d.diam_N) j["diam_N"] = *d.diam_N;
  return j.dump(2) + "\n";
}

std::string cmd_girth(const Config& c) {
  Group q = make_group(c);
  if (!q.finite()) throw Error(ErrorCode::BadParam, "girth takes the finite quotient family");
  SpecParams sp = params(c, 0);
  Group parent(make_spec(parent_family(q.family()), sp));
  const int cap = c.radius.value_or(6);
  GirthReport rep = girth(parent, q, cap);
  if (csv(c)) return "g_lower,cap\n" + std::to_string(rep.g_lower) + "," + std::to_string(rep.cap) + "\n";
  ojson j;
  j["parent"] = family_name(parent.family());
  j["quotient"] = spec_json(q);
  j["cap"] = rep.cap;
  j["g_lower"] = rep.g_lower;
  if (rep.witness) {
    j["witness"] = {{"x", parent.to_string(rep.witness->x)},
                    {"y", parent.to_string(rep.witness->y)},
                    {"parent_distance", rep.witness->parent_distance},
                    {"quotient_distance", rep.witness->quotient_distance},
                    {"collision", rep.witness->collision}};
  }
  return j.dump(2) + "\n";
}

std::string cmd_expradical(const Config& c) {
  Family f = parse_family(c.family);
  if (f != Family::SolFin && f != Family::SolInf) throw Error(ErrorCode::FamilyMismatch, "expradical needs a SOL family");
  Group g(make_spec(f, params(c, single_n(c, f))));
  ExpRadicalReport rep = exp_radical_scan(g, c.radius.value_or(12));
  if (csv(c)) return exp_radical_csv(rep);
  ojson j = spec_json(g);
  auto rows = ojson::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"r", r.r}, {"min_log_norm", r.min_log_norm}, {"max_log_norm", r.max_log_norm}, {"count", r.count}});
  j["rows"] = rows;
  j["alpha_upper"] = rep.alpha_upper;
  j["alpha_lower"] = rep.alpha_lower;
  j["slope"] = rep.slope;
  j["sandwich_alpha"] = sandwich_alpha(rep, 3);
  return j.dump(2) + "\n";
}

std::string cmd_profile(const Config& c) {
  check_p(c.p, 1);
  Group g = make_group(c);
  int top;
  if (c.radius) {
    top = *c.radius;
  } else if (g.finite()) {
    top = diameter(g).diameter / 2;
  } else {
    throw Error(ErrorCode::InfiniteNeedsRadius, "profile on an infinite group needs --radius");
  }
  if (top < 1) throw Error(ErrorCode::BadScale, "no admissible radius");
  std::vector<int> radii;
  for (int r = 1; r <= top; ++r) radii.push_back(r);
  ProfileCurve curve = profile_curve(g, c.p, radii);
  if (csv(c)) return profile_csv(curve);
  ojson j = spec_json(g);
  j["p"] = c.p;
  j["C_hat"] = curve.C_hat;
  auto rows = ojson::array();
  for (std::size_t i = 0; i < radii.size(); ++i)
    rows.push_back({{"r", radii[i]}, {"certified_J", curve.certified_J(i)}, {"converged", curve.vectors[i].converged}});
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

EmbeddingBundle bundle_for(const Config& c, const Group& g) {
  check_p(c.p, 2);
  BundleOptions opts;
  opts.R = c.radius;
  return build_bundle(g, c.p, opts);
}

std::string cmd_embed(const Config& c) {
  Group g = make_group(c);
  EmbeddingBundle b = bundle_for(c, g);
  AprioriBound a = apriori_bound(b);
  if (csv(c)) {
    std::string out = "k,radius,certified_J,coef,support_size\n";
    for (std::size_t k = 0; k < b.blocks.size(); ++k) {
      const auto& blk = b.blocks[k];
      out += std::to_string(k) + "," + std::to_string(blk.radius) + "," + format_double(blk.certified_J) + "," +
             format_double(blk.coef) + "," + std::to_string(blk.codes.size()) + "\n";
    }
    return out;
  }
  ojson j = ojson::parse(bundle_manifest_json(b));
  j["bound"] = {{"lip_bound", a.lip_bound},
                {"colip_bound", a.colip_bound},
                {"dist_bound", a.dist_bound},
                {"closed_form", a.closed_form}};
  return j.dump(2) + "\n";
}

std::string cmd_distort(const Config& c) {
  Group g = make_group(c);
  EmbeddingBundle b = bundle_for(c, g);
  for (int k : c.zero_block) zero_block(b, k);
  BallTable t = bfs_ball(g, kWholeGroup);
  DistortionReport rep = distortion_equivariant(b, t);
  AprioriBound a = apriori_bound(b);
  if (csv(c))
    return "R,expansion,contraction,dist,dist_bound\n" + format_double(rep.R) + "," + format_double(rep.expansion) +
           "," + format_double(rep.contraction) + "," + format_double(rep.dist) + "," + format_double(a.dist_bound) +
           "\n";
  ojson j = ojson::parse(report_json(rep));
  j["dist_bound"] = a.dist_bound;
  return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadParam, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cmd_c2(const Config& c) {
  if (c.metric.empty() == c.metric_file.empty()) throw Error(ErrorCode::BadParam, "give exactly one of --metric, --metric-file");
  MetricTable m = c.metric.empty() ? metric_from_json(read_file(c.metric_file)) : parse_metric(c.metric);
  C2Result r = exact_c2(m, c.tol);
  OptimizeOptions opts;
  opts.seed = c.seed;
  OptimizedEmbedding o = optimize_embedding(m, 2, std::max<int>(1, static_cast<int>(m.size()) - 1), opts);
  if (csv(c))
    return "points,c2,lower,upper,optimized_dist\n" + std::to_string(m.size()) + "," + format_double(r.value) + "," +
           format_double(r.lower) + "," + format_double(r.upper) + "," + format_double(o.report.dist) + "\n";
  ojson j;
  j["points"] = m.size();
  j["c2"] = r.value;
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["converged"] = r.converged;
  j["optimized_dist"] = o.report.dist;
  return j.dump(2) + "\n";
}

struct ScanRow {
  int n;
  std::uint64_t order;
  int diam;
  double C_hat, dist_emp, dist_bound, log_diam_pow, ratio;
};

std::string plot_script(const std::vector<ScanRow>& rows, double p) {
  std::string xs, emp, bound;
  for (const auto& r : rows) {
    const std::string sep = xs.empty() ? "" : ", ";
    xs += sep + format_double(std::pow(std::log(double(r.n)), 1.0 / p));
    emp += sep + format_double(r.dist_emp);
    bound += sep + format_double(r.dist_bound);
  }
  return "import matplotlib.pyplot as plt\n"
         "x = [" + xs + "]\n"
         "emp = [" + emp + "]\n"
         "bound = [" + bound + "]\n"
         "plt.plot(x, emp, 'o-', label='dist_emp')\n"
         "plt.plot(x, bound, 's--', label='dist_bound')\n"
         "plt.xlabel('(ln n)^(1/" + format_double(p) + ")')\n"
         "plt.ylabel('distortion')\n"
         "plt.legend()\n"
         "plt.savefig('scan.png', dpi=150)\n";
}

std::string cmd_scan(const Config& c) {
  check_p(c.p, 2);
  Family f = parse_family(c.family);
  if (!is_finite(f)) throw Error(ErrorCode::BadParam, "scan needs a finite family");
  std::vector<ScanRow> rows;
  for (int n : parse_n_list(c.n)) {
    Group g(make_spec(f, params(c, n)));
    BallTable t = bfs_ball(g, kWholeGroup);
    BundleOptions opts;
    EmbeddingBundle b = build_bundle(g, c.p, opts);
    DistortionReport rep = distortion_equivariant(b, t);
    AprioriBound a = apriori_bound(b);
    ScanRow r{n, g.order(), *std::max_element(t.length.begin(), t.length.end()), b.C_hat, rep.dist, a.dist_bound, 0, 0};
    r.log_diam_pow = std::pow(std::log(double(r.diam)), 1.0 / c.p);
    r.ratio = r.dist_emp / r.log_diam_pow;
    rows.push_back(r);
  }
  if (!c.plot_script.empty()) {
    std::ofstream ps(c.plot_script);
    if (!ps) throw Error(ErrorCode::BadParam, "cannot write " + c.plot_script);
    ps << plot_script(rows, c.p);
  }
  if (csv(c)) {
    std::string out = "n,order,diam,C_hat,dist_emp,dist_bound,log_diam_pow,ratio\n";
    for (const auto& r : rows)
      out += std::to_string(r.n) + "," + std::to_string(r.order) + "," + std::to_string(r.diam) + "," +
             format_double(r.C_hat) + "," + format_double(r.dist_emp) + "," + format_double(r.dist_bound) + "," +
             format_double(r.log_diam_pow) + "," + format_double(r.ratio) + "\n";
    return out;
  }
  auto j = ojson::array();
  for (const auto& r : rows)
    j.push_back({{"n", r.n},
                 {"order", r.order},
                 {"diam", r.diam},
                 {"C_hat", r.C_hat},
                 {"dist_emp", r.dist_emp},
                 {"dist_bound", r.dist_bound},
                 {"log_diam_pow", r.log_diam_pow},
                 {"ratio", r.ratio}});
  return j.dump(2) + "\n";
}

const std::set<std::string> kConfigKeys = {"command", "family", "m",      "n",           "p",          "radius",
                                           "seed",    "tol",    "cap",    "out",         "format",     "matrix",
                                           "sol_extra", "metric", "metric_file", "zero_block", "plot_script"};

std::string scalar_token(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + scalar_token(x);
    return s;
  }
  return v.dump();
}

// Turns a config file into command-line tokens; flags given on the command
// line as well are rejected by the parser as duplicates.
std::vector<std::string> expand_config(const std::string& path, std::vector<std::string> rest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  std::vector<std::string> out;
  if (j.contains("command")) {
    if (!j["command"].is_string()) throw Error(ErrorCode::ParseError, "config command must be a string");
    for (const auto& w : split(j["command"].get<std::string>(), ' '))
      if (!w.empty()) out.push_back(w);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  for (const auto& [key, v] : j.items()) {
    if (!kConfigKeys.count(key)) throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
    if (key == "command") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (key == "sol_extra") {
      if (!v.is_boolean()) throw Error(ErrorCode::ParseError, "sol_extra must be a boolean");
      if (v.get<bool>()) out.push_back(flag);
      continue;
    }
    if (key == "zero_block" && v.is_array()) {
      for (const auto& k : v) out.insert(out.end(), {flag, scalar_token(k)});
      continue;
    }
    if (v.is_object() || v.is_null()) throw Error(ErrorCode::ParseError, "config key '" + key + "' must be a scalar");
    out.insert(out.end(), {flag, scalar_token(v)});
  }
  return out;
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  // --config is expanded before parsing so the same validation applies.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" || args[i].rfind("--config=", 0) == 0) {
      std::string path;
      std::vector<std::string> rest(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(i));
      std::size_t next = i + 1;
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw Error(ErrorCode::BadParam, "--config needs a file");
        path = args[i + 1];
        next = i + 2;
      } else {
        path = args[i].substr(9);
      }
      rest.insert(rest.end(), args.begin() + static_cast<std::ptrdiff_t>(next), args.end());
      args = expand_config(path, rest);
      break;
    }
  }

  Config c;
  CLI::App app{"Distortion experiments on finite quotients of solvable groups", "lpdist"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--family", c.family, "lamplighter-fin|bs-fin|sol-fin|lamplighter-inf|bs-inf|sol-inf");
  app.add_option("--m", c.m, "lamp / base modulus");
  app.add_option("--n", c.n, "quotient parameter; comma list for scan");
  app.add_option("--p", c.p, "exponent");
  app.add_option("--radius", c.radius, "ball radius, scale R, girth cap or r_max");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--tol", c.tol, "tolerance");
  app.add_option("--cap", c.cap, "order / vertex cap");
  app.add_option("--out", c.out, "output file (default stdout)");
  app.add_option("--format", c.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--matrix", c.matrix, "SOL matrix a,b,c,d");
  app.add_flag("--sol-extra", c.sol_extra, "add (+-e2, 0) to the SOL generators");
  app.add_option("--config", "JSON config file (expanded before parsing)");

  auto* group = app.add_subcommand("group", "group arithmetic");
  group->require_subcommand(1);
  auto* group_info = group->add_subcommand("info", "parameters, order and generators");
  auto* cayley = app.add_subcommand("cayley", "Cayley graph balls");
  cayley->require_subcommand(1);
  auto* ball = cayley->add_subcommand("ball", "sphere sizes of a BFS ball");
  auto* diam = cayley->add_subcommand("diam", "diameter");
  auto* girth_cmd = app.add_subcommand("girth", "relative girth against the infinite parent");
  auto* exprad = app.add_subcommand("expradical", "log-norm scan of the SOL normal subgroup");
  auto* profile = app.add_subcommand("profile", "certified profile lower bounds");
  auto* embed = app.add_subcommand("embed", "build the embedding bundle");
  auto* distort = app.add_subcommand("distort", "measured distortion of the bundle");
  distort->add_option("--zero-block", c.zero_block, "replace block k by zero (diagnostic)");
  auto* c2 = app.add_subcommand("c2", "minimal Euclidean distortion of a small metric");
  c2->add_option("--metric", c.metric, "path:N | cycle:N | star:N | complete:N");
  c2->add_option("--metric-file", c.metric_file, "JSON {\"distances\": [[...]]}");
  auto* scan = app.add_subcommand("scan", "sweep n and tabulate distortion");
  scan->add_option("--plot-script", c.plot_script, "write a matplotlib script here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  std::string text;
  if (group_info->parsed()) text = cmd_group_info(c);
  else if (ball->parsed()) text = cmd_cayley_ball(c);
  else if (diam->parsed()) text = cmd_cayley_diam(c);
  else if (girth_cmd->parsed()) text = cmd_girth(c);
  else if (exprad->parsed()) text = cmd_expradical(c);
  else if (profile->parsed()) text = cmd_profile(c);
  else if (embed->parsed()) text = cmd_embed(c);
  else if (distort->parsed()) text = cmd_distort(c);
  else if (c2->parsed()) text = cmd_c2(c);
  else if (scan->parsed()) text = cmd_scan(c);

  if (c.out.empty()) {
    out << text;
  } else {
    std::ofstream f(c.out);
    if (!f) throw Error(ErrorCode::BadParam, "cannot write " + c.out);
    f << text;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lpdist
