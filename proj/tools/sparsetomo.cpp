// sparsetomo: command line front end.
//
// Exit status: 0 success, 1 domain rejection, 2 usage error.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "sparsetomo/analytics.hpp"
#include "sparsetomo/core.hpp"
#include "sparsetomo/experiments.hpp"
#include "sparsetomo/geometry.hpp"
#include "sparsetomo/reduction.hpp"
#include "sparsetomo/uniqueness.hpp"

using namespace sparsetomo;
using nlohmann::json;

namespace {

struct Context {
  std::string subcommand;
  std::vector<std::string> args;
  bool json_errors = false;
};

json fingerprint(const IncidenceSystem& a) {
  std::ostringstream hash;
  hash << std::hex << content_hash(a);
  return {{"m", a.n_rays()},
          {"n", a.n_cells()},
          {"l", a.left_degree()},
          {"nnz", a.nnz()},
          {"content_hash", hash.str()}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("unwritable", "cannot write '" + path + "'");
  return out;
}

void write_manifest(const Context& ctx, const std::string& out_path, std::optional<std::uint64_t> seed,
                    const json& geometry) {
  json m;
  m["subcommand"] = ctx.subcommand;
  m["args"] = ctx.args;
  m["seed"] = seed ? json(*seed) : json(nullptr);
  m["rng"] = kRngAlgorithm;
  m["geometry"] = geometry;
  m["version"] = SPARSETOMO_VERSION;
  m["timestamp"] = utc_timestamp();
  auto out = open_output(out_path + ".manifest.json");
  out << m.dump(2) << '\n';
}

GeometryKind parse_kind(const std::string& s) {
  if (s == "hex2d") return GeometryKind::hex2d;
  if (s == "square2d") return GeometryKind::square2d;
  if (s == "cube3d") return GeometryKind::cube3d;
  throw DomainError("invalid_kind", "unknown geometry kind '" + s + "'");
}

std::optional<PerturbationSpec> parse_perturbation(const std::string& text, std::uint64_t seed,
                                                   bool normalize) {
  if (text.empty()) return std::nullopt;
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw DomainError("invalid_interval", "perturbation must be given as LOW,HIGH");
  }
  PerturbationSpec p;
  try {
    p.low = std::stod(text.substr(0, comma));
    p.high = std::stod(text.substr(comma + 1));
  } catch (const std::exception&) {
    throw DomainError("invalid_interval", "cannot parse perturbation interval '" + text + "'");
  }
  p.seed = seed;
  p.normalize_columns = normalize;
  p.validate();
  return p;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream in(item);
    in.imbue(std::locale::classic());
    T v{};
    if (!(in >> v) || !in.eof()) throw DomainError("invalid_list", "cannot parse " + what + " entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

IncidenceSystem load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("unreadable", "cannot read '" + path + "'");
  return read_triplets(in);
}

int emit(std::ostream& out, const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    out << text;
  } else {
    auto f = open_output(out_path);
    f << text;
  }
  return 0;
}

// --- subcommands -----------------------------------------------------------

struct GenMatrix {
  std::string kind = "hex2d";
  int d = 0;
  int cameras = 0;
  std::string perturb;
  std::uint64_t seed = 0;
  bool no_normalize = false;
  std::string out;

  int run(const Context& ctx) const {
    GeometrySpec g{parse_kind(kind), d, cameras};
    IncidenceSystem a = build(g);
    const auto p = parse_perturbation(perturb, seed, !no_normalize);
    if (p) a = sparsetomo::perturb(a, *p);
    std::ostringstream os;
    write_triplets(os, a);
    emit(std::cout, out, os.str());
    if (!out.empty()) write_manifest(ctx, out, p ? std::optional(seed) : std::nullopt, fingerprint(a));
    return 0;
  }
};

struct Reduce {
  std::string matrix, rhs, out;

  int run(const Context& ctx) const {
    const IncidenceSystem a = load_matrix(matrix);
    std::ifstream in(rhs);
    if (!in) throw DomainError("unreadable", "cannot read '" + rhs + "'");
    in.imbue(std::locale::classic());
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw DomainError("invalid_rhs", "non-numeric entry in '" + rhs + "'");
    const ReducedSystem red = reduce(a, MeasurementVector::from_values(std::move(values)));
    {
      auto f = open_output(out);
      write_triplets(f, red.system);
    }
    json s{{"m_red", red.m_red()},
           {"n_red", red.n_red()},
           {"kept_rays", red.kept_rays},
           {"kept_cells", red.kept_cells},
           {"certificate", to_string(rank_certificate(red))}};
    std::cout << s.dump(2) << '\n';
    write_manifest(ctx, out, std::nullopt, fingerprint(a));
    return 0;
  }
};

struct Curves {
  std::string kind = "hex2d";
  std::string d_list;
  std::string criteria = "all";
  int cameras = 0;
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  bool real = false;
  std::string out;

  int run(const Context& ctx) const {
    const GeometryKind gk = parse_kind(kind);
    const auto ds = parse_list<int>(d_list, "d");
    if (ds.empty()) throw DomainError("invalid_list", "empty d list");
    bool want[5] = {true, true, true, true, true};
    if (criteria != "all") {
      std::fill(std::begin(want), std::end(want), false);
      for (const std::string& c : parse_list<std::string>(criteria, "criterion")) {
        if (c == "delta") want[0] = want[1] = true;
        else if (c == "crit") want[2] = true;
        else if (c == "opt") want[3] = true;
        else if (c == "inv") want[4] = true;
        else throw DomainError("invalid_criterion", "unknown criterion '" + c + "'");
      }
    }
    std::ostringstream os;
    os << "d,k_delta,k_tilde_delta,k_crit,k_opt,k_inv\n";
    json geometries = json::array();
    for (int d : ds) {
      GeometrySpec g{gk, d, cameras};
      g.validate();
      DimsSource src;
      if (gk == GeometryKind::hex2d) {
        src = analytic_hex(d);
      } else if (gk == GeometryKind::cube3d) {
        src = analytic_cube(d);
      } else {
        const IncidenceSystem a = build(g);
        geometries.push_back(fingerprint(a));
        src = empirical_source(a, trials, derive_seed(seed, {static_cast<std::uint64_t>(d)}));
      }
      const CriticalCurves c = critical_curves(src, d);
      const std::optional<double> vals[5] = {c.k_delta, c.k_tilde_delta, c.k_crit, c.k_opt, c.k_inv};
      os << d;
      for (int i = 0; i < 5; ++i) {
        os << ',';
        if (want[i] && vals[i]) os << (real ? format_double(*vals[i]) : format_double(std::floor(*vals[i])));
      }
      os << '\n';
    }
    emit(std::cout, out, os.str());
    if (!out.empty()) {
      write_manifest(ctx, out, gk == GeometryKind::square2d ? std::optional(seed) : std::nullopt, geometries);
    }
    return 0;
  }
};

struct TailBoundCmd {
  int d = 0;
  double k = 0;
  double deviation = 0;

  int run(const Context&) const {
    const TailBound t = tail_bound(d, k, deviation);
    json j{{"d", d},
           {"k", k},
           {"deviation", deviation},
           {"expected_zero_rays", hex_rays_zero(d, k)},
           {"p_max", t.p_max},
           {"exact", t.exact},
           {"asymptotic", t.asymptotic},
           {"exact_rate", t.exact_rate},
           {"asymptotic_rate", t.asymptotic_rate}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
};

struct Verify {
  std::string matrix;
  std::string kind;
  int d = 0;
  int cameras = 0;
  std::string support;
  std::string values;
  bool binary = false;
  std::string perturb;
  std::uint64_t perturb_seed = 0;
  std::size_t probes = 5;
  std::uint64_t seed = 0;
  bool oracle = false;
  std::string out;

  int run(const Context& ctx) const {
    if (matrix.empty() == kind.empty()) {
      throw DomainError("invalid_source", "give exactly one of --matrix or --kind");
    }
    IncidenceSystem a = matrix.empty() ? build(GeometrySpec{parse_kind(kind), d, cameras}) : load_matrix(matrix);
    const auto p = parse_perturbation(perturb, perturb_seed, true);
    if (p) a = sparsetomo::perturb(a, *p);
    ParticleVector x;
    x.support = parse_list<Index>(support, "support");
    if (values.empty()) {
      x.values.assign(x.support.size(), 1.0);
    } else {
      x.values = parse_list<double>(values, "value");
      x.kind = VectorKind::nonnegative;
      if (x.values.size() != x.support.size()) {
        throw DomainError("invalid_dimensions", "--values must match --support in length");
      }
      for (double v : x.values) {
        if (!(v > 0.0)) throw DomainError("nonpositive_value", "particle values must be positive");
      }
    }
    x = x.merged();
    const Bounds bounds = binary ? Bounds::box01 : Bounds::nonneg;
    VerifyOptions opt;
    opt.probes = probes;
    opt.seed = seed;
    const UniquenessVerdict v = verify_uniqueness(a, x, bounds, opt);
    const ReducedSystem red = reduce(a, matvec(a, x));
    json j{{"status", to_string(v.status)},
           {"bounds", to_string(bounds)},
           {"probes_used", v.probes_used},
           {"objective_gap", v.objective_gap},
           {"m_red", red.m_red()},
           {"n_red", red.n_red()},
           {"certificate", to_string(rank_certificate(red))},
           {"witness", v.witness ? json(*v.witness) : json(nullptr)}};
    if (!v.diagnostic.empty()) j["diagnostic"] = v.diagnostic;
    if (oracle) {
      const OracleVerdict o = exact_unique_oracle(a, x, bounds);
      j["oracle"] = {{"unique", o.unique}, {"vertices", o.vertices},
                     {"witness", o.witness ? json(*o.witness) : json(nullptr)}};
    }
    emit(std::cout, out, j.dump(2) + "\n");
    if (!out.empty()) write_manifest(ctx, out, seed, fingerprint(a));
    return 0;
  }
};

struct Phase {
  std::string kind = "hex2d";
  std::string d_list;
  int cameras = 0;
  double rho_min = 0.05, rho_max = 4.0, rho_step = 0.05;
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  std::string checks = "all";
  std::string perturb;
  std::uint64_t perturb_seed = 0;
  std::string vector_kind = "binary";
  std::string sampling = "distinct";
  std::size_t probes = 5;
  unsigned threads = 0;
  std::string format = "csv";
  std::string out;

  int run(const Context& ctx) const {
    PhaseGridSpec s;
    s.geometry = {parse_kind(kind), 0, cameras};
    s.d_grid = parse_list<int>(d_list, "d");
    if (!(rho_step > 0.0) || rho_max < rho_min) {
      throw DomainError("invalid_rho", "need rho-step > 0 and rho-max >= rho-min");
    }
    const auto count = static_cast<std::size_t>(std::floor((rho_max - rho_min) / rho_step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      // snap to 12 decimals so grids like 0.1 + 2*0.05 print as written
      s.rho_grid.push_back(std::round((rho_min + static_cast<double>(i) * rho_step) * 1e12) / 1e12);
    }
    s.trials = trials;
    s.master_seed = seed;
    s.perturbation = parse_perturbation(perturb, perturb_seed, true);
    if (vector_kind == "binary") s.vector_kind = VectorKind::binary;
    else if (vector_kind == "nonnegative") s.vector_kind = VectorKind::nonnegative;
    else throw DomainError("invalid_vector_kind", "unknown vector kind '" + vector_kind + "'");
    if (sampling == "distinct") s.mode = SamplingMode::distinct;
    else if (sampling == "with_replacement") s.mode = SamplingMode::with_replacement;
    else throw DomainError("invalid_sampling", "unknown sampling mode '" + sampling + "'");
    s.checks = PhaseChecks::parse(checks);
    s.probes = probes;
    s.threads = threads;
    GridFormat fmt;
    if (format == "csv") fmt = GridFormat::csv;
    else if (format == "json") fmt = GridFormat::json;
    else throw DomainError("invalid_format", "unknown format '" + format + "'");
    s.validate();
    const auto cells = run_phase_grid(s);
    std::ostringstream os;
    emit_grid(os, cells, fmt, &s);
    emit(std::cout, out, os.str());
    if (!out.empty()) {
      json geometries = json::array();
      for (int d : s.d_grid) {
        IncidenceSystem a = build(GeometrySpec{s.geometry.kind, d, cameras});
        if (s.perturbation) {
          PerturbationSpec p = *s.perturbation;
          p.seed = derive_seed(p.seed, {static_cast<std::uint64_t>(d)});
          a = sparsetomo::perturb(a, p);
        }
        geometries.push_back(fingerprint(a));
      }
      write_manifest(ctx, out, seed, geometries);
    }
    return 0;
  }
};

struct Wendel {
  std::int64_t n = 0, m = 0;
  int run(const Context&) const {
    const WendelProbability w = wendel(n, m);
    std::cout << w.fraction() << '\n' << format_double(w.value) << '\n';
    return 0;
  }
};

void report(const Context& ctx, const std::string& code, const std::string& message) {
  if (ctx.json_errors) {
    std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
  } else {
    std::cerr << "sparsetomo: " << message << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  for (int i = 1; i < argc; ++i) ctx.args.emplace_back(argv[i]);
  ctx.json_errors = std::find(ctx.args.begin(), ctx.args.end(), "--json-errors") != ctx.args.end();

  CLI::App app{"Sparse tomographic reconstruction: uniqueness analysis and experiments"};
  app.set_version_flag("--version", SPARSETOMO_VERSION);
  app.add_flag("--json-errors", ctx.json_errors, "Report errors as JSON on stderr");
  app.require_subcommand(1);

  GenMatrix gen;
  auto* g = app.add_subcommand("gen-matrix", "Write a projection matrix in triplet format");
  g->add_option("--kind", gen.kind, "hex2d, square2d or cube3d")->required();
  g->add_option("--d", gen.d, "Resolution parameter")->required();
  g->add_option("--cameras", gen.cameras, "Camera count (square2d: 3..8)");
  g->add_option("--perturb", gen.perturb, "Perturbation interval LOW,HIGH");
  g->add_option("--seed", gen.seed, "Perturbation seed");
  g->add_flag("--no-normalize", gen.no_normalize, "Keep perturbed columns unnormalized");
  g->add_option("-o,--out", gen.out, "Output file (default stdout)");

  Reduce red;
  auto* r = app.add_subcommand("reduce", "Reduce a system to the measured rays");
  r->add_option("--matrix", red.matrix, "Triplet file")->required();
  r->add_option("--rhs", red.rhs, "Whitespace separated measurements")->required();
  r->add_option("-o,--out", red.out, "Reduced triplet file")->required();

  Curves cur;
  auto* c = app.add_subcommand("curves", "Critical sparsity values as CSV");
  c->add_option("--kind", cur.kind, "hex2d, square2d or cube3d")->required();
  c->add_option("--d-list", cur.d_list, "Comma separated resolutions")->required();
  c->add_option("--criteria", cur.criteria, "all or a subset of delta,crit,opt,inv");
  c->add_option("--cameras", cur.cameras, "Camera count (square2d)");
  c->add_option("--trials", cur.trials, "Monte Carlo trials per k (square2d)");
  c->add_option("--seed", cur.seed, "Monte Carlo seed (square2d)");
  c->add_flag("--real", cur.real, "Print unrounded roots");
  c->add_option("-o,--out", cur.out, "Output file (default stdout)");

  TailBoundCmd tb;
  auto* t = app.add_subcommand("tail-bound", "Deviation bound for zero measurements (hexagon)");
  t->add_option("--d", tb.d, "Odd resolution")->required();
  t->add_option("--k", tb.k, "Sparsity")->required();
  t->add_option("--deviation", tb.deviation, "Deviation")->required();

  Verify ver;
  auto* v = app.add_subcommand("verify", "Uniqueness verdict for one particle configuration");
  v->add_option("--matrix", ver.matrix, "Triplet file");
  v->add_option("--kind", ver.kind, "Build the geometry instead of reading a file");
  v->add_option("--d", ver.d, "Resolution (with --kind)");
  v->add_option("--cameras", ver.cameras, "Camera count (with --kind)");
  v->add_option("--support", ver.support, "Comma separated 0-based cell indices")->required();
  v->add_option("--values", ver.values, "Comma separated positive values (default all ones)");
  v->add_flag("--binary", ver.binary, "Use the box [0,1] feasible set");
  v->add_option("--perturb", ver.perturb, "Perturbation interval LOW,HIGH");
  v->add_option("--perturb-seed", ver.perturb_seed, "Perturbation seed");
  v->add_option("--probes", ver.probes, "Random objectives");
  v->add_option("--seed", ver.seed, "Objective seed");
  v->add_flag("--oracle", ver.oracle, "Also run the exact oracle (small systems)");
  v->add_option("-o,--out", ver.out, "Output file (default stdout)");

  Phase ph;
  auto* p = app.add_subcommand("phase", "Monte Carlo phase transition grid");
  p->add_option("--kind", ph.kind, "hex2d, square2d or cube3d")->required();
  p->add_option("--d-list", ph.d_list, "Comma separated resolutions")->required();
  p->add_option("--cameras", ph.cameras, "Camera count (square2d)");
  p->add_option("--rho-min", ph.rho_min, "First rho");
  p->add_option("--rho-max", ph.rho_max, "Last rho");
  p->add_option("--rho-step", ph.rho_step, "Rho increment");
  p->add_option("--trials", ph.trials, "Instances per grid point");
  p->add_option("--seed", ph.seed, "Master seed");
  p->add_option("--checks", ph.checks, "all or a subset of rank,unique_nonneg,unique_box,dims");
  p->add_option("--perturb", ph.perturb, "Perturbation interval LOW,HIGH");
  p->add_option("--perturb-seed", ph.perturb_seed, "Perturbation seed");
  p->add_option("--vector", ph.vector_kind, "binary or nonnegative");
  p->add_option("--sampling", ph.sampling, "distinct or with_replacement");
  p->add_option("--probes", ph.probes, "Random objectives per LP check");
  p->add_option("--threads", ph.threads, "Worker threads (default SPARSETOMO_THREADS or all cores)");
  p->add_option("--format", ph.format, "csv or json");
  p->add_option("-o,--out", ph.out, "Output file (default stdout)");

  Wendel wen;
  auto* w = app.add_subcommand("wendel", "Exact Wendel probability Pr(n, m)");
  w->add_option("--n", wen.n, "Points")->required();
  w->add_option("--m", wen.m, "Dimension")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report(ctx, "usage", e.what());
    return 2;
  }

  try {
    ctx.subcommand = app.get_subcommands().front()->get_name();
    if (*g) return gen.run(ctx);
    if (*r) return red.run(ctx);
    if (*c) return cur.run(ctx);
    if (*t) return tb.run(ctx);
    if (*v) return ver.run(ctx);
    if (*p) return ph.run(ctx);
    if (*w) return wen.run(ctx);
  } catch (const DomainError& e) {
    report(ctx, e.code(), e.what());
    return 1;
  }
  return 2;
}
