#include "sparsetomo/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sparsetomo/reduction.hpp"
#include "sparsetomo/uniqueness.hpp"

namespace sparsetomo {

std::string to_string(SamplingMode m) {
  return m == SamplingMode::distinct ? "distinct" : "with_replacement";
}

std::string to_string(VectorKind k) { return k == VectorKind::binary ? "binary" : "nonnegative"; }

ParticleVector sample_particles(Index n_cells, std::size_t k, VectorKind kind, SamplingMode mode,
                                Rng& rng) {
  if (n_cells < 0) throw DomainError("invalid_dimensions", "negative cell count");
  const auto n = static_cast<std::uint64_t>(n_cells);
  ParticleVector x;
  x.kind = kind;
  if (k == 0) return x;
  if (n == 0) throw DomainError("invalid_sparsity", "cannot place particles on zero cells");

  if (mode == SamplingMode::distinct) {
    if (k > n) {
      throw DomainError("invalid_sparsity", "distinct sampling needs k <= n_cells, got k = " +
                                                std::to_string(k) + ", n = " + std::to_string(n));
    }
    // Floyd's subset sampling
    std::set<std::uint64_t> chosen;
    for (std::uint64_t j = n - k; j < n; ++j) {
      const std::uint64_t t = rng.below(j + 1);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    for (std::uint64_t c : chosen) x.support.push_back(static_cast<Index>(c));
    x.values.assign(x.support.size(), 1.0);
  } else {
    for (std::size_t p = 0; p < k; ++p) x.support.push_back(static_cast<Index>(rng.below(n)));
    x.values.assign(k, 1.0);
    x = x.merged();
  }
  if (kind == VectorKind::nonnegative) {
    for (double& v : x.values) v = rng.uniform_upper_closed();
  }
  return x;
}

PhaseChecks PhaseChecks::parse(const std::string& list) {
  if (list == "all") return {};
  PhaseChecks c{false, false, false, false};
  std::stringstream ss(list);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    if (item == "rank") {
      c.rank = true;
    } else if (item == "unique_nonneg") {
      c.unique_nonneg = true;
    } else if (item == "unique_box") {
      c.unique_box = true;
    } else if (item == "dims") {
      c.dims = true;
    } else {
      throw DomainError("invalid_checks", "unknown check '" + item + "'");
    }
    any = true;
  }
  if (!any) throw DomainError("invalid_checks", "empty check list");
  return c;
}

std::string PhaseChecks::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(rank, "rank");
  add(unique_nonneg, "unique_nonneg");
  add(unique_box, "unique_box");
  add(dims, "dims");
  return out;
}

void PhaseGridSpec::validate() const {
  if (trials == 0) throw DomainError("invalid_trials", "trials must be >= 1");
  if (probes == 0) throw DomainError("invalid_probes", "probes must be >= 1");
  if (d_grid.empty()) throw DomainError("invalid_grid", "d grid is empty");
  for (double rho : rho_grid) {
    if (!(rho > 0.0 && rho <= 4.0)) {
      throw DomainError("invalid_rho", "rho must lie in (0, 4], got " + format_double(rho));
    }
  }
  if (checks.unique_box && mode == SamplingMode::with_replacement) {
    throw DomainError("invalid_checks",
                      "unique_box needs distinct sampling (multiplicities leave the unit box)");
  }
  if (perturbation) perturbation->validate();
  for (int d : d_grid) {
    GeometrySpec g = geometry;
    g.d = d;
    g.validate();
    for (double rho : rho_grid) {
      const std::size_t k = sparsity(d, rho);
      const double cells = g.kind == GeometryKind::hex2d ? (3.0 * d * d + 1.0) / 4.0
                                                         : std::pow(static_cast<double>(d), g.dimension());
      if (mode == SamplingMode::distinct && static_cast<double>(k) > cells) {
        throw DomainError("invalid_sparsity", "k = " + std::to_string(k) +
                                                  " exceeds the number of cells for d = " +
                                                  std::to_string(d));
      }
    }
  }
}

std::size_t PhaseGridSpec::sparsity(int d, double rho) const {
  const double scale = std::pow(static_cast<double>(d), geometry.dimension() - 1);
  // the small offset keeps grid values like 0.55 * 100 from flooring to 54
  return static_cast<std::size_t>(std::floor(rho * scale + 1e-9));
}

unsigned default_threads() {
  if (const char* env = std::getenv("SPARSETOMO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct TrialOutcome {
  bool rank_ok = false;
  bool unique_nonneg = false;
  bool unique_box = false;
  std::size_t inconclusive = 0;
  double m_red = 0;
  double n_red = 0;
};

bool unique_by_lp(const IncidenceSystem& a, const ParticleVector& x, Bounds bounds,
                  std::size_t probes, std::uint64_t seed, std::size_t& inconclusive) {
  VerifyOptions opt;
  opt.probes = probes;
  opt.seed = seed;
  const UniquenessVerdict v = verify_uniqueness(a, x, bounds, opt);
  if (v.status == UniquenessStatus::inconclusive) ++inconclusive;
  return v.status == UniquenessStatus::unique;
}

TrialOutcome run_trial(const IncidenceSystem& a, const PhaseGridSpec& spec, std::size_t k,
                       std::uint64_t seed) {
  Rng rng(seed);
  const ParticleVector x = sample_particles(a.n_cells(), k, spec.vector_kind, spec.mode, rng);
  const ReducedSystem red = reduce(a, matvec(a, x));
  TrialOutcome out;
  out.m_red = red.m_red();
  out.n_red = red.n_red();
  const bool need_cert = spec.checks.rank || spec.checks.unique_nonneg || spec.checks.unique_box;
  // a full-rank reduced system has a single affine solution, so the LP
  // probes can be skipped
  const bool certified = need_cert && rank_certificate(red) == Certificate::certified_unique;
  out.rank_ok = certified;
  if (spec.checks.unique_nonneg) {
    out.unique_nonneg = certified || unique_by_lp(a, x, Bounds::nonneg, spec.probes,
                                                  derive_seed(seed, {1}), out.inconclusive);
  }
  if (spec.checks.unique_box) {
    out.unique_box = certified || unique_by_lp(a, x, Bounds::box01, spec.probes,
                                               derive_seed(seed, {2}), out.inconclusive);
  }
  return out;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

double standard_error(const std::vector<double>& v, double mu) {
  if (v.size() < 2) return 0.0;
  long double ss = 0;
  for (double x : v) ss += (x - mu) * (x - mu);
  const auto n = static_cast<long double>(v.size());
  return static_cast<double>(std::sqrt(ss / (n - 1) / n));
}

}  // namespace

std::vector<PhaseGridCell> run_phase_grid(const PhaseGridSpec& spec) {
  spec.validate();
  const unsigned threads = spec.threads ? spec.threads : default_threads();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<PhaseGridCell> cells;
  for (std::size_t di = 0; di < spec.d_grid.size(); ++di) {
    const int d = spec.d_grid[di];
    GeometrySpec g = spec.geometry;
    g.d = d;
    IncidenceSystem a = build(g);
    if (spec.perturbation) {
      PerturbationSpec p = *spec.perturbation;
      p.seed = derive_seed(p.seed, {static_cast<std::uint64_t>(d)});
      a = perturb(a, p);
    }
    const std::size_t n_rho = spec.rho_grid.size();
    std::vector<TrialOutcome> outcomes(n_rho * spec.trials);
    parallel_for(outcomes.size(), threads, [&](std::size_t idx) {
      const std::size_t ri = idx / spec.trials;
      const std::size_t t = idx % spec.trials;
      const std::size_t k = spec.sparsity(d, spec.rho_grid[ri]);
      outcomes[idx] = run_trial(a, spec, k, derive_seed(spec.master_seed, {di, ri, t}));
    });
    for (std::size_t ri = 0; ri < n_rho; ++ri) {
      PhaseGridCell cell;
      cell.d = d;
      cell.rho = spec.rho_grid[ri];
      cell.k = spec.sparsity(d, cell.rho);
      cell.trials = spec.trials;
      std::size_t rank = 0, nonneg = 0, box = 0;
      std::vector<double> m_red, n_red;
      for (std::size_t t = 0; t < spec.trials; ++t) {
        const TrialOutcome& o = outcomes[ri * spec.trials + t];
        rank += o.rank_ok;
        nonneg += o.unique_nonneg;
        box += o.unique_box;
        cell.inconclusive += o.inconclusive;
        m_red.push_back(o.m_red);
        n_red.push_back(o.n_red);
      }
      const auto tr = static_cast<double>(spec.trials);
      cell.frac_rank_ok = spec.checks.rank ? rank / tr : nan;
      cell.frac_unique_nonneg = spec.checks.unique_nonneg ? nonneg / tr : nan;
      cell.frac_unique_box = spec.checks.unique_box ? box / tr : nan;
      if (spec.checks.dims) {
        cell.mean_m_red = mean(m_red);
        cell.se_m_red = standard_error(m_red, cell.mean_m_red);
        cell.mean_n_red = mean(n_red);
        cell.se_n_red = standard_error(n_red, cell.mean_n_red);
      } else {
        cell.mean_m_red = cell.se_m_red = cell.mean_n_red = cell.se_n_red = nan;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

namespace {

std::string csv_field(double v) { return std::isnan(v) ? std::string() : format_double(v); }

nlohmann::json json_field(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

nlohmann::json spec_json(const PhaseGridSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.geometry.kind);
  j["cameras"] = s.geometry.effective_cameras();
  j["d_grid"] = s.d_grid;
  j["rho_grid"] = s.rho_grid;
  j["trials"] = s.trials;
  j["vector_kind"] = to_string(s.vector_kind);
  j["sampling"] = to_string(s.mode);
  j["nonnegative_values"] = "uniform(0,1]";
  j["checks"] = s.checks.to_string();
  j["probes"] = s.probes;
  if (s.perturbation) {
    j["perturbation"] = {{"low", s.perturbation->low},
                         {"high", s.perturbation->high},
                         {"seed", s.perturbation->seed},
                         {"normalize_columns", s.perturbation->normalize_columns}};
  } else {
    j["perturbation"] = nullptr;
  }
  return j;
}

}  // namespace

void emit_grid(std::ostream& out, const std::vector<PhaseGridCell>& cells, GridFormat format,
               const PhaseGridSpec* spec) {
  if (format == GridFormat::csv) {
    out << kGridCsvHeader << '\n';
    for (const PhaseGridCell& c : cells) {
      out << c.d << ',' << format_double(c.rho) << ',' << c.k << ',' << c.trials << ','
          << csv_field(c.frac_rank_ok) << ',' << csv_field(c.frac_unique_nonneg) << ','
          << csv_field(c.frac_unique_box) << ',' << csv_field(c.mean_m_red) << ','
          << csv_field(c.se_m_red) << ',' << csv_field(c.mean_n_red) << ','
          << csv_field(c.se_n_red) << '\n';
    }
    return;
  }
  nlohmann::json doc;
  if (spec) {
    doc["spec"] = spec_json(*spec);
    nlohmann::json seeds;
    seeds["rng"] = kRngAlgorithm;
    seeds["master_seed"] = spec->master_seed;
    seeds["trial_seed"] = "derive_seed(master_seed, {d_index, rho_index, trial})";
    seeds["perturbation_seed"] = "derive_seed(perturbation.seed, {d})";
    doc["seeds"] = seeds;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const PhaseGridCell& c : cells) {
    rows.push_back({{"d", c.d},
                    {"rho", c.rho},
                    {"k", c.k},
                    {"trials", c.trials},
                    {"frac_rank_ok", json_field(c.frac_rank_ok)},
                    {"frac_unique_nonneg", json_field(c.frac_unique_nonneg)},
                    {"frac_unique_box", json_field(c.frac_unique_box)},
                    {"mean_m_red", json_field(c.mean_m_red)},
                    {"se_m_red", json_field(c.se_m_red)},
                    {"mean_n_red", json_field(c.mean_n_red)},
                    {"se_n_red", json_field(c.se_n_red)},
                    {"inconclusive", c.inconclusive}});
  }
  doc["cells"] = rows;
  out << doc.dump(2) << '\n';
}

void emit_grid(const std::string& path, const std::vector<PhaseGridCell>& cells,
               GridFormat format, const PhaseGridSpec* spec) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("unwritable", "cannot open '" + path + "' for writing");
  emit_grid(f, cells, format, spec);
  f.flush();
  if (!f) throw DomainError("unwritable", "failed writing '" + path + "'");
}

}  // namespace sparsetomo
