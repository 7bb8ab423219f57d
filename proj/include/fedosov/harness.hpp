#pragma once

// Configuration-driven scenario runner behind the `fedosov` command line tool.
// Every scenario draws its data from the seed alone and returns a Report; no
// state is shared between runs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fedosov/fedosov.hpp"
#include "fedosov/flatten.hpp"
#include "fedosov/gravity.hpp"
#include "fedosov/random.hpp"

namespace fedosov::harness {

using Json = nlohmann::ordered_json;

// Bad configuration: the tool exits with status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Backend { exact, floating };

enum class NegativeControl { none, flip_bundle_curvature, reversed_involution };

inline constexpr const char* kScenarios[] = {"core-identities", "flat-closed-form", "trace-theorem", "action"};

struct RunConfig {
  std::string scenario = "core-identities";
  int dim = 2;
  int bandwidth = 1;  // K
  int order = 6;      // N, Weyl degree with deg h = 2
  int order_eps = 2;  // E
  int rank = 2;
  Backend backend = Backend::exact;
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
  std::vector<ActionKind> actions{std::begin(kAllActions), std::end(kAllActions)};
  std::string out;
  int draws = 0;  // 0: per-check defaults
  bool lorentzian = true;
  bool curved = true;
  int mode_pool = 2;
  NegativeControl control = NegativeControl::none;
  bool timing = false;

  void validate() const {
    bool known = false;
    for (const char* s : kScenarios) known = known || scenario == s;
    if (!known) throw ConfigError("unknown scenario '" + scenario + "'");
    if (dim < 2 || dim > 8 || dim % 2) throw ConfigError("dim must be even and between 2 and 8");
    if (order < 2) throw ConfigError("order_h (N) must be at least 2");
    if (order_eps < 0) throw ConfigError("order_eps (E) must be non-negative");
    if (bandwidth < 0) throw ConfigError("bandwidth (K) must be non-negative");
    if (rank < 1 || rank > 8) throw ConfigError("rank must be between 1 and 8");
    if (backend == Backend::floating && !(tolerance > 0)) throw ConfigError("float backend needs tolerance > 0");
    if (draws < 0) throw ConfigError("draws must be non-negative");
    if (mode_pool < 1) throw ConfigError("mode_pool must be at least 1");
    if (actions.empty()) throw ConfigError("actions must not be empty");
  }

  int draws_or(int fallback) const { return draws > 0 ? draws : fallback; }
  FedosovOptions options() const { return {.flip_bundle_curvature = control == NegativeControl::flip_bundle_curvature}; }
  FormInvolution involution() const {
    return control == NegativeControl::reversed_involution ? FormInvolution::reversed : FormInvolution::standard;
  }
};

inline std::string to_string(Backend b) { return b == Backend::exact ? "exact" : "float"; }

inline std::string to_string(NegativeControl c) {
  switch (c) {
    case NegativeControl::none: return "none";
    case NegativeControl::flip_bundle_curvature: return "flip-bundle-curvature";
    case NegativeControl::reversed_involution: return "reversed-involution";
  }
  return "?";
}

namespace detail {

template <class T>
T get_as(const Json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

inline int get_int(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return get_as<int>(v, key);
}

}  // namespace detail

// Overlay the keys of `j` onto `cfg`. Unknown keys are errors.
inline void apply_json(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "scenario") {
      cfg.scenario = detail::get_as<std::string>(v, key);
    } else if (key == "dim") {
      cfg.dim = detail::get_int(v, key);
    } else if (key == "bandwidth") {
      cfg.bandwidth = detail::get_int(v, key);
    } else if (key == "order_h") {
      cfg.order = detail::get_int(v, key);
    } else if (key == "order_eps") {
      cfg.order_eps = detail::get_int(v, key);
    } else if (key == "rank") {
      cfg.rank = detail::get_int(v, key);
    } else if (key == "backend") {
      const auto s = detail::get_as<std::string>(v, key);
      if (s == "exact") cfg.backend = Backend::exact;
      else if (s == "float") cfg.backend = Backend::floating;
      else throw ConfigError("backend must be 'exact' or 'float'");
    } else if (key == "tolerance") {
      if (!v.is_number()) throw ConfigError("config key 'tolerance' must be a number");
      cfg.tolerance = v.get<double>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "actions") {
      cfg.actions.clear();
      if (v.is_string() && v.get<std::string>() == "all") {
        cfg.actions.assign(std::begin(kAllActions), std::end(kAllActions));
        continue;
      }
      if (!v.is_array()) throw ConfigError("actions must be \"all\" or a list of action names");
      for (const auto& a : v) {
        const auto k = parse_action_kind(detail::get_as<std::string>(a, key));
        if (!k) throw ConfigError("unknown action '" + a.dump() + "'");
        cfg.actions.push_back(*k);
      }
    } else if (key == "out") {
      cfg.out = detail::get_as<std::string>(v, key);
    } else if (key == "draws") {
      cfg.draws = detail::get_int(v, key);
    } else if (key == "signature") {
      const auto s = detail::get_as<std::string>(v, key);
      if (s != "lorentzian" && s != "euclidean") throw ConfigError("signature must be 'lorentzian' or 'euclidean'");
      cfg.lorentzian = s == "lorentzian";
    } else if (key == "background") {
      const auto s = detail::get_as<std::string>(v, key);
      if (s != "curved" && s != "flat") throw ConfigError("background must be 'curved' or 'flat'");
      cfg.curved = s == "curved";
    } else if (key == "mode_pool") {
      cfg.mode_pool = detail::get_int(v, key);
    } else if (key == "negative_control") {
      const auto s = detail::get_as<std::string>(v, key);
      if (s == "none") cfg.control = NegativeControl::none;
      else if (s == "flip-bundle-curvature") cfg.control = NegativeControl::flip_bundle_curvature;
      else if (s == "reversed-involution") cfg.control = NegativeControl::reversed_involution;
      else throw ConfigError("unknown negative_control '" + s + "'");
    } else if (key == "timing") {
      if (!v.is_boolean()) throw ConfigError("config key 'timing' must be a boolean");
      cfg.timing = v.get<bool>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

// The output path is left out so that two runs writing to different files
// still produce identical reports.
inline Json to_json(const RunConfig& cfg) {
  Json j;
  j["scenario"] = cfg.scenario;
  j["dim"] = cfg.dim;
  j["bandwidth"] = cfg.bandwidth;
  j["order_h"] = cfg.order;
  j["order_eps"] = cfg.order_eps;
  j["rank"] = cfg.rank;
  j["backend"] = to_string(cfg.backend);
  if (cfg.backend == Backend::floating) j["tolerance"] = cfg.tolerance;
  j["seed"] = cfg.seed;
  Json acts = Json::array();
  for (ActionKind k : cfg.actions) acts.push_back(std::string(fedosov::to_string(k)));
  j["actions"] = acts;
  j["draws"] = cfg.draws;
  j["signature"] = cfg.lorentzian ? "lorentzian" : "euclidean";
  j["background"] = cfg.curved ? "curved" : "flat";
  j["mode_pool"] = cfg.mode_pool;
  j["negative_control"] = to_string(cfg.control);
  return j;
}

struct Check {
  std::string name;
  bool pass = true;
  int samples = 0;
  std::optional<std::string> witness;
  double seconds = 0;
};

struct CoefficientRow {
  int h_power = 0;
  int eps_power = 0;
  std::string re;
  std::string im;
};

struct CoefficientTable {
  std::string name;
  std::string unit;
  std::vector<CoefficientRow> rows;
};

struct Report {
  RunConfig config;
  std::vector<Check> checks;
  std::vector<CoefficientTable> tables;
  std::vector<std::pair<std::string, std::string>> facts;
  double seconds = 0;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::optional<std::string> first_witness() const {
    for (const auto& c : checks)
      if (!c.pass) return c.name + ": " + c.witness.value_or("");
    return std::nullopt;
  }

  Json to_json() const {
    Json j;
    j["tool"] = "fedosov";
    j["config"] = harness::to_json(config);
    j["status"] = pass() ? "pass" : "fail";
    Json cs = Json::array();
    for (const auto& c : checks) {
      Json e;
      e["name"] = c.name;
      e["status"] = c.pass ? "pass" : "fail";
      e["samples"] = c.samples;
      e["witness"] = c.witness ? Json(*c.witness) : Json(nullptr);
      if (config.timing) e["seconds"] = c.seconds;
      cs.push_back(e);
    }
    j["checks"] = cs;
    Json ts = Json::object();
    for (const auto& t : tables) {
      Json rows = Json::array();
      for (const auto& r : t.rows) rows.push_back({{"h", r.h_power}, {"eps", r.eps_power}, {"re", r.re}, {"im", r.im}});
      ts[t.name] = {{"unit", t.unit}, {"rows", rows}};
    }
    j["tables"] = ts;
    Json fs = Json::object();
    for (const auto& [k, v] : facts) fs[k] = v;
    j["facts"] = fs;
    if (config.timing) j["seconds"] = seconds;
    return j;
  }
};

// FEDOSOV_THREADS caps the worker count; unset or 0 means one per core.
inline unsigned thread_budget() {
  long n = 0;
  if (const char* env = std::getenv("FEDOSOV_THREADS"); env && *env) {
    char* end = nullptr;
    n = std::strtol(env, &end, 10);
    if (*end || n < 0) throw ConfigError("FEDOSOV_THREADS must be a non-negative integer");
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(n);
}

// f(i) for i in [0, count) on up to thread_budget() workers; results keep
// their index so the outcome does not depend on scheduling.
template <class R, class F>
std::vector<R> parallel_map(int count, F&& f) {
  std::vector<R> out(static_cast<std::size_t>(count));
  const unsigned workers = std::min<unsigned>(thread_budget(), static_cast<unsigned>(std::max(count, 1)));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int i; (i = next++) < count;) {
      try {
        out[static_cast<std::size_t>(i)] = f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace detail

// Independent stream per (seed, purpose, index).
inline Rng stream(std::uint64_t seed, const std::string& purpose, std::uint64_t index = 0) {
  return Rng(detail::splitmix(detail::splitmix(seed ^ detail::fnv1a(purpose)) + index));
}

using Witness = std::optional<std::string>;

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// The witness of a check is the one from its lowest failing draw.
inline Check collect(const std::string& name, const std::vector<Witness>& results, double seconds) {
  Check c{name, true, static_cast<int>(results.size()), std::nullopt, seconds};
  for (std::size_t i = 0; i < results.size(); ++i)
    if (results[i]) {
      c.pass = false;
      c.witness = "draw " + std::to_string(i) + ": " + *results[i];
      break;
    }
  return c;
}

// body(rng, i) for `samples` draws, each with its own stream.
template <class F>
Check run_check(const RunConfig& cfg, const std::string& name, int samples, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = parallel_map<Witness>(samples, [&](int i) {
    Rng rng = stream(cfg.seed, name, static_cast<std::uint64_t>(i));
    return body(rng, i);
  });
  return collect(name, results, seconds_since(t0));
}

template <Scalar S>
CoefficientRow coefficient_row(int p, int m, const S& v) {
  return {p, m, v.re_string(), v.im_string()};
}

template <Scalar S>
CoefficientTable trace_table(const std::string& name, const TraceSeries<S>& t) {
  CoefficientTable out{name, "(2pi)^" + std::to_string(t.dim), {}};
  for (int p = 0; p <= t.max_power(); ++p) out.rows.push_back(coefficient_row(p, 0, t.values[static_cast<std::size_t>(p)]));
  return out;
}

template <Scalar S>
CoefficientTable action_table(const ActionSeries<S>& s) {
  CoefficientTable out{"action:" + std::string(fedosov::to_string(s.kind)), "(2pi)^" + std::to_string(s.dim), {}};
  for (int p = 0; p <= s.max_h_power(); ++p)
    for (int m = 0; m <= s.order_eps; ++m) out.rows.push_back(coefficient_row(p, m, s.at(p, m)));
  return out;
}

// Random data shared by the scenarios.
template <Scalar S>
struct Generators {
  using F = FourierScalar<S>;
  using W = WeylElement<F>;
  using ES = EndoSeries<F>;

  const RunConfig& cfg;

  // diag(1, -1, 1, ...): indefinite from rank 2 on.
  Matrix<S> gram_matrix() const {
    Matrix<S> h(cfg.rank);
    for (int i = 0; i < cfg.rank; ++i) h(i, i) = S::rational(i % 2 ? -1 : 1, 1);
    return h;
  }

  FedosovContext<F> flat_context() const {
    return FedosovContext<F>(ChartGeometry(cfg.dim / 2), SymplecticConnection<F>::flat(cfg.dim),
                             BundleStructure<F>::flat(cfg.dim, GramForm<F>::from_constant(gram_matrix())), cfg.order,
                             cfg.options());
  }

  // Frequencies shared by the connection data and the random sections.
  std::vector<std::vector<int>> pool() const {
    Rng rng = stream(cfg.seed, "pool");
    return random_independent_pool(rng, cfg.dim, cfg.bandwidth, cfg.mode_pool);
  }

  // Symmetric real Gamma_{ijk} and Gamma^E = H^{-1} X with X anti-Hermitian.
  FedosovContext<F> context() const {
    if (!cfg.curved) return flat_context();
    Rng rng = stream(cfg.seed, "context");
    const Matrix<S> h = gram_matrix();
    const auto modes = pool();
    auto gamma = random_pool_symplectic_connection<S>(rng, cfg.dim, modes, cfg.dim == 2 ? 1.0 : 0.3);
    BundleStructure<F> bundle(cfg.dim, GramForm<F>::from_constant(h),
                              random_pool_compatible_connection<S>(rng, cfg.dim, h, modes));
    return FedosovContext<F>(ChartGeometry(cfg.dim / 2), gamma, bundle, cfg.order, cfg.options());
  }

  W weyl(Rng& rng, int form_degree) const {
    return random_weyl<S>(rng, {.dim = cfg.dim,
                                .rank = cfg.rank,
                                .order = cfg.order,
                                .form_degree = form_degree,
                                .terms = 3,
                                .bandwidth = cfg.bandwidth});
  }

  ES series(Rng& rng, const std::vector<std::vector<int>>& modes) const {
    ES s(cfg.rank, cfg.order / 2);
    s[0] = random_pool_endo<S>(rng, cfg.dim, cfg.rank, modes);
    if (rng.coin()) s[1] = random_pool_endo<S>(rng, cfg.dim, cfg.rank, modes);
    return s;
  }

  Matrix<S> eta() const {
    Matrix<S> e(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) e(i, i) = S::rational(cfg.lorentzian && i == 0 ? -1 : 1, 1);
    return e;
  }

  // Metric, tetrad and Lorentz perturbations from small real trig polynomials
  // over shared mode pools; the data does not depend on the selected actions.
  GravityInputs<S> gravity() const {
    Rng rng = stream(cfg.seed, "gravity");
    const Matrix<S> e = eta();
    const int d = cfg.dim;
    GravityInputs<S> in;
    in.order = cfg.order;
    in.options = cfg.options();
    const auto metric_pool = random_mode_pool(rng, d, cfg.bandwidth, cfg.mode_pool);
    in.metric = MetricField<S>::perturbed(e, random_symmetric_field<S>(rng, d, d, metric_pool), cfg.order_eps);
    const auto frame_pool = random_mode_pool(rng, d, cfg.bandwidth, cfg.mode_pool);
    in.tetrad = TetradField<S>::perturbed(e, random_real_field<S>(rng, d, d, frame_pool), cfg.order_eps);
    in.lorentz =
        LorentzConnection<S>::perturbative(e, random_antisymmetric_fields<S>(rng, d, d, frame_pool), cfg.order_eps);
    if (cfg.curved) in.background = random_symplectic_connection<S>(rng, d, cfg.bandwidth, 1, d == 2 ? 1.0 : 0.3);
    return in;
  }
};

template <Scalar S>
void core_identities(const RunConfig& cfg, Report& rep) {
  using F = FourierScalar<S>;
  using W = WeylElement<F>;
  using ES = EndoSeries<F>;
  const Generators<S> gen{cfg};
  const double tol = S::is_exact ? 0.0 : cfg.tolerance;
  const auto inv = cfg.involution();
  const FedosovContext<F> ctx = gen.context();
  const auto& gram = ctx.gram();
  const int top_form = std::min(2, cfg.dim);

  // Draws cycle through all form-degree pairs, odd-odd pairs first.
  std::vector<std::pair<int, int>> grades;
  for (int r = 0; r <= top_form; ++r)
    for (int s = 0; s <= top_form; ++s) grades.emplace_back(r, s);
  std::stable_partition(grades.begin(), grades.end(), [](const auto& g) { return g.first * g.second % 2 == 1; });
  rep.checks.push_back(run_check(cfg, "moyal-involution", cfg.draws_or(50), [&](Rng& rng, int i) -> Witness {
    const auto [r, s] = grades[static_cast<std::size_t>(i) % grades.size()];
    // A vanishing product satisfies any sign rule; redraw those unless forced by degree.
    W a = gen.weyl(rng, r), b = gen.weyl(rng, s), ab = moyal(a, b);
    for (int attempt = 0; attempt < 8 && r + s <= cfg.dim && ab.is_zero(); ++attempt) {
      a = gen.weyl(rng, r);
      b = gen.weyl(rng, s);
      ab = moyal(a, b);
    }
    const W lhs = weyl_adjoint(ab, gram, inv);
    const W rhs = moyal(weyl_adjoint(b, gram, inv), weyl_adjoint(a, gram, inv)) * S::rational((r * s) % 2 ? -1 : 1, 1);
    if (auto w = difference_witness(lhs, rhs, tol))
      return "forms (" + std::to_string(r) + "," + std::to_string(s) + ") " + *w;
    return std::nullopt;
  }));

  const W& r = ctx.r();
  rep.checks.push_back(run_check(cfg, "r-self-adjoint", 1, [&](Rng&, int) -> Witness {
    return difference_witness(ctx.adjoint(r, inv), r, tol);
  }));
  rep.checks.push_back(run_check(cfg, "r-normalisation", 1, [&](Rng&, int) -> Witness {
    return difference_witness(delta_inv(r), W(ctx.dim(), ctx.rank(), ctx.order()), tol);
  }));
  rep.checks.push_back(run_check(cfg, "r-equation", 1, [&](Rng&, int) -> Witness {
    return difference_witness(r_equation_defect(ctx), W(ctx.dim(), ctx.rank(), ctx.order()), tol);
  }));

  rep.checks.push_back(run_check(cfg, "D-squared", cfg.draws_or(10), [&](Rng& rng, int i) -> Witness {
    const W a = gen.weyl(rng, i % 2);
    const W dd = abelian_D(ctx, abelian_D(ctx, a));
    return difference_witness(dd, W(dd.dim(), dd.rank(), dd.order()), tol);
  }));
  rep.checks.push_back(run_check(cfg, "D-involution", cfg.draws_or(10), [&](Rng& rng, int i) -> Witness {
    const W a = gen.weyl(rng, i % 2);
    return difference_witness(ctx.adjoint(abelian_D(ctx, a), inv), abelian_D(ctx, ctx.adjoint(a, inv)), tol);
  }));
  // One quantisation per section serves D Q = 0, Q^{-1} Q = id and associativity.
  const auto modes = gen.pool();
  {
    const auto t0 = std::chrono::steady_clock::now();
    const int triples = cfg.draws_or(25);
    // D and Q^{-1} each cost about one quantisation; a few sections suffice.
    const int flat_draws = std::min(triples, cfg.draws_or(5));
    struct Triple {
      Witness flat, inverse, assoc;
    };
    const auto out = parallel_map<Triple>(triples, [&](int i) {
      Rng rng = stream(cfg.seed, "triple", static_cast<std::uint64_t>(i));
      const ES a = gen.series(rng, modes), b = gen.series(rng, modes), c = gen.series(rng, modes);
      const W qa = quantize(ctx, a), qb = quantize(ctx, b), qc = quantize(ctx, c);
      Triple t;
      if (i < flat_draws) {
        const W d = abelian_D(ctx, qa);
        t.flat = difference_witness(d, W(d.dim(), d.rank(), d.order()), tol);
        t.inverse = difference_witness(dequantize_weyl(ctx, qa), a.to_weyl(cfg.dim, cfg.order), tol);
      }
      // (a*b)*c and a*(b*c), each product read off from Q(x) o Q(y)
      const ES ab = moyal_symbol(qa, qb), bc = moyal_symbol(qb, qc);
      t.assoc = difference_witness(moyal_symbol(quantize(ctx, ab), qc), moyal_symbol(qa, quantize(ctx, bc)), tol);
      return t;
    });
    const double seconds = seconds_since(t0);
    std::vector<Witness> flat, inverse, assoc;
    for (int i = 0; i < triples; ++i) {
      const auto& t = out[static_cast<std::size_t>(i)];
      if (i < flat_draws) {
        flat.push_back(t.flat);
        inverse.push_back(t.inverse);
      }
      assoc.push_back(t.assoc);
    }
    rep.checks.push_back(collect("D-of-Q", flat, seconds));
    rep.checks.push_back(collect("Q-inverse-Q", inverse, 0));
    rep.checks.push_back(collect("star-associativity", assoc, 0));
  }
  rep.checks.push_back(run_check(cfg, "star-involution", cfg.draws_or(10), [&](Rng& rng, int) -> Witness {
    const ES a = gen.series(rng, modes), b = gen.series(rng, modes);
    return difference_witness(star(ctx, a, b).adjoint(gram), star(ctx, b.adjoint(gram), a.adjoint(gram)), tol);
  }));

  // f*g - g*f = s i h {f, g} + O(h^2) with one sign s for every pair.
  const ChartGeometry geo(cfg.dim / 2);
  const int pairs = cfg.draws_or(20);
  const auto t0 = std::chrono::steady_clock::now();
  struct Bracket {
    unsigned signs = 0;  // bit 0: s = +1 fits, bit 1: s = -1 fits
    Witness witness;
  };
  const auto brackets = parallel_map<Bracket>(pairs, [&](int i) {
    Rng rng = stream(cfg.seed, "first-order-bracket", static_cast<std::uint64_t>(i));
    const F f = random_fourier<S>(rng, cfg.dim, std::max(cfg.bandwidth, 1), 2, false);
    const F g = random_fourier<S>(rng, cfg.dim, std::max(cfg.bandwidth, 1), 2, false);
    const Matrix<F> fm = Matrix<F>::identity(cfg.rank, f), gm = Matrix<F>::identity(cfg.rank, g);
    const ES comm = star(ctx, fm, gm) - star(ctx, gm, fm);
    F pb;
    for (int a = 0; a < cfg.dim; ++a)
      for (int b = 0; b < cfg.dim; ++b) pb = pb + f.derive(a) * g.derive(b) * S::rational(geo.omega_inv(a, b), 1);
    Bracket out;
    if (auto w = difference_witness(comm[0], Matrix<F>(cfg.rank), tol)) {
      out.witness = "h^0 " + *w;
      return out;
    }
    const Matrix<F> ipb = Matrix<F>::identity(cfg.rank, pb * S::imag_unit());
    const auto plus = difference_witness(comm[1], ipb, tol), minus = difference_witness(comm[1], -ipb, tol);
    out.signs = (plus ? 0u : 1u) | (minus ? 0u : 2u);
    if (!out.signs) out.witness = "h^1 against +i{f,g}: " + *plus;
    return out;
  });
  Check bracket{"first-order-bracket", true, pairs, std::nullopt, 0};
  unsigned signs = 3;
  for (int i = 0; i < pairs && bracket.pass; ++i) {
    const auto& b = brackets[static_cast<std::size_t>(i)];
    if (b.witness) {
      bracket.pass = false;
      bracket.witness = "draw " + std::to_string(i) + ": " + *b.witness;
    } else if (!(signs & b.signs)) {
      bracket.pass = false;
      bracket.witness = "draw " + std::to_string(i) + ": sign differs from the earlier pairs";
    }
    signs &= b.signs;
  }
  bracket.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.checks.push_back(bracket);
  if (bracket.pass) rep.facts.emplace_back("bracket_sign", signs == 1 ? "+1" : signs == 2 ? "-1" : "undetermined");
}

template <Scalar S>
void flat_closed_form(const RunConfig& cfg, Report& rep) {
  using F = FourierScalar<S>;
  using ES = EndoSeries<F>;
  const Generators<S> gen{cfg};
  const double tol = S::is_exact ? 0.0 : cfg.tolerance;
  const FedosovContext<F> ctx = gen.flat_context();
  const ChartGeometry geo(cfg.dim / 2);
  const int k_max = cfg.bandwidth, side = 2 * k_max + 1;
  long waves = 1;
  for (int i = 0; i < cfg.dim; ++i) waves *= side;
  auto mode_of = [&](long index) {
    std::vector<int> k(static_cast<std::size_t>(cfg.dim));
    for (int& x : k) {
      x = static_cast<int>(index % side) - k_max;
      index /= side;
    }
    return k;
  };
  const int pairs = static_cast<int>(waves * waves);
  rep.checks.push_back(run_check(cfg, "plane-wave-star", pairs, [&](Rng&, int i) -> Witness {
    const auto k = mode_of(i / waves), l = mode_of(i % waves);
    const F ek = F::plane_wave(k), el = F::plane_wave(l);
    const ES got = star(ctx, Matrix<F>::identity(cfg.rank, ek), Matrix<F>::identity(cfg.rank, el));
    // theta = (i/2) omega^{ij} k_i l_j
    S theta(0);
    for (int a = 0; a < cfg.dim; ++a)
      for (int b = 0; b < cfg.dim; ++b)
        theta = theta + S::rational(geo.omega_inv(a, b) * k[static_cast<std::size_t>(a)] * l[static_cast<std::size_t>(b)], 2);
    theta = theta * S::imag_unit();
    ES expected(cfg.rank, cfg.order / 2);
    S term(1);
    for (int p = 0; p <= cfg.order / 2; ++p) {
      if (p > 0) term = term * theta * S::rational(1, p);
      expected[p] = Matrix<F>::identity(cfg.rank, ek * el * term);
    }
    if (auto w = difference_witness(got, expected, tol)) {
      std::string ks, ls;
      for (std::size_t a = 0; a < k.size(); ++a) ks += (a ? "," : "") + std::to_string(k[a]);
      for (std::size_t a = 0; a < l.size(); ++a) ls += (a ? "," : "") + std::to_string(l[a]);
      return "k=(" + ks + ") l=(" + ls + ") " + *w;
    }
    return std::nullopt;
  }));
}

template <Scalar S>
void trace_theorem(const RunConfig& cfg, Report& rep) {
  using F = FourierScalar<S>;
  using ES = EndoSeries<F>;
  const Generators<S> gen{cfg};
  const double tol = S::is_exact ? 0.0 : cfg.tolerance;
  const FedosovContext<F> ctx = gen.context();
  const Flattening<F> fl(ctx);
  const auto& gram = ctx.gram();
  const auto modes = gen.pool();
  const int pairs = cfg.draws_or(20);

  rep.checks.push_back(run_check(cfg, "M-routes-agree", std::min(pairs, 3), [&](Rng& rng, int) -> Witness {
    const ES a = gen.series(rng, modes);
    return difference_witness(fl.flatten_iso(a), fl.flatten_iso_direct(a), tol);
  }));
  rep.checks.push_back(run_check(cfg, "trace-unit", 1, [&](Rng&, int) -> Witness {
    auto t = fl.trace_star(ES::section(Matrix<F>::identity(cfg.rank), cfg.order / 2));
    auto expected = t;
    for (auto& v : expected.values) v = S(0);
    expected.values[0] = S::rational(cfg.rank, 1);
    return decltype(t)::first_difference(t, expected, tol);
  }));

  // One set of quantisations per pair serves all four identities.
  const auto t0 = std::chrono::steady_clock::now();
  struct Pair {
    Witness hom, inv, cyc, real;
  };
  const auto out = parallel_map<Pair>(pairs, [&](int i) {
    Rng rng = stream(cfg.seed, "trace-pair", static_cast<std::uint64_t>(i));
    const ES a = gen.series(rng, modes), b = gen.series(rng, modes);
    const WeylElement<F> qa = quantize(ctx, a), qb = quantize(ctx, b);
    const ES ma = fl.flatten_iso_lifted(qa), mb = fl.flatten_iso_lifted(qb);
    const ES mab = fl.flatten_iso(star_lifted(qa, qb)), mba = fl.flatten_iso(star_lifted(qb, qa));
    const ES ma_adj = fl.flatten_iso(a.adjoint(gram));
    Pair p;
    p.hom = difference_witness(mab, fl.star_flat(ma, mb), tol);
    p.inv = difference_witness(ma_adj, ma.adjoint(gram), tol);
    const auto tab = trace_flat(mab, cfg.dim), tba = trace_flat(mba, cfg.dim);
    p.cyc = decltype(tab)::first_difference(tab, tba, tol);
    const auto t_adj = trace_flat(ma_adj, cfg.dim), t_conj = trace_flat(ma, cfg.dim).conj();
    p.real = decltype(t_adj)::first_difference(t_adj, t_conj, tol);
    return p;
  });
  const double seconds = seconds_since(t0);
  std::vector<Witness> hom, inv, cyc, real;
  for (const auto& p : out) {
    hom.push_back(p.hom);
    inv.push_back(p.inv);
    cyc.push_back(p.cyc);
    real.push_back(p.real);
  }
  rep.checks.push_back(collect("M-homomorphism", hom, seconds));
  rep.checks.push_back(collect("M-involution", inv, 0));
  rep.checks.push_back(collect("trace-cyclicity", cyc, 0));
  rep.checks.push_back(collect("trace-reality", real, 0));

  Rng rng = stream(cfg.seed, "trace-table");
  const ES a = gen.series(rng, modes);
  rep.tables.push_back(trace_table("trace_of_adjoint", fl.trace_star(a.adjoint(gram))));
  rep.tables.push_back(trace_table("conjugate_trace", fl.trace_star(a).conj()));
}

template <Scalar S>
void action_scenario(const RunConfig& cfg, Report& rep) {
  const Generators<S> gen{cfg};
  const double tol = S::is_exact ? 0.0 : cfg.tolerance;
  const GravityInputs<S> in = gen.gravity();
  struct Outcome {
    ActionSeries<S> series;
    Check reality, classical;
  };
  const int n = static_cast<int>(cfg.actions.size());
  const auto outcomes = parallel_map<Outcome>(n, [&](int i) {
    const ActionKind kind = cfg.actions[static_cast<std::size_t>(i)];
    const std::string name(fedosov::to_string(kind));
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{action(kind, in), {}, {}};
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto rr = reality_report(o.series, std::nullopt, tol);
    o.reality = {name + ":reality", rr.real, 1, rr.witness, seconds};
    const auto classical = classical_action(kind, in);
    const auto w = difference_witness(o.series.h_row(0), classical, tol);
    o.classical = {name + ":classical-limit", !w, 1, w ? std::optional(name + " h^0 " + *w) : std::nullopt, 0};
    return o;
  });
  int nonzero = 0;
  for (const auto& o : outcomes) {
    rep.checks.push_back(o.reality);
    rep.checks.push_back(o.classical);
    rep.tables.push_back(action_table(o.series));
    for (int p = 0; p <= o.series.max_h_power(); ++p)
      for (int m = 0; m <= o.series.order_eps; ++m) nonzero += !o.series.at(p, m).is_zero();
  }
  rep.facts.emplace_back("nonzero_action_coefficients", std::to_string(nonzero));
}

template <Scalar S>
Report run_with(const RunConfig& cfg) {
  Report rep{cfg, {}, {}, {}, 0};
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.scenario == "core-identities") core_identities<S>(cfg, rep);
  else if (cfg.scenario == "flat-closed-form") flat_closed_form<S>(cfg, rep);
  else if (cfg.scenario == "trace-theorem") trace_theorem<S>(cfg, rep);
  else action_scenario<S>(cfg, rep);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline Report run_scenario(const RunConfig& cfg) {
  cfg.validate();
  return cfg.backend == Backend::exact ? run_with<GaussRational>(cfg) : run_with<FloatComplex>(cfg);
}

}  // namespace fedosov::harness
