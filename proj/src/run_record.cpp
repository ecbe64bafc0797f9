#include "reeblab/run_record.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "reeblab/contact_geometry.hpp"
#include "reeblab/diophantine.hpp"
#include "reeblab/entropy.hpp"
#include "reeblab/eta.hpp"
#include "reeblab/flows.hpp"
#include "reeblab/recurrence.hpp"
#include "reeblab/spectral_model.hpp"
#include "reeblab/summation.hpp"
#include "reeblab/tauberian.hpp"

namespace reeblab {

using nlohmann::json;

SchemaError::SchemaError(std::vector<std::string> problem_list)
    : std::runtime_error([&problem_list] {
        std::string msg = "config rejected:";
        for (const auto& p : problem_list) msg += "\n  " + p;
        return msg;
      }()),
      problems(std::move(problem_list)) {}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

std::string config_hash_of(const std::string& subcommand, const json& config,
                           std::uint64_t seed) {
  return fnv1a_hex(subcommand + "\n" + config.dump() + "\n" +
                   std::to_string(seed));
}

json RunRecord::to_json() const {
  return json{{"tool_version", tool_version}, {"subcommand", subcommand},
              {"config", config},             {"master_seed", master_seed},
              {"workers", workers},           {"config_hash", config_hash},
              {"payload", payload},           {"wall_seconds", wall_seconds},
              {"created", created}};
}

RunRecord RunRecord::from_json(const json& j) {
  if (!j.is_object() || !j.contains("subcommand") || !j.contains("config") ||
      !j.contains("payload"))
    throw std::runtime_error("malformed run record");
  RunRecord r;
  r.tool_version = j.value("tool_version", std::string{});
  r.subcommand = j.at("subcommand").get<std::string>();
  r.config = j.at("config");
  r.master_seed = j.value("master_seed", std::uint64_t{1});
  r.workers = j.value("workers", 1);
  r.config_hash = j.value("config_hash", std::string{});
  r.payload = j.at("payload");
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.created = j.value("created", std::string{});
  return r;
}

void RunRecord::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump(2) << '\n';
}

RunRecord RunRecord::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  in >> j;
  return from_json(j);
}

// ------------------------------------------------------------------ schema

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Schema {
  json& c;
  std::vector<std::string> problems;

  explicit Schema(json& cfg) : c(cfg) {}

  void fail(const std::string& field, const std::string& msg) {
    problems.push_back(field + ": " + msg);
  }

  double num(const char* k, double def, double lo, double hi,
             bool required = false) {
    if (!c.contains(k)) {
      if (required) {
        fail(k, "required");
        return def;
      }
      c[k] = def;
      return def;
    }
    if (!c[k].is_number()) {
      fail(k, "must be a number");
      return def;
    }
    double v = c[k].get<double>();
    if (!(v >= lo) || !(v <= hi)) {
      std::ostringstream m;
      m << "must lie in [" << lo << ", " << hi << "]";
      fail(k, m.str());
    }
    return v;
  }

  long long integer(const char* k, long long def, long long lo, long long hi,
                    bool required = false) {
    if (!c.contains(k)) {
      if (required) {
        fail(k, "required");
        return def;
      }
      c[k] = def;
      return def;
    }
    if (!c[k].is_number_integer()) {
      fail(k, "must be an integer");
      return def;
    }
    long long v = c[k].get<long long>();
    if (v < lo || v > hi) {
      fail(k, "must lie in [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "]");
    }
    return v;
  }

  bool boolean(const char* k, bool def) {
    if (!c.contains(k)) {
      c[k] = def;
      return def;
    }
    if (!c[k].is_boolean()) {
      fail(k, "must be a boolean");
      return def;
    }
    return c[k].get<bool>();
  }

  std::string choice(const char* k, const std::set<std::string>& allowed,
                     const std::string& def, bool required = false) {
    if (!c.contains(k)) {
      if (required) {
        fail(k, "required");
        return def;
      }
      c[k] = def;
      return def;
    }
    if (!c[k].is_string()) {
      fail(k, "must be a string");
      return def;
    }
    std::string v = c[k].get<std::string>();
    if (!allowed.count(v)) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      fail(k, "must be one of " + opts);
      return def;
    }
    return v;
  }

  std::vector<double> num_array(const char* k, std::vector<double> def,
                                double lo, double hi, bool required = false) {
    if (!c.contains(k)) {
      if (required) {
        fail(k, "required");
        return def;
      }
      c[k] = def;
      return def;
    }
    if (c[k].is_number()) c[k] = json::array({c[k]});
    if (!c[k].is_array() || c[k].empty()) {
      fail(k, "must be a non-empty array of numbers");
      return def;
    }
    std::vector<double> out;
    for (const auto& e : c[k]) {
      if (!e.is_number()) {
        fail(k, "must contain only numbers");
        return def;
      }
      double v = e.get<double>();
      if (!(v >= lo) || !(v <= hi)) {
        std::ostringstream m;
        m << "entries must lie in [" << lo << ", " << hi << "]";
        fail(k, m.str());
        return def;
      }
      out.push_back(v);
    }
    return out;
  }

  // "flow"/"stream" style reference: a string is inline JSON if it starts
  // with '{', otherwise a path whose content replaces it; either way the
  // resolved config is self-contained and replays anywhere
  void embed_file(const char* k, bool required) {
    if (!c.contains(k)) {
      if (required) fail(k, "required");
      return;
    }
    if (c[k].is_string()) {
      std::string v = c[k].get<std::string>();
      try {
        const auto first = v.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && v[first] == '{')
          c[k] = json::parse(v);
        else
          c[k] = json::parse(read_text_file(v));
      } catch (const std::exception& e) {
        fail(k, e.what());
      }
    } else if (!c[k].is_object()) {
      fail(k, "must be a file path or an inline object");
    }
  }

  void finish() {
    if (!problems.empty()) throw SchemaError(std::move(problems));
  }
};

json parse_number_spec(const std::string& s) {
  auto colon = s.find(':');
  std::string kind = s.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "golden") return json{{"kind", "golden"}};
  if (kind == "sqrt") return json{{"kind", "sqrt"}, {"n", std::stoll(rest)}};
  if (kind == "liouville")
    return json{{"kind", "liouville"}, {"terms", std::stoi(rest)}};
  if (kind == "decimal") return json{{"kind", "decimal"}, {"text", rest}};
  if (kind == "rational") {
    auto slash = rest.find('/');
    if (slash == std::string::npos)
      throw std::runtime_error("rational spec needs p/q");
    return json{{"kind", "rational"},
                {"p", std::stoll(rest.substr(0, slash))},
                {"q", std::stoll(rest.substr(slash + 1))}};
  }
  throw std::runtime_error(
      "unknown number kind (want sqrt:n, golden, rational:p/q, liouville:k, "
      "decimal:digits)");
}

RealEvaluator evaluator_from(const json& num) {
  const std::string kind = num.at("kind").get<std::string>();
  if (kind == "sqrt") return evaluator_sqrt(num.at("n").get<long long>());
  if (kind == "golden") return evaluator_golden();
  if (kind == "rational")
    return evaluator_rational(num.at("p").get<long long>(),
                              num.at("q").get<long long>());
  if (kind == "liouville")
    return evaluator_liouville(num.at("terms").get<int>());
  if (kind == "decimal")
    return evaluator_decimal(num.at("text").get<std::string>());
  throw std::runtime_error("unknown number kind " + kind);
}

void resolve_dioph(Schema& s) {
  std::string mode = s.choice("mode", {"mu", "nu"}, "mu");
  if (mode == "mu") {
    if (!s.c.contains("number")) {
      s.fail("number", "required in mu mode");
    } else {
      if (s.c["number"].is_string()) {
        try {
          s.c["number"] = parse_number_spec(s.c["number"].get<std::string>());
        } catch (const std::exception& e) {
          s.fail("number", e.what());
        }
      }
      if (s.c["number"].is_object()) {
        try {
          evaluator_from(s.c["number"]);
        } catch (const std::exception& e) {
          s.fail("number", e.what());
        }
      } else if (!s.problems.empty()) {
        // string parse already reported
      } else {
        s.fail("number", "must be a spec string or object");
      }
    }
    s.integer("depth", 30, 1, 500);
  } else {
    s.num_array("direction", {}, -1e9, 1e9, true);
    s.num("t_max", 1e4, 2.0, 1e9);
  }
}

void validate_flow_field(Schema& s, const char* k = "flow") {
  s.embed_file(k, true);
  if (s.c.contains(k) && s.c[k].is_object()) {
    try {
      make_flow_from_json_text(s.c[k].dump());
    } catch (const std::exception& e) {
      s.fail(k, e.what());
    }
  }
}

void resolve_recur(Schema& s) {
  validate_flow_field(s);
  s.num_array("T", {}, 1e-9, 1e9, true);
  s.num_array("eps", {}, 1e-12, 10.0, true);
  s.integer("samples", 1000, 1, 1'000'000'000);
  s.num("dt", 0.0, 0.0, 1e9);
  bool lifted = s.boolean("lifted", false);
  bool extended = s.boolean("extended", false);
  if (lifted && extended)
    s.fail("lifted", "lifted and extended are mutually exclusive");
}

void resolve_entropy(Schema& s) {
  validate_flow_field(s);
  s.num_array("T", {}, 1e-9, 1e9, true);
  s.num_array("eps", {}, 1e-9, 10.0, true);
  s.num("dt", 0.25, 1e-6, 1e3);
  s.integer("restarts", 2, 1, 64);
  bool is_suspension =
      s.c.contains("flow") && s.c["flow"].is_object() &&
      s.c["flow"].value("kind", std::string{}) == "suspension";
  if (s.c.contains("cloud_grid")) {
    if (!s.c["cloud_grid"].is_array() || s.c["cloud_grid"].size() != 2 ||
        !s.c["cloud_grid"][0].is_number_integer() ||
        !s.c["cloud_grid"][1].is_number_integer())
      s.fail("cloud_grid", "must be [nx, ns] integers");
    else if (!is_suspension)
      s.fail("cloud_grid", "grid clouds exist only for suspension flows");
  } else if (!s.c.contains("cloud_samples")) {
    if (is_suspension)
      s.c["cloud_grid"] = json::array({80, 5});
    else
      s.c["cloud_samples"] = 20000;
  }
  if (s.c.contains("cloud_samples"))
    s.integer("cloud_samples", 20000, 8, 100'000'000);
  s.integer("inequality_k", 0, 0, 16);
  s.integer("nodes", 192, 8, 4096);
  s.num("c", 0.2, 1e-6, 10.0);
  s.num("slack", 1.25, 1.0, 10.0);
}

void validate_stream_field(Schema& s) {
  if (s.c.contains("stream")) {
    s.embed_file("stream", false);
    if (s.c["stream"].is_object()) {
      try {
        stream_from_json(s.c["stream"].dump());
      } catch (const std::exception& e) {
        s.fail("stream", e.what());
      }
    }
  } else {
    double a = s.num("a", 0.25, 1e-12, 1.0 - 1e-12, true);
    if (s.problems.empty() && (a <= 0.0 || a >= 1.0))
      s.fail("a", "progression offset must lie inside (0,1)");
  }
}

void resolve_taub(Schema& s) {
  validate_stream_field(s);
  s.num("cutoff", 40.0, 1e-3, 1e9);
  std::string kernel = s.choice("kernel", {"bspline", "weyl"}, "bspline");
  s.integer("order", 3, 2, 12);
  if (kernel == "weyl") s.num("weyl_eps", 0.25, 1e-6, 4.0);
  s.num("T", 10.0, 1e-9, 1e9);
  s.num("h", 1.0, 1e-300, 1e9);
  if (!s.c.contains("lambda"))
    s.c["lambda"] = json{{"lo", -2.0}, {"hi", 2.0}, {"count", 81}};
  json& g = s.c["lambda"];
  if (!g.is_object() || !g.contains("lo") || !g.contains("hi") ||
      !g.contains("count") || !g["lo"].is_number() || !g["hi"].is_number() ||
      !g["count"].is_number_integer()) {
    s.fail("lambda", "must be {lo, hi, count}");
  } else if (!(g["lo"].get<double>() < g["hi"].get<double>()) ||
             g["count"].get<long long>() < 2) {
    s.fail("lambda", "needs lo < hi and count >= 2");
  }
}

void resolve_eta(Schema& s) {
  std::string method = s.choice("method", {"erfc", "zeta", "split"}, "split");
  s.num("cutoff", 40.0, 1.0 + 1e-9, 1e12);
  if (method == "zeta") {
    s.num("a", 0.25, 1e-12, 1.0 - 1e-12, true);
  } else {
    validate_stream_field(s);
  }
  if (!s.c.contains("small_t")) {
    if (method == "split" && s.c.contains("a"))
      s.c["small_t"] = json{{"kind", "progression"},
                            {"a", s.c["a"]},
                            {"scale", 1.0}};
    else
      s.c["small_t"] = json{{"kind", "none"}};
  }
  json& st = s.c["small_t"];
  if (st.is_string()) {
    // "none" or "progression:a" or "progression:a:scale"
    std::string v = st.get<std::string>();
    if (v == "none") {
      st = json{{"kind", "none"}};
    } else if (v.rfind("progression", 0) == 0) {
      double a = s.c.value("a", 0.25), scale = 1.0;
      auto c1 = v.find(':');
      if (c1 != std::string::npos) {
        auto c2 = v.find(':', c1 + 1);
        try {
          a = std::stod(v.substr(c1 + 1, c2 - c1 - 1));
          if (c2 != std::string::npos) scale = std::stod(v.substr(c2 + 1));
        } catch (const std::exception&) {
          s.fail("small_t", "cannot parse progression:a[:scale]");
        }
      }
      st = json{{"kind", "progression"}, {"a", a}, {"scale", scale}};
    } else {
      s.fail("small_t", "must be none or progression[:a[:scale]]");
    }
  }
  if (st.is_object()) {
    std::string kind = st.value("kind", std::string{});
    if (kind == "progression") {
      double a = st.value("a", -1.0);
      if (!(a > 0.0) || !(a < 1.0))
        s.fail("small_t.a", "must lie inside (0,1)");
      if (!(st.value("scale", 1.0) > 0.0))
        s.fail("small_t.scale", "must be positive");
    } else if (kind != "none") {
      s.fail("small_t.kind", "must be none or progression");
    }
  } else if (!st.is_string()) {
    s.fail("small_t", "must be a string or object");
  }
  if (method == "split" && s.c["small_t"].value("kind", std::string{}) == "none")
    s.fail("method", "split needs a small_t provider (use method erfc "
                     "for the bare tail)");
}

void resolve_geom(Schema& s) {
  validate_flow_field(s);
  if (s.c.contains("flow") && s.c["flow"].is_object() &&
      s.c["flow"].value("kind", std::string{}) != "lens")
    s.fail("flow.kind", "form volume is defined for lens flows");
  s.integer("samples", 20000, 1, 2'000'000'000);
}

void resolve_preset(Schema& s) {
  std::string name = s.choice("name", {"cor13", "cor14", "thm11"}, "", true);
  if (!s.c.contains("h"))
    s.c["h"] = json{{"lo", 1e-5}, {"hi", 1e-2}, {"count", 7}};
  json& g = s.c["h"];
  if (g.is_array()) {
    for (const auto& e : g)
      if (!e.is_number() || !(e.get<double>() > 0.0) ||
          !(e.get<double>() < 1.0)) {
        s.fail("h", "grid entries must lie in (0,1)");
        break;
      }
  } else if (g.is_object()) {
    double lo = g.value("lo", 0.0), hi = g.value("hi", 0.0);
    long long count = g.value("count", 0ll);
    if (!(lo > 0.0) || !(hi < 1.0) || !(lo <= hi) || count < 1)
      s.fail("h", "needs 0 < lo <= hi < 1 and count >= 1");
  } else {
    s.fail("h", "must be an array or {lo, hi, count}");
  }
  if (name == "cor14") {
    double nu = s.num("nu", 2.0, 0.51, 100.0);
    (void)nu;
    s.num("eps_delta", 0.49, 1e-9, 0.5 - 1e-12);
  } else if (name == "cor13") {
    double htop = s.num("htop", 0.9624, 1e-9, 100.0);
    (void)htop;
    long long n = s.integer("n", 3, 3, 99);
    if (n % 2 == 0) s.fail("n", "manifold dimension must be odd");
    double c = s.num("c", 0.7, 1e-9, 100.0);
    if (s.c["c"].is_number() && s.c["n"].is_number_integer() &&
        !(c < double(n) / 4.0))
      s.fail("c", "must be < n/4 = " + std::to_string(double(n) / 4.0));
    s.num("eps_delta", 0.49, 1e-9, 0.5 - 1e-12);
  } else if (name == "thm11") {
    s.num("delta", 0.0, 0.0, 0.5 - 1e-12);
    s.num("T", 1.0, 1e-9, 1e9);
  }
}

}  // namespace

json resolve_config(const std::string& subcommand, json config) {
  if (!config.is_object()) throw SchemaError({"config: must be a JSON object"});
  Schema s(config);
  if (subcommand == "dioph")
    resolve_dioph(s);
  else if (subcommand == "recur")
    resolve_recur(s);
  else if (subcommand == "entropy")
    resolve_entropy(s);
  else if (subcommand == "taub")
    resolve_taub(s);
  else if (subcommand == "eta")
    resolve_eta(s);
  else if (subcommand == "geom")
    resolve_geom(s);
  else if (subcommand == "preset")
    resolve_preset(s);
  else
    throw SchemaError({"subcommand: unknown (" + subcommand + ")"});
  s.finish();
  return config;
}

// --------------------------------------------------------------- execution

namespace {

json run_dioph(const json& cfg) {
  json payload;
  if (cfg.at("mode") == "mu") {
    RealEvaluator ev = evaluator_from(cfg.at("number"));
    ContinuedFraction cf =
        cf_expand(ev, int(cfg.at("depth").get<long long>()), true);
    MuEstimate est = estimate_mu(cf);
    payload["exponent"] = est.mu;
    payload["records"] = json::array();
    payload["fit_residual"] = 0.0;
    payload["exact_rational"] = est.exact_rational;
    payload["window_start"] = est.window_start;
    payload["ratios"] = est.ratios;
    payload["precision_limited"] = cf.precision_limited;
    payload["digits_used"] = cf.digits_used;
  } else {
    NuConfig nc;
    nc.t_max = cfg.at("t_max").get<double>();
    NuEstimate est =
        estimate_nu(cfg.at("direction").get<std::vector<double>>(), nc);
    payload["exponent"] = est.nu;
    json records = json::array();
    for (const auto& [t, d] : est.records) records.push_back({t, d});
    payload["records"] = std::move(records);
    payload["fit_residual"] = est.fit_residual;
    payload["fit_slope"] = est.fit_slope;
    payload["rational_direction"] = est.rational_direction;
    payload["window_start"] = est.window_start;
  }
  return payload;
}

json run_recur(const json& cfg, std::uint64_t seed) {
  auto flow = make_flow_from_json_text(cfg.at("flow").dump());
  const auto T_list = cfg.at("T").get<std::vector<double>>();
  const auto eps_list = cfg.at("eps").get<std::vector<double>>();
  const bool lifted = cfg.at("lifted").get<bool>();
  const bool extended = cfg.at("extended").get<bool>();

  json rows = json::array();
  json fits = json::array();
  json fit_errors = json::array();
  long long cell = 0;
  for (double eps : eps_list) {
    std::vector<std::pair<double, RecurrenceEstimate>> series;
    for (double T : T_list) {
      RecurrenceConfig rc;
      rc.T = T;
      rc.eps = eps;
      rc.dt = cfg.at("dt").get<double>();
      rc.n_samples = cfg.at("samples").get<long long>();
      rc.seed = seed + 7919ull * std::uint64_t(cell++);
      rc.workers = 1;
      RecurrenceEstimate est = lifted ? estimate_lifted_volume(*flow, rc)
                                      : estimate_volume(*flow, rc, extended);
      rows.push_back({{"T", T},
                      {"eps", eps},
                      {"fraction", est.fraction},
                      {"ci_low", est.ci_low},
                      {"ci_high", est.ci_high},
                      {"hits", est.hits},
                      {"measure", est.measure}});
      series.emplace_back(T, est);
    }
    if (series.size() >= 2) {
      try {
        ScalingFit fit = scaling_fit(series, true);
        fits.push_back({{"eps", eps},
                        {"slope", fit.slope},
                        {"slope_ci_low", fit.slope_ci_low},
                        {"slope_ci_high", fit.slope_ci_high},
                        {"intercept", fit.intercept},
                        {"residual", fit.residual},
                        {"n_used", fit.n_used}});
      } catch (const std::exception& e) {
        fit_errors.push_back(std::string(e.what()));
      }
    }
  }
  json payload;
  payload["rows"] = std::move(rows);
  payload["fits"] = std::move(fits);
  if (!fit_errors.empty()) payload["fit_errors"] = std::move(fit_errors);
  payload["lifted"] = lifted;
  payload["extended"] = extended;
  return payload;
}

json run_entropy(const json& cfg, std::uint64_t seed) {
  auto flow = make_flow_from_json_text(cfg.at("flow").dump());
  BowenConfig bc;
  bc.dt = cfg.at("dt").get<double>();
  bc.greedy_restarts = int(cfg.at("restarts").get<long long>());
  bc.seed = seed;
  if (cfg.contains("cloud_grid"))
    bc.cloud = grid_cloud_suspension(cfg["cloud_grid"][0].get<int>(),
                                     cfg["cloud_grid"][1].get<int>());
  else
    bc.cloud = random_cloud(*flow, cfg.at("cloud_samples").get<long long>(),
                            seed);
  auto eps_schedule = cfg.at("eps").get<std::vector<double>>();
  auto T_schedule = cfg.at("T").get<std::vector<double>>();
  bc.T = T_schedule.back();
  bc.eps = eps_schedule.back();
  HtopEstimate est = estimate_htop(*flow, eps_schedule, T_schedule, bc);

  json payload;
  payload["htop"] = est.htop;
  payload["per_eps_slopes"] = est.per_eps_slopes;
  payload["saturation_warning"] = est.saturation_warning;
  json packs = json::array();
  for (const auto& p : est.packings)
    packs.push_back({{"eps", p.eps},
                     {"T", p.T_values},
                     {"N", p.N},
                     {"local_slopes", p.local_slopes},
                     {"fitted_slope", p.fitted_slope},
                     {"saturated_from", p.saturated_from},
                     {"cloud_size", p.cloud_size}});
  payload["packings"] = std::move(packs);

  const int k = int(cfg.at("inequality_k").get<long long>());
  if (k > 0) {
    MetricGraphConfig mg;
    mg.nodes = int(cfg.at("nodes").get<long long>());
    mg.c = cfg.at("c").get<double>();
    mg.seed = seed;
    MetricConstruction metric(*flow, mg);
    EntropyInequalityReport rep = verify_entropy_inequality(
        *flow, k, est.htop, metric, cfg.at("slack").get<double>());
    payload["L_dk"] = std::exp(rep.ln_L_dk);
    payload["inequality_report"] = {
        {"n", rep.n},           {"k", rep.k},
        {"htop", rep.htop},     {"ln_L_dk", rep.ln_L_dk},
        {"lower_lhs", rep.lower_lhs}, {"upper_rhs", rep.upper_rhs},
        {"lower_ok", rep.lower_ok},   {"upper_ok", rep.upper_ok},
        {"slack", rep.slack},   {"alpha", rep.alpha},
        {"c", rep.c},           {"L_D_k", rep.L_D_k}};
  }
  return payload;
}

EigenvalueStream stream_from_config(const json& cfg) {
  if (cfg.contains("stream"))
    return stream_from_json(cfg.at("stream").dump());
  return synthesize_progression(cfg.at("a").get<double>(),
                                cfg.at("cutoff").get<double>());
}

json run_taub(const json& cfg) {
  EigenvalueStream stream = stream_from_config(cfg);
  const int order = int(cfg.at("order").get<long long>());
  SmoothingKernel kernel = cfg.at("kernel") == "weyl"
                               ? make_weyl_kernel(order,
                                                  cfg.at("weyl_eps").get<double>())
                               : make_kernel(order);
  const double T = cfg.at("T").get<double>();
  const double h = cfg.at("h").get<double>();
  const double sup_lo = kernel.theta_check.support_lo();
  const double sup_hi = kernel.theta_check.support_hi();
  const double sup = kernel.sup_theta_check();
  const auto& g = cfg.at("lambda");
  const double lo = g.at("lo").get<double>(), hi = g.at("hi").get<double>();
  const long long count = g.at("count").get<long long>();
  auto unit = [](double) { return 1.0; };

  json rows = json::array();
  double min_slack = std::numeric_limits<double>::infinity();
  bool all_ok = true;
  for (long long i = 0; i < count; ++i) {
    const double lambda = lo + (hi - lo) * double(i) / double(count - 1);
    const double value = smoothed_counting(stream, kernel, T, h, unit, lambda);
    long long window_mult = 0;
    for (std::size_t j = 0; j < stream.eigenvalues.size(); ++j) {
      const double arg = T * (lambda - stream.eigenvalues[j]) / std::sqrt(h);
      if (arg >= sup_lo - 1e-12 && arg <= sup_hi + 1e-12)
        window_mult += stream.multiplicities[j];
    }
    const double bound = T * sup * double(window_mult);
    const double slack = bound - std::abs(value);
    const bool ok = slack >= -1e-9;
    all_ok = all_ok && ok;
    min_slack = std::min(min_slack, slack);
    rows.push_back({{"lambda", lambda},
                    {"smoothed", value},
                    {"bound", bound},
                    {"slack", slack},
                    {"ok", ok}});
  }
  json payload;
  payload["rows"] = std::move(rows);
  payload["all_ok"] = all_ok;
  payload["min_slack"] = min_slack;
  payload["kernel"] = kernel.label;
  payload["sup_theta_check"] = sup;
  payload["stream_count"] = stream.total_count();
  return payload;
}

const char* method_name(EtaResult::Method m) {
  switch (m) {
    case EtaResult::Method::erfc_tail: return "erfc_tail";
    case EtaResult::Method::zeta_hurwitz: return "zeta_hurwitz";
    case EtaResult::Method::split: return "split";
  }
  return "unknown";
}

json run_eta(const json& cfg) {
  const std::string method = cfg.at("method").get<std::string>();
  EtaResult result;
  if (method == "zeta") {
    result = eta_zeta_progression(cfg.at("a").get<double>(),
                                  cfg.at("cutoff").get<double>());
  } else {
    EigenvalueStream stream = stream_from_config(cfg);
    const json& st = cfg.at("small_t");
    if (method == "erfc" && st.value("kind", std::string{}) == "none") {
      result = eta_erfc(stream);
    } else {
      result = eta_full_from_stream(
          stream, progression_small_t(st.at("a").get<double>(),
                                      st.value("scale", 1.0)));
    }
  }
  return json{{"value", result.value},
              {"reduced", result.reduced()},
              {"zero_modes", result.zero_modes},
              {"method", method_name(result.method)},
              {"cutoff", result.cutoff},
              {"tail_bound", result.tail_bound},
              {"small_t_included", result.small_t_included}};
}

json run_geom(const json& cfg, std::uint64_t seed) {
  LensSpaceParams p;
  p.q = cfg.at("flow").at("q").get<std::vector<long long>>();
  p.a = cfg.at("flow").at("a").get<std::vector<double>>();
  ContactVolumeResult mc =
      contact_volume(p, cfg.at("samples").get<long long>(), seed);
  ContactVolumeResult closed = contact_volume_closed_form(p);
  json payload;
  payload["value"] = mc.value;
  payload["ci_halfwidth"] = mc.ci_halfwidth;
  payload["n_samples"] = mc.n_samples;
  payload["method"] = "monte_carlo";
  payload["closed_form"] = closed.value;
  payload["relative_error"] = std::abs(mc.value - closed.value) / closed.value;
  if (p.m() == 1)
    payload["quadrature_oracle"] =
        contact_volume_quadrature_m1(p.a[0], p.a[1]) / double(p.q[0]);
  if (!mc.warning.empty()) payload["warning"] = mc.warning;
  return payload;
}

json run_preset(const json& cfg) {
  const std::string name = cfg.at("name").get<std::string>();
  std::vector<double> h_values;
  const json& g = cfg.at("h");
  if (g.is_array()) {
    h_values = g.get<std::vector<double>>();
  } else {
    const double lo = g.at("lo").get<double>(), hi = g.at("hi").get<double>();
    const long long count = g.at("count").get<long long>();
    if (count == 1) {
      h_values.push_back(lo);
    } else {
      const double step = (std::log(hi) - std::log(lo)) / double(count - 1);
      for (long long i = 0; i < count; ++i)
        h_values.push_back(std::exp(std::log(lo) + step * double(i)));
    }
  }

  json rows = json::array();
  json payload;
  payload["name"] = name;
  if (name == "cor14") {
    const double nu = cfg.at("nu").get<double>();
    const double d = cfg.at("eps_delta").get<double>();
    const double rate = 1.0 / (2.0 * nu - 1.0);
    payload["rate"] = rate;
    for (double h : h_values)
      rows.push_back({{"h", h},
                      {"T", std::pow(h, -rate)},
                      {"eps", std::pow(h, d)}});
  } else if (name == "cor13") {
    const double htop = cfg.at("htop").get<double>();
    const long long n = cfg.at("n").get<long long>();
    const double c = cfg.at("c").get<double>();
    const double d = cfg.at("eps_delta").get<double>();
    const double lambda = 1.1 * (2.0 / double(n)) * htop;
    payload["lambda"] = lambda;
    for (double h : h_values)
      rows.push_back({{"h", h},
                      {"T", c * std::abs(std::log(h)) / lambda},
                      {"eps", std::pow(h, d)}});
  } else {
    const double delta = cfg.at("delta").get<double>();
    const double T = cfg.at("T").get<double>();
    for (double h : h_values)
      rows.push_back({{"h", h}, {"T", T}, {"eps", std::pow(h, delta)}});
  }
  payload["rows"] = std::move(rows);
  return payload;
}

}  // namespace

json run_subcommand(const std::string& subcommand, const json& config,
                    std::uint64_t seed, int workers) {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (subcommand == "dioph") return run_dioph(config);
  if (subcommand == "recur") return run_recur(config, seed);
  if (subcommand == "entropy") return run_entropy(config, seed);
  if (subcommand == "taub") return run_taub(config);
  if (subcommand == "eta") return run_eta(config);
  if (subcommand == "geom") return run_geom(config, seed);
  if (subcommand == "preset") return run_preset(config);
  throw std::invalid_argument("unknown subcommand " + subcommand);
}

RunRecord execute_run(const std::string& subcommand, json config,
                      std::uint64_t seed, int workers) {
  RunRecord rec;
  rec.subcommand = subcommand;
  rec.config = resolve_config(subcommand, std::move(config));
  rec.master_seed = seed;
  rec.workers = workers;
  rec.config_hash = config_hash_of(subcommand, rec.config, seed);

  const auto t0 = std::chrono::steady_clock::now();
  rec.payload = run_subcommand(subcommand, rec.config, seed, workers);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  rec.created = stamp;
  return rec;
}

bool payload_reports_failure(const json& payload) {
  if (payload.is_object()) {
    for (const auto& [k, v] : payload.items()) {
      if ((k == "ok" || k == "all_ok" || k == "lower_ok" || k == "upper_ok") &&
          v.is_boolean() && !v.get<bool>())
        return true;
      if (k == "violations" && v.is_number() && v.get<double>() > 0)
        return true;
      if (payload_reports_failure(v)) return true;
    }
  } else if (payload.is_array()) {
    for (const auto& v : payload)
      if (payload_reports_failure(v)) return true;
  }
  return false;
}

std::string payload_csv(const RunRecord& rec) {
  if (!rec.payload.contains("rows") || !rec.payload["rows"].is_array() ||
      rec.payload["rows"].empty())
    return {};
  const json& rows = rec.payload["rows"];
  std::vector<std::string> keys;
  for (const auto& [k, v] : rows.front().items()) {
    (void)v;
    keys.push_back(k);  // nlohmann objects iterate alphabetically
  }
  std::ostringstream out;
  for (const auto& k : keys) out << k << ',';
  out << "config_hash\n";
  for (const auto& row : rows) {
    for (const auto& k : keys) {
      if (row.contains(k)) {
        const json& v = row.at(k);
        out << (v.is_string() ? v.get<std::string>() : v.dump());
      }
      out << ',';
    }
    out << rec.config_hash << '\n';
  }
  return out.str();
}

std::string payload_plot_data(const RunRecord& rec) {
  if (!rec.payload.contains("rows") || !rec.payload["rows"].is_array())
    return {};
  std::ostringstream out;
  for (const auto& row : rec.payload["rows"]) {
    int emitted = 0;
    for (const auto& [k, v] : row.items()) {
      (void)k;
      if (v.is_number() && emitted < 2) {
        out << (emitted ? " " : "") << v.dump();
        ++emitted;
      }
    }
    if (emitted == 2) out << '\n';
  }
  return out.str();
}

}  // namespace reeblab
