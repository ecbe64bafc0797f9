// reeblab: one binary, one subcommand per experiment family. Every run
// resolves its config, executes, and drops a run record
// <out>/<subcommand>_<confighash>.json that `reeblab replay` can re-execute
// bit for bit. Exit codes: 0 clean, 1 usage/config/runtime error, 2 a
// property check inside the payload failed (the record is still written).
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reeblab/budget.hpp"
#include "reeblab/run_record.hpp"

using nlohmann::json;
using namespace reeblab;

namespace {

json csv_doubles(const std::string& text) {
  json arr = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) arr.push_back(std::stod(item));
  return arr;
}

json grid_spec(const std::string& text) {
  // lo:hi:count
  std::stringstream ss(text);
  std::string lo, hi, count;
  if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') ||
      !std::getline(ss, count, ':'))
    throw std::runtime_error("grid spec expects lo:hi:count");
  return json{{"lo", std::stod(lo)},
              {"hi", std::stod(hi)},
              {"count", std::stoll(count)}};
}

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  int workers = 1;
  bool plot_data = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "directory for run record and series files");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--workers", c.workers,
                  "worker count recorded in the run record; execution is "
                  "always the single-worker reference order");
  cmd->add_flag("--plot-data", c.plot_data,
                "also write a two-column .dat of the first numeric row pair");
}

int emit_run(const std::string& sub, json cfg, const Common& c) {
  RunRecord rec = execute_run(sub, std::move(cfg), c.seed, c.workers);
  const std::string stem = c.out + "/" + sub + "_" + rec.config_hash;
  rec.save(stem + ".json");

  const std::string csv = payload_csv(rec);
  if (!csv.empty()) {
    std::ofstream f(stem + ".csv");
    f << csv;
  }
  if (c.plot_data) {
    std::ofstream f(stem + ".dat");
    f << payload_plot_data(rec);
  }

  json shown = rec.payload;
  shown["config_hash"] = rec.config_hash;
  shown["record"] = stem + ".json";
  std::cout << shown.dump(2) << '\n';
  return payload_reports_failure(rec.payload) ? 2 : 0;
}

int run_replay(const std::string& path) {
  RunRecord rec = RunRecord::load(path);
  const std::string expect_hash =
      config_hash_of(rec.subcommand, rec.config, rec.master_seed);
  if (expect_hash != rec.config_hash) {
    std::cerr << "replay: config hash mismatch (record " << rec.config_hash
              << ", recomputed " << expect_hash << ")\n";
    return 2;
  }
  json payload =
      run_subcommand(rec.subcommand, rec.config, rec.master_seed, 1);
  if (payload.dump() != rec.payload.dump()) {
    std::cerr << "replay: payload differs from record\n";
    return 2;
  }
  std::cout << "replay OK " << rec.config_hash << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "numerical laboratory for Reeb-flow recurrence, entropy bounds and "
      "eta-invariant remainders"};
  app.require_subcommand(1);

  // every option is staged into locals; only flags the user actually passed
  // enter the config, so resolve_config owns all defaults
  struct {
    Common common;
    std::string mode = "mu", number, direction;
    long long depth = 30;
    double tmax = 1e4;
  } dioph;
  auto* cmd_dioph = app.add_subcommand(
      "dioph", "irrationality exponents: mu from continued fractions, nu "
               "from torus near-returns");
  add_common(cmd_dioph, dioph.common);
  cmd_dioph->add_option("--mode", dioph.mode)->check(CLI::IsMember({"mu", "nu"}));
  cmd_dioph->add_option(
      "--number", dioph.number,
      "sqrt:n | golden | rational:p/q | liouville:k | decimal:digits");
  cmd_dioph->add_option("--depth", dioph.depth);
  cmd_dioph->add_option("--direction", dioph.direction,
                        "comma-separated frequency vector");
  cmd_dioph->add_option("--tmax", dioph.tmax);

  struct {
    Common common;
    std::string flow, T, eps;
    long long samples = 1000;
    double dt = 0.0;
    bool lifted = false, extended = false;
  } recur;
  auto* cmd_recur = app.add_subcommand(
      "recur", "measure of the (T,eps) recurrence set, with scaling fits");
  add_common(cmd_recur, recur.common);
  cmd_recur->add_option("--flow", recur.flow, "flow JSON file or inline text")
      ->required();
  cmd_recur->add_option("--T", recur.T, "comma-separated times")->required();
  cmd_recur->add_option("--eps", recur.eps, "comma-separated radii")->required();
  cmd_recur->add_option("--samples", recur.samples);
  cmd_recur->add_option("--dt", recur.dt);
  cmd_recur->add_flag("--lifted", recur.lifted);
  cmd_recur->add_flag("--extended", recur.extended);

  struct {
    Common common;
    std::string flow, T, eps, grid;
    long long cloud = 0, restarts = 2, k = 0, nodes = 192;
    double dt = 0.25, c = 0.2, slack = 1.25;
  } entropy;
  auto* cmd_entropy = app.add_subcommand(
      "entropy", "Bowen packing growth, htop estimate, d_k inequality check");
  add_common(cmd_entropy, entropy.common);
  cmd_entropy->add_option("--flow", entropy.flow)->required();
  cmd_entropy->add_option("--T", entropy.T)->required();
  cmd_entropy->add_option("--eps", entropy.eps)->required();
  cmd_entropy->add_option("--grid", entropy.grid,
                          "suspension cloud as NXxNS, e.g. 400x10");
  cmd_entropy->add_option("--cloud", entropy.cloud, "random cloud size");
  cmd_entropy->add_option("--dt", entropy.dt);
  cmd_entropy->add_option("--restarts", entropy.restarts);
  cmd_entropy->add_option("--inequality-k", entropy.k,
                          "check the entropy inequality at deck power k");
  cmd_entropy->add_option("--nodes", entropy.nodes);
  cmd_entropy->add_option("--c", entropy.c);
  cmd_entropy->add_option("--slack", entropy.slack);

  struct {
    Common common;
    std::string stream, kernel = "bspline", grid;
    double progression = 0.25, cutoff = 40.0, weyl_eps = 0.25, T = 10.0,
           h = 1.0;
    long long order = 3;
  } taub;
  auto* cmd_taub = app.add_subcommand(
      "taub", "smoothed eigenvalue counting against the kernel sup bound");
  cmd_taub->set_help_flag("--help", "print help");  // frees -h for --h
  add_common(cmd_taub, taub.common);
  cmd_taub->add_option("--stream", taub.stream, "eigenvalue stream JSON file");
  cmd_taub->add_option("--progression", taub.progression,
                       "offset a of a synthesized progression {n+a}");
  cmd_taub->add_option("--cutoff", taub.cutoff);
  cmd_taub->add_option("--kernel", taub.kernel)
      ->check(CLI::IsMember({"bspline", "weyl"}));
  cmd_taub->add_option("--order", taub.order);
  cmd_taub->add_option("--weyl-eps", taub.weyl_eps);
  cmd_taub->add_option("--T", taub.T);
  cmd_taub->add_option("--h", taub.h);
  cmd_taub->add_option("--grid", taub.grid, "lambda grid lo:hi:count");

  struct {
    Common common;
    std::string stream, method = "split", small_t;
    double progression = 0.25, cutoff = 40.0;
  } eta;
  auto* cmd_eta = app.add_subcommand(
      "eta", "eta invariant of an eigenvalue stream or progression");
  add_common(cmd_eta, eta.common);
  cmd_eta->add_option("--stream", eta.stream);
  cmd_eta->add_option("--progression", eta.progression);
  cmd_eta->add_option("--cutoff", eta.cutoff);
  cmd_eta->add_option("--method", eta.method)
      ->check(CLI::IsMember({"erfc", "zeta", "split"}));
  cmd_eta->add_option("--small-t", eta.small_t,
                      "none | progression:a[:scale]");

  struct {
    Common common;
    std::string flow;
    long long samples = 20000;
  } geom;
  auto* cmd_geom = app.add_subcommand(
      "geom", "contact volume of a lens-quotient ellipsoid, MC vs closed form");
  add_common(cmd_geom, geom.common);
  cmd_geom->add_option("--flow", geom.flow)->required();
  cmd_geom->add_option("--samples", geom.samples);

  struct {
    Common common;
    std::string name, h;
    double nu = 2.0, eps_delta = 0.49, htop = 0.9624, c = 0.7, delta = 0.0,
           T = 1.0;
    long long n = 3;
  } preset;
  auto* cmd_preset = app.add_subcommand(
      "preset", "(eps,T) schedules over an h-grid for the remainder regimes");
  cmd_preset->set_help_flag("--help", "print help");  // frees -h for --h
  add_common(cmd_preset, preset.common);
  cmd_preset->add_option("--name", preset.name)
      ->check(CLI::IsMember({"cor13", "cor14", "thm11"}))
      ->required();
  cmd_preset->add_option("--h", preset.h, "h grid lo:hi:count");
  cmd_preset->add_option("--nu", preset.nu);
  cmd_preset->add_option("--eps-delta", preset.eps_delta);
  cmd_preset->add_option("--htop", preset.htop);
  cmd_preset->add_option("--n", preset.n);
  cmd_preset->add_option("--c", preset.c);
  cmd_preset->add_option("--delta", preset.delta);
  cmd_preset->add_option("--T", preset.T);

  std::string replay_path;
  auto* cmd_replay =
      app.add_subcommand("replay", "re-execute a run record and compare");
  cmd_replay->add_option("record", replay_path, "run record JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_replay->parsed()) return run_replay(replay_path);

    json cfg = json::object();
    std::string sub;
    const Common* common = nullptr;

    if (cmd_dioph->parsed()) {
      sub = "dioph";
      common = &dioph.common;
      cfg["mode"] = dioph.mode;
      if (cmd_dioph->count("--number")) cfg["number"] = dioph.number;
      if (cmd_dioph->count("--depth")) cfg["depth"] = dioph.depth;
      if (cmd_dioph->count("--direction"))
        cfg["direction"] = csv_doubles(dioph.direction);
      if (cmd_dioph->count("--tmax")) cfg["t_max"] = dioph.tmax;
    } else if (cmd_recur->parsed()) {
      sub = "recur";
      common = &recur.common;
      cfg["flow"] = recur.flow;
      cfg["T"] = csv_doubles(recur.T);
      cfg["eps"] = csv_doubles(recur.eps);
      if (cmd_recur->count("--samples")) cfg["samples"] = recur.samples;
      if (cmd_recur->count("--dt")) cfg["dt"] = recur.dt;
      if (recur.lifted) cfg["lifted"] = true;
      if (recur.extended) cfg["extended"] = true;
    } else if (cmd_entropy->parsed()) {
      sub = "entropy";
      common = &entropy.common;
      cfg["flow"] = entropy.flow;
      cfg["T"] = csv_doubles(entropy.T);
      cfg["eps"] = csv_doubles(entropy.eps);
      if (cmd_entropy->count("--grid")) {
        auto x = entropy.grid.find('x');
        if (x == std::string::npos)
          throw std::runtime_error("--grid expects NXxNS, e.g. 400x10");
        cfg["cloud_grid"] = json::array(
            {std::stoll(entropy.grid.substr(0, x)),
             std::stoll(entropy.grid.substr(x + 1))});
      }
      if (cmd_entropy->count("--cloud")) cfg["cloud_samples"] = entropy.cloud;
      if (cmd_entropy->count("--dt")) cfg["dt"] = entropy.dt;
      if (cmd_entropy->count("--restarts")) cfg["restarts"] = entropy.restarts;
      if (cmd_entropy->count("--inequality-k")) cfg["inequality_k"] = entropy.k;
      if (cmd_entropy->count("--nodes")) cfg["nodes"] = entropy.nodes;
      if (cmd_entropy->count("--c")) cfg["c"] = entropy.c;
      if (cmd_entropy->count("--slack")) cfg["slack"] = entropy.slack;
    } else if (cmd_taub->parsed()) {
      sub = "taub";
      common = &taub.common;
      if (cmd_taub->count("--stream")) cfg["stream"] = taub.stream;
      if (cmd_taub->count("--progression")) cfg["a"] = taub.progression;
      if (cmd_taub->count("--cutoff")) cfg["cutoff"] = taub.cutoff;
      if (cmd_taub->count("--kernel")) cfg["kernel"] = taub.kernel;
      if (cmd_taub->count("--order")) cfg["order"] = taub.order;
      if (cmd_taub->count("--weyl-eps")) cfg["weyl_eps"] = taub.weyl_eps;
      if (cmd_taub->count("--T")) cfg["T"] = taub.T;
      if (cmd_taub->count("--h")) cfg["h"] = taub.h;
      if (cmd_taub->count("--grid")) cfg["lambda"] = grid_spec(taub.grid);
    } else if (cmd_eta->parsed()) {
      sub = "eta";
      common = &eta.common;
      if (cmd_eta->count("--stream")) cfg["stream"] = eta.stream;
      if (cmd_eta->count("--progression")) cfg["a"] = eta.progression;
      if (cmd_eta->count("--cutoff")) cfg["cutoff"] = eta.cutoff;
      cfg["method"] = eta.method;
      if (cmd_eta->count("--small-t")) cfg["small_t"] = eta.small_t;
    } else if (cmd_geom->parsed()) {
      sub = "geom";
      common = &geom.common;
      cfg["flow"] = geom.flow;
      if (cmd_geom->count("--samples")) cfg["samples"] = geom.samples;
    } else if (cmd_preset->parsed()) {
      sub = "preset";
      common = &preset.common;
      cfg["name"] = preset.name;
      if (cmd_preset->count("--h")) cfg["h"] = grid_spec(preset.h);
      if (cmd_preset->count("--nu")) cfg["nu"] = preset.nu;
      if (cmd_preset->count("--eps-delta")) cfg["eps_delta"] = preset.eps_delta;
      if (cmd_preset->count("--htop")) cfg["htop"] = preset.htop;
      if (cmd_preset->count("--n")) cfg["n"] = preset.n;
      if (cmd_preset->count("--c")) cfg["c"] = preset.c;
      if (cmd_preset->count("--delta")) cfg["delta"] = preset.delta;
      if (cmd_preset->count("--T")) cfg["T"] = preset.T;
    }

    return emit_run(sub, std::move(cfg), *common);
  } catch (const SchemaError& e) {
    for (const auto& p : e.problems) std::cerr << "config error: " << p << '\n';
    return 1;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
