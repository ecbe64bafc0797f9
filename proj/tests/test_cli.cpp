#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "reeblab/run_record.hpp"
#include "reeblab/spectral_model.hpp"

using namespace reeblab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json lens_flow() {
  return json{{"kind", "lens"}, {"q", {1, 1}}, {"a", {1.0, 1.618033988749895}}};
}

// run the installed binary; returns the shell exit status or -1
int run_cli(const std::string& args) {
  const std::string cmd = std::string(REEBLAB_CLI_PATH) + " " + args;
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh_dir(const char* tag) {
  fs::path d = fs::temp_directory_path() /
               (std::string("reeblab_cli_") + tag + "_" +
                std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path only_record(const fs::path& dir, const std::string& prefix) {
  fs::path found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && name.size() > 5 &&
        name.substr(name.size() - 5) == ".json") {
      REQUIRE(found.empty());
      found = e.path();
    }
  }
  REQUIRE(!found.empty());
  return found;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
  CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
}

TEST_CASE("config hash covers subcommand, config and seed") {
  json cfg{{"x", 1}};
  const std::string h = config_hash_of("eta", cfg, 1);
  CHECK(h.size() == 16);
  CHECK(h != config_hash_of("taub", cfg, 1));
  CHECK(h != config_hash_of("eta", cfg, 2));
  CHECK(h != config_hash_of("eta", json{{"x", 2}}, 1));
  CHECK(h == config_hash_of("eta", cfg, 1));
}

TEST_CASE("run record round-trips through json with awkward doubles") {
  RunRecord rec;
  rec.subcommand = "eta";
  rec.config = json{{"a", 0.1}, {"nested", {{"q", {1, 2, 3}}}}};
  rec.master_seed = 0xdeadbeefcafe1234ull;
  rec.workers = 3;
  rec.config_hash = "0123456789abcdef";
  rec.payload = json{{"value", 0.1 + 0.2},
                     {"tiny", 5e-324},
                     {"neg", -0.0},
                     {"big", 1.7976931348623157e308}};
  rec.wall_seconds = 0.125;
  rec.created = "2026-08-16T00:00:00Z";

  RunRecord back = RunRecord::from_json(rec.to_json());
  CHECK(back.subcommand == rec.subcommand);
  CHECK(back.master_seed == rec.master_seed);
  CHECK(back.workers == 3);
  CHECK(back.config.dump() == rec.config.dump());
  CHECK(back.payload.dump() == rec.payload.dump());

  auto dir = fresh_dir("roundtrip");
  const std::string path = (dir / "rec.json").string();
  rec.save(path);
  RunRecord loaded = RunRecord::load(path);
  CHECK(loaded.payload.dump() == rec.payload.dump());
  CHECK(loaded.config_hash == rec.config_hash);
  fs::remove_all(dir);

  CHECK_THROWS_AS(RunRecord::from_json(json{{"subcommand", "eta"}}),
                  std::runtime_error);
  CHECK_THROWS_AS(RunRecord::load("/nonexistent/rec.json"),
                  std::runtime_error);
}

TEST_CASE("schema rejection lists every offending field at once") {
  try {
    resolve_config("recur", json::object());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    REQUIRE(e.problems.size() >= 3);
    bool flow = false, T = false, eps = false;
    for (const auto& p : e.problems) {
      if (p.rfind("flow:", 0) == 0) flow = true;
      if (p.rfind("T:", 0) == 0) T = true;
      if (p.rfind("eps:", 0) == 0) eps = true;
    }
    CHECK(flow);
    CHECK(T);
    CHECK(eps);
    CHECK(std::string(e.what()).find("flow") != std::string::npos);
  }

  CHECK_THROWS_AS(resolve_config("nonsense", json::object()), SchemaError);
  CHECK_THROWS_AS(resolve_config("eta", json::array()), SchemaError);
}

TEST_CASE("resolve fills defaults and is idempotent") {
  json cfg = resolve_config("eta", json{{"a", 0.25}});
  CHECK(cfg["method"] == "split");
  CHECK(cfg["cutoff"] == 40.0);
  CHECK(cfg["small_t"]["kind"] == "progression");
  CHECK(cfg["small_t"]["a"] == 0.25);
  // replay re-resolves nothing, but idempotence keeps the two paths equal
  CHECK(resolve_config("eta", cfg).dump() == cfg.dump());

  json rc = resolve_config(
      "recur", json{{"flow", lens_flow()}, {"T", {1.0, 2.0}}, {"eps", 0.3}});
  CHECK(rc["samples"] == 1000);
  CHECK(rc["eps"].is_array());  // scalar promoted
  CHECK(rc["lifted"] == false);
  CHECK(resolve_config("recur", rc).dump() == rc.dump());
}

TEST_CASE("flow and stream references are embedded at resolve time") {
  auto dir = fresh_dir("embed");
  {
    std::ofstream f(dir / "flow.json");
    f << lens_flow().dump();
  }
  {
    std::ofstream f(dir / "stream.json");
    f << stream_to_json(synthesize_progression(0.25, 30.0));
  }
  json rc = resolve_config("recur", json{{"flow", (dir / "flow.json").string()},
                                         {"T", {1.0}},
                                         {"eps", {0.3}}});
  CHECK(rc["flow"].is_object());
  CHECK(rc["flow"]["kind"] == "lens");

  json tc = resolve_config("taub",
                           json{{"stream", (dir / "stream.json").string()}});
  CHECK(tc["stream"].is_object());

  // inline JSON text is accepted in place of a path
  json il = resolve_config("geom", json{{"flow", lens_flow().dump()}});
  CHECK(il["flow"]["kind"] == "lens");

  CHECK_THROWS_AS(
      resolve_config("geom", json{{"flow", (dir / "missing.json").string()}}),
      SchemaError);
  fs::remove_all(dir);
}

TEST_CASE("eta subcommand reproduces the quarter progression value") {
  json cfg = resolve_config(
      "eta", json{{"method", "zeta"}, {"a", 0.25}, {"cutoff", 500.0}});
  json payload = run_subcommand("eta", cfg, 1, 1);
  CHECK(payload["value"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(payload["reduced"].get<double>() ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(payload["method"] == "zeta_hurwitz");

  json split = resolve_config("eta", json{{"a", 0.25}, {"cutoff", 300.0}});
  json sp = run_subcommand("eta", split, 1, 1);
  CHECK(sp["value"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sp["small_t_included"] == true);
}

TEST_CASE("geom subcommand is deterministic in the seed") {
  json cfg = resolve_config(
      "geom", json{{"flow", lens_flow()}, {"samples", 3000}});
  json p1 = run_subcommand("geom", cfg, 11, 1);
  json p2 = run_subcommand("geom", cfg, 11, 1);
  json p3 = run_subcommand("geom", cfg, 12, 1);
  CHECK(p1.dump() == p2.dump());
  CHECK(p1["value"].get<double>() != p3["value"].get<double>());
  CHECK(p1["closed_form"].get<double>() ==
        doctest::Approx(p1["quadrature_oracle"].get<double>()).epsilon(1e-9));
}

TEST_CASE("preset schedules follow the stated rate laws") {
  json cfg = resolve_config(
      "preset",
      json{{"name", "cor14"},
           {"h", json{{"lo", 1e-4}, {"hi", 1e-2}, {"count", 3}}}});
  json p = run_subcommand("preset", cfg, 1, 1);
  for (const auto& row : p["rows"]) {
    const double h = row["h"].get<double>();
    CHECK(row["T"].get<double>() ==
          doctest::Approx(std::pow(h, -1.0 / 3.0)).epsilon(1e-9));
    CHECK(row["eps"].get<double>() ==
          doctest::Approx(std::pow(h, 0.49)).epsilon(1e-9));
  }

  json c13 = resolve_config(
      "preset", json{{"name", "cor13"}, {"h", json::array({1e-3})}});
  json p13 = run_subcommand("preset", c13, 1, 1);
  const double lambda = 1.1 * (2.0 / 3.0) * 0.9624;
  CHECK(p13["lambda"].get<double>() == doctest::Approx(lambda).epsilon(1e-12));
  CHECK(p13["rows"][0]["T"].get<double>() ==
        doctest::Approx(0.7 * std::abs(std::log(1e-3)) / lambda).epsilon(1e-9));

  json t11 = resolve_config(
      "preset", json{{"name", "thm11"}, {"h", json::array({1e-3, 1e-2})}});
  json pt = run_subcommand("preset", t11, 1, 1);
  for (const auto& row : pt["rows"]) {
    CHECK(row["eps"].get<double>() == 1.0);  // delta = 0: constant radius
    CHECK(row["T"].get<double>() == 1.0);
  }

  // hyperbolicity window: the time constant must stay below n/4
  CHECK_THROWS_AS(
      resolve_config("preset", json{{"name", "cor13"}, {"c", 0.8}}),
      SchemaError);
  CHECK_THROWS_AS(
      resolve_config("preset", json{{"name", "cor13"}, {"n", 4}}),
      SchemaError);
  CHECK_THROWS_AS(
      resolve_config("preset", json{{"name", "cor14"}, {"eps_delta", 0.5}}),
      SchemaError);
}

TEST_CASE("execute_run stamps hash, payload and timing") {
  RunRecord rec = execute_run(
      "eta", json{{"method", "zeta"}, {"a", 0.75}, {"cutoff", 200.0}}, 1, 1);
  CHECK(rec.subcommand == "eta");
  CHECK(rec.config_hash ==
        config_hash_of("eta", rec.config, rec.master_seed));
  CHECK(rec.payload["value"].get<double>() ==
        doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(rec.wall_seconds >= 0.0);
  CHECK(rec.created.size() == 20);  // yyyy-mm-ddThh:mm:ssZ shape
}

TEST_CASE("payload failure scan finds nested checks") {
  CHECK(!payload_reports_failure(json{{"all_ok", true}}));
  CHECK(payload_reports_failure(json{{"all_ok", false}}));
  CHECK(payload_reports_failure(
      json{{"rows", json::array({json{{"ok", true}}, json{{"ok", false}}})}}));
  CHECK(payload_reports_failure(
      json{{"inequality_report", json{{"lower_ok", true}, {"upper_ok", false}}}}));
  CHECK(payload_reports_failure(json{{"deep", json{{"violations", 2}}}}));
  CHECK(!payload_reports_failure(json{{"deep", json{{"violations", 0}}}}));
  // plain data named like values, not checks
  CHECK(!payload_reports_failure(json{{"value", -0.5}, {"rows", json::array()}}));
}

TEST_CASE("csv rendering is alphabetical with a trailing hash column") {
  RunRecord rec;
  rec.config_hash = "feedfacefeedface";
  rec.payload = json{{"rows", json::array({json{{"b", 2.5}, {"a", 1}, {"s", "x"}},
                                           json{{"b", -1.0}, {"a", 7}}})}};
  const std::string csv = payload_csv(rec);
  CHECK(csv ==
        "a,b,s,config_hash\n"
        "1,2.5,x,feedfacefeedface\n"
        "7,-1.0,,feedfacefeedface\n");

  RunRecord empty;
  empty.payload = json{{"value", 1.0}};
  CHECK(payload_csv(empty).empty());

  const std::string dat = payload_plot_data(rec);
  CHECK(dat == "1 2.5\n7 -1.0\n");
}

TEST_CASE("binary: run, record, replay round trip") {
  auto dir = fresh_dir("roundtrip_bin");
  const int rc = run_cli("eta --method zeta --progression 0.25 --cutoff 200 "
                         "--out " + dir.string() + " > /dev/null");
  REQUIRE(rc == 0);
  fs::path record = only_record(dir, "eta_");

  RunRecord rec = RunRecord::load(record.string());
  CHECK(rec.payload["value"].get<double>() ==
        doctest::Approx(0.5).epsilon(1e-12));

  CHECK(run_cli("replay " + record.string() + " > /dev/null") == 0);

  // a corrupted payload must be detected, not silently accepted
  RunRecord bad = rec;
  bad.payload["value"] = 0.51;
  const std::string bad_path = (dir / "bad.json").string();
  bad.save(bad_path);
  CHECK(run_cli("replay " + bad_path + " 2>/dev/null") == 2);

  // so must a config edit that skips rehashing
  RunRecord tweaked = rec;
  tweaked.config["cutoff"] = 150.0;
  const std::string tweak_path = (dir / "tweaked.json").string();
  tweaked.save(tweak_path);
  CHECK(run_cli("replay " + tweak_path + " 2>/dev/null") == 2);
  fs::remove_all(dir);
}

TEST_CASE("binary: schema failures exit 1, series land in csv") {
  auto dir = fresh_dir("errors");
  CHECK(run_cli("eta --method zeta --progression 1.5 --out " + dir.string() +
                " 2>/dev/null") == 1);
  CHECK(run_cli("preset --name cor13 --c 0.9 --out " + dir.string() +
                " 2>/dev/null") == 1);
  CHECK(run_cli("recur --T 1,2 --eps 0.3 --flow /nonexistent.json --out " +
                dir.string() + " 2>/dev/null") == 1);

  const int rc = run_cli("preset --name cor14 --h 1e-4:1e-2:3 --plot-data "
                         "--out " + dir.string() + " > /dev/null");
  REQUIRE(rc == 0);
  fs::path record = only_record(dir, "preset_");
  const std::string stem = record.string().substr(0, record.string().size() - 5);
  REQUIRE(fs::exists(stem + ".csv"));
  REQUIRE(fs::exists(stem + ".dat"));
  {
    std::ifstream f(stem + ".csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "T,eps,h,config_hash");
    std::string row;
    std::getline(f, row);
    RunRecord rec = RunRecord::load(record.string());
    CHECK(row.find(rec.config_hash) != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("binary: dioph rational detection end to end") {
  auto dir = fresh_dir("dioph");
  const int rc = run_cli("dioph --number rational:22/7 --out " + dir.string() +
                         " > /dev/null");
  REQUIRE(rc == 0);
  RunRecord rec = RunRecord::load(only_record(dir, "dioph_").string());
  CHECK(rec.payload["exponent"].get<double>() == 1.0);
  CHECK(rec.payload["exact_rational"] == true);
  fs::remove_all(dir);
}

}  // TEST_SUITE
