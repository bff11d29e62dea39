#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "psyprobe/mock_nli.hpp"
#include "psyprobe/persist.hpp"

using namespace psyprobe;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PSYPROBE_FIXTURES;

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("psyprobe-cli-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = psyprobe::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string run_dir_of(const fs::path& out, std::size_t manifest = 0) {
  return read_manifests(out).at(manifest).at("run_id").get<std::string>();
}

}  // namespace

TEST_CASE("probe runs survive a JSON round trip") {
  const auto gen = make_demo_generator();
  const LexiconNli nli;
  ProbeConfig p;
  p.n_repetitions = 2;
  p.seed = 4;
  const auto run = probe_model(gen, p, {}, nli);
  const auto text = to_json(run).dump();
  const auto back = probe_run_from_json(nlohmann::json::parse(text));
  CHECK(back.items == run.items);
  CHECK(back.profile == run.profile);
  CHECK(back.generation == run.generation);
  CHECK(to_json(back).dump() == text);
  CHECK_THROWS_AS(probe_run_from_json(nlohmann::json{{"kind", "other"}}), std::invalid_argument);
}

TEST_CASE("csv and svg outputs") {
  const LexiconNli nli;
  ProbeConfig p;
  p.n_repetitions = 1;
  const auto run = probe_model(FixtureGenerator::constant("I love a party."), p, {}, nli);
  const auto csv = probe_csv(run);
  CHECK(csv.starts_with("item_id,repetition,trait,mode,score\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  const auto svg = box_plot_svg(distribution_of(run), "demo");
  CHECK(svg.starts_with("<svg"));
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  const auto summary = box_summary_csv(distribution_of(run));
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 6);
}

TEST_CASE("manifests refuse to reuse an artifact") {
  const auto dir = fresh_dir("manifest");
  RunManifest m;
  m.run_id = "a";
  m.artifacts = {"a/run.json"};
  append_manifest(dir, m);
  m.run_id = "b";
  CHECK_THROWS(append_manifest(dir, m));
  m.artifacts = {"b/run.json"};
  append_manifest(dir, m);
  CHECK(read_manifests(dir).size() == 2);
}

TEST_CASE("cli probe is reproducible and writes a manifest") {
  const auto dir = fresh_dir("probe");
  const auto a = invoke({"probe", "--mock", "--n", "2", "--seed", "7", "--out", dir.string()});
  REQUIRE(a.code == 0);
  const auto b = invoke({"probe", "--mock", "--n", "2", "--seed", "7", "--out", dir.string()});
  REQUIRE(b.code == 0);
  const auto ida = run_dir_of(dir, 0);
  const auto idb = run_dir_of(dir, 1);
  CHECK(ida != idb);
  CHECK(idb == ida + "-2");
  CHECK(read_text(dir / ida / "scores.csv") == read_text(dir / idb / "scores.csv"));
  for (const char* f : {"run.json", "scores.csv", "plot.svg", "plot_data.csv"}) CHECK(fs::exists(dir / ida / f));

  const auto m = read_manifests(dir).at(0);
  const auto gen = generation_config_from_json(m.at("config").at("generation"));
  CHECK(gen == GenerationConfig{1.0, 40, 1.0, 256});
  CHECK(m.at("seed").get<std::uint64_t>() == 7);
  CHECK(m.at("artifacts").size() == 4);

  const auto rerun = invoke({"rerun", ida, "--out", dir.string()});
  REQUIRE(rerun.code == 0);
  const auto idc = run_dir_of(dir, 2);
  CHECK(read_text(dir / idc / "scores.csv") == read_text(dir / ida / "scores.csv"));

  const auto cmp = invoke({"compare", (dir / ida / "run.json").string(), (dir / idb / "run.json").string(), "--out",
                        dir.string()});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("mean KS 0.0000") != std::string::npos);
}

TEST_CASE("cli remote defaults and generation flags") {
  const auto dir = fresh_dir("remote");
  REQUIRE(invoke({"probe", "--mock", "--n", "1", "--remote-defaults", "--gen-temperature", "0.7", "--out", dir.string()})
              .code == 0);
  const auto gen = generation_config_from_json(read_manifests(dir).at(0).at("config").at("generation"));
  CHECK(gen.top_k == 0);
  CHECK(gen.temperature == 0.7);
}

TEST_CASE("cli usage errors exit with 2") {
  const auto dir = fresh_dir("usage");
  CHECK(invoke({"probe", "--backend", "http", "--out", dir.string()}).code == psyprobe::cli::kExitUsage);
  CHECK(invoke({"probe", "--mock", "--mode", "7", "--out", dir.string()}).code == psyprobe::cli::kExitUsage);
  CHECK(invoke({"probe", "--mock", "--n", "0", "--out", dir.string()}).code == psyprobe::cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == psyprobe::cli::kExitUsage);
  const auto corpus = kFixtures / "annotated_6.csv";
  CHECK(invoke({"corpus", "--input", dir.string(), "--fraction", "0", "--out", dir.string()}).code == psyprobe::cli::kExitUsage);
  CHECK(invoke({"corpus", "--input", dir.string(), "--fraction", "0.5", "--preset", "bookcorpus", "--out",
             dir.string()})
            .code == psyprobe::cli::kExitUsage);
  CHECK(invoke({"corpus", "--input", dir.string(), "--preset", "c4", "--out", dir.string()}).code == psyprobe::cli::kExitUsage);
  CHECK(read_manifests(dir).empty());
}

TEST_CASE("cli unreachable backend exits with 3") {
  const auto dir = fresh_dir("unreachable");
  const auto r = invoke({"probe", "--backend", "http", "--model", "m", "--endpoint", "http://127.0.0.1:9", "--nli-model", "m",
                      "--nli-endpoint", "http://127.0.0.1:9", "--n", "1",
                      "--out", dir.string()});
  CHECK(r.code == psyprobe::cli::kExitBackend);
}

TEST_CASE("cli corpus presets") {
  const auto dir = fresh_dir("corpus");
  const auto input = dir / "in";
  fs::create_directories(input);
  {
    std::ofstream f(input / "docs.jsonl");
    for (int i = 0; i < 200; ++i) f << "{\"text\": \"I love a party. I am calm today.\"}\n";
  }
  const auto out = dir / "out";
  REQUIRE(invoke({"corpus", "--input", input.string(), "--preset", "bookcorpus", "--out", out.string()}).code == 0);
  REQUIRE(invoke({"corpus", "--input", input.string(), "--preset", "wikitext103", "--out", out.string()}).code == 0);
  REQUIRE(invoke({"corpus", "--input", input.string(), "--fraction", "0.5", "--seed", "3", "--out", out.string()})
              .code == 0);
  const auto ms = read_manifests(out);
  REQUIRE(ms.size() == 3);
  CHECK(ms[0].at("config").at("fraction").get<double>() == 0.10);
  CHECK(ms[1].at("config").at("fraction").get<double>() == 1.00);
  CHECK(ms[2].at("config").at("fraction").get<double>() == 0.5);
  const auto j = nlohmann::json::parse(read_text(out / ms[1].at("run_id").get<std::string>() / "corpus.json"));
  CHECK(j.at("kind") == "corpus_evaluation");
  CHECK(j.at("sampling").at("documents_retained") == 200);
}

TEST_CASE("cli alter with a mock recipe") {
  const auto dir = fresh_dir("alter");
  const auto recipe = dir / "recipe.json";
  std::ofstream(recipe) << R"({"method": 2, "trait": "extraversion", "dataset": ")"
                        << (kFixtures / "annotated_50.csv").string()
                        << R"(", "seed": 5, "probe": {"n_repetitions": 1}})";
  const auto r = invoke({"alter", "--mock", "--recipe", recipe.string(), "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("> 4.5") != std::string::npos);
  CHECK(r.out.find("Extraversion *") != std::string::npos);
  const auto id = run_dir_of(dir / "out");
  CHECK(fs::exists(dir / "out" / id / "report.json"));
  CHECK(fs::exists(dir / "out" / id / "after-2.5.csv"));
  CHECK(fs::exists(dir / "out" / id / "after-4.5.json"));

  std::ofstream(dir / "bad.json") << R"({"method": 1, "trait": "extraversion", "dataset": ")"
                                  << (kFixtures / "annotated_missing_columns.csv").string() << R"("})";
  CHECK(invoke({"alter", "--mock", "--recipe", (dir / "bad.json").string(), "--out", (dir / "out").string()}).code ==
        psyprobe::cli::kExitUsage);
}

TEST_CASE("cli train-lm writes a usable checkpoint") {
  const auto dir = fresh_dir("train");
  std::ofstream(dir / "text.txt") << "I love parties. I talk to everyone. I keep calm. My friends are fun.\n";
  REQUIRE(invoke({"train-lm", "--input", (dir / "text.txt").string(), "--model-out", "lm.bin", "--epochs", "2",
               "--dim", "8", "--out", (dir / "out").string()})
              .code == 0);
  const auto id = run_dir_of(dir / "out");
  const auto ckpt = dir / "out" / id / "lm.bin";
  REQUIRE(fs::exists(ckpt));
  CHECK(invoke({"probe", "--backend", "tinylm", "--model", ckpt.string(), "--n", "1", "--out", (dir / "out").string()})
            .code == 0);
}
