#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psyprobe/alteration.hpp"
#include "psyprobe/backends.hpp"
#include "psyprobe/corpus.hpp"
#include "psyprobe/errors.hpp"
#include "psyprobe/persist.hpp"
#include "psyprobe/probe.hpp"
#include "psyprobe/questionnaire.hpp"
#include "psyprobe/seeding.hpp"
#include "psyprobe/stats.hpp"
#include "psyprobe/text.hpp"
#include "psyprobe/tinylm.hpp"

namespace psyprobe::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BackendFlags {
  bool mock = false;
  std::string backend = "mock";
  std::string model;
  std::string endpoint;
  std::string api_key_env;
  std::string nli;
  std::string nli_model;
  std::string nli_endpoint;
  std::string nli_path;
  std::string nli_api_key_env;
  std::size_t nli_max_premise_bytes = 0;
};

struct ScoringFlags {
  int approach = 3;
  bool corrected_labels = false;
  bool log_prob_poles = false;
  int workers = 1;
};

struct ProbeFlags {
  std::string mode = "2";
  int n = 20;
  std::uint64_t seed = 0;
  int max_retries = 3;
  bool keep_prompt = false;
  bool remote_defaults = false;
  std::optional<double> temperature;
  std::optional<int> top_k;
  std::optional<double> top_p;
  std::optional<int> max_len;
  int unprompted = 0;
  std::string questionnaire;
};

struct Options {
  std::string out = "runs";
  std::string config;
  BackendFlags backends;
  ScoringFlags scoring;
  ProbeFlags probe;
  // corpus
  std::string input;
  double fraction = 1.0;
  std::string unit = "sentence";
  std::string preset;
  std::size_t max_unit_chars = 500;
  // alter
  std::string recipe;
  // compare
  std::vector<std::string> compare_paths;
  // train-lm
  std::string model_out;
  int lm_dim = 32;
  double lm_decay = 0.6;
  int lm_epochs = 5;
  double lm_lr = 5e-3;
  int lm_batch = 16;
  std::size_t lm_vocab = 4000;
  // rerun
  std::string rerun_id;
};

struct Given {
  CLI::Option* n = nullptr;
  CLI::Option* mode = nullptr;
  CLI::Option* approach = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* backend = nullptr;
};

void add_backend_flags(CLI::App* app, BackendFlags& b) {
  app->add_flag("--mock", b.mock, "Offline demo generator and lexicon NLI");
  app->add_option("--backend", b.backend, "Generation backend: mock, fixture, tinylm, http")
      ->check(CLI::IsMember({"mock", "fixture", "tinylm", "http"}));
  app->add_option("--model", b.model, "Model name (http) or file (fixture rules, tinylm checkpoint)");
  app->add_option("--endpoint", b.endpoint, "Base URL of the generation server");
  app->add_option("--api-key-env", b.api_key_env, "Environment variable holding the generation API key");
  app->add_option("--nli", b.nli, "NLI backend: lexicon, fixture, http")
      ->check(CLI::IsMember({"lexicon", "fixture", "http"}));
  app->add_option("--nli-model", b.nli_model, "NLI model name (http)");
  app->add_option("--nli-endpoint", b.nli_endpoint, "Base URL of the NLI server");
  app->add_option("--nli-path", b.nli_path, "Lexicon JSON or fixture TSV");
  app->add_option("--nli-api-key-env", b.nli_api_key_env, "Environment variable holding the NLI API key");
  app->add_option("--nli-max-premise-bytes", b.nli_max_premise_bytes, "Truncate longer premises (0 = no limit)");
}

void add_scoring_flags(CLI::App* app, ScoringFlags& s, Given& g) {
  g.approach = app->add_option("--approach", s.approach, "Scoring approach 1, 2 or 3")->check(CLI::Range(1, 3));
  app->add_flag("--corrected-labels", s.corrected_labels, "Use \"antagonism\" instead of the published spelling");
  app->add_flag("--log-prob-poles", s.log_prob_poles, "Approach 3 over log entailment probabilities");
  app->add_option("--workers", s.workers, "Worker threads")->check(CLI::PositiveNumber);
}

BackendSpec generation_spec(const BackendFlags& b) {
  BackendSpec s;
  if (b.mock) return s;
  s.kind = b.backend;
  if (s.kind == "mock") return s;
  if (b.model.empty()) throw UsageError("--model is required with --backend " + s.kind);
  s.model = b.model;
  if (s.kind == "http") {
    s.url = b.endpoint;
    if (s.url.empty()) throw UsageError("--endpoint is required with --backend http");
    s.api_key_env = b.api_key_env;
  } else {
    s.path = b.model;
  }
  return s;
}

BackendSpec nli_spec(const BackendFlags& b) {
  BackendSpec s;
  s.kind = b.mock ? "lexicon" : (b.nli.empty() ? (b.backend == "http" ? "http" : "lexicon") : b.nli);
  s.path = b.nli_path;
  if (s.kind == "fixture" && s.path.empty()) throw UsageError("--nli-path is required with --nli fixture");
  if (s.kind == "http") {
    s.model = b.nli_model;
    s.url = b.nli_endpoint;
    s.api_key_env = b.nli_api_key_env;
    s.max_premise_bytes = b.nli_max_premise_bytes;
    if (s.model.empty() || s.url.empty()) throw UsageError("--nli http needs --nli-model and --nli-endpoint");
  }
  return s;
}

ScoringOptions scoring_of(const ScoringFlags& f) {
  ScoringOptions o;
  o.approach = static_cast<ScoringApproach>(f.approach);
  o.labels = f.corrected_labels ? LabelVariant::Corrected : LabelVariant::Published;
  o.pole_source = f.log_prob_poles ? PoleScoreSource::EntailmentLogProbabilities : PoleScoreSource::EntailmentLogits;
  return o;
}

// Config-file values apply only where the flag was not given.
void apply_config(Options& o, const Given& g) {
  if (o.config.empty()) return;
  const auto j = nlohmann::json::parse(read_text(o.config), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("config is not a JSON object: " + o.config);
  if (j.contains("generation")) {
    const auto& c = j["generation"];
    if (!o.probe.temperature && c.contains("temperature")) o.probe.temperature = c["temperature"].get<double>();
    if (!o.probe.top_k && c.contains("top_k")) o.probe.top_k = c["top_k"].get<int>();
    if (!o.probe.top_p && c.contains("top_p")) o.probe.top_p = c["top_p"].get<double>();
    if (!o.probe.max_len && c.contains("max_seq_length")) o.probe.max_len = c["max_seq_length"].get<int>();
  }
  if (j.contains("probe")) {
    const auto& c = j["probe"];
    if (!g.n->count() && c.contains("n_repetitions")) o.probe.n = c["n_repetitions"].get<int>();
    if (!g.mode->count() && c.contains("mode")) o.probe.mode = c["mode"].is_string() ? c["mode"].get<std::string>()
                                                                                     : std::to_string(c["mode"].get<int>());
    if (!g.seed->count() && c.contains("seed")) o.probe.seed = c["seed"].get<std::uint64_t>();
    if (!g.approach->count() && c.contains("approach")) o.scoring.approach = c["approach"].get<int>();
  }
  auto backend = [&](const char* key, auto fn) {
    if (j.contains(key)) fn(j[key]);
  };
  auto fill = [](std::string& field, const nlohmann::json& c, const char* key) {
    if (field.empty() && c.contains(key)) field = c[key].get<std::string>();
  };
  if (j.contains("generation_backend")) {
    const auto& c = j["generation_backend"];
    if (!g.backend->count() && c.contains("kind")) o.backends.backend = c["kind"].get<std::string>();
    fill(o.backends.model, c, "model");
    fill(o.backends.endpoint, c, "url");
    fill(o.backends.api_key_env, c, "api_key_env");
  }
  if (j.contains("nli_backend")) {
    const auto& c = j["nli_backend"];
    fill(o.backends.nli, c, "kind");
    fill(o.backends.nli_model, c, "model");
    fill(o.backends.nli_endpoint, c, "url");
    fill(o.backends.nli_api_key_env, c, "api_key_env");
    fill(o.backends.nli_path, c, "path");
    if (!o.backends.nli_max_premise_bytes) o.backends.nli_max_premise_bytes = c.value("max_premise_bytes", std::size_t{0});
  }
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void print_profile(std::ostream& out, const TraitProfile& profile) {
  out << std::left << std::setw(22) << "Trait" << std::setw(9) << "Median" << std::setw(9) << "Spread"
      << std::setw(8) << "N" << "Holes\n";
  for (Trait t : kAllTraits) {
    const auto& s = profile[t];
    out << std::setw(22) << trait_name(t) << std::setw(9) << (s.median ? fmt(*s.median) : "n/a") << std::setw(9)
        << fmt(s.spread) << std::setw(8) << s.n_samples << s.holes << "\n";
  }
  out << std::right;
}

// Output folder for one invocation: <out>/<base>, suffixed until unused.
struct RunFolder {
  fs::path root;
  std::string run_id;
  std::vector<std::string> artifacts;

  RunFolder(const fs::path& out, const std::string& base) : root(out) {
    run_id = base;
    for (int k = 2; fs::exists(out / run_id); ++k) run_id = base + "-" + std::to_string(k);
    fs::create_directories(out / run_id);
  }

  void write(const std::string& name, std::string_view content) {
    const auto rel = run_id + "/" + name;
    write_text(root / rel, content);
    artifacts.push_back(rel);
  }
  fs::path path(const std::string& name) const { return root / run_id / name; }
};

void finish(RunFolder& folder, const std::string& command, const std::vector<std::string>& argv, Json config,
            Json backends, std::uint64_t seed, const std::string& started) {
  RunManifest m;
  m.run_id = folder.run_id;
  m.command = command;
  m.argv = argv;
  m.config = std::move(config);
  m.backends = std::move(backends);
  m.seed = seed;
  m.started_at = started;
  m.finished_at = utc_timestamp();
  m.artifacts = folder.artifacts;
  append_manifest(folder.root, m);
}

GenerationConfig generation_of(const ProbeFlags& f) {
  GenerationConfig c = f.remote_defaults ? GenerationConfig::remote_defaults() : GenerationConfig::local_defaults();
  c.temperature = f.temperature.value_or(c.temperature);
  c.top_k = f.top_k.value_or(c.top_k);
  c.top_p = f.top_p.value_or(c.top_p);
  c.max_seq_length = f.max_len.value_or(c.max_seq_length);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

void write_distribution_plot(RunFolder& folder, const TraitDistribution& dist, const std::string& title) {
  folder.write("plot.svg", box_plot_svg(dist, title));
  folder.write("plot_data.csv", box_summary_csv(dist));
}

int cmd_probe(Options& o, const Given& g, const std::vector<std::string>& argv, std::ostream& out) {
  const auto started = utc_timestamp();
  ProbeConfig pc;
  pc.n_repetitions = o.probe.n;
  auto mode = parse_mode(o.probe.mode);
  if (!mode) throw UsageError("--mode must be 1, 2 or 3");
  pc.mode = *mode;
  pc.scoring = scoring_of(o.scoring);
  pc.strip_prompt = !o.probe.keep_prompt;
  pc.seed = o.probe.seed;
  pc.max_retries = o.probe.max_retries;
  pc.workers = o.scoring.workers;
  const auto gc = generation_of(o.probe);
  try {
    pc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto gspec = generation_spec(o.backends);
  const auto nspec = nli_spec(o.backends);
  const auto gen = make_generation_backend(gspec);
  const auto nli = make_nli_backend(nspec);

  ProbeRun run;
  if (o.probe.unprompted > 0) {
    run = probe_unprompted(*gen, pc, gc, *nli, o.probe.unprompted);
  } else if (!o.probe.questionnaire.empty()) {
    run = probe_model(*gen, pc, gc, *nli, load_questionnaire(o.probe.questionnaire));
  } else {
    run = probe_model(*gen, pc, gc, *nli);
  }

  RunFolder folder(o.out, run.run_id);
  folder.write("run.json", to_json(run).dump(2) + "\n");
  folder.write("scores.csv", probe_csv(run));
  const auto dist = distribution_of(run);
  write_distribution_plot(folder, dist, run.backend_name + (o.probe.unprompted > 0 ? " (unprompted)" : ""));

  Json config{{"probe", to_json(pc)}, {"generation", to_json(gc)}, {"unprompted", o.probe.unprompted},
              {"questionnaire", o.probe.questionnaire}};
  Json backends{{"generation", gspec.to_json()}, {"generation_name", run.backend_name},
                {"nli", nspec.to_json()}, {"nli_name", run.nli_name}};
  finish(folder, "probe", argv, std::move(config), std::move(backends), pc.seed, started);

  out << "run " << folder.run_id << " (" << run.backend_name << ", NLI " << run.nli_name << ")\n";
  print_profile(out, run.profile);
  if (run.logit_fallbacks) out << "logit fallbacks: " << run.logit_fallbacks << "\n";
  if (run.truncated_premises) out << "truncated premises: " << run.truncated_premises << "\n";
  out << "wrote " << (fs::path(o.out) / folder.run_id).string() << "\n";
  return kExitOk;
}

int cmd_corpus(Options& o, const CLI::App& sub, const std::vector<std::string>& argv, std::ostream& out) {
  const auto started = utc_timestamp();
  SamplingPlan plan;
  plan.seed = o.probe.seed;
  if (!o.preset.empty()) {
    auto p = parse_preset(o.preset);
    if (!p) throw UsageError("unknown preset " + o.preset);
    plan = preset_plan(*p, o.probe.seed);
  }
  if (sub.count("--fraction")) plan.fraction = o.fraction;
  auto unit = parse_unit_kind(o.unit);
  if (!unit) throw UsageError("--unit must be sentence or paragraph");
  plan.unit = *unit;
  plan.max_unit_chars = o.max_unit_chars;
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto nspec = nli_spec(o.backends);
  const auto nli = make_nli_backend(nspec);
  const FileSource source(o.input);
  const auto scoring = scoring_of(o.scoring);
  auto eval = evaluate_corpus(source, plan, scoring, *nli, o.scoring.workers);

  const auto id = "corpus-" + source.name() + "-" +
                  std::to_string(static_cast<long long>(std::llround(plan.fraction * 1000))) + "-" +
                  std::to_string(plan.seed);
  RunFolder folder(o.out, id);
  folder.write("corpus.json", to_json(eval).dump(2) + "\n");
  folder.write("units.csv", corpus_csv(eval));
  write_distribution_plot(folder, eval.distribution, eval.corpus_name);

  Json config{{"input", o.input},
              {"preset", o.preset},
              {"fraction", plan.fraction},
              {"seed", plan.seed},
              {"unit", unit_kind_name(plan.unit)},
              {"max_unit_chars", plan.max_unit_chars},
              {"scoring", to_json(scoring)}};
  finish(folder, "corpus", argv, std::move(config), Json{{"nli", nspec.to_json()}, {"nli_name", nli->name()}},
         plan.seed, started);

  out << "corpus " << eval.corpus_name << ": " << eval.sampling.documents_retained << "/"
      << eval.sampling.documents_seen << " documents retained (fraction " << fmt(plan.fraction) << "), "
      << eval.units_scored << " units scored, " << eval.units_failed << " failed, "
      << eval.sampling.documents_unreadable << " unreadable\n";
  print_profile(out, profile_of(eval.distribution));
  out << "wrote " << (fs::path(o.out) / folder.run_id).string() << "\n";
  return kExitOk;
}

int cmd_alter(Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  const auto started = utc_timestamp();
  FinetuneRecipe recipe;
  try {
    recipe = load_recipe(o.recipe);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad recipe: ") + e.what());
  }
  BackendSpec tspec;
  tspec.kind = o.backends.mock ? "mock" : recipe.backend;
  tspec.model = recipe.base_model;
  tspec.path = recipe.base_model;
  auto backend = make_trainable_backend(tspec);
  const auto nspec = nli_spec(o.backends);
  const auto nli = make_nli_backend(nspec);
  const auto data = load_annotated_dataset(recipe.dataset, recipe.schema);

  std::optional<ProbeRun> baseline;
  if (recipe.baseline_run) baseline = load_probe_run(*recipe.baseline_run);

  AlterationInputs inputs;
  inputs.nli = nli.get();
  inputs.probe = recipe.probe;
  inputs.generation = recipe.generation;
  inputs.baseline = baseline ? &*baseline : nullptr;
  inputs.seed = recipe.seed;

  const auto report = recipe.method == AlterationMethod::Method1
                          ? run_method1(*backend, data.examples, recipe.target, inputs, recipe.causal,
                                        recipe.thresholds.front())
                          : run_method2(*backend, data.examples, recipe.target, recipe.thresholds, inputs,
                                        recipe.classifier);

  const auto id = "alter-m" + std::to_string(static_cast<int>(recipe.method)) + "-" +
                  std::string(trait_key(recipe.target)) + "-" + std::to_string(recipe.seed);
  RunFolder folder(o.out, id);
  folder.write("report.json", to_json(report).dump(2) + "\n");
  const auto table = render_table(report);
  folder.write("table.txt", table);
  for (const auto& col : report.after) {
    const auto name = "after-" + col.label;
    folder.write(name + ".json", to_json(col.run).dump(2) + "\n");
    folder.write(name + ".csv", probe_csv(col.run));
  }

  Json config{{"recipe", o.recipe},
              {"method", static_cast<int>(recipe.method)},
              {"trait", trait_key(recipe.target)},
              {"thresholds", recipe.thresholds},
              {"dataset", recipe.dataset.string()},
              {"dataset_rows", data.examples.size()},
              {"rejected_missing", data.rejected_missing},
              {"rejected_out_of_range", data.rejected_out_of_range},
              {"baseline_run", recipe.baseline_run ? recipe.baseline_run->string() : ""},
              {"probe", to_json(recipe.probe)},
              {"generation", to_json(recipe.generation)}};
  finish(folder, "alter", argv, std::move(config),
         Json{{"trainable", tspec.to_json()}, {"nli", nspec.to_json()}, {"nli_name", nli->name()}}, recipe.seed,
         started);

  out << table;
  if (data.rejected_missing || data.rejected_out_of_range) {
    out << "rejected rows: " << data.rejected_missing << " missing, " << data.rejected_out_of_range
        << " out of range\n";
  }
  out << "wrote " << (fs::path(o.out) / folder.run_id).string() << "\n";
  return kExitOk;
}

int cmd_compare(Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  const auto started = utc_timestamp();
  const auto a = load_distribution(o.compare_paths.at(0));
  const auto b = load_distribution(o.compare_paths.at(1));
  const auto cmp = compare_distributions(a, b);

  Json rows = Json::object();
  out << std::left << std::setw(22) << "Trait" << std::setw(9) << "KS" << std::setw(12) << "KS crit.05"
      << std::setw(12) << "Median diff" << std::setw(8) << "n_a" << "n_b\n";
  double mean_ks = 0.0;
  for (Trait t : kAllTraits) {
    const auto crit = stats::ks_critical_value(a.count(t), b.count(t), 0.05);
    mean_ks += cmp[t].ks / static_cast<double>(kTraitCount);
    out << std::setw(22) << trait_name(t) << std::setw(9) << fmt(cmp[t].ks, 4) << std::setw(12) << fmt(crit, 4)
        << std::setw(12) << fmt(cmp[t].median_difference, 3) << std::setw(8) << a.count(t) << b.count(t) << "\n";
    rows[std::string(trait_key(t))] = Json{{"ks", cmp[t].ks},
                                           {"ks_critical_0_05", crit},
                                           {"median_difference", cmp[t].median_difference},
                                           {"n_a", a.count(t)},
                                           {"n_b", b.count(t)}};
  }
  out << std::right << "mean KS " << fmt(mean_ks, 4) << "\n";

  RunFolder folder(o.out, "compare-" + fs::path(o.compare_paths[0]).parent_path().filename().string() + "-vs-" +
                              fs::path(o.compare_paths[1]).parent_path().filename().string());
  folder.write("compare.json", Json{{"kind", "comparison"},
                                    {"schema_version", kSchemaVersion},
                                    {"a", o.compare_paths[0]},
                                    {"b", o.compare_paths[1]},
                                    {"mean_ks", mean_ks},
                                    {"traits", std::move(rows)}}
                                   .dump(2) + "\n");
  finish(folder, "compare", argv, Json{{"a", o.compare_paths[0]}, {"b", o.compare_paths[1]}}, Json::object(), 0,
         started);
  return kExitOk;
}

int cmd_train_lm(Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  const auto started = utc_timestamp();
  SamplingPlan plan;
  plan.unit = UnitKind::Sentence;
  std::vector<std::string> texts;
  for (auto& u : sample_units(FileSource(o.input), plan)) texts.push_back(std::move(u.text));
  if (texts.empty()) throw UsageError("no training text found in " + o.input);

  TinyLm::Options lo;
  lo.dim = o.lm_dim;
  lo.decay = static_cast<float>(o.lm_decay);
  lo.max_vocab = o.lm_vocab;
  CausalHyperparameters hp;
  hp.epochs = o.lm_epochs;
  hp.learning_rate = o.lm_lr;
  hp.batch_size = o.lm_batch;
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto lm = TinyLm::create(texts, lo, o.probe.seed);
  const auto summary = lm.train_causal(texts, hp, derive_seed(o.probe.seed, {1}));

  RunFolder folder(o.out, "tinylm-" + fs::path(o.model_out).stem().string());
  lm.save(folder.path(o.model_out));
  folder.artifacts.push_back(folder.run_id + "/" + o.model_out);
  folder.write("training.json", to_json(summary).dump(2) + "\n");
  finish(folder, "train-lm", argv,
         Json{{"input", o.input},
              {"dim", o.lm_dim},
              {"decay", o.lm_decay},
              {"vocab", o.lm_vocab},
              {"epochs", o.lm_epochs},
              {"learning_rate", o.lm_lr},
              {"batch_size", o.lm_batch},
              {"texts", texts.size()}},
         Json::object(), o.probe.seed, started);
  out << "trained on " << texts.size() << " sentences, vocabulary " << lm.vocabulary().size() << "\n";
  for (std::size_t e = 0; e < summary.train_loss.size(); ++e) {
    out << "epoch " << e + 1 << " train " << fmt(summary.train_loss[e], 4);
    if (e < summary.validation_loss.size()) out << " validation " << fmt(summary.validation_loss[e], 4);
    out << "\n";
  }
  out << "wrote " << folder.path(o.model_out).string() << "\n";
  return kExitOk;
}

int cmd_rerun(Options& o, std::ostream& out, std::ostream& err) {
  for (const auto& m : read_manifests(o.out)) {
    if (m.value("run_id", std::string()) != o.rerun_id) continue;
    const auto argv = m.at("argv").get<std::vector<std::string>>();
    out << "re-running " << m.at("command").get<std::string>() << " from manifest " << o.rerun_id << "\n";
    return run(argv, out, err);
  }
  throw UsageError("no manifest for run " + o.rerun_id + " in " + o.out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  Given g;
  CLI::App app{"Big Five trait profiles for language models and text corpora", "psyprobe"};
  app.require_subcommand(1);

  auto* probe = app.add_subcommand("probe", "Administer the questionnaire to a generator and score the answers");
  auto* corpus = app.add_subcommand("corpus", "Score a sample of a text corpus");
  auto* alter = app.add_subcommand("alter", "Finetune towards a trait and re-probe");
  auto* compare = app.add_subcommand("compare", "KS statistic and median difference between two results");
  auto* train = app.add_subcommand("train-lm", "Train the small local language model");
  auto* rerun = app.add_subcommand("rerun", "Repeat a command recorded in a manifest");

  for (auto* sub : {probe, corpus, alter, compare, train, rerun}) {
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  }
  for (auto* sub : {probe, corpus, train}) {
    g.seed = sub->add_option("--seed", o.probe.seed, "Root seed")->capture_default_str();
  }
  probe->add_option("--config", o.config, "JSON config; flags override it")->check(CLI::ExistingFile);
  add_backend_flags(probe, o.backends);
  g.backend = probe->get_option("--backend");
  add_scoring_flags(probe, o.scoring, g);
  g.mode = probe->add_option("--mode", o.probe.mode, "Output mode 1 (whole), 2 (first sentence), 3 (sentence median)");
  g.n = probe->add_option("--n", o.probe.n, "Completions per item")->check(CLI::PositiveNumber);
  g.seed = probe->get_option("--seed");
  probe->add_option("--max-retries", o.probe.max_retries, "Extra attempts after an empty completion")
      ->check(CLI::NonNegativeNumber);
  probe->add_flag("--keep-prompt", o.probe.keep_prompt, "Do not strip an echoed prompt");
  probe->add_flag("--remote-defaults", o.probe.remote_defaults, "Start from the remote-API sampling defaults (no top-k)");
  probe->add_option("--gen-temperature", o.probe.temperature, "Sampling temperature");
  probe->add_option("--gen-top-k", o.probe.top_k, "Top-k filter (0 disables)");
  probe->add_option("--gen-top-p", o.probe.top_p, "Nucleus threshold");
  probe->add_option("--gen-max-len", o.probe.max_len, "Maximum completion length in tokens");
  probe->add_option("--unprompted", o.probe.unprompted, "Generate this many unprompted samples instead")
      ->check(CLI::NonNegativeNumber);
  probe->add_option("--questionnaire", o.probe.questionnaire, "Alternative questionnaire TSV")->check(CLI::ExistingFile);

  add_backend_flags(corpus, o.backends);
  Given corpus_given;
  add_scoring_flags(corpus, o.scoring, corpus_given);
  corpus->add_option("--input", o.input, "Corpus file (.txt, .jsonl) or directory")->required()->check(CLI::ExistingPath);
  auto* fraction = corpus->add_option("--fraction", o.fraction, "Share of documents to keep, in (0, 1]");
  corpus->add_option("--preset", o.preset, "Sampling preset")
      ->check(CLI::IsMember({"wikitext103", "bookcorpus", "enwiki", "webtext-test"}))
      ->excludes(fraction);
  corpus->add_option("--unit", o.unit, "sentence or paragraph")->check(CLI::IsMember({"sentence", "paragraph"}));
  corpus->add_option("--max-unit-chars", o.max_unit_chars, "Paragraphs longer than this fall back to sentences");

  alter->add_option("--recipe", o.recipe, "Recipe JSON")->required()->check(CLI::ExistingFile);
  add_backend_flags(alter, o.backends);

  compare->add_option("results", o.compare_paths, "Two run.json or corpus.json files")
      ->required()
      ->expected(2)
      ->check(CLI::ExistingFile);

  train->add_option("--input", o.input, "Training text (.txt, .jsonl) or directory")->required()->check(CLI::ExistingPath);
  train->add_option("--model-out", o.model_out, "Checkpoint file name inside the run folder")->required();
  train->add_option("--dim", o.lm_dim, "Embedding size")->check(CLI::PositiveNumber);
  train->add_option("--decay", o.lm_decay, "Context decay in [0, 1)")->check(CLI::Range(0.0, 0.999));
  train->add_option("--epochs", o.lm_epochs, "Epochs")->check(CLI::PositiveNumber);
  train->add_option("--lr", o.lm_lr, "Learning rate")->check(CLI::PositiveNumber);
  train->add_option("--batch", o.lm_batch, "Batch size")->check(CLI::PositiveNumber);
  train->add_option("--vocab", o.lm_vocab, "Vocabulary cap")->check(CLI::PositiveNumber);

  rerun->add_option("run_id", o.rerun_id, "Run id from manifests.jsonl")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    for (auto* sub : {probe, corpus, alter, compare, train, rerun}) {
      if (sub->parsed()) {
        out << sub->help();
        return kExitOk;
      }
    }
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    if (probe->parsed()) {
      apply_config(o, g);
      return cmd_probe(o, g, args, out);
    }
    if (corpus->parsed()) return cmd_corpus(o, *corpus, args, out);
    if (alter->parsed()) return cmd_alter(o, args, out);
    if (compare->parsed()) return cmd_compare(o, args, out);
    if (train->parsed()) return cmd_train_lm(o, args, out);
    if (rerun->parsed()) return cmd_rerun(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DatasetSchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const TrainingDiverged& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace psyprobe::cli
