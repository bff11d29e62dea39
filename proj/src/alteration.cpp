#include "psyprobe/alteration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psyprobe/persist.hpp"
#include "psyprobe/scale.hpp"
#include "psyprobe/seeding.hpp"
#include "psyprobe/text.hpp"

namespace psyprobe {

namespace {

using nlohmann::json;

constexpr std::string_view kNeuroticism = "neuroticism";

// Canonical column name for a header, after aliasing: "text", a trait key,
// "neuroticism", or "" for columns we ignore.
std::string canonical_column(std::string header, const DatasetSchema& schema) {
  header = to_lower_ascii(trim(header));
  for (const auto& [from, to] : schema.aliases) {
    if (to_lower_ascii(from) == header) {
      header = to_lower_ascii(to);
      break;
    }
  }
  if (header == "text" || header == kNeuroticism) return header;
  if (auto t = parse_trait(header)) return std::string(trait_key(*t));
  return {};
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Maps canonical names to where each value comes from, and reports any
// required column the header lacks.
struct ColumnPlan {
  std::optional<std::size_t> text;
  TraitMap<std::optional<std::size_t>> trait;
  TraitMap<bool> reflected{false};
};

ColumnPlan plan_columns(const std::vector<std::string>& headers, const DatasetSchema& schema) {
  ColumnPlan plan;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const auto name = canonical_column(headers[i], schema);
    if (name == "text") {
      plan.text = i;
    } else if (name == kNeuroticism) {
      if (!plan.trait[Trait::EmotionalStability]) {
        plan.trait[Trait::EmotionalStability] = i;
        plan.reflected[Trait::EmotionalStability] = true;
      }
    } else if (!name.empty()) {
      auto t = *parse_trait(name);
      plan.trait[t] = i;
      plan.reflected[t] = false;
    }
  }
  std::vector<std::string> missing;
  if (!plan.text) missing.emplace_back("text");
  for (Trait t : kAllTraits) {
    if (!plan.trait[t]) missing.emplace_back(trait_key(t));
  }
  if (!missing.empty()) {
    std::string msg = "annotated dataset is missing columns:";
    for (const auto& m : missing) msg += " " + m;
    throw DatasetSchemaError(msg, std::move(missing));
  }
  return plan;
}

// Validates one row; fills the dataset's counters when the row is dropped.
void accept_row(const ColumnPlan& plan, const std::function<std::optional<std::string>(std::size_t)>& field,
                AnnotatedDataset& out) {
  AnnotatedExample ex;
  auto text = field(*plan.text);
  if (!text || trim(*text).empty()) {
    ++out.rejected_missing;
    return;
  }
  ex.text = std::move(*text);
  bool out_of_range = false;
  for (Trait t : kAllTraits) {
    auto raw = field(*plan.trait[t]);
    auto v = raw ? parse_number(*raw) : std::nullopt;
    if (!v) {
      ++out.rejected_missing;
      return;
    }
    if (*v < kScaleMin || *v > kScaleMax) out_of_range = true;
    ex.scores[t] = plan.reflected[t] ? 6.0 - *v : *v;
  }
  if (out_of_range) {
    ++out.rejected_out_of_range;
    return;
  }
  out.examples.push_back(std::move(ex));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_sweep_threshold(double threshold) {
  return std::any_of(kMethod2Thresholds.begin(), kMethod2Thresholds.end(),
                     [&](double t) { return std::abs(t - threshold) < 1e-12; });
}

std::string threshold_label(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", threshold);
  return buf;
}

// Gives the finetuned generator a name of its own so run ids differ.
class RenamedGenerator final : public GenerationBackend {
 public:
  RenamedGenerator(std::shared_ptr<const GenerationBackend> inner, std::string name)
      : inner_(std::move(inner)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::string generate(std::string_view prompt, const GenerationConfig& config,
                       std::optional<std::uint64_t> seed) const override {
    return inner_->generate(prompt, config, seed);
  }
  bool reproducible() const override { return inner_->reproducible(); }
  bool thread_safe() const override { return inner_->thread_safe(); }
  bool supports_unprompted() const override { return inner_->supports_unprompted(); }

 private:
  std::shared_ptr<const GenerationBackend> inner_;
  std::string name_;
};

void check_inputs(const AlterationInputs& inputs, const TrainableBackend& backend) {
  if (!inputs.nli) throw std::invalid_argument("alteration needs an NLI backend");
  if (!inputs.baseline) return;
  const auto& b = *inputs.baseline;
  const auto base = backend.base_generator()->name();
  if (b.backend_name != base) {
    throw std::invalid_argument("baseline run " + b.run_id + " was produced by " + b.backend_name + ", not " + base);
  }
  if (b.probe.n_repetitions != inputs.probe.n_repetitions || b.probe.mode != inputs.probe.mode ||
      b.probe.seed != inputs.probe.seed || b.probe.scoring.approach != inputs.probe.scoring.approach ||
      !(b.generation == inputs.generation)) {
    throw std::invalid_argument("baseline run " + b.run_id + " used different probe or generation settings");
  }
}

void fill_before(AlterationReport& report, const TrainableBackend& backend, const AlterationInputs& inputs) {
  report.backend_name = backend.name();
  if (inputs.baseline) {
    report.before = inputs.baseline->profile;
    report.baseline_run_id = inputs.baseline->run_id;
    return;
  }
  auto run = probe_model(*backend.base_generator(), inputs.probe, inputs.generation, *inputs.nli);
  report.before = run.profile;
  report.baseline_run_id = run.run_id;
}

ProbeRun probe_after(const TrainableBackend& backend, const ModelHandle& handle, const AlterationInputs& inputs) {
  const RenamedGenerator gen(backend.as_generation_backend(handle), backend.name() + "/" + handle.id);
  return probe_model(gen, inputs.probe, inputs.generation, *inputs.nli);
}

std::uint64_t training_seed(const AlterationInputs& inputs, AlterationMethod method, Trait trait, double threshold) {
  return derive_seed(inputs.seed, {static_cast<std::uint64_t>(method), index_of(trait),
                                   static_cast<std::uint64_t>(std::llround(threshold * 100.0))});
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted CSV field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

AnnotatedDataset parse_annotated_csv(std::string_view content, const DatasetSchema& schema) {
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
  const auto rows = parse_csv(content);
  if (rows.empty()) throw DatasetSchemaError("annotated dataset has no header", {"text"});
  const auto plan = plan_columns(rows[0], schema);
  AnnotatedDataset out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    accept_row(plan, [&](std::size_t i) -> std::optional<std::string> {
      if (i >= row.size()) return std::nullopt;
      return row[i];
    }, out);
  }
  return out;
}

AnnotatedDataset parse_annotated_jsonl(std::string_view content, const DatasetSchema& schema) {
  std::vector<json> objects;
  std::set<std::string> keys;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error("line " + std::to_string(line_no) + " is not a JSON object");
    }
    for (const auto& item : j.items()) keys.insert(item.key());
    objects.push_back(std::move(j));
  }
  const std::vector<std::string> headers(keys.begin(), keys.end());
  const auto plan = plan_columns(headers, schema);
  AnnotatedDataset out;
  for (const auto& obj : objects) {
    accept_row(plan, [&](std::size_t i) -> std::optional<std::string> {
      auto it = obj.find(headers[i]);
      if (it == obj.end() || it->is_null()) return std::nullopt;
      if (it->is_string()) return it->get<std::string>();
      if (it->is_number()) return it->dump();
      return std::nullopt;
    }, out);
  }
  return out;
}

AnnotatedDataset load_annotated_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("annotated dataset not found: " + path.string());
  const auto content = read_file(path);
  if (path.extension() == ".jsonl") return parse_annotated_jsonl(content, schema);
  if (path.extension() == ".csv") return parse_annotated_csv(content, schema);
  throw std::runtime_error("annotated dataset must be .csv or .jsonl: " + path.string());
}

std::vector<std::string> filter_method1(const std::vector<AnnotatedExample>& data, Trait trait, double threshold) {
  if (data.empty()) throw std::invalid_argument("annotated dataset is empty");
  std::vector<std::string> out;
  for (const auto& ex : data) {
    if (ex.scores[trait] > threshold) out.push_back(ex.text);
  }
  if (out.empty()) {
    throw std::runtime_error("no example scores above " + threshold_label(threshold) + " on " +
                             std::string(trait_name(trait)) + "; nothing to finetune on");
  }
  return out;
}

std::vector<LabelledText> binarize_method2(const std::vector<AnnotatedExample>& data, Trait trait, double threshold) {
  if (!is_sweep_threshold(threshold)) {
    throw std::invalid_argument("threshold " + threshold_label(threshold) + " is not one of 2.5, 3.0, 3.5, 4.0, 4.5");
  }
  if (data.empty()) throw std::invalid_argument("annotated dataset is empty");
  std::vector<LabelledText> out;
  std::size_t positives = 0;
  for (const auto& ex : data) {
    const int label = ex.scores[trait] > threshold ? 1 : 0;
    positives += static_cast<std::size_t>(label);
    out.push_back({ex.text, label});
  }
  if (positives == 0 || positives == out.size()) {
    throw std::runtime_error("threshold " + threshold_label(threshold) + " puts every example of " +
                             std::string(trait_name(trait)) + " in one class");
  }
  return out;
}

void FinetuneRecipe::validate() const {
  if (thresholds.empty()) throw std::invalid_argument("recipe has no thresholds");
  if (method == AlterationMethod::Method1 && thresholds.size() != 1) {
    throw std::invalid_argument("Method 1 takes a single threshold");
  }
  if (method == AlterationMethod::Method2) {
    for (double t : thresholds) {
      if (!is_sweep_threshold(t)) throw std::invalid_argument("threshold " + threshold_label(t) + " is not in the sweep set");
    }
  }
  if (dataset.empty()) throw std::invalid_argument("recipe names no dataset");
  causal.validate();
  classifier.validate();
  probe.validate();
  generation.validate();
}

FinetuneRecipe load_recipe(const std::filesystem::path& path) {
  const auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("recipe is not a JSON object: " + path.string());
  static const std::set<std::string> known{"method", "trait", "threshold", "thresholds", "dataset", "columns",
                                           "base_model", "backend", "baseline_run", "seed", "hyperparameters",
                                           "probe", "generation"};
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) throw std::invalid_argument("unknown recipe key: " + item.key());
  }
  const auto dir = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : dir / q;
  };

  FinetuneRecipe r;
  const int method = j.value("method", 1);
  if (method != 1 && method != 2) throw std::invalid_argument("recipe method must be 1 or 2");
  r.method = static_cast<AlterationMethod>(method);
  auto trait = parse_trait(j.value("trait", std::string()));
  if (!trait) throw std::invalid_argument("recipe needs a valid trait");
  r.target = *trait;
  if (j.contains("thresholds")) {
    r.thresholds = j.at("thresholds").get<std::vector<double>>();
  } else if (j.contains("threshold")) {
    r.thresholds = {j.at("threshold").get<double>()};
  } else if (r.method == AlterationMethod::Method2) {
    r.thresholds.assign(kMethod2Thresholds.begin(), kMethod2Thresholds.end());
  }
  if (j.contains("dataset")) r.dataset = resolve(j.at("dataset").get<std::string>());
  if (j.contains("columns")) r.schema.aliases = j.at("columns").get<std::map<std::string, std::string>>();
  r.base_model = j.value("base_model", std::string());
  r.backend = j.value("backend", std::string("mock"));
  if (j.contains("baseline_run")) r.baseline_run = resolve(j.at("baseline_run").get<std::string>());
  r.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("hyperparameters")) {
    const auto& h = j.at("hyperparameters");
    r.causal.batch_size = h.value("batch_size", r.causal.batch_size);
    r.causal.epochs = h.value("epochs", r.causal.epochs);
    r.causal.warmup_proportion = h.value("warmup_proportion", r.causal.warmup_proportion);
    r.causal.learning_rate = h.value("learning_rate", r.causal.learning_rate);
    r.causal.weight_decay = h.value("weight_decay", r.causal.weight_decay);
    r.causal.validation_fraction = h.value("validation_fraction", r.causal.validation_fraction);
    r.classifier.batch_size = h.value("batch_size", r.classifier.batch_size);
    r.classifier.epochs = h.value("classifier_epochs", r.classifier.epochs);
    r.classifier.learning_rate = h.value("classifier_learning_rate", r.classifier.learning_rate);
    r.classifier.validation_fraction = h.value("validation_fraction", r.classifier.validation_fraction);
  }
  if (j.contains("probe")) r.probe = probe_config_from_json(j.at("probe"));
  r.probe.seed = j.contains("probe") && j.at("probe").contains("seed") ? r.probe.seed : r.seed;
  if (j.contains("generation")) r.generation = generation_config_from_json(j.at("generation"));
  r.validate();
  return r;
}

TraitMap<std::optional<double>> AlterationReport::median_delta(std::size_t column) const {
  TraitMap<std::optional<double>> out;
  const auto& prof = after.at(column).run.profile;
  for (Trait t : kAllTraits) {
    if (before[t].median && prof[t].median) out[t] = *prof[t].median - *before[t].median;
  }
  return out;
}

std::string format_cell(const TraitSummary& summary) {
  if (!summary.median) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f)", *summary.median, summary.spread);
  return buf;
}

std::string render_table(const AlterationReport& report) {
  std::vector<std::string> header{"Trait", "Before"};
  for (const auto& c : report.after) header.push_back(c.threshold && report.method == AlterationMethod::Method2
                                                          ? "> " + c.label
                                                          : "After");
  std::vector<std::vector<std::string>> rows;
  for (Trait t : kAllTraits) {
    std::vector<std::string> row{std::string(trait_name(t)) + (t == report.target ? " *" : ""),
                                 format_cell(report.before[t])};
    for (const auto& c : report.after) row.push_back(format_cell(c.run.profile[t]));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    width[i] = header[i].size();
    for (const auto& r : rows) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream out;
  out << "Method " << static_cast<int>(report.method) << ", target " << trait_name(report.target) << ", "
      << report.backend_name << "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << (i ? "  " : "") << cells[i] << std::string(width[i] - cells[i].size(), ' ');
    }
    out << "\n";
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return out.str();
}

AlterationReport run_method1(TrainableBackend& backend, const std::vector<AnnotatedExample>& data, Trait trait,
                             const AlterationInputs& inputs, const CausalHyperparameters& hp, double threshold) {
  check_inputs(inputs, backend);
  hp.validate();
  const auto texts = filter_method1(data, trait, threshold);

  AlterationReport report;
  report.method = AlterationMethod::Method1;
  report.target = trait;
  fill_before(report, backend, inputs);

  AlterationColumn col;
  col.label = "after";
  col.threshold = threshold;
  col.positives = texts.size();
  col.negatives = data.size() - texts.size();
  auto handle = backend.finetune_causal(texts, hp, training_seed(inputs, report.method, trait, threshold));
  col.model_id = handle.id;
  col.training = handle.summary;
  col.run = probe_after(backend, handle, inputs);
  report.after.push_back(std::move(col));
  return report;
}

AlterationReport run_method2(TrainableBackend& backend, const std::vector<AnnotatedExample>& data, Trait trait,
                             const std::vector<double>& thresholds, const AlterationInputs& inputs,
                             const ClassifierHyperparameters& hp) {
  check_inputs(inputs, backend);
  hp.validate();
  if (thresholds.empty()) throw std::invalid_argument("no thresholds to sweep");
  // Binarize everything first so a bad threshold fails before any training.
  std::vector<std::vector<LabelledText>> labelled;
  for (double t : thresholds) labelled.push_back(binarize_method2(data, trait, t));

  AlterationReport report;
  report.method = AlterationMethod::Method2;
  report.target = trait;
  fill_before(report, backend, inputs);

  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    std::vector<std::string> texts;
    std::vector<int> labels;
    for (auto& lt : labelled[i]) {
      texts.push_back(lt.text);
      labels.push_back(lt.label);
    }
    AlterationColumn col;
    col.label = threshold_label(thresholds[i]);
    col.threshold = thresholds[i];
    col.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    col.negatives = labels.size() - col.positives;
    auto handle = backend.finetune_classifier(texts, labels, hp, training_seed(inputs, report.method, trait, thresholds[i]));
    col.model_id = handle.id;
    col.training = handle.summary;
    col.run = probe_after(backend, handle, inputs);
    report.after.push_back(std::move(col));
  }
  return report;
}

FixtureTrainableBackend::FixtureTrainableBackend(std::shared_ptr<const GenerationBackend> base,
                                                 std::shared_ptr<const GenerationBackend> replacement)
    : base_(std::move(base)), replacement_(std::move(replacement)) {
  if (!base_) throw std::invalid_argument("fixture trainer needs a base generator");
}

ModelHandle FixtureTrainableBackend::remember(std::string kind, std::vector<std::string> texts, std::size_t epochs) {
  ModelHandle h;
  h.id = kind + "-" + std::to_string(trained_.size() + 1);
  h.summary.train_examples = texts.size();
  h.summary.train_loss.assign(epochs, 0.0);
  trained_[h.id] = std::move(texts);
  return h;
}

ModelHandle FixtureTrainableBackend::finetune_causal(std::span<const std::string> texts,
                                                     const CausalHyperparameters& hp, std::uint64_t) {
  hp.validate();
  if (texts.empty()) throw std::invalid_argument("no training texts");
  return remember("causal", {texts.begin(), texts.end()}, static_cast<std::size_t>(hp.epochs));
}

ModelHandle FixtureTrainableBackend::finetune_classifier(std::span<const std::string> texts,
                                                         std::span<const int> labels,
                                                         const ClassifierHyperparameters& hp, std::uint64_t) {
  hp.validate();
  if (texts.size() != labels.size()) throw std::invalid_argument("texts and labels differ in length");
  std::vector<std::string> positives;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (labels[i]) positives.push_back(texts[i]);
  }
  if (positives.empty()) throw std::invalid_argument("no positive examples");
  return remember("classifier", std::move(positives), static_cast<std::size_t>(hp.epochs));
}

const std::vector<std::string>& FixtureTrainableBackend::trained_on(const ModelHandle& handle) const {
  auto it = trained_.find(handle.id);
  if (it == trained_.end()) throw std::invalid_argument("unknown model handle " + handle.id);
  return it->second;
}

std::shared_ptr<const GenerationBackend> FixtureTrainableBackend::as_generation_backend(
    const ModelHandle& handle) const {
  const auto& texts = trained_on(handle);
  if (replacement_) return replacement_;
  return std::make_shared<FixtureGenerator>(std::vector<FixtureGenerator::Rule>{{"*", texts}},
                                            FixtureGenerator::Selection::BySeed, base_->name() + "/" + handle.id);
}

}  // namespace psyprobe
