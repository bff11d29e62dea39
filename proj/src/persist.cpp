#include "psyprobe/persist.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "psyprobe/stats.hpp"

namespace psyprobe {

namespace {

std::string num(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string_view mode_key(OutputMode m) {
  switch (m) {
    case OutputMode::WholeResponse: return "1";
    case OutputMode::FirstSentence: return "2";
    case OutputMode::SentenceMedian: return "3";
  }
  return "?";
}

Trait trait_from(const nlohmann::json& j) {
  auto t = parse_trait(j.get<std::string>());
  if (!t) throw std::invalid_argument("unknown trait " + j.dump());
  return *t;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

Json to_json(const GenerationConfig& c) {
  return Json{{"temperature", c.temperature}, {"top_k", c.top_k}, {"top_p", c.top_p},
              {"max_seq_length", c.max_seq_length}};
}

GenerationConfig generation_config_from_json(const nlohmann::json& j) {
  GenerationConfig c;
  c.temperature = j.value("temperature", c.temperature);
  c.top_k = j.value("top_k", c.top_k);
  c.top_p = j.value("top_p", c.top_p);
  c.max_seq_length = j.value("max_seq_length", c.max_seq_length);
  c.validate();
  return c;
}

Json to_json(const ScoringOptions& o) {
  return Json{{"approach", static_cast<int>(o.approach)},
              {"labels", o.labels == LabelVariant::Published ? "published" : "corrected"},
              {"pole_source", o.pole_source == PoleScoreSource::EntailmentLogits ? "logits" : "log_probabilities"}};
}

ScoringOptions scoring_options_from_json(const nlohmann::json& j) {
  ScoringOptions o;
  if (j.contains("approach")) {
    auto a = parse_approach(j.at("approach").is_string() ? j.at("approach").get<std::string>()
                                                          : std::to_string(j.at("approach").get<int>()));
    if (!a) throw std::invalid_argument("approach must be 1, 2 or 3");
    o.approach = *a;
  }
  const auto labels = j.value("labels", std::string("published"));
  if (labels != "published" && labels != "corrected") throw std::invalid_argument("labels must be published or corrected");
  o.labels = labels == "published" ? LabelVariant::Published : LabelVariant::Corrected;
  const auto src = j.value("pole_source", std::string("logits"));
  if (src != "logits" && src != "log_probabilities") {
    throw std::invalid_argument("pole_source must be logits or log_probabilities");
  }
  o.pole_source = src == "logits" ? PoleScoreSource::EntailmentLogits : PoleScoreSource::EntailmentLogProbabilities;
  return o;
}

Json to_json(const ProbeConfig& c) {
  return Json{{"n_repetitions", c.n_repetitions}, {"mode", static_cast<int>(c.mode)},
              {"scoring", to_json(c.scoring)},   {"strip_prompt", c.strip_prompt},
              {"seed", c.seed},                  {"max_retries", c.max_retries},
              {"workers", c.workers}};
}

ProbeConfig probe_config_from_json(const nlohmann::json& j) {
  ProbeConfig c;
  c.n_repetitions = j.value("n_repetitions", c.n_repetitions);
  if (j.contains("mode")) {
    const auto& m = j.at("mode");
    auto mode = parse_mode(m.is_string() ? m.get<std::string>() : std::to_string(m.get<int>()));
    if (!mode) throw std::invalid_argument("mode must be 1, 2 or 3");
    c.mode = *mode;
  }
  if (j.contains("scoring")) c.scoring = scoring_options_from_json(j.at("scoring"));
  c.strip_prompt = j.value("strip_prompt", c.strip_prompt);
  c.seed = j.value("seed", c.seed);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.workers = j.value("workers", c.workers);
  c.validate();
  return c;
}

Json to_json(const TraitProfile& p) {
  Json out = Json::object();
  for (Trait t : kAllTraits) {
    const auto& s = p[t];
    out[std::string(trait_key(t))] = Json{{"median", s.median ? Json(*s.median) : Json(nullptr)},
                                          {"spread", s.spread},
                                          {"iqr", s.iqr},
                                          {"n_samples", s.n_samples},
                                          {"holes", s.holes}};
  }
  return out;
}

TraitProfile profile_from_json(const nlohmann::json& j) {
  TraitProfile p;
  for (Trait t : kAllTraits) {
    const auto& s = j.at(std::string(trait_key(t)));
    auto& out = p[t];
    if (!s.at("median").is_null()) out.median = s.at("median").get<double>();
    out.spread = s.at("spread").get<double>();
    out.iqr = s.at("iqr").get<double>();
    out.n_samples = s.at("n_samples").get<std::size_t>();
    out.holes = s.at("holes").get<std::size_t>();
  }
  return p;
}

Json to_json(const TrainingSummary& s) {
  return Json{{"train_loss", s.train_loss},
              {"validation_loss", s.validation_loss},
              {"train_examples", s.train_examples},
              {"validation_examples", s.validation_examples},
              {"steps", s.steps}};
}

Json to_json(const ProbeRun& run) {
  Json j{{"kind", "probe_run"},
         {"schema_version", kSchemaVersion},
         {"run_id", run.run_id},
         {"backend", run.backend_name},
         {"backend_reproducible", run.backend_reproducible},
         {"nli", run.nli_name},
         {"probe", to_json(run.probe)},
         {"generation", to_json(run.generation)},
         {"started_at", run.started_at},
         {"finished_at", run.finished_at},
         {"logit_fallbacks", run.logit_fallbacks},
         {"truncated_premises", run.truncated_premises},
         {"profile", to_json(run.profile)}};
  Json items = Json::array();
  for (const auto& item : run.items) {
    Json comps = Json::array();
    for (const auto& c : item.completions) {
      comps.push_back(Json{{"repetition", c.repetition},
                           {"seed", c.seed},
                           {"attempts", c.attempts},
                           {"text", c.text},
                           {"score", c.score ? Json(*c.score) : Json(nullptr)},
                           {"hole_reason", c.hole_reason}});
    }
    items.push_back(Json{{"item_id", item.item_id},
                         {"trait", trait_key(item.trait)},
                         {"prompt", item.prompt},
                         {"completions", std::move(comps)}});
  }
  j["items"] = std::move(items);
  Json unprompted = Json::array();
  for (const auto& u : run.unprompted) {
    Json scores = nullptr;
    if (u.scores) {
      scores = Json::object();
      for (Trait t : kAllTraits) scores[std::string(trait_key(t))] = (*u.scores)[t];
    }
    unprompted.push_back(Json{{"index", u.index},
                              {"seed", u.seed},
                              {"attempts", u.attempts},
                              {"text", u.text},
                              {"scores", std::move(scores)},
                              {"hole_reason", u.hole_reason}});
  }
  j["unprompted"] = std::move(unprompted);
  return j;
}

ProbeRun probe_run_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string()) != "probe_run") throw std::invalid_argument("not a probe run record");
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw std::invalid_argument("unsupported probe run schema version " + j.value("schema_version", nlohmann::json()).dump());
  }
  ProbeRun run;
  run.run_id = j.at("run_id").get<std::string>();
  run.backend_name = j.at("backend").get<std::string>();
  run.backend_reproducible = j.at("backend_reproducible").get<bool>();
  run.nli_name = j.at("nli").get<std::string>();
  run.probe = probe_config_from_json(j.at("probe"));
  run.generation = generation_config_from_json(j.at("generation"));
  run.started_at = j.at("started_at").get<std::string>();
  run.finished_at = j.at("finished_at").get<std::string>();
  run.logit_fallbacks = j.at("logit_fallbacks").get<std::size_t>();
  run.truncated_premises = j.at("truncated_premises").get<std::size_t>();
  run.profile = profile_from_json(j.at("profile"));
  for (const auto& ij : j.at("items")) {
    ItemRecord item;
    item.item_id = ij.at("item_id").get<int>();
    item.trait = trait_from(ij.at("trait"));
    item.prompt = ij.at("prompt").get<std::string>();
    for (const auto& cj : ij.at("completions")) {
      CompletionRecord c;
      c.repetition = cj.at("repetition").get<int>();
      c.seed = cj.at("seed").get<std::uint64_t>();
      c.attempts = cj.at("attempts").get<int>();
      c.text = cj.at("text").get<std::string>();
      if (!cj.at("score").is_null()) c.score = cj.at("score").get<double>();
      c.hole_reason = cj.at("hole_reason").get<std::string>();
      item.completions.push_back(std::move(c));
    }
    run.items.push_back(std::move(item));
  }
  for (const auto& uj : j.at("unprompted")) {
    UnpromptedRecord u;
    u.index = uj.at("index").get<int>();
    u.seed = uj.at("seed").get<std::uint64_t>();
    u.attempts = uj.at("attempts").get<int>();
    u.text = uj.at("text").get<std::string>();
    if (!uj.at("scores").is_null()) {
      TraitMap<double> s(0.0);
      for (Trait t : kAllTraits) s[t] = uj.at("scores").at(std::string(trait_key(t))).get<double>();
      u.scores = s;
    }
    u.hole_reason = uj.at("hole_reason").get<std::string>();
    run.unprompted.push_back(std::move(u));
  }
  return run;
}

Json to_json(const CorpusEvaluation& e) {
  Json dist = Json::object();
  for (Trait t : kAllTraits) dist[std::string(trait_key(t))] = e.distribution.scores[t];
  return Json{{"kind", "corpus_evaluation"},
              {"schema_version", kSchemaVersion},
              {"corpus", e.corpus_name},
              {"nli", e.nli_name},
              {"sampling_plan", Json{{"fraction", e.plan.fraction},
                                     {"seed", e.plan.seed},
                                     {"unit", unit_kind_name(e.plan.unit)},
                                     {"max_unit_chars", e.plan.max_unit_chars}}},
              {"scoring", to_json(e.scoring)},
              {"sampling", Json{{"documents_seen", e.sampling.documents_seen},
                                {"documents_retained", e.sampling.documents_retained},
                                {"documents_unreadable", e.sampling.documents_unreadable},
                                {"units", e.sampling.units}}},
              {"units_scored", e.units_scored},
              {"units_failed", e.units_failed},
              {"profile", to_json(profile_of(e.distribution))},
              {"scores", std::move(dist)}};
}

Json to_json(const AlterationReport& r) {
  Json cols = Json::array();
  for (std::size_t i = 0; i < r.after.size(); ++i) {
    const auto& c = r.after[i];
    Json delta = Json::object();
    const auto d = r.median_delta(i);
    for (Trait t : kAllTraits) delta[std::string(trait_key(t))] = d[t] ? Json(*d[t]) : Json(nullptr);
    cols.push_back(Json{{"label", c.label},
                        {"threshold", c.threshold ? Json(*c.threshold) : Json(nullptr)},
                        {"model_id", c.model_id},
                        {"run_id", c.run.run_id},
                        {"positives", c.positives},
                        {"negatives", c.negatives},
                        {"training", to_json(c.training)},
                        {"profile", to_json(c.run.profile)},
                        {"median_delta", std::move(delta)}});
  }
  return Json{{"kind", "alteration_report"},
              {"schema_version", kSchemaVersion},
              {"method", static_cast<int>(r.method)},
              {"target", trait_key(r.target)},
              {"backend", r.backend_name},
              {"baseline_run_id", r.baseline_run_id},
              {"before", to_json(r.before)},
              {"after", std::move(cols)}};
}

std::string probe_csv(const ProbeRun& run) {
  std::ostringstream out;
  const auto mode = mode_key(run.probe.mode);
  if (!run.items.empty()) {
    out << "item_id,repetition,trait,mode,score\n";
    for (const auto& item : run.items) {
      for (const auto& c : item.completions) {
        out << item.item_id << ',' << c.repetition << ',' << trait_key(item.trait) << ',' << mode << ','
            << (c.score ? num(*c.score) : "") << '\n';
      }
    }
  }
  if (!run.unprompted.empty()) {
    out << "sample,trait,mode,score\n";
    for (const auto& u : run.unprompted) {
      for (Trait t : kAllTraits) {
        out << u.index << ',' << trait_key(t) << ',' << mode << ',' << (u.scores ? num((*u.scores)[t]) : "") << '\n';
      }
    }
  }
  return out.str();
}

std::string corpus_csv(const CorpusEvaluation& e) {
  std::ostringstream out;
  out << "document,unit";
  for (Trait t : kAllTraits) out << ',' << trait_key(t);
  out << '\n';
  for (const auto& u : e.units) {
    out << u.document << ',' << u.unit;
    for (Trait t : kAllTraits) out << ',' << num(u.scores[t]);
    out << '\n';
  }
  return out.str();
}

std::string box_summary_csv(const TraitDistribution& dist) {
  std::ostringstream out;
  out << "trait,count,min,q1,median,q3,max,whisker_low,whisker_high,mean,stddev\n";
  const auto sums = dist.summaries();
  for (Trait t : kAllTraits) {
    out << trait_key(t);
    if (const auto& s = sums[t]) {
      for (double v : {double(s->count), s->min, s->q1, s->median, s->q3, s->max, s->whisker_low, s->whisker_high,
                       s->mean, s->stddev}) {
        out << ',' << num(v);
      }
    } else {
      out << ",0,,,,,,,,,";
    }
    out << '\n';
  }
  return out.str();
}

std::string box_plot_svg(const TraitDistribution& dist, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 620, kTop = 40, kBottom = 340;
  auto y = [&](double v) { return kBottom - (v - kScaleMin) / (kScaleMax - kScaleMin) * (kBottom - kTop); };
  const double slot = (kRight - kLeft) / static_cast<double>(kTraitCount);
  const auto sums = dist.summaries();

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kBottom
      << "\" stroke=\"black\"/>\n";
  for (int tick = 1; tick <= 5; ++tick) {
    const auto ty = num(y(tick), "%.2f");
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << ty << "\" x2=\"" << kLeft << "\" y2=\"" << ty
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 9 << "\" y=\"" << ty << "\" text-anchor=\"end\" dominant-baseline=\"middle\">"
        << tick << "</text>\n";
  }
  out << "<line x1=\"" << kLeft << "\" y1=\"" << num(y(kScaleNeutral), "%.2f") << "\" x2=\"" << kRight << "\" y2=\""
      << num(y(kScaleNeutral), "%.2f") << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";

  for (std::size_t i = 0; i < kTraitCount; ++i) {
    const Trait t = kAllTraits[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = slot * 0.25;
    out << "<text x=\"" << num(cx, "%.2f") << "\" y=\"" << kBottom + 20 << "\" text-anchor=\"middle\">"
        << xml_escape(trait_name(t)) << "</text>\n";
    const auto& s = sums[t];
    if (!s) {
      out << "<text x=\"" << num(cx, "%.2f") << "\" y=\"" << num(y(kScaleNeutral) - 8, "%.2f")
          << "\" text-anchor=\"middle\" fill=\"gray\">no data</text>\n";
      continue;
    }
    auto f = [](double v) { return num(v, "%.2f"); };
    out << "<g data-trait=\"" << trait_key(t) << "\">\n";
    out << "<line x1=\"" << f(cx) << "\" y1=\"" << f(y(s->whisker_low)) << "\" x2=\"" << f(cx) << "\" y2=\""
        << f(y(s->q1)) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << f(cx) << "\" y1=\"" << f(y(s->q3)) << "\" x2=\"" << f(cx) << "\" y2=\""
        << f(y(s->whisker_high)) << "\" stroke=\"black\"/>\n";
    for (double w : {s->whisker_low, s->whisker_high}) {
      out << "<line x1=\"" << f(cx - half / 2) << "\" y1=\"" << f(y(w)) << "\" x2=\"" << f(cx + half / 2)
          << "\" y2=\"" << f(y(w)) << "\" stroke=\"black\"/>\n";
    }
    out << "<rect x=\"" << f(cx - half) << "\" y=\"" << f(y(s->q3)) << "\" width=\"" << f(2 * half)
        << "\" height=\"" << f(y(s->q1) - y(s->q3)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << f(cx - half) << "\" y1=\"" << f(y(s->median)) << "\" x2=\"" << f(cx + half)
        << "\" y2=\"" << f(y(s->median)) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    for (double v : dist.scores[t]) {
      if (v < s->whisker_low || v > s->whisker_high) {
        out << "<circle cx=\"" << f(cx) << "\" cy=\"" << f(y(v)) << "\" r=\"2\" fill=\"none\" stroke=\"black\"/>\n";
      }
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ProbeRun load_probe_run(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("not JSON: " + path.string());
  return probe_run_from_json(j);
}

TraitDistribution load_distribution(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_text(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("not a JSON object: " + path.string());
  const auto kind = j.value("kind", std::string());
  if (kind == "probe_run") return distribution_of(probe_run_from_json(j));
  if (kind == "corpus_evaluation") {
    TraitDistribution d;
    for (Trait t : kAllTraits) d.scores[t] = j.at("scores").at(std::string(trait_key(t))).get<std::vector<double>>();
    return d;
  }
  throw std::invalid_argument(path.string() + " is neither a probe run nor a corpus evaluation");
}

Json to_json(const RunManifest& m) {
  return Json{{"kind", "manifest"},
              {"schema_version", kSchemaVersion},
              {"run_id", m.run_id},
              {"command", m.command},
              {"argv", m.argv},
              {"tool_version", kToolVersion},
              {"config", m.config},
              {"backends", m.backends},
              {"seed", m.seed},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at},
              {"artifacts", m.artifacts},
              {"exit_code", m.exit_code}};
}

std::vector<nlohmann::json> read_manifests(const std::filesystem::path& out_dir) {
  std::vector<nlohmann::json> out;
  std::ifstream in(out_dir / "manifests.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

void append_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  std::set<std::string> taken;
  for (const auto& m : read_manifests(out_dir)) {
    for (const auto& a : m.at("artifacts")) taken.insert(a.get<std::string>());
  }
  for (const auto& a : manifest.artifacts) {
    if (taken.contains(a)) throw std::runtime_error("artifact " + a + " already belongs to another manifest");
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "manifests.jsonl", std::ios::app | std::ios::binary);
  out << to_json(manifest).dump() << '\n';
  if (!out) throw std::runtime_error("cannot append manifest in " + out_dir.string());
}

}  // namespace psyprobe
