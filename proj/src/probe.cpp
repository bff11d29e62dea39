#include "psyprobe/probe.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include "psyprobe/errors.hpp"
#include "psyprobe/parallel.hpp"
#include "psyprobe/seeding.hpp"
#include "psyprobe/stats.hpp"
#include "psyprobe/text.hpp"

namespace psyprobe {

namespace {

constexpr std::string_view kEndOfText = "<|endoftext|>";

bool degenerate(std::string_view text) {
  auto t = trim(text);
  return t.empty() || t == kEndOfText;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string make_run_id(std::string_view kind, const GenerationBackend& backend, const ProbeConfig& probe,
                        const GenerationConfig& gen, std::uint64_t extra) {
  const auto h = derive_seed(probe.seed, {hash_text(kind), hash_text(backend.name()),
                                          static_cast<std::uint64_t>(probe.n_repetitions),
                                          static_cast<std::uint64_t>(probe.mode),
                                          static_cast<std::uint64_t>(probe.scoring.approach),
                                          static_cast<std::uint64_t>(gen.top_k),
                                          static_cast<std::uint64_t>(gen.max_seq_length), extra});
  return std::string(kind) + "-" + hex64(h).substr(0, 12);
}

std::string now(const RunContext& ctx) { return ctx.clock ? ctx.clock() : utc_timestamp(); }

struct Generated {
  std::string text;
  std::uint64_t seed = 0;
  int attempts = 0;
  std::string failure;  // empty on success
};

// One completion with the retry budget. Unreachable backends propagate.
Generated generate_with_retries(const GenerationBackend& backend, std::string_view prompt,
                                const GenerationConfig& gen, const ProbeConfig& probe,
                                std::initializer_list<std::uint64_t> path) {
  Generated g;
  for (int attempt = 0; attempt <= probe.max_retries; ++attempt) {
    std::uint64_t seed = derive_seed(probe.seed, path);
    if (attempt > 0) seed = derive_seed(seed, {static_cast<std::uint64_t>(attempt)});
    g.seed = seed;
    g.attempts = attempt + 1;
    try {
      auto raw = backend.generate(prompt, gen, seed);
      g.text = probe.strip_prompt ? strip_prompt_prefix(raw, prompt) : std::string(trim(raw));
      if (!degenerate(g.text)) {
        g.failure.clear();
        return g;
      }
      g.failure = "empty completion";
    } catch (const BackendUnreachable&) {
      throw;
    } catch (const std::exception& e) {
      g.failure = std::string("generation failed: ") + e.what();
    }
  }
  return g;
}

void record_diagnostics(ProbeRun& run, const ZeroShotScorer& scorer) {
  run.logit_fallbacks = scorer.diagnostics().logit_fallbacks.load();
  run.truncated_premises = scorer.diagnostics().truncated_premises.load();
}

int effective_workers(const ProbeConfig& probe, const GenerationBackend& backend, const NliBackend& nli) {
  return backend.thread_safe() && nli.thread_safe() ? probe.workers : 1;
}

}  // namespace

std::optional<OutputMode> parse_mode(std::string_view text) {
  if (text == "1" || text == "whole") return OutputMode::WholeResponse;
  if (text == "2" || text == "first") return OutputMode::FirstSentence;
  if (text == "3" || text == "median") return OutputMode::SentenceMedian;
  return std::nullopt;
}

void ProbeConfig::validate() const {
  if (n_repetitions < 1) throw std::invalid_argument("n_repetitions must be at least 1");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

std::string utc_timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string strip_prompt_prefix(std::string_view response, std::string_view prompt) {
  auto body = response;
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front()))) body.remove_prefix(1);
  const auto p = trim(prompt);
  if (!p.empty() && body.starts_with(p)) body.remove_prefix(p.size());
  return std::string(trim(body));
}

std::optional<TraitScore> score_response(std::string_view response, Trait trait, OutputMode mode,
                                         const ZeroShotScorer& scorer) {
  if (trim(response).empty()) return std::nullopt;
  switch (mode) {
    case OutputMode::WholeResponse:
      return scorer.score(response, trait);
    case OutputMode::FirstSentence:
      return scorer.score(split_sentences(response).front(), trait);
    case OutputMode::SentenceMedian: {
      std::vector<double> scores;
      for (const auto& s : split_sentences(response)) scores.push_back(scorer.score(s, trait).value());
      return TraitScore{stats::median(scores)};
    }
  }
  throw std::invalid_argument("unknown output mode");
}

std::optional<TraitMap<TraitScore>> score_response_all(std::string_view response, OutputMode mode,
                                                       const ZeroShotScorer& scorer) {
  if (trim(response).empty()) return std::nullopt;
  switch (mode) {
    case OutputMode::WholeResponse:
      return scorer.score_all(response);
    case OutputMode::FirstSentence:
      return scorer.score_all(split_sentences(response).front());
    case OutputMode::SentenceMedian: {
      TraitMap<std::vector<double>> per_trait;
      for (const auto& s : split_sentences(response)) {
        const auto all = scorer.score_all(s);
        for (Trait t : kAllTraits) per_trait[t].push_back(all[t].value());
      }
      TraitMap<TraitScore> out(TraitScore{kScaleNeutral});
      for (Trait t : kAllTraits) out[t] = TraitScore{stats::median(per_trait[t])};
      return out;
    }
  }
  throw std::invalid_argument("unknown output mode");
}

ProbeRun probe_model(const GenerationBackend& backend, const ProbeConfig& probe, const GenerationConfig& gen,
                     const NliBackend& nli, const Questionnaire& questionnaire, const RunContext& context) {
  probe.validate();
  gen.validate();

  ProbeRun run;
  run.run_id = context.run_id.empty() ? make_run_id("probe", backend, probe, gen, questionnaire.size())
                                      : context.run_id;
  run.backend_name = backend.name();
  run.backend_reproducible = backend.reproducible();
  run.nli_name = nli.name();
  run.probe = probe;
  run.generation = gen;
  run.started_at = now(context);

  Questionnaire ordered = questionnaire;
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  const auto n = static_cast<std::size_t>(probe.n_repetitions);
  run.items.resize(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    run.items[i].item_id = ordered[i].id;
    run.items[i].trait = ordered[i].keyed_trait;
    run.items[i].prompt = ordered[i].text;
    run.items[i].completions.resize(n);
  }

  const ZeroShotScorer scorer(nli, probe.scoring);
  parallel_for(ordered.size() * n, effective_workers(probe, backend, nli), [&](std::size_t task) {
    auto& item = run.items[task / n];
    const int rep = static_cast<int>(task % n);
    auto g = generate_with_retries(backend, item.prompt, gen, probe,
                                   {static_cast<std::uint64_t>(item.item_id), static_cast<std::uint64_t>(rep)});
    CompletionRecord rec;
    rec.repetition = rep;
    rec.seed = g.seed;
    rec.attempts = g.attempts;
    rec.text = std::move(g.text);
    if (!g.failure.empty()) {
      rec.hole_reason = g.failure;
    } else {
      try {
        if (auto s = score_response(rec.text, item.trait, probe.mode, scorer)) {
          rec.score = s->value();
        } else {
          rec.hole_reason = "empty completion";
        }
      } catch (const BackendUnreachable&) {
        throw;
      } catch (const std::exception& e) {
        rec.hole_reason = e.what();
      }
    }
    item.completions[static_cast<std::size_t>(rep)] = std::move(rec);
  });

  run.profile = aggregate_profile(run);
  record_diagnostics(run, scorer);
  run.finished_at = now(context);
  return run;
}

ProbeRun probe_unprompted(const GenerationBackend& backend, const ProbeConfig& probe, const GenerationConfig& gen,
                          const NliBackend& nli, int n_samples, const RunContext& context) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  if (!backend.supports_unprompted()) {
    throw std::invalid_argument("backend '" + backend.name() + "' cannot generate without a prompt");
  }
  probe.validate();
  gen.validate();

  ProbeRun run;
  run.run_id = context.run_id.empty()
                   ? make_run_id("unprompted", backend, probe, gen, static_cast<std::uint64_t>(n_samples))
                   : context.run_id;
  run.backend_name = backend.name();
  run.backend_reproducible = backend.reproducible();
  run.nli_name = nli.name();
  run.probe = probe;
  run.generation = gen;
  run.started_at = now(context);
  run.unprompted.resize(static_cast<std::size_t>(n_samples));

  const ZeroShotScorer scorer(nli, probe.scoring);
  const std::uint64_t ns = hash_text("unprompted");
  parallel_for(run.unprompted.size(), effective_workers(probe, backend, nli), [&](std::size_t i) {
    auto g = generate_with_retries(backend, "", gen, probe, {ns, static_cast<std::uint64_t>(i)});
    UnpromptedRecord rec;
    rec.index = static_cast<int>(i);
    rec.seed = g.seed;
    rec.attempts = g.attempts;
    rec.text = std::move(g.text);
    if (!g.failure.empty()) {
      rec.hole_reason = g.failure;
    } else {
      try {
        if (auto all = score_response_all(rec.text, probe.mode, scorer)) {
          TraitMap<double> scores;
          for (Trait t : kAllTraits) scores[t] = (*all)[t].value();
          rec.scores = scores;
        } else {
          rec.hole_reason = "empty completion";
        }
      } catch (const BackendUnreachable&) {
        throw;
      } catch (const std::exception& e) {
        rec.hole_reason = e.what();
      }
    }
    run.unprompted[i] = std::move(rec);
  });

  run.profile = aggregate_profile(run);
  record_diagnostics(run, scorer);
  run.finished_at = now(context);
  return run;
}

TraitDistribution distribution_of(const ProbeRun& run) {
  TraitDistribution d;
  for (const auto& item : run.items) {
    for (const auto& c : item.completions) {
      if (c.score) d.add(item.trait, *c.score);
    }
  }
  for (const auto& u : run.unprompted) {
    if (!u.scores) continue;
    for (Trait t : kAllTraits) d.add(t, (*u.scores)[t]);
  }
  return d;
}

TraitProfile aggregate_profile(const ProbeRun& run) {
  TraitMap<std::size_t> holes(0);
  for (const auto& item : run.items) {
    for (const auto& c : item.completions) {
      if (!c.score) ++holes[item.trait];
    }
  }
  for (const auto& u : run.unprompted) {
    if (u.scores) continue;
    for (Trait t : kAllTraits) ++holes[t];
  }
  return profile_of(distribution_of(run), holes);
}

}  // namespace psyprobe
