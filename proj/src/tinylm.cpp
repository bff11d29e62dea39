#include "psyprobe/tinylm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace psyprobe {

namespace {

bool is_punct_token(std::string_view t) {
  return t.size() == 1 && std::string_view(".,!?;:\"()").find(t[0]) != std::string_view::npos;
}

bool ends_sentence(std::string_view t) { return t == "." || t == "!" || t == "?"; }

template <typename M>
void adam_step(M& param, const M& grad, M& m, M& v, double lr, double weight_decay, std::size_t step) {
  using S = typename M::Scalar;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  m = S(b1) * m + S(1 - b1) * grad;
  v = S(b2) * v + S(1 - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  if (weight_decay > 0.0) param *= S(1.0 - lr * weight_decay);
  param.array() -= S(lr) * (m.array() / S(c1)) / ((v.array() / S(c2)).sqrt() + S(eps));
}

// Seeded 90/10 style split of example indices.
void split_indices(std::size_t n, double validation_fraction, std::mt19937_64& rng, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& validation) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
  validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  if (train.empty()) throw std::invalid_argument("no training examples left after validation split");
}

double linear_schedule(double lr, std::size_t step, std::size_t warmup, std::size_t total) {
  if (step < warmup) return lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total <= warmup) return lr;
  return lr * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

void check_finite(double loss, const TrainingSummary& summary, std::string_view what) {
  if (!std::isfinite(loss)) {
    throw TrainingDiverged(std::string(what) + " loss became non-finite after " + std::to_string(summary.steps) +
                               " steps",
                           summary);
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated model file");
  return v;
}

}  // namespace

void CausalHyperparameters::validate() const {
  if (batch_size < 1 || epochs < 1) throw std::invalid_argument("batch_size and epochs must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
  if (warmup_proportion < 0.0 || warmup_proportion > 1.0) throw std::invalid_argument("warmup_proportion outside [0, 1]");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("validation_fraction outside [0, 1)");
  }
}

void ClassifierHyperparameters::validate() const {
  if (batch_size < 1 || epochs < 1) throw std::invalid_argument("batch_size and epochs must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("validation_fraction outside [0, 1)");
  }
}

std::vector<std::string> lm_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || uc >= 0x80 || ((c == '\'' || c == '-') && !word.empty())) {
      word.push_back(static_cast<char>(std::tolower(uc)));
    } else if (is_punct_token(std::string_view(&c, 1))) {
      flush();
      out.emplace_back(1, c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string lm_detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool capitalise = true;
  bool after_open = false;
  for (const auto& tok : tokens) {
    const bool punct = is_punct_token(tok);
    if (!out.empty() && !after_open && !(punct && tok != "(" && tok != "\"")) out.push_back(' ');
    std::string t = tok;
    if (!punct && (t == "i" || t.starts_with("i'"))) t[0] = 'I';
    if (!punct && capitalise) {
      t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
      capitalise = false;
    }
    out += t;
    after_open = tok == "(";
    if (ends_sentence(tok)) capitalise = true;
  }
  return out;
}

Vocabulary::Vocabulary() {
  add("<unk>");
  add("<bos>");
  add("<eos>");
}

void Vocabulary::add(std::string token) {
  if (index_.contains(token)) return;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t max_size, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : lm_tokenize(text)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  for (auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    if (n >= min_count) v.add(tok);
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : lm_tokenize(text)) ids.push_back(id(tok));
  return ids;
}

template <typename Scalar>
DecayContextLm<Scalar> DecayContextLm<Scalar>::create(std::span<const std::string> texts, const Options& options,
                                                      std::uint64_t seed) {
  if (options.dim < 1) throw std::invalid_argument("model dimension must be positive");
  if (!(options.decay >= Scalar(0) && options.decay < Scalar(1))) throw std::invalid_argument("decay outside [0, 1)");
  DecayContextLm lm;
  lm.vocab_ = Vocabulary::build(texts, options.max_vocab, options.min_count);
  lm.decay_ = options.decay;
  const auto v = static_cast<Eigen::Index>(lm.vocab_.size());
  const auto d = static_cast<Eigen::Index>(options.dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, static_cast<double>(options.init_scale));
  lm.embed_ = Matrix::NullaryExpr(v, d, [&] { return static_cast<Scalar>(normal(rng)); });
  lm.readout_ = Matrix::NullaryExpr(v, d, [&] { return static_cast<Scalar>(normal(rng)); });
  lm.bias_ = Vector::Zero(v);
  lm.head_ = Vector::Zero(d);
  return lm;
}

template <typename Scalar>
auto DecayContextLm<Scalar>::contexts(std::span<const int> ids, Vector* norms) const -> Matrix {
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix h(n, embed_.cols());
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> acc = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(embed_.cols());
  Scalar z = 0;
  if (norms) norms->resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    acc = decay_ * acc + embed_.row(ids[static_cast<std::size_t>(t)]);
    z = decay_ * z + Scalar(1);
    h.row(t) = acc / z;
    if (norms) (*norms)(t) = z;
  }
  return h;
}

template <typename Scalar>
void DecayContextLm<Scalar>::backprop_contexts(std::span<const int> ids, const Matrix& d_context,
                                               const Vector& norms, Matrix& d_embed) const {
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> g = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(embed_.cols());
  for (auto t = static_cast<Eigen::Index>(ids.size()) - 1; t >= 0; --t) {
    g = decay_ * g + d_context.row(t) / norms(t);
    d_embed.row(ids[static_cast<std::size_t>(t)]) += g;
  }
}

template <typename Scalar>
double DecayContextLm<Scalar>::sequence_gradients(std::span<const int> ids, Scalar weight, Gradients* grads) const {
  if (ids.size() < 2) return 0.0;
  const auto inputs = ids.first(ids.size() - 1);
  Vector norms;
  const Matrix h = contexts(inputs, &norms);
  Matrix logits = h * readout_.transpose();
  logits.rowwise() += bias_.transpose();

  double loss = 0.0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Scalar m = logits.row(t).maxCoeff();
    logits.row(t).array() = (logits.row(t).array() - m).exp();
    const Scalar z = logits.row(t).sum();
    logits.row(t) /= z;
    loss -= std::log(static_cast<double>(logits(t, ids[static_cast<std::size_t>(t) + 1])));
  }
  if (grads) {
    for (Eigen::Index t = 0; t < logits.rows(); ++t) logits(t, ids[static_cast<std::size_t>(t) + 1]) -= Scalar(1);
    logits *= weight;
    grads->readout.noalias() += logits.transpose() * h;
    grads->bias += logits.colwise().sum().transpose();
    const Matrix d_context = logits * readout_;
    backprop_contexts(inputs, d_context, norms, grads->embed);
  }
  return loss;
}

template <typename Scalar>
auto DecayContextLm<Scalar>::causal_gradients(std::span<const std::string> texts) const -> Gradients {
  Gradients g{Matrix::Zero(embed_.rows(), embed_.cols()), Matrix::Zero(readout_.rows(), readout_.cols()),
              Vector::Zero(bias_.size())};
  std::vector<std::vector<int>> seqs;
  std::size_t tokens = 0;
  for (const auto& text : texts) {
    std::vector<int> ids{Vocabulary::kBos};
    for (int id : vocab_.encode(text)) ids.push_back(id);
    ids.push_back(Vocabulary::kEos);
    tokens += ids.size() - 1;
    seqs.push_back(std::move(ids));
  }
  for (const auto& ids : seqs) sequence_gradients(ids, Scalar(1) / static_cast<Scalar>(tokens), &g);
  return g;
}

template <typename Scalar>
double DecayContextLm<Scalar>::causal_loss(std::span<const std::string> texts) const {
  double loss = 0.0;
  std::size_t tokens = 0;
  for (const auto& text : texts) {
    std::vector<int> ids{Vocabulary::kBos};
    for (int id : vocab_.encode(text)) ids.push_back(id);
    ids.push_back(Vocabulary::kEos);
    loss += sequence_gradients(ids, Scalar(0), nullptr);
    tokens += ids.size() - 1;
  }
  return tokens ? loss / static_cast<double>(tokens) : 0.0;
}

template <typename Scalar>
TrainingSummary DecayContextLm<Scalar>::train_causal(std::span<const std::string> texts,
                                                     const CausalHyperparameters& hp, std::uint64_t seed) {
  hp.validate();
  if (texts.empty()) throw std::invalid_argument("no training texts");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train, validation;
  split_indices(texts.size(), hp.validation_fraction, rng, train, validation);

  std::vector<std::vector<int>> seqs(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    seqs[i].push_back(Vocabulary::kBos);
    for (int id : vocab_.encode(texts[i])) seqs[i].push_back(id);
    seqs[i].push_back(Vocabulary::kEos);
  }
  std::vector<std::string> val_texts;
  for (auto i : validation) val_texts.push_back(texts[i]);

  TrainingSummary summary;
  summary.train_examples = train.size();
  summary.validation_examples = validation.size();

  const auto batch = static_cast<std::size_t>(hp.batch_size);
  const std::size_t steps_per_epoch = (train.size() + batch - 1) / batch;
  const std::size_t total = steps_per_epoch * static_cast<std::size_t>(hp.epochs);
  const auto warmup = static_cast<std::size_t>(std::floor(hp.warmup_proportion * static_cast<double>(total)));

  Matrix m_e = Matrix::Zero(embed_.rows(), embed_.cols()), v_e = m_e;
  Matrix m_r = Matrix::Zero(readout_.rows(), readout_.cols()), v_r = m_r;
  Vector m_b = Vector::Zero(bias_.size()), v_b = m_b;
  Gradients g{Matrix(embed_.rows(), embed_.cols()), Matrix(readout_.rows(), readout_.cols()), Vector(bias_.size())};

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t end = std::min(start + batch, train.size());
      std::size_t tokens = 0;
      for (std::size_t k = start; k < end; ++k) tokens += seqs[train[k]].size() - 1;
      g.embed.setZero();
      g.readout.setZero();
      g.bias.setZero();
      const Scalar w = Scalar(1) / static_cast<Scalar>(tokens);
      for (std::size_t k = start; k < end; ++k) epoch_loss += sequence_gradients(seqs[train[k]], w, &g);
      epoch_tokens += tokens;
      check_finite(epoch_loss, summary, "causal");

      const double lr = linear_schedule(hp.learning_rate, summary.steps, warmup, total);
      ++summary.steps;
      adam_step(embed_, g.embed, m_e, v_e, lr, hp.weight_decay, summary.steps);
      adam_step(readout_, g.readout, m_r, v_r, lr, hp.weight_decay, summary.steps);
      adam_step(bias_, g.bias, m_b, v_b, lr, 0.0, summary.steps);
    }
    summary.train_loss.push_back(epoch_loss / static_cast<double>(epoch_tokens));
    if (!val_texts.empty()) {
      summary.validation_loss.push_back(causal_loss(val_texts));
      check_finite(summary.validation_loss.back(), summary, "validation");
    }
  }
  return summary;
}

template <typename Scalar>
std::vector<int> DecayContextLm<Scalar>::classifier_ids(std::string_view text) const {
  std::vector<int> ids{Vocabulary::kBos};
  for (int id : vocab_.encode(text)) ids.push_back(id);
  return ids;
}

template <typename Scalar>
double DecayContextLm<Scalar>::classify(std::string_view text) const {
  const auto ids = classifier_ids(text);
  const Matrix h = contexts(ids, nullptr);
  const double z = static_cast<double>(h.row(h.rows() - 1).dot(head_.transpose()) + head_bias_);
  return 1.0 / (1.0 + std::exp(-z));
}

template <typename Scalar>
double DecayContextLm<Scalar>::classifier_loss(std::span<const std::string> texts, std::span<const int> labels) const {
  if (texts.size() != labels.size()) throw std::invalid_argument("texts and labels differ in length");
  if (texts.empty()) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const double p = std::clamp(classify(texts[i]), 1e-12, 1.0 - 1e-12);
    loss -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(texts.size());
}

template <typename Scalar>
TrainingSummary DecayContextLm<Scalar>::train_classifier(std::span<const std::string> texts,
                                                         std::span<const int> labels,
                                                         const ClassifierHyperparameters& hp, std::uint64_t seed) {
  hp.validate();
  if (texts.size() != labels.size()) throw std::invalid_argument("texts and labels differ in length");
  if (texts.empty()) throw std::invalid_argument("no training texts");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train, validation;
  split_indices(texts.size(), hp.validation_fraction, rng, train, validation);

  std::vector<std::vector<int>> seqs(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) seqs[i] = classifier_ids(texts[i]);
  std::vector<std::string> val_texts;
  std::vector<int> val_labels;
  for (auto i : validation) {
    val_texts.push_back(texts[i]);
    val_labels.push_back(labels[i]);
  }

  head_ = Vector::Zero(embed_.cols());
  head_bias_ = Scalar(0);

  TrainingSummary summary;
  summary.train_examples = train.size();
  summary.validation_examples = validation.size();

  Matrix m_e = Matrix::Zero(embed_.rows(), embed_.cols()), v_e = m_e;
  Vector m_h = Vector::Zero(head_.size()), v_h = m_h;
  Eigen::Matrix<Scalar, 1, 1> hb, g_hb, m_hb = Eigen::Matrix<Scalar, 1, 1>::Zero(), v_hb = m_hb;
  Matrix g_e(embed_.rows(), embed_.cols());
  Vector g_h(head_.size());

  const auto batch = static_cast<std::size_t>(hp.batch_size);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t end = std::min(start + batch, train.size());
      const Scalar w = Scalar(1) / static_cast<Scalar>(end - start);
      g_e.setZero();
      g_h.setZero();
      g_hb.setZero();
      for (std::size_t k = start; k < end; ++k) {
        const auto& ids = seqs[train[k]];
        Vector norms;
        const Matrix h = contexts(ids, &norms);
        const auto last = h.rows() - 1;
        const Scalar z = h.row(last).dot(head_.transpose()) + head_bias_;
        const double y = labels[train[k]] ? 1.0 : 0.0;
        const double zd = static_cast<double>(z);
        epoch_loss += (zd > 0 ? zd + std::log1p(std::exp(-zd)) : std::log1p(std::exp(zd))) - y * zd;
        const Scalar dz = w * static_cast<Scalar>(1.0 / (1.0 + std::exp(-zd)) - y);
        g_h += dz * h.row(last).transpose();
        g_hb(0) += dz;
        Matrix d_context = Matrix::Zero(h.rows(), h.cols());
        d_context.row(last) = dz * head_.transpose();
        backprop_contexts(ids, d_context, norms, g_e);
      }
      check_finite(epoch_loss, summary, "classifier");
      ++summary.steps;
      adam_step(embed_, g_e, m_e, v_e, hp.learning_rate, 0.0, summary.steps);
      adam_step(head_, g_h, m_h, v_h, hp.learning_rate, 0.0, summary.steps);
      hb(0) = head_bias_;
      adam_step(hb, g_hb, m_hb, v_hb, hp.learning_rate, 0.0, summary.steps);
      head_bias_ = hb(0);
    }
    summary.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    if (!val_texts.empty()) {
      summary.validation_loss.push_back(classifier_loss(val_texts, val_labels));
      check_finite(summary.validation_loss.back(), summary, "validation");
    }
  }
  return summary;
}

template <typename Scalar>
std::string DecayContextLm<Scalar>::generate(std::string_view prompt, const GenerationConfig& config,
                                             std::uint64_t seed) const {
  config.validate();
  std::mt19937_64 rng(seed);
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> acc = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(embed_.cols());
  Scalar z = 0;
  auto push = [&](int id) {
    acc = decay_ * acc + embed_.row(id);
    z = decay_ * z + Scalar(1);
  };
  push(Vocabulary::kBos);
  for (int id : vocab_.encode(prompt)) push(id);

  std::vector<std::string> out;
  std::vector<float> logits(static_cast<std::size_t>(readout_.rows()));
  for (int step = 0; step < config.max_seq_length; ++step) {
    const Vector scores = readout_ * (acc / z).transpose() + bias_;
    for (Eigen::Index i = 0; i < scores.size(); ++i) logits[static_cast<std::size_t>(i)] = static_cast<float>(scores(i));
    logits[Vocabulary::kUnk] = -1e30f;
    logits[Vocabulary::kBos] = -1e30f;
    const auto next = static_cast<int>(sample_next_token(logits, config, rng));
    if (next == Vocabulary::kEos) break;
    out.push_back(vocab_.token(next));
    push(next);
  }
  return lm_detokenize(out);
}

template <typename Scalar>
void DecayContextLm<Scalar>::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model " + path.string());
  out.write("PSYLM\x01", 6);
  write_pod(out, static_cast<std::uint32_t>(sizeof(Scalar)));
  write_pod(out, static_cast<std::uint32_t>(vocab_.size()));
  write_pod(out, static_cast<std::uint32_t>(embed_.cols()));
  write_pod(out, decay_);
  for (std::size_t i = 3; i < vocab_.size(); ++i) {
    const auto& t = vocab_.token(static_cast<int>(i));
    write_pod(out, static_cast<std::uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  auto dump = [&](const auto& m) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar)));
  };
  dump(embed_);
  dump(readout_);
  dump(bias_);
  dump(head_);
  write_pod(out, head_bias_);
  if (!out) throw std::runtime_error("failed writing model " + path.string());
}

template <typename Scalar>
DecayContextLm<Scalar> DecayContextLm<Scalar>::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "PSYLM\x01", 6) != 0) throw std::runtime_error("not a model file: " + path.string());
  if (read_pod<std::uint32_t>(in) != sizeof(Scalar)) throw std::runtime_error("model scalar type mismatch");
  const auto v = read_pod<std::uint32_t>(in);
  const auto d = read_pod<std::uint32_t>(in);
  DecayContextLm lm;
  lm.decay_ = read_pod<Scalar>(in);
  for (std::uint32_t i = 3; i < v; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string t(len, '\0');
    in.read(t.data(), len);
    lm.vocab_.add(std::move(t));
  }
  if (lm.vocab_.size() != v) throw std::runtime_error("corrupt vocabulary in " + path.string());
  auto load_into = [&](auto& m) {
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar)));
  };
  lm.embed_.resize(v, d);
  lm.readout_.resize(v, d);
  lm.bias_.resize(v);
  lm.head_.resize(d);
  load_into(lm.embed_);
  load_into(lm.readout_);
  load_into(lm.bias_);
  load_into(lm.head_);
  lm.head_bias_ = read_pod<Scalar>(in);
  return lm;
}

template class DecayContextLm<float>;
template class DecayContextLm<double>;

std::string TinyLmGenerator::generate(std::string_view prompt, const GenerationConfig& config,
                                      std::optional<std::uint64_t> seed) const {
  return model_->generate(prompt, config, seed.value_or(0));
}

TinyLmTrainer::TinyLmTrainer(std::shared_ptr<const TinyLm> base, std::string name)
    : base_(std::move(base)), name_(std::move(name)),
      base_generator_(std::make_shared<TinyLmGenerator>(base_, name_)) {}

ModelHandle TinyLmTrainer::finetune_causal(std::span<const std::string> texts, const CausalHyperparameters& hp,
                                           std::uint64_t seed) {
  auto model = std::make_shared<TinyLm>(*base_);
  ModelHandle handle{"causal-" + std::to_string(finetuned_.size() + 1), model->train_causal(texts, hp, seed)};
  finetuned_[handle.id] = std::move(model);
  return handle;
}

ModelHandle TinyLmTrainer::finetune_classifier(std::span<const std::string> texts, std::span<const int> labels,
                                               const ClassifierHyperparameters& hp, std::uint64_t seed) {
  auto model = std::make_shared<TinyLm>(*base_);
  ModelHandle handle{"classifier-" + std::to_string(finetuned_.size() + 1),
                     model->train_classifier(texts, labels, hp, seed)};
  finetuned_[handle.id] = std::move(model);
  return handle;
}

std::shared_ptr<const TinyLm> TinyLmTrainer::model(const ModelHandle& handle) const {
  auto it = finetuned_.find(handle.id);
  if (it == finetuned_.end()) throw std::invalid_argument("unknown model handle " + handle.id);
  return it->second;
}

std::shared_ptr<const GenerationBackend> TinyLmTrainer::as_generation_backend(const ModelHandle& handle) const {
  return std::make_shared<TinyLmGenerator>(model(handle), name_ + "/" + handle.id);
}

}  // namespace psyprobe
