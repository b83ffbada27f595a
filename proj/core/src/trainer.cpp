#include "uemb/trainer.hpp"

#include <algorithm>
#include <thread>

#include "uemb/error.hpp"

namespace uemb {

const char* to_string(TaskKind task) {
  switch (task) {
    case TaskKind::word_word: return "word_word";
    case TaskKind::user_word: return "user_word";
    case TaskKind::item_word: return "item_word";
    case TaskKind::user_item: return "user_item";
  }
  return "unknown";
}

double EpochStats::total_loss_sum() const {
  double s = 0.0;
  for (const TaskStats& t : by_task) s += t.loss_sum;
  return s;
}

std::size_t EpochStats::total_pairs() const {
  std::size_t n = 0;
  for (const TaskStats& t : by_task) n += t.pairs;
  return n;
}

double EpochStats::mean_total_loss() const {
  const std::size_t n = total_pairs();
  return n == 0 ? 0.0 : total_loss_sum() / static_cast<double>(n);
}

namespace {

constexpr int kMaxResample = 100;

bool contains(const std::vector<int>& sorted, int x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

// Noise word not in `excluded` (sorted) and != `positive`; capped rejection.
int draw_negative_word(const SamplingTable& table, Rng& rng, const std::vector<int>& excluded,
                       int positive) {
  for (int attempt = 0; attempt < kMaxResample; ++attempt) {
    const int w = table.sample(rng);
    if (w == positive) continue;
    if (!excluded.empty() && contains(excluded, w)) continue;
    return w;
  }
  throw_data("negative sampling exhausted " + std::to_string(kMaxResample) +
             " attempts; the excluded set covers the table");
}

// Positives for the entity-vs-word tasks: a shuffled pass over the combined
// token list, cycling when more positives than entries are requested.
std::vector<TrainingPair> entity_word_pairs(TableKind anchor_kind, int anchor_id,
                                            std::span<const int> doc,
                                            const std::vector<int>& profile, bool use_profile,
                                            const std::vector<int>& excluded, int unk,
                                            const TrainConfig& config,
                                            const SamplingTable& word_table, Rng& rng,
                                            std::size_t n_positives) {
  std::vector<int> combined;
  combined.reserve(doc.size() + (use_profile ? profile.size() : 0));
  for (int w : doc) {
    if (w != unk) combined.push_back(w);
  }
  if (use_profile) combined.insert(combined.end(), profile.begin(), profile.end());

  std::vector<TrainingPair> pairs;
  if (combined.empty()) return pairs;
  std::shuffle(combined.begin(), combined.end(), rng.engine());
  const std::size_t n = n_positives == kFullPass ? combined.size() : n_positives;

  pairs.reserve(n * (1 + static_cast<std::size_t>(std::max(0, config.negatives))));
  const EntityRef anchor{anchor_kind, anchor_id};
  for (std::size_t i = 0; i < n; ++i) {
    const int w = combined[i % combined.size()];
    pairs.push_back({anchor, {TableKind::word, w}, 1});
    for (int k = 0; k < config.negatives; ++k) {
      const int neg = draw_negative_word(word_table, rng, excluded, w);
      pairs.push_back({anchor, {TableKind::word, neg}, 0});
    }
  }
  return pairs;
}

}  // namespace

std::vector<TrainingPair> pairs_word_word(std::span<const int> doc, const TrainConfig& config,
                                          const SamplingTable& word_table, Rng& rng, int unk_id) {
  std::vector<TrainingPair> pairs;
  if (doc.empty()) return pairs;
  const auto len = static_cast<std::ptrdiff_t>(doc.size());
  const std::vector<int> no_exclusions;
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - config.window);
    const std::ptrdiff_t hi = std::min(len - 1, i + config.window);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const int target = doc[static_cast<std::size_t>(j)];
      if (target == unk_id) continue;  // <unk> is never a positive target
      const int center = doc[static_cast<std::size_t>(i)];
      pairs.push_back({{TableKind::word, center}, {TableKind::word, target}, 1});
      for (int k = 0; k < config.negatives; ++k) {
        const int neg = draw_negative_word(word_table, rng, no_exclusions, target);
        pairs.push_back({{TableKind::word, center}, {TableKind::word, neg}, 0});
      }
    }
  }
  return pairs;
}

std::vector<TrainingPair> pairs_user_word(std::span<const int> doc, int user,
                                          const EntityIndex& index, const TrainConfig& config,
                                          const SamplingTable& word_table, Rng& rng,
                                          std::size_t n_positives, const TrainerOptions& options,
                                          int unk_id) {
  if (user < 0 || static_cast<std::size_t>(user) >= index.n_users()) {
    throw_data("user id " + std::to_string(user) + " not in index");
  }
  const auto& profile = index.user_vocab[static_cast<std::size_t>(user)];

  std::vector<int> excluded;
  if (options.user_word_negatives == TrainerOptions::NegativeScope::profile_and_doc) {
    excluded.assign(doc.begin(), doc.end());
    excluded.insert(excluded.end(), profile.begin(), profile.end());
    std::sort(excluded.begin(), excluded.end());
    excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
  }
  return entity_word_pairs(TableKind::user, user, doc, profile, options.combined_user_vocab,
                           excluded, unk_id, config, word_table, rng, n_positives);
}

std::vector<TrainingPair> pairs_item_word(std::span<const int> doc, int item,
                                          const EntityIndex& index, const TrainConfig& config,
                                          const SamplingTable& word_table, Rng& rng,
                                          std::size_t n_positives, int unk_id) {
  if (item < 0 || static_cast<std::size_t>(item) >= index.n_items()) {
    throw_data("item id " + std::to_string(item) + " not in index");
  }
  const auto& profile = index.item_vocab[static_cast<std::size_t>(item)];

  std::vector<int> excluded(doc.begin(), doc.end());
  excluded.insert(excluded.end(), profile.begin(), profile.end());
  std::sort(excluded.begin(), excluded.end());
  excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());

  return entity_word_pairs(TableKind::item, item, doc, profile, true, excluded, unk_id, config,
                           word_table, rng, n_positives);
}

std::vector<TrainingPair> pairs_user_item(int user, int item, const EntityIndex& index,
                                          const TrainConfig& config, Rng& rng) {
  if (user < 0 || static_cast<std::size_t>(user) >= index.n_users()) {
    throw_data("user id " + std::to_string(user) + " not in index");
  }
  const auto& reviewed = index.user_items[static_cast<std::size_t>(user)];
  const std::size_t n_items = index.n_items();
  if (reviewed.size() >= n_items) {
    throw_data("user " + index.user_ids[static_cast<std::size_t>(user)] +
               " has reviewed every item; no negatives exist");
  }

  std::vector<TrainingPair> pairs;
  pairs.reserve(1 + static_cast<std::size_t>(std::max(0, config.negatives)));
  pairs.push_back({{TableKind::user, user}, {TableKind::item, item}, 1});
  for (int k = 0; k < config.negatives; ++k) {
    int neg = -1;
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      const int p = static_cast<int>(rng.index(n_items));
      if (!contains(reviewed, p)) {
        neg = p;
        break;
      }
    }
    if (neg < 0) {
      throw_data("item negative sampling exhausted " + std::to_string(kMaxResample) +
                 " attempts");
    }
    pairs.push_back({{TableKind::user, user}, {TableKind::item, neg}, 0});
  }
  return pairs;
}

SamplingTable word_noise_table(const Vocabulary& vocab, double power) {
  std::vector<std::int64_t> counts = vocab.counts();
  // <unk> may have zero corpus count; keep it drawable at minimal weight.
  if (counts.back() < 1) counts.back() = 1;
  return build_sampling_table(counts, power, SamplingTable::Domain::word);
}

namespace {

struct EncodedDoc {
  std::vector<int> words;
  int user;
  int item;
};

class PairApplier {
 public:
  PairApplier(Model& model, const TrainConfig& config)
      : model_(model), config_(config), grad_a_(config.dim), grad_t_(config.dim) {}

  double apply(const TrainingPair& pair) {
    auto anchor = table(pair.anchor.kind).row(static_cast<std::size_t>(pair.anchor.id));
    auto target = table(pair.target.kind).row(static_cast<std::size_t>(pair.target.id));
    const double loss = loss_and_grad(anchor, target, pair.label, grad_a_, grad_t_);
    adam_update(table(pair.anchor.kind), static_cast<std::size_t>(pair.anchor.id), grad_a_,
                config_);
    adam_update(table(pair.target.kind), static_cast<std::size_t>(pair.target.id), grad_t_,
                config_);
    return loss;
  }

 private:
  EmbeddingTable& table(TableKind kind) {
    switch (kind) {
      case TableKind::word: return model_.words;
      case TableKind::user: return model_.users;
      case TableKind::item: return model_.items;
    }
    throw_numeric("bad table kind");
  }

  Model& model_;
  const TrainConfig& config_;
  std::vector<double> grad_a_;
  std::vector<double> grad_t_;
};

// Pairs for one document and one task, with the task's own seeded stream so
// toggling tasks or resharding threads never perturbs the others.
std::vector<TrainingPair> doc_task_pairs(const EncodedDoc& doc, TaskKind task,
                                         const EntityIndex& index, const TrainConfig& config,
                                         const SamplingTable& words, const TrainerOptions& options,
                                         int unk, std::uint64_t epoch, std::size_t doc_id) {
  Rng rng(mix_seed(config.seed, (epoch << 32) ^ doc_id, static_cast<std::uint64_t>(task)));
  switch (task) {
    case TaskKind::word_word:
      return pairs_word_word(doc.words, config, words, rng, unk);
    case TaskKind::user_word:
      return pairs_user_word(doc.words, doc.user, index, config, words, rng, doc.words.size(),
                             options, unk);
    case TaskKind::item_word:
      return pairs_item_word(doc.words, doc.item, index, config, words, rng, doc.words.size(),
                             unk);
    case TaskKind::user_item:
      return pairs_user_item(doc.user, doc.item, index, config, rng);
  }
  throw_numeric("bad task kind");
}

}  // namespace

TrainResult train(const ReviewSet& set, const Vocabulary& vocab, const EntityIndex& index,
                  const TrainConfig& config, const TrainerOptions& options) {
  config.validate();
  if (set.empty()) throw_data("cannot train on an empty corpus");

  std::vector<EncodedDoc> docs;
  docs.reserve(set.size());
  for (const Review& r : set.reviews) {
    docs.push_back({encode_document(vocab, r), index.user_to_id.at(r.user_id),
                    index.item_to_id.at(r.item_id)});
  }

  const SamplingTable words = word_noise_table(vocab);
  std::vector<TaskKind> enabled;
  for (TaskKind t : kAllTasks) {
    const bool on = (t == TaskKind::word_word && options.word_word) ||
                    (t == TaskKind::user_word && options.user_word) ||
                    (t == TaskKind::item_word && options.item_word) ||
                    (t == TaskKind::user_item && options.user_item);
    if (on) enabled.push_back(t);
  }
  if (enabled.empty()) throw_config("at least one training task must be enabled");

  TrainResult result{init_model(static_cast<std::size_t>(vocab.size()), index.n_users(),
                                index.n_items(), config),
                     {}};

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto e = static_cast<std::uint64_t>(epoch);
    Rng shuffle_rng(mix_seed(config.seed, e, 0x73687566ULL));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    EpochStats stats;
    const int n_threads = std::max(1, options.threads);
    if (n_threads == 1) {
      PairApplier applier(result.model, config);
      for (std::size_t doc_id : order) {
        for (TaskKind task : enabled) {
          const auto pairs = doc_task_pairs(docs[doc_id], task, index, config, words, options,
                                            vocab.unk_id(), e, doc_id);
          TaskStats& ts = stats.task(task);
          for (const TrainingPair& p : pairs) {
            ts.loss_sum += applier.apply(p);
            ++ts.pairs;
          }
        }
      }
    } else {
      // Unsynchronized row updates across workers; last write wins.
      std::vector<EpochStats> partial(static_cast<std::size_t>(n_threads));
      std::vector<std::thread> workers;
      const std::size_t chunk = (order.size() + n_threads - 1) / n_threads;
      for (int w = 0; w < n_threads; ++w) {
        workers.emplace_back([&, w] {
          PairApplier applier(result.model, config);
          const std::size_t lo = static_cast<std::size_t>(w) * chunk;
          const std::size_t hi = std::min(order.size(), lo + chunk);
          for (std::size_t i = lo; i < hi; ++i) {
            for (TaskKind task : enabled) {
              const auto pairs = doc_task_pairs(docs[order[i]], task, index, config, words,
                                                options, vocab.unk_id(), e, order[i]);
              TaskStats& ts = partial[static_cast<std::size_t>(w)].task(task);
              for (const TrainingPair& p : pairs) {
                ts.loss_sum += applier.apply(p);
                ++ts.pairs;
              }
            }
          }
        });
      }
      for (auto& t : workers) t.join();
      for (const EpochStats& part : partial) {
        for (TaskKind task : kAllTasks) {
          stats.task(task).loss_sum += part.task(task).loss_sum;
          stats.task(task).pairs += part.task(task).pairs;
        }
      }
    }
    result.stats.epochs.push_back(stats);
  }
  return result;
}

}  // namespace uemb
