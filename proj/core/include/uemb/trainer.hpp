#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "uemb/corpus.hpp"
#include "uemb/rng.hpp"
#include "uemb/sgns.hpp"
#include "uemb/vocab.hpp"

namespace uemb {

enum class TaskKind { word_word, user_word, item_word, user_item };
inline constexpr std::array<TaskKind, 4> kAllTasks = {
    TaskKind::word_word, TaskKind::user_word, TaskKind::item_word, TaskKind::user_item};

const char* to_string(TaskKind task);

struct EntityRef {
  TableKind kind;
  int id;
  bool operator==(const EntityRef&) const = default;
};

// label 1: observed co-occurrence; label 0: negative sample.
struct TrainingPair {
  EntityRef anchor;
  EntityRef target;
  int label;
};

struct TrainerOptions {
  bool word_word = true;
  bool user_word = true;
  bool item_word = true;
  bool user_item = true;

  // user_word positives come from the document tokens combined with the
  // user's frequent-word profile; switching this off restricts positives to
  // the document alone (the prior-work variant used by the user2vec baseline).
  bool combined_user_vocab = true;

  // Scope of the word rejected when sampling user_word negatives.
  enum class NegativeScope { profile_and_doc, target_only };
  NegativeScope user_word_negatives = NegativeScope::profile_and_doc;

  int threads = 1;  // >1 runs unsynchronized parallel updates (nondeterministic)
};

struct TaskStats {
  double loss_sum = 0.0;
  std::size_t pairs = 0;
  double mean_loss() const { return pairs == 0 ? 0.0 : loss_sum / static_cast<double>(pairs); }
};

struct EpochStats {
  std::array<TaskStats, 4> by_task{};

  TaskStats& task(TaskKind t) { return by_task[static_cast<std::size_t>(t)]; }
  const TaskStats& task(TaskKind t) const { return by_task[static_cast<std::size_t>(t)]; }
  double total_loss_sum() const;
  std::size_t total_pairs() const;
  double mean_total_loss() const;
};

struct TrainStats {
  std::vector<EpochStats> epochs;
};

// Sentinel: emit one positive per entry of the combined token list.
inline constexpr std::size_t kFullPass = static_cast<std::size_t>(-1);

// One positive per (center, context) position pair within the window, plus
// config.negatives noise words per positive, resampled while the draw equals
// the true context. unk_id (pass -1 for none) never appears as a positive
// target, though it may anchor a pair.
std::vector<TrainingPair> pairs_word_word(std::span<const int> doc, const TrainConfig& config,
                                          const SamplingTable& word_table, Rng& rng,
                                          int unk_id = -1);

// Positives drawn from the shuffled combination of document tokens and the
// user's frequent-word profile (n_positives of them; kFullPass = each entry
// once). Negatives come from the word table, resampled while they fall in the
// excluded scope (profile + document by default).
std::vector<TrainingPair> pairs_user_word(std::span<const int> doc, int user,
                                          const EntityIndex& index, const TrainConfig& config,
                                          const SamplingTable& word_table, Rng& rng,
                                          std::size_t n_positives = kFullPass,
                                          const TrainerOptions& options = {}, int unk_id = -1);

// Mirror of pairs_user_word with the item as anchor and the item's token set
// as the profile.
std::vector<TrainingPair> pairs_item_word(std::span<const int> doc, int item,
                                          const EntityIndex& index, const TrainConfig& config,
                                          const SamplingTable& word_table, Rng& rng,
                                          std::size_t n_positives = kFullPass, int unk_id = -1);

// One positive (user, item) plus config.negatives items sampled uniformly,
// resampled while the user has reviewed the draw.
std::vector<TrainingPair> pairs_user_item(int user, int item, const EntityIndex& index,
                                          const TrainConfig& config, Rng& rng);

struct TrainResult {
  Model model;
  TrainStats stats;
};

// Joint training over the enabled tasks: per epoch, a seeded shuffle of the
// documents; per document, pairs for every enabled task (user_word/item_word
// at one positive per document token, user_item once) are generated and
// applied with per-pair Adam updates. Deterministic for a given seed when
// options.threads == 1.
TrainResult train(const ReviewSet& set, const Vocabulary& vocab, const EntityIndex& index,
                  const TrainConfig& config, const TrainerOptions& options = {});

// Noise distribution over word ids: count^0.75, <unk> kept at weight >= 1.
SamplingTable word_noise_table(const Vocabulary& vocab, double power = 0.75);

}  // namespace uemb
