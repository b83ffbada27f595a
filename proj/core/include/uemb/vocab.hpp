#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uemb/corpus.hpp"
#include "uemb/rng.hpp"

namespace uemb {

inline constexpr const char* kUnkToken = "<unk>";

// Word ids are dense ranks: id 0 is the most frequent word, ties broken
// lexicographically; the <unk> catch-all sits at the last id.
class Vocabulary {
 public:
  int size() const { return static_cast<int>(id_to_token_.size()); }
  int unk_id() const { return size() - 1; }

  int encode(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? unk_id() : it->second;
  }
  const std::string& decode(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view token) const {
    return token_to_id_.count(std::string(token)) > 0;
  }

  std::int64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  friend Vocabulary build_vocab(const ReviewSet&, std::size_t);
  friend Vocabulary vocabulary_from_records(std::vector<std::pair<std::string, std::int64_t>>);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::int64_t> counts_;  // counts_[unk] = total OOV occurrences
};

Vocabulary build_vocab(const ReviewSet& set, std::size_t max_size = 20000);

// Rebuilds a Vocabulary from (token, count) records in id order; the last
// record must be <unk>. Used by the persistence layer.
Vocabulary vocabulary_from_records(std::vector<std::pair<std::string, std::int64_t>> records);

std::vector<int> encode_document(const Vocabulary& vocab, const Review& review);

// Entity side of the corpus: dense user/item ids (lexicographic over the id
// strings), per-user frequent-word profiles, per-item token sets, the
// user->items relation and genre attachments.
struct EntityIndex {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_to_id;
  std::unordered_map<std::string, int> item_to_id;

  std::vector<std::vector<int>> user_vocab;   // per user: up to n most frequent word ids, sorted
  std::vector<std::vector<int>> item_vocab;   // per item: word ids across its reviews, sorted
  std::vector<std::vector<int>> user_items;   // per user: reviewed item ids, sorted unique
  std::vector<std::vector<std::string>> item_genres;
  std::vector<std::vector<std::string>> user_genres;  // union over reviewed items

  std::size_t n_user_vocab = 0;

  std::size_t n_users() const { return user_ids.size(); }
  std::size_t n_items() const { return item_ids.size(); }
};

EntityIndex build_entity_index(const ReviewSet& set, const Vocabulary& vocab,
                               std::size_t n_user_vocab = 100);

// Discrete distribution with P(i) proportional to counts[i]^power; draws by
// binary search over the cumulative array.
class SamplingTable {
 public:
  enum class Domain { word, item };

  Domain domain() const { return domain_; }
  double power() const { return power_; }
  std::size_t size() const { return cumulative_.size(); }
  double probability(std::size_t i) const;
  const std::vector<double>& cumulative() const { return cumulative_; }

  int sample(Rng& rng) const;

 private:
  friend SamplingTable build_sampling_table(std::span<const std::int64_t>, double,
                                            SamplingTable::Domain);
  Domain domain_ = Domain::word;
  double power_ = 1.0;
  std::vector<double> cumulative_;
};

SamplingTable build_sampling_table(std::span<const std::int64_t> counts, double power,
                                   SamplingTable::Domain domain = SamplingTable::Domain::word);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);
void save_index(const EntityIndex& index, const std::string& path);
EntityIndex load_index(const std::string& path);

}  // namespace uemb
