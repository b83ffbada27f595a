#include "uemb/baselines.hpp"

#include <algorithm>
#include <map>

#include "uemb/error.hpp"

namespace uemb {

const char* to_string(EmbeddingMethod m) {
  switch (m) {
    case EmbeddingMethod::mtl: return "mtl";
    case EmbeddingMethod::word2user: return "word2user";
    case EmbeddingMethod::user2vec: return "user2vec";
  }
  return "unknown";
}

const std::vector<double>* UserEmbeddings::find(const std::string& user_id) const {
  const auto it = std::lower_bound(user_ids.begin(), user_ids.end(), user_id);
  if (it == user_ids.end() || *it != user_id) return nullptr;
  return &vectors[static_cast<std::size_t>(it - user_ids.begin())];
}

UserEmbeddings word2user(const ReviewSet& set, const Vocabulary& vocab,
                         const EmbeddingTable& word_vectors) {
  if (word_vectors.kind() != TableKind::word) throw_data("word2user needs a word table");
  const int dim = word_vectors.dim();

  std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
  for (const Review& r : set.reviews) {
    auto& [sum, n] = sums.try_emplace(r.user_id, std::vector<double>(dim, 0.0), 0).first->second;
    for (const std::string& t : r.tokens) {
      const auto row = word_vectors.row(static_cast<std::size_t>(vocab.encode(t)));
      for (int i = 0; i < dim; ++i) sum[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
      ++n;
    }
  }

  UserEmbeddings out;
  out.method = EmbeddingMethod::word2user;
  out.dim = dim;
  for (auto& [user, acc] : sums) {
    auto& [sum, n] = acc;
    if (n == 0) throw_data("user " + user + " has no tokens to average");
    for (double& x : sum) x /= static_cast<double>(n);
    out.user_ids.push_back(user);
    out.vectors.push_back(std::move(sum));
  }
  return out;
}

UserEmbeddings train_user2vec(const ReviewSet& set, const Vocabulary& vocab,
                              const EntityIndex& index, const TrainConfig& config,
                              TrainStats* stats) {
  TrainerOptions options;
  options.word_word = false;
  options.item_word = false;
  options.user_item = false;
  options.combined_user_vocab = false;
  options.user_word_negatives = TrainerOptions::NegativeScope::target_only;
  TrainResult res = train(set, vocab, index, config, options);
  if (stats) *stats = res.stats;
  UserEmbeddings out = user_embeddings_from_model(res.model, index);
  out.method = EmbeddingMethod::user2vec;
  return out;
}

UserEmbeddings user_embeddings_from_model(const Model& model, const EntityIndex& index) {
  if (model.users.rows() != index.n_users()) {
    throw_data("model user table does not match the index");
  }
  UserEmbeddings out;
  out.method = EmbeddingMethod::mtl;
  out.dim = model.users.dim();
  out.user_ids = index.user_ids;
  out.vectors.reserve(index.n_users());
  for (std::size_t u = 0; u < index.n_users(); ++u) {
    const auto row = model.users.row(u);
    out.vectors.emplace_back(row.begin(), row.end());
  }
  return out;
}

}  // namespace uemb
