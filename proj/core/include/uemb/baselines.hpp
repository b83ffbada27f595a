#pragma once

#include <string>
#include <vector>

#include "uemb/corpus.hpp"
#include "uemb/sgns.hpp"
#include "uemb/trainer.hpp"
#include "uemb/vocab.hpp"

namespace uemb {

enum class EmbeddingMethod { mtl, word2user, user2vec };

const char* to_string(EmbeddingMethod m);

struct UserEmbeddings {
  EmbeddingMethod method = EmbeddingMethod::mtl;
  int dim = 0;
  std::vector<std::string> user_ids;           // sorted, aligned with vectors
  std::vector<std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& user_id) const;
  std::size_t size() const { return user_ids.size(); }
};

// Each user's vector is the arithmetic mean of the word vectors of every
// token occurrence across the user's documents (<unk> occurrences included).
UserEmbeddings word2user(const ReviewSet& set, const Vocabulary& vocab,
                         const EmbeddingTable& word_vectors);

// The user_word task alone, positives restricted to document tokens and
// negatives excluding only the sampled positive word.
UserEmbeddings train_user2vec(const ReviewSet& set, const Vocabulary& vocab,
                              const EntityIndex& index, const TrainConfig& config,
                              TrainStats* stats = nullptr);

// Extracts the user table of a trained joint model.
UserEmbeddings user_embeddings_from_model(const Model& model, const EntityIndex& index);

}  // namespace uemb
