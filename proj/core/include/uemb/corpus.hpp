#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace uemb {

enum class DatasetKind { amazon, imdb, yelp, synthetic };
enum class Sentiment { positive, negative, neutral };

const char* to_string(DatasetKind kind);
const char* to_string(Sentiment s);
DatasetKind parse_dataset_kind(std::string_view name);

// One review document. `genres` is the (sorted, de-duplicated) genre set of
// the rated item; after preprocess() it is a subset of the corpus's
// retained_genres.
struct Review {
  std::string doc_id;
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  Sentiment sentiment = Sentiment::neutral;
  std::vector<std::string> tokens;
  std::vector<std::string> genres;

  bool operator==(const Review&) const = default;
};

struct ReviewSet {
  std::vector<Review> reviews;
  DatasetKind dataset_kind = DatasetKind::synthetic;
  // Most frequent genres by document count (count desc, then lexicographic),
  // at most four entries. Empty until preprocess() runs.
  std::vector<std::string> retained_genres;

  std::size_t size() const { return reviews.size(); }
  bool empty() const { return reviews.empty(); }

  bool operator==(const ReviewSet&) const = default;
};

// Split ratios must be positive and sum to 1 within 1e-9.
struct SplitSpec {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
  std::uint64_t seed = 42;
};

struct SplitResult {
  ReviewSet train;
  ReviewSet dev;
  ReviewSet test;
};

struct LoadOptions {
  bool strict = true;  // strict: malformed record is fatal; lenient: skip and count
};

struct LoadStats {
  std::size_t warnings = 0;
};

// Splits text into maximal runs of letters/digits; runs of other non-space
// characters come out as separate punctuation tokens. UTF-8 aware; case
// folding covers ASCII, Latin-1/Extended-A, Greek and Cyrillic.
std::vector<std::string> tokenize(std::string_view text);
std::string fold_case(std::string_view text);

// Reads newline-delimited records, one JSON object per line with fields
// doc_id, user_id, item_id, rating, text, genres (and optionally tokens,
// which take precedence over re-tokenizing text). No filtering is applied.
ReviewSet load_reviews(const std::string& path, DatasetKind kind,
                       const LoadOptions& options = {}, LoadStats* stats = nullptr);

// Writes the same record format plus "sentiment" and "tokens" fields.
void save_reviews(const ReviewSet& set, const std::string& path);

// Lowercases tokens, drops documents with fewer than 10 tokens, retains the
// top-4 genres, prunes each review's genre set to the retained ones (dropping
// reviews that end up with none), and assigns the sentiment label from the
// rating under the dataset's scale rule. Idempotent.
ReviewSet preprocess(const ReviewSet& raw);

// Replaces user_id, item_id and doc_id with hex digests of a salted hash.
// Fails if two distinct ids collide within the set.
ReviewSet anonymize(const ReviewSet& set, const std::string& salt);

// Seeded shuffle, then floor allocation with the remainder going to train.
SplitResult split(const ReviewSet& set, const SplitSpec& spec);

// Synthetic corpus with planted genre structure: users and items are assigned
// genres round-robin; a user reviews own-genre items with probability
// 1 - noise_rate, otherwise a uniformly random item. Document text mixes a
// genre-specific vocabulary, a shared vocabulary, per-genre sentiment cue
// tokens and (optionally) tokens marking the author's sentiment bias.
struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 40;
  std::size_t n_genres = 4;       // at most 4
  std::size_t docs_per_user = 5;
  std::size_t vocab_per_genre = 30;
  double noise_rate = 0.05;
  std::uint64_t seed = 42;

  // Text/label composition knobs.
  std::size_t doc_length = 30;     // tokens per document, >= 10
  std::size_t shared_vocab = 30;   // size of the genre-independent vocabulary
  double shared_token_rate = 0.2;  // per-token probability of a shared token
  double style_token_rate = 0.3;   // per-doc probability of a bias-marker token
  double sentiment_flip_rate = 0.2;  // chance the per-doc cue contradicts the label
  double neutral_rate = 0.1;       // fraction of neutral documents
  double bias_strength = 0.8;      // P(positive label) for positively biased users
  bool shared_cues = false;        // draw cue tokens from a genre-independent pool
};

// Ground truth the generator planted, for evaluation fixtures.
struct SyntheticMeta {
  std::map<std::string, std::string> user_genre;  // dominant genre per user
  std::map<std::string, double> user_bias;        // +1 positive-leaning, -1 negative
};

ReviewSet generate_synthetic(const SyntheticSpec& spec, SyntheticMeta* meta = nullptr);

void save_synthetic_meta(const SyntheticMeta& meta, const std::string& path);
SyntheticMeta load_synthetic_meta(const std::string& path);

}  // namespace uemb
