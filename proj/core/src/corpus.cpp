#include "uemb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "uemb/error.hpp"
#include "uemb/hashing.hpp"
#include "uemb/rng.hpp"

namespace uemb {

using nlohmann::json;

const char* to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::amazon: return "amazon";
    case DatasetKind::imdb: return "imdb";
    case DatasetKind::yelp: return "yelp";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "unknown";
}

const char* to_string(Sentiment s) {
  switch (s) {
    case Sentiment::positive: return "positive";
    case Sentiment::negative: return "negative";
    case Sentiment::neutral: return "neutral";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "amazon") return DatasetKind::amazon;
  if (name == "imdb") return DatasetKind::imdb;
  if (name == "yelp") return DatasetKind::yelp;
  if (name == "synthetic") return DatasetKind::synthetic;
  throw_config("unknown dataset kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Tokenizer: UTF-8 decode, word/punct classification, simple case folding.
// ---------------------------------------------------------------------------

namespace {

// Decodes one UTF-8 code point starting at s[i]; advances i. Invalid bytes
// decode as U+FFFD and consume one byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == 0x85 || cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200A) ||
         cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// Letter/digit test. ASCII exactly; beyond ASCII, letters of the common
// alphabetic blocks count as word characters and everything in punctuation
// or symbol blocks does not.
bool is_word_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
           (cp >= U'A' && cp <= U'Z');
  }
  if (cp < 0xC0) return false;                    // Latin-1 punctuation/symbols
  if (cp == 0xD7 || cp == 0xF7) return false;     // multiplication/division signs
  if (cp <= 0x24F) return true;                   // Latin-1 letters + Latin Extended
  if (cp >= 0x370 && cp <= 0x3FF) return cp != 0x387;  // Greek (ano teleia excluded)
  if (cp >= 0x400 && cp <= 0x4FF) return true;    // Cyrillic
  if (cp >= 0x2000 && cp <= 0x206F) return false; // general punctuation
  if (cp >= 0x20A0 && cp <= 0x2BFF) return false; // currency, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false; // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFF0F) return false; // compat punctuation forms
  return cp >= 0x2C00;                            // other scripts: treat as letters
}

// Simple one-to-one case folding for ASCII, Latin-1, Latin Extended-A,
// Greek and Cyrillic. Other code points fold to themselves.
char32_t fold_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  enum class Run { none, word, punct };
  Run run = Run::none;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    Run cls = is_space_cp(cp) ? Run::none : (is_word_cp(cp) ? Run::word : Run::punct);
    if (cls != run && !current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
    run = cls;
    if (cls != Run::none) encode_utf8(fold_cp(cp), current);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) encode_utf8(fold_cp(decode_utf8(text, i)), out);
  return out;
}

// ---------------------------------------------------------------------------
// Load / save
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> unique_sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Review parse_record(const json& rec, std::size_t line_no) {
  Review r;
  const char* required[] = {"doc_id", "user_id", "item_id", "rating", "text", "genres"};
  for (const char* field : required) {
    if (!rec.contains(field)) {
      throw_data("line " + std::to_string(line_no) + ": missing field \"" +
                 field + "\"");
    }
  }
  r.doc_id = rec.at("doc_id").get<std::string>();
  r.user_id = rec.at("user_id").get<std::string>();
  r.item_id = rec.at("item_id").get<std::string>();
  r.rating = rec.at("rating").get<double>();
  r.genres = unique_sorted(rec.at("genres").get<std::vector<std::string>>());
  if (rec.contains("tokens")) {
    r.tokens = rec.at("tokens").get<std::vector<std::string>>();
  } else {
    r.tokens = tokenize(rec.at("text").get<std::string>());
  }
  if (rec.contains("sentiment")) {
    const auto s = rec.at("sentiment").get<std::string>();
    if (s == "positive") r.sentiment = Sentiment::positive;
    else if (s == "negative") r.sentiment = Sentiment::negative;
    else if (s == "neutral") r.sentiment = Sentiment::neutral;
    else throw_data("line " + std::to_string(line_no) + ": bad sentiment \"" + s + "\"");
  }
  return r;
}

}  // namespace

ReviewSet load_reviews(const std::string& path, DatasetKind kind,
                       const LoadOptions& options, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open corpus file: " + path);
  ReviewSet set;
  set.dataset_kind = kind;
  std::string line;
  std::size_t line_no = 0;
  std::size_t warnings = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      set.reviews.push_back(parse_record(rec, line_no));
    } catch (const Error&) {
      if (options.strict) throw;
      ++warnings;
    } catch (const json::exception& e) {
      if (options.strict) {
        throw_data("line " + std::to_string(line_no) + ": malformed record: " + e.what());
      }
      ++warnings;
    }
  }
  if (stats) stats->warnings = warnings;
  return set;
}

void save_reviews(const ReviewSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write corpus file: " + path);
  for (const Review& r : set.reviews) {
    json rec;
    rec["doc_id"] = r.doc_id;
    rec["user_id"] = r.user_id;
    rec["item_id"] = r.item_id;
    rec["rating"] = r.rating;
    std::string text;
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
      if (i) text += ' ';
      text += r.tokens[i];
    }
    rec["text"] = text;
    rec["tokens"] = r.tokens;
    rec["genres"] = r.genres;
    rec["sentiment"] = to_string(r.sentiment);
    out << rec.dump() << '\n';
  }
  if (!out) throw_io("failed writing corpus file: " + path);
}

// ---------------------------------------------------------------------------
// Preprocess
// ---------------------------------------------------------------------------

namespace {

Sentiment sentiment_from_rating(double rating, DatasetKind kind, const std::string& doc_id) {
  double lo = 1.0, hi = 5.0, pos = 3.0, neg = 3.0;
  if (kind == DatasetKind::imdb) {
    hi = 10.0;
    pos = 6.0;  // positive strictly above
    neg = 5.0;  // negative strictly below
  }
  if (rating < lo || rating > hi) {
    throw_data("doc " + doc_id + ": rating " + std::to_string(rating) +
               " outside the " + to_string(kind) + " scale [" +
               std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
  if (rating > pos) return Sentiment::positive;
  if (rating < neg) return Sentiment::negative;
  return Sentiment::neutral;
}

}  // namespace

ReviewSet preprocess(const ReviewSet& raw) {
  constexpr std::size_t kMinTokens = 10;
  constexpr std::size_t kMaxGenres = 4;

  // Lowercase tokens and drop short documents before genre counting.
  std::vector<Review> kept;
  kept.reserve(raw.reviews.size());
  for (const Review& r : raw.reviews) {
    Review c = r;
    for (std::string& t : c.tokens) t = fold_case(t);
    if (c.tokens.size() < kMinTokens) continue;
    c.sentiment = sentiment_from_rating(c.rating, raw.dataset_kind, c.doc_id);
    kept.push_back(std::move(c));
  }

  // Top genres by document count, ties broken lexicographically.
  std::map<std::string, std::size_t> genre_docs;
  for (const Review& r : kept) {
    for (const std::string& g : r.genres) ++genre_docs[g];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(genre_docs.begin(), genre_docs.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::set<std::string> retained;
  for (std::size_t i = 0; i < ranked.size() && i < kMaxGenres; ++i) {
    retained.insert(ranked[i].first);
  }

  // Prune genre sets to the retained genres and drop reviews left with none.
  ReviewSet out;
  out.dataset_kind = raw.dataset_kind;
  for (Review& r : kept) {
    std::vector<std::string> pruned;
    for (const std::string& g : r.genres) {
      if (retained.count(g)) pruned.push_back(g);
    }
    if (pruned.empty()) continue;
    r.genres = std::move(pruned);
    out.reviews.push_back(std::move(r));
  }

  // Order retained_genres by post-filter document count so a second pass
  // reproduces the same list exactly.
  std::map<std::string, std::size_t> final_docs;
  for (const Review& r : out.reviews) {
    for (const std::string& g : r.genres) ++final_docs[g];
  }
  std::vector<std::pair<std::string, std::size_t>> final_ranked(final_docs.begin(), final_docs.end());
  std::sort(final_ranked.begin(), final_ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [g, n] : final_ranked) out.retained_genres.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Anonymize
// ---------------------------------------------------------------------------

ReviewSet anonymize(const ReviewSet& set, const std::string& salt) {
  if (salt.empty()) throw_config("anonymize requires a non-empty salt");

  auto digest = [&](std::string_view ns, const std::string& id) {
    std::string buf;
    buf.reserve(salt.size() + ns.size() + id.size() + 2);
    buf += salt;
    buf += '\x1f';
    buf += ns;
    buf += '\x1f';
    buf += id;
    return sha256_hex(buf);
  };

  // Injective per namespace: a digest collision between distinct ids is fatal.
  auto map_ids = [&](std::string_view ns, auto get_id) {
    std::unordered_map<std::string, std::string> fwd;
    std::unordered_map<std::string, std::string> rev;
    for (const Review& r : set.reviews) {
      const std::string& id = get_id(r);
      if (fwd.count(id)) continue;
      std::string h = digest(ns, id);
      auto [it, fresh] = rev.emplace(h, id);
      if (!fresh && it->second != id) {
        throw_data("hash collision between " + std::string(ns) + " ids \"" +
                   it->second + "\" and \"" + id + "\"");
      }
      fwd.emplace(id, std::move(h));
    }
    return fwd;
  };

  auto users = map_ids("user", [](const Review& r) -> const std::string& { return r.user_id; });
  auto items = map_ids("item", [](const Review& r) -> const std::string& { return r.item_id; });
  auto docs = map_ids("doc", [](const Review& r) -> const std::string& { return r.doc_id; });

  ReviewSet out = set;
  for (Review& r : out.reviews) {
    r.user_id = users.at(r.user_id);
    r.item_id = items.at(r.item_id);
    r.doc_id = docs.at(r.doc_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

SplitResult split(const ReviewSet& set, const SplitSpec& spec) {
  if (spec.train <= 0 || spec.dev <= 0 || spec.test <= 0) {
    throw_config("split ratios must all be positive");
  }
  if (std::abs(spec.train + spec.dev + spec.test - 1.0) > 1e-9) {
    throw_config("split ratios must sum to 1");
  }
  const std::size_t n = set.size();
  if (n < 10) throw_data("split needs at least 10 documents, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng.engine());

  std::size_t n_train = static_cast<std::size_t>(spec.train * static_cast<double>(n));
  std::size_t n_dev = static_cast<std::size_t>(spec.dev * static_cast<double>(n));
  std::size_t n_test = static_cast<std::size_t>(spec.test * static_cast<double>(n));
  n_train += n - (n_train + n_dev + n_test);  // remainder to train
  if (n_dev == 0 || n_test == 0) {
    throw_config("split ratios produce an empty dev or test partition");
  }

  SplitResult res;
  for (ReviewSet* part : {&res.train, &res.dev, &res.test}) {
    part->dataset_kind = set.dataset_kind;
    part->retained_genres = set.retained_genres;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Review& r = set.reviews[order[i]];
    if (i < n_train) res.train.reviews.push_back(r);
    else if (i < n_train + n_dev) res.dev.reviews.push_back(r);
    else res.test.reviews.push_back(r);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

ReviewSet generate_synthetic(const SyntheticSpec& spec, SyntheticMeta* meta) {
  if (spec.n_users < 1 || spec.n_items < 1 || spec.n_genres < 1 ||
      spec.docs_per_user < 1 || spec.vocab_per_genre < 1) {
    throw_config("synthetic counts must all be >= 1");
  }
  if (spec.n_genres > 4) throw_config("synthetic corpora support at most 4 genres");
  if (spec.n_items < spec.n_genres) {
    throw_config("need at least one item per genre");
  }
  if (spec.doc_length < 10) {
    throw_config("doc_length " + std::to_string(spec.doc_length) +
                 " cannot yield the 10-token minimum");
  }
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0) {
    throw_config("noise_rate must lie in [0, 1]");
  }

  static const char* kGenreNames[4] = {"alpha", "beta", "gamma", "delta"};
  constexpr std::size_t kCuePool = 5;
  constexpr std::size_t kStylePool = 5;

  Rng rng(spec.seed);
  ReviewSet set;
  set.dataset_kind = DatasetKind::synthetic;

  // Items per genre, round-robin.
  std::vector<std::size_t> item_genre(spec.n_items);
  std::vector<std::vector<std::size_t>> genre_items(spec.n_genres);
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    item_genre[i] = i % spec.n_genres;
    genre_items[i % spec.n_genres].push_back(i);
  }

  // Vocabularies are partitioned into small topics; each document draws its
  // content tokens from one topic, which gives word co-occurrence the local
  // structure real documents have.
  constexpr std::size_t kTopicSize = 5;
  const std::size_t genre_topics = (spec.vocab_per_genre + kTopicSize - 1) / kTopicSize;
  const std::size_t shared_topics = (spec.shared_vocab + kTopicSize - 1) / kTopicSize;

  auto genre_token = [&](std::size_t g, std::size_t k) {
    return "g" + std::to_string(g) + "w" + std::to_string(k);
  };
  auto shared_token = [&](std::size_t k) { return "sh" + std::to_string(k); };
  auto topic_word = [&](std::size_t topic, std::size_t vocab_size, Rng& r) {
    const std::size_t lo = topic * kTopicSize;
    const std::size_t width = std::min(kTopicSize, vocab_size - lo);
    return lo + r.index(width);
  };
  auto cue_token = [&](std::size_t g, Sentiment s, std::size_t k) {
    const char* tag = s == Sentiment::positive ? "cuep" : s == Sentiment::negative ? "cuen" : "cueu";
    std::string prefix = spec.shared_cues ? "all" : "g" + std::to_string(g);
    return prefix + tag + std::to_string(k);
  };
  auto style_token = [&](double bias, std::size_t k) {
    return std::string(bias > 0 ? "stylep" : "stylen") + std::to_string(k);
  };

  for (std::size_t u = 0; u < spec.n_users; ++u) {
    const std::size_t ug = u % spec.n_genres;  // balanced genre assignment
    const double bias = (u % 2 == 0) ? 1.0 : -1.0;
    const std::string user_id = "u" + zero_pad(u, 4);
    if (meta) {
      meta->user_genre[user_id] = kGenreNames[ug];
      meta->user_bias[user_id] = bias;
    }

    for (std::size_t d = 0; d < spec.docs_per_user; ++d) {
      Review r;
      r.user_id = user_id;
      r.doc_id = "d" + zero_pad(u, 4) + "x" + zero_pad(d, 2);

      std::size_t item;
      if (rng.uniform() < spec.noise_rate) {
        item = rng.index(spec.n_items);
      } else {
        const auto& pool = genre_items[ug];
        item = pool[rng.index(pool.size())];
      }
      r.item_id = "i" + zero_pad(item, 4);
      const std::size_t doc_genre = item_genre[item];
      r.genres = {kGenreNames[doc_genre]};

      // Label: neutral at a flat rate, otherwise biased by the author.
      Sentiment label;
      if (rng.uniform() < spec.neutral_rate) {
        label = Sentiment::neutral;
      } else {
        const double p_pos = bias > 0 ? spec.bias_strength : 1.0 - spec.bias_strength;
        label = rng.uniform() < p_pos ? Sentiment::positive : Sentiment::negative;
      }
      switch (label) {
        case Sentiment::positive: r.rating = rng.bernoulli(0.5) ? 5.0 : 4.0; break;
        case Sentiment::negative: r.rating = rng.bernoulli(0.5) ? 1.0 : 2.0; break;
        case Sentiment::neutral: r.rating = 3.0; break;
      }

      // Cue token reflecting (or, with flip probability, contradicting) the label.
      Sentiment cue = label;
      if (label != Sentiment::neutral && rng.uniform() < spec.sentiment_flip_rate) {
        cue = label == Sentiment::positive ? Sentiment::negative : Sentiment::positive;
      }
      r.tokens.push_back(cue_token(doc_genre, cue, rng.index(kCuePool)));
      if (rng.uniform() < spec.style_token_rate) {
        r.tokens.push_back(style_token(bias, rng.index(kStylePool)));
      }
      const std::size_t genre_topic = rng.index(genre_topics);
      const std::size_t shared_topic = rng.index(shared_topics);
      while (r.tokens.size() < spec.doc_length) {
        if (rng.uniform() < spec.shared_token_rate) {
          r.tokens.push_back(shared_token(topic_word(shared_topic, spec.shared_vocab, rng)));
        } else {
          r.tokens.push_back(
              genre_token(doc_genre, topic_word(genre_topic, spec.vocab_per_genre, rng)));
        }
      }
      std::shuffle(r.tokens.begin(), r.tokens.end(), rng.engine());
      set.reviews.push_back(std::move(r));
    }
  }
  return set;
}

void save_synthetic_meta(const SyntheticMeta& meta, const std::string& path) {
  json j;
  j["user_genre"] = meta.user_genre;
  j["user_bias"] = meta.user_bias;
  std::ofstream out(path);
  if (!out) throw_io("cannot write synthetic meta: " + path);
  out << j.dump(2) << '\n';
}

SyntheticMeta load_synthetic_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open synthetic meta: " + path);
  json j;
  try {
    in >> j;
    SyntheticMeta meta;
    meta.user_genre = j.at("user_genre").get<std::map<std::string, std::string>>();
    meta.user_bias = j.at("user_bias").get<std::map<std::string, double>>();
    return meta;
  } catch (const json::exception& e) {
    throw_data("malformed synthetic meta " + path + ": " + e.what());
  }
}

}  // namespace uemb
