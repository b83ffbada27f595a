#include "uemb/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "field_escape.hpp"
#include "uemb/error.hpp"

namespace uemb {

using detail::escape_field;
using detail::unescape_field;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary build_vocab(const ReviewSet& set, std::size_t max_size) {
  if (set.empty()) throw_data("cannot build a vocabulary from an empty corpus");

  std::map<std::string, std::int64_t> freq;
  for (const Review& r : set.reviews) {
    for (const std::string& t : r.tokens) ++freq[t];
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  std::int64_t oov = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i < max_size) {
      v.token_to_id_.emplace(ranked[i].first, static_cast<int>(i));
      v.id_to_token_.push_back(ranked[i].first);
      v.counts_.push_back(ranked[i].second);
    } else {
      oov += ranked[i].second;
    }
  }
  v.id_to_token_.push_back(kUnkToken);
  v.counts_.push_back(oov);
  return v;
}

Vocabulary vocabulary_from_records(std::vector<std::pair<std::string, std::int64_t>> records) {
  if (records.empty() || records.back().first != kUnkToken) {
    throw_data("vocabulary records must end with the <unk> entry");
  }
  Vocabulary v;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& [token, count] = records[i];
    if (i + 1 < records.size()) {
      if (!v.token_to_id_.emplace(token, static_cast<int>(i)).second) {
        throw_data("duplicate vocabulary token \"" + token + "\"");
      }
    }
    v.id_to_token_.push_back(std::move(token));
    v.counts_.push_back(count);
  }
  return v;
}

std::vector<int> encode_document(const Vocabulary& vocab, const Review& review) {
  std::vector<int> ids;
  ids.reserve(review.tokens.size());
  for (const std::string& t : review.tokens) ids.push_back(vocab.encode(t));
  return ids;
}

// ---------------------------------------------------------------------------
// EntityIndex
// ---------------------------------------------------------------------------

EntityIndex build_entity_index(const ReviewSet& set, const Vocabulary& vocab,
                               std::size_t n_user_vocab) {
  if (set.empty()) throw_data("cannot index an empty corpus");

  EntityIndex idx;
  idx.n_user_vocab = n_user_vocab;
  {
    std::map<std::string, int> users, items;
    for (const Review& r : set.reviews) {
      users.emplace(r.user_id, 0);
      items.emplace(r.item_id, 0);
    }
    for (auto& [id, slot] : users) {
      slot = static_cast<int>(idx.user_ids.size());
      idx.user_ids.push_back(id);
    }
    for (auto& [id, slot] : items) {
      slot = static_cast<int>(idx.item_ids.size());
      idx.item_ids.push_back(id);
    }
    idx.user_to_id.insert(users.begin(), users.end());
    idx.item_to_id.insert(items.begin(), items.end());
  }

  const std::size_t n_users = idx.user_ids.size();
  const std::size_t n_items = idx.item_ids.size();
  const int unk = vocab.unk_id();

  std::vector<std::map<int, std::int64_t>> user_freq(n_users);
  std::vector<std::vector<int>> item_words(n_items);
  std::vector<std::vector<int>> user_item_sets(n_users);
  idx.item_genres.assign(n_items, {});

  for (const Review& r : set.reviews) {
    const int u = idx.user_to_id.at(r.user_id);
    const int p = idx.item_to_id.at(r.item_id);
    for (const std::string& t : r.tokens) {
      const int w = vocab.encode(t);
      if (w == unk) continue;  // <unk> carries no semantics
      ++user_freq[u][w];
      item_words[p].push_back(w);
    }
    user_item_sets[u].push_back(p);
    for (const std::string& g : r.genres) idx.item_genres[p].push_back(g);
  }

  idx.user_vocab.resize(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    // n most frequent words authored by the user; ties by token string.
    std::vector<std::pair<int, std::int64_t>> ranked(user_freq[u].begin(), user_freq[u].end());
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return vocab.decode(a.first) < vocab.decode(b.first);
    });
    if (ranked.size() > n_user_vocab) ranked.resize(n_user_vocab);
    auto& uv = idx.user_vocab[u];
    uv.reserve(ranked.size());
    for (const auto& [w, c] : ranked) uv.push_back(w);
    std::sort(uv.begin(), uv.end());
  }

  idx.item_vocab.resize(n_items);
  for (std::size_t p = 0; p < n_items; ++p) {
    auto& words = item_words[p];
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    idx.item_vocab[p] = std::move(words);
    auto& genres = idx.item_genres[p];
    std::sort(genres.begin(), genres.end());
    genres.erase(std::unique(genres.begin(), genres.end()), genres.end());
  }

  idx.user_items.resize(n_users);
  idx.user_genres.resize(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    auto& items = user_item_sets[u];
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    std::vector<std::string> genres;
    for (int p : items) {
      const auto& ig = idx.item_genres[static_cast<std::size_t>(p)];
      genres.insert(genres.end(), ig.begin(), ig.end());
    }
    std::sort(genres.begin(), genres.end());
    genres.erase(std::unique(genres.begin(), genres.end()), genres.end());
    idx.user_items[u] = std::move(items);
    idx.user_genres[u] = std::move(genres);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// SamplingTable
// ---------------------------------------------------------------------------

SamplingTable build_sampling_table(std::span<const std::int64_t> counts, double power,
                                   SamplingTable::Domain domain) {
  if (counts.empty()) throw_data("sampling table needs at least one count");
  SamplingTable t;
  t.domain_ = domain;
  t.power_ = power;
  double total = 0.0;
  std::vector<double> weights(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] <= 0) {
      throw_data("sampling table counts must be positive (index " + std::to_string(i) + ")");
    }
    weights[i] = std::pow(static_cast<double>(counts[i]), power);
    total += weights[i];
  }
  t.cumulative_.resize(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc += weights[i] / total;
    t.cumulative_[i] = acc;
  }
  t.cumulative_.back() = 1.0;
  return t;
}

double SamplingTable::probability(std::size_t i) const {
  return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
}

int SamplingTable::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto pos = it == cumulative_.end() ? cumulative_.size() - 1
                                           : static_cast<std::size_t>(it - cumulative_.begin());
  return static_cast<int>(pos);
}

// ---------------------------------------------------------------------------
// Persistence (versioned text, ids percent-escaped)
// ---------------------------------------------------------------------------

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write vocabulary file: " + path);
  out << "uemb-vocab v1 " << vocab.size() << '\n';
  for (int i = 0; i < vocab.size(); ++i) {
    out << escape_field(vocab.decode(i)) << ' ' << vocab.count(i) << '\n';
  }
  if (!out) throw_io("failed writing vocabulary file: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open vocabulary file: " + path);
  std::string magic, version;
  std::size_t n = 0;
  if (!(in >> magic >> version >> n) || magic != "uemb-vocab" || version != "v1") {
    throw_data("malformed vocabulary header in " + path);
  }
  std::vector<std::pair<std::string, std::int64_t>> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string token;
    std::int64_t count = 0;
    if (!(in >> token >> count)) {
      throw_data(path + ": expected " + std::to_string(n) + " vocabulary records, got " +
                 std::to_string(i));
    }
    records.emplace_back(unescape_field(token), count);
  }
  return vocabulary_from_records(std::move(records));
}

namespace {

template <typename T>
void write_list(std::ofstream& out, const std::vector<T>& v) {
  out << v.size();
  for (const T& x : v) {
    if constexpr (std::is_same_v<T, std::string>) out << ' ' << escape_field(x);
    else out << ' ' << x;
  }
}

std::vector<int> read_int_list(std::istream& in, const std::string& path) {
  std::size_t n = 0;
  if (!(in >> n)) throw_data(path + ": truncated index record");
  std::vector<int> v(n);
  for (auto& x : v) {
    if (!(in >> x)) throw_data(path + ": truncated index record");
  }
  return v;
}

std::vector<std::string> read_str_list(std::istream& in, const std::string& path) {
  std::size_t n = 0;
  if (!(in >> n)) throw_data(path + ": truncated index record");
  std::vector<std::string> v(n);
  for (auto& x : v) {
    if (!(in >> x)) throw_data(path + ": truncated index record");
    x = unescape_field(x);
  }
  return v;
}

}  // namespace

void save_index(const EntityIndex& index, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write index file: " + path);
  out << "uemb-index v1 " << index.n_users() << ' ' << index.n_items() << ' '
      << index.n_user_vocab << '\n';
  for (std::size_t u = 0; u < index.n_users(); ++u) {
    out << "user " << escape_field(index.user_ids[u]) << ' ';
    write_list(out, index.user_vocab[u]);
    out << ' ';
    write_list(out, index.user_items[u]);
    out << '\n';
  }
  for (std::size_t p = 0; p < index.n_items(); ++p) {
    out << "item " << escape_field(index.item_ids[p]) << ' ';
    write_list(out, index.item_vocab[p]);
    out << ' ';
    write_list(out, index.item_genres[p]);
    out << '\n';
  }
  if (!out) throw_io("failed writing index file: " + path);
}

EntityIndex load_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open index file: " + path);
  std::string magic, version;
  std::size_t n_users = 0, n_items = 0;
  EntityIndex idx;
  if (!(in >> magic >> version >> n_users >> n_items >> idx.n_user_vocab) ||
      magic != "uemb-index" || version != "v1") {
    throw_data("malformed index header in " + path);
  }
  idx.user_vocab.resize(n_users);
  idx.user_items.resize(n_users);
  idx.item_vocab.resize(n_items);
  idx.item_genres.resize(n_items);
  for (std::size_t u = 0; u < n_users; ++u) {
    std::string tag, id;
    if (!(in >> tag >> id) || tag != "user") throw_data(path + ": expected user record");
    idx.user_ids.push_back(unescape_field(id));
    idx.user_to_id.emplace(idx.user_ids.back(), static_cast<int>(u));
    idx.user_vocab[u] = read_int_list(in, path);
    idx.user_items[u] = read_int_list(in, path);
  }
  for (std::size_t p = 0; p < n_items; ++p) {
    std::string tag, id;
    if (!(in >> tag >> id) || tag != "item") throw_data(path + ": expected item record");
    idx.item_ids.push_back(unescape_field(id));
    idx.item_to_id.emplace(idx.item_ids.back(), static_cast<int>(p));
    idx.item_vocab[p] = read_int_list(in, path);
    idx.item_genres[p] = read_str_list(in, path);
  }
  // Rebuild the derived user genres.
  idx.user_genres.resize(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    std::vector<std::string> genres;
    for (int p : idx.user_items[u]) {
      const auto& ig = idx.item_genres.at(static_cast<std::size_t>(p));
      genres.insert(genres.end(), ig.begin(), ig.end());
    }
    std::sort(genres.begin(), genres.end());
    genres.erase(std::unique(genres.begin(), genres.end()), genres.end());
    idx.user_genres[u] = std::move(genres);
  }
  return idx;
}

}  // namespace uemb
