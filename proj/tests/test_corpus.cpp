#include "uemb/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "uemb/error.hpp"

using namespace uemb;
using testutil::make_review;
using testutil::make_review_n;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("tokenize splits word and punctuation runs") {
  CHECK(tokenize("Hello, world!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize("  spaced\tout\n") == std::vector<std::string>{"spaced", "out"});
  CHECK(tokenize("abc123 x-y") == std::vector<std::string>{"abc123", "x", "-", "y"});
  CHECK(tokenize("don't stop...") ==
        std::vector<std::string>{"don", "'", "t", "stop", "..."});
  CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("tokenize folds case across scripts") {
  CHECK(tokenize("CAFÉ") == std::vector<std::string>{"café"});
  CHECK(fold_case("ÀÉÎÕÜ") == "àéîõü");
  CHECK(fold_case("ΣΠΙΤΙ") == "σπιτι");
  CHECK(fold_case("ДОМ") == "дом");
  CHECK(fold_case("already lower 42") == "already lower 42");
}

TEST_CASE("load_reviews reads one valid record") {
  TempDir tmp("load");
  const auto path = tmp.path("one.jsonl");
  write_file(path,
             R"({"doc_id":"d1","user_id":"u1","item_id":"i1","rating":4.0,)"
             R"("text":"Great coffee here","genres":["cafe"]})"
             "\n");
  const ReviewSet set = load_reviews(path, DatasetKind::yelp);
  REQUIRE(set.size() == 1);
  CHECK(set.reviews[0].doc_id == "d1");
  CHECK(set.reviews[0].tokens == std::vector<std::string>{"great", "coffee", "here"});
  CHECK(set.reviews[0].genres == std::vector<std::string>{"cafe"});
  CHECK(set.dataset_kind == DatasetKind::yelp);
}

TEST_CASE("load_reviews reports the missing field and line") {
  TempDir tmp("load_missing");
  const auto path = tmp.path("bad.jsonl");
  write_file(path,
             R"({"doc_id":"d1","user_id":"u1","item_id":"i1","text":"x","genres":[]})"
             "\n");
  try {
    load_reviews(path, DatasetKind::yelp);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::data);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    CHECK(std::string(e.what()).find("rating") != std::string::npos);
  }
}

TEST_CASE("load_reviews strict vs lenient on a malformed record") {
  TempDir tmp("load_lenient");
  const auto path = tmp.path("mixed.jsonl");
  std::string good =
      R"({"doc_id":"dN","user_id":"u1","item_id":"i1","rating":4,"text":"ok","genres":["g"]})";
  std::string content;
  for (int i = 0; i < 3; ++i) {
    std::string rec = good;
    rec.replace(rec.find("dN"), 2, "d" + std::to_string(i));
    content += rec + "\n";
  }
  content += "{not json}\n";
  write_file(path, content);

  CHECK_THROWS_AS(load_reviews(path, DatasetKind::amazon), Error);

  LoadStats stats;
  const ReviewSet set = load_reviews(path, DatasetKind::amazon, {.strict = false}, &stats);
  CHECK(set.size() == 3);
  CHECK(stats.warnings == 1);
}

TEST_CASE("load_reviews: missing file fatal, empty file empty set") {
  TempDir tmp("load_edge");
  CHECK_THROWS_AS(load_reviews(tmp.path("nope.jsonl"), DatasetKind::yelp), Error);
  write_file(tmp.path("empty.jsonl"), "");
  CHECK(load_reviews(tmp.path("empty.jsonl"), DatasetKind::yelp).empty());
}

TEST_CASE("save/load round-trips a review set") {
  TempDir tmp("roundtrip");
  ReviewSet set;
  set.dataset_kind = DatasetKind::yelp;
  set.reviews.push_back(make_review_n("d1", "u one", "i1", 4.0, 12, {"g1", "g2"}));
  set.reviews.push_back(make_review_n("d2", "u2", "i2", 2.0, 15, {"g1"}));
  const auto path = tmp.path("set.jsonl");
  save_reviews(set, path);
  const ReviewSet back = load_reviews(path, DatasetKind::yelp);
  REQUIRE(back.size() == 2);
  CHECK(back.reviews[0].doc_id == set.reviews[0].doc_id);
  CHECK(back.reviews[0].user_id == "u one");
  CHECK(back.reviews[0].tokens == set.reviews[0].tokens);
  CHECK(back.reviews[1].rating == set.reviews[1].rating);
}

namespace {

ReviewSet small_corpus(DatasetKind kind) {
  ReviewSet raw;
  raw.dataset_kind = kind;
  raw.reviews.push_back(make_review_n("d1", "u1", "i1", 4.0, 12, {"drama"}));
  raw.reviews.push_back(make_review_n("d2", "u2", "i2", 2.0, 11, {"action"}));
  raw.reviews.push_back(make_review_n("d3", "u3", "i3", 3.0, 10, {"drama"}));
  return raw;
}

}  // namespace

TEST_CASE("preprocess sentiment rules per dataset scale") {
  ReviewSet yelp = small_corpus(DatasetKind::yelp);
  const ReviewSet y = preprocess(yelp);
  REQUIRE(y.size() == 3);
  CHECK(y.reviews[0].sentiment == Sentiment::positive);  // rating 4 > 3
  CHECK(y.reviews[1].sentiment == Sentiment::negative);  // rating 2 < 3
  CHECK(y.reviews[2].sentiment == Sentiment::neutral);   // rating 3

  ReviewSet imdb = small_corpus(DatasetKind::imdb);
  imdb.reviews[0].rating = 7.0;
  imdb.reviews[1].rating = 5.0;  // in [5, 6] -> neutral
  imdb.reviews[2].rating = 4.0;
  const ReviewSet m = preprocess(imdb);
  CHECK(m.reviews[0].sentiment == Sentiment::positive);
  CHECK(m.reviews[1].sentiment == Sentiment::neutral);
  CHECK(m.reviews[2].sentiment == Sentiment::negative);
}

TEST_CASE("preprocess drops short documents and lowercases") {
  ReviewSet raw = small_corpus(DatasetKind::yelp);
  raw.reviews.push_back(make_review_n("d9", "u9", "i9", 4.0, 9, {"drama"}));
  raw.reviews[0].tokens[0] = "LOUD";
  const ReviewSet out = preprocess(raw);
  CHECK(out.size() == 3);  // 9-token document dropped
  CHECK(out.reviews[0].tokens[0] == "loud");
  for (const Review& r : out.reviews) CHECK(r.tokens.size() >= 10);
}

TEST_CASE("preprocess retains the top-4 genres with lexicographic ties") {
  ReviewSet raw;
  raw.dataset_kind = DatasetKind::yelp;
  // Counts: a:3, b:2, c:2, d:2, e:2 -- tie for the last three slots among
  // b,c,d,e resolved lexicographically (b,c,d kept, e dropped).
  int doc = 0;
  auto add = [&](const std::string& genre, int n) {
    for (int i = 0; i < n; ++i) {
      raw.reviews.push_back(
          make_review_n("d" + std::to_string(doc++), "u", "i" + genre, 4.0, 10, {genre}));
    }
  };
  add("a", 3);
  add("b", 2);
  add("c", 2);
  add("d", 2);
  add("e", 2);
  const ReviewSet out = preprocess(raw);
  CHECK(out.retained_genres == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(out.size() == 9);  // the two e-genre documents are gone
  for (const Review& r : out.reviews) CHECK(!r.genres.empty());
}

TEST_CASE("preprocess is idempotent") {
  ReviewSet raw;
  raw.dataset_kind = DatasetKind::amazon;
  int doc = 0;
  for (const char* g : {"a", "a", "b", "b", "c", "d", "e", "e", "e"}) {
    auto r = make_review_n("d" + std::to_string(doc), "u" + std::to_string(doc % 3),
                           "i" + std::string(g), 1.0 + (doc % 5), 10 + doc % 4, {g});
    r.tokens[0] = "MiXeD";
    raw.reviews.push_back(r);
    ++doc;
  }
  raw.reviews.push_back(make_review_n("dshort", "u0", "ia", 5.0, 5, {"a"}));
  const ReviewSet once = preprocess(raw);
  const ReviewSet twice = preprocess(once);
  CHECK(once == twice);
}

TEST_CASE("preprocess rejects out-of-scale ratings") {
  ReviewSet raw = small_corpus(DatasetKind::yelp);
  raw.reviews[1].rating = 6.0;
  CHECK_THROWS_AS(preprocess(raw), Error);
  ReviewSet imdb = small_corpus(DatasetKind::imdb);
  imdb.reviews[0].rating = 10.0;  // fine for imdb
  imdb.reviews[1].rating = 5.0;
  imdb.reviews[2].rating = 8.0;
  CHECK_NOTHROW(preprocess(imdb));
}

TEST_CASE("anonymize is deterministic, injective and salt-sensitive") {
  ReviewSet set = small_corpus(DatasetKind::yelp);
  set.reviews[2].user_id = "u1";  // repeat user
  const ReviewSet a1 = anonymize(set, "salt-a");
  const ReviewSet a2 = anonymize(set, "salt-a");
  const ReviewSet b = anonymize(set, "salt-b");

  CHECK(a1 == a2);
  CHECK(a1.reviews[0].user_id == a1.reviews[2].user_id);   // same input id
  CHECK(a1.reviews[0].user_id != a1.reviews[1].user_id);   // distinct ids
  CHECK(a1.reviews[0].user_id != b.reviews[0].user_id);    // salt changes digests
  CHECK(a1.reviews[0].user_id != set.reviews[0].user_id);
  CHECK_THROWS_AS(anonymize(set, ""), Error);
}

TEST_CASE("anonymize preserves the user-item co-occurrence structure") {
  SyntheticSpec spec;
  spec.n_users = 12;
  spec.n_items = 8;
  spec.docs_per_user = 3;
  spec.seed = 7;
  const ReviewSet set = generate_synthetic(spec);
  const ReviewSet anon = anonymize(set, "s");
  REQUIRE(anon.size() == set.size());

  // The relabeling maps must be consistent bijections across all positions.
  std::map<std::string, std::string> user_map, item_map;
  std::set<std::string> user_images, item_images;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto [uit, ufresh] = user_map.emplace(set.reviews[i].user_id, anon.reviews[i].user_id);
    CHECK(uit->second == anon.reviews[i].user_id);
    if (ufresh) CHECK(user_images.insert(anon.reviews[i].user_id).second);
    const auto [iit, ifresh] = item_map.emplace(set.reviews[i].item_id, anon.reviews[i].item_id);
    CHECK(iit->second == anon.reviews[i].item_id);
    if (ifresh) CHECK(item_images.insert(anon.reviews[i].item_id).second);
    CHECK(anon.reviews[i].tokens == set.reviews[i].tokens);
  }
}

TEST_CASE("split allocates floors with the remainder to train") {
  ReviewSet set;
  set.dataset_kind = DatasetKind::yelp;
  for (int i = 0; i < 10; ++i) {
    set.reviews.push_back(make_review_n("d" + std::to_string(i), "u", "i", 4.0, 10, {"g"}));
  }
  const SplitResult r = split(set, {.train = 0.8, .dev = 0.1, .test = 0.1, .seed = 1});
  CHECK(r.train.size() == 8);
  CHECK(r.dev.size() == 1);
  CHECK(r.test.size() == 1);
}

TEST_CASE("split matches the published corpus-scale allocation") {
  // 551,695 documents at 80/10/10. Floor allocation with the remainder to
  // train gives (441,357 / 55,169 / 55,169); the published table rounds the
  // same corpus to 441,357 / 55,170 / 55,171.
  const std::size_t n = 551695;
  const double ratios[3] = {0.8, 0.1, 0.1};
  std::size_t sizes[3];
  for (int i = 0; i < 3; ++i) sizes[i] = static_cast<std::size_t>(ratios[i] * static_cast<double>(n));
  sizes[0] += n - (sizes[0] + sizes[1] + sizes[2]);
  CHECK(sizes[0] == 441357);
  CHECK(sizes[1] == 55169);
  CHECK(sizes[2] == 55169);
  CHECK(sizes[0] + sizes[1] + sizes[2] == n);
  CHECK(std::llabs(static_cast<long long>(sizes[0]) - 441357) <= 2);
  CHECK(std::llabs(static_cast<long long>(sizes[1]) - 55170) <= 2);
  CHECK(std::llabs(static_cast<long long>(sizes[2]) - 55171) <= 2);
}

TEST_CASE("split is a deterministic partition") {
  SyntheticSpec spec;
  spec.n_users = 20;
  spec.n_items = 8;
  spec.docs_per_user = 2;
  const ReviewSet set = generate_synthetic(spec);
  const SplitSpec ss{.train = 0.8, .dev = 0.1, .test = 0.1, .seed = 99};
  const SplitResult a = split(set, ss);
  const SplitResult b = split(set, ss);
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK(a.test == b.test);

  CHECK(a.train.size() + a.dev.size() + a.test.size() == set.size());
  std::set<std::string> ids;
  for (const ReviewSet* part : {&a.train, &a.dev, &a.test}) {
    for (const Review& r : part->reviews) CHECK(ids.insert(r.doc_id).second);
  }
  CHECK(ids.size() == set.size());
}

TEST_CASE("split rejects degenerate inputs") {
  ReviewSet tiny;
  for (int i = 0; i < 5; ++i) {
    tiny.reviews.push_back(make_review_n("d" + std::to_string(i), "u", "i", 4.0, 10, {"g"}));
  }
  CHECK_THROWS_AS(split(tiny, {}), Error);
  ReviewSet set;
  for (int i = 0; i < 12; ++i) {
    set.reviews.push_back(make_review_n("d" + std::to_string(i), "u", "i", 4.0, 10, {"g"}));
  }
  CHECK_THROWS_AS(split(set, {.train = 0.98, .dev = 0.01, .test = 0.01, .seed = 1}), Error);
  CHECK_THROWS_AS(split(set, {.train = 0.5, .dev = 0.2, .test = 0.2, .seed = 1}), Error);
}

TEST_CASE("synthetic corpus at noise 0 keeps users inside their genre") {
  SyntheticSpec spec;
  spec.n_users = 40;
  spec.n_items = 16;
  spec.noise_rate = 0.0;
  SyntheticMeta meta;
  const ReviewSet set = generate_synthetic(spec, &meta);
  for (const Review& r : set.reviews) {
    REQUIRE(r.genres.size() == 1);
    CHECK(r.genres[0] == meta.user_genre.at(r.user_id));
  }
}

TEST_CASE("synthetic genre assignment is balanced round-robin") {
  SyntheticSpec spec;
  spec.n_users = 200;
  spec.n_genres = 4;
  SyntheticMeta meta;
  generate_synthetic(spec, &meta);
  std::map<std::string, int> counts;
  for (const auto& [user, genre] : meta.user_genre) ++counts[genre];
  REQUIRE(counts.size() == 4);
  for (const auto& [genre, n] : counts) CHECK(n == 50);
}

TEST_CASE("synthetic corpus at noise 1 crosses genres at the uniform rate") {
  SyntheticSpec spec;
  spec.n_users = 2000;
  spec.n_items = 40;
  spec.docs_per_user = 5;  // 10,000 draws
  spec.noise_rate = 1.0;
  spec.seed = 77;
  SyntheticMeta meta;
  const ReviewSet set = generate_synthetic(spec, &meta);
  REQUIRE(set.size() == 10000);
  std::size_t cross = 0;
  for (const Review& r : set.reviews) {
    if (r.genres[0] != meta.user_genre.at(r.user_id)) ++cross;
  }
  const double fraction = static_cast<double>(cross) / static_cast<double>(set.size());
  CHECK(std::abs(fraction - 0.75) < 0.02);
}

TEST_CASE("synthetic corpus validates parameters and is deterministic") {
  SyntheticSpec bad;
  bad.doc_length = 9;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
  SyntheticSpec five;
  five.n_genres = 5;
  CHECK_THROWS_AS(generate_synthetic(five), Error);

  SyntheticSpec spec;
  spec.n_users = 10;
  spec.n_items = 8;
  CHECK(generate_synthetic(spec) == generate_synthetic(spec));

  // Generated documents survive preprocessing untouched in count.
  const ReviewSet set = generate_synthetic(spec);
  const ReviewSet pre = preprocess(set);
  CHECK(pre.size() == set.size());
  CHECK(pre.retained_genres.size() == spec.n_genres);
}

TEST_CASE("synthetic meta round-trips through its file format") {
  TempDir tmp("meta");
  SyntheticSpec spec;
  spec.n_users = 6;
  spec.n_items = 4;
  SyntheticMeta meta;
  generate_synthetic(spec, &meta);
  save_synthetic_meta(meta, tmp.path("meta.json"));
  const SyntheticMeta back = load_synthetic_meta(tmp.path("meta.json"));
  CHECK(back.user_genre == meta.user_genre);
  CHECK(back.user_bias == meta.user_bias);
}
