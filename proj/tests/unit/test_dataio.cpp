#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "lirdrec/container.hpp"
#include "lirdrec/dataio.hpp"
#include "support/fixtures.hpp"

using namespace lirdrec;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("lirdrec_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("load_interactions: 3-line TSV reads back") {
  TempDir tmp;
  const auto p = tmp.file("tiny.tsv");
  write_text(p, "user\titem\nalice\tx\nalice\ty\nbob\tx\n");
  const Dataset ds = load_interactions(p);
  CHECK(ds.num_users == 2);
  CHECK(ds.num_items == 2);
  CHECK(ds.records.size() == 3);
  // dense re-indexing in order of first appearance
  CHECK(ds.user_ids[0] == "alice");
  CHECK(ds.user_ids[1] == "bob");
  CHECK(ds.item_ids[0] == "x");
  CHECK(ds.records[2].user == 1);
  CHECK(ds.records[2].item == 0);
}

TEST_CASE("load_interactions: split column and labels") {
  TempDir tmp;
  const auto p = tmp.file("split.tsv");
  write_text(p, "user\titem\tsplit\na\tx\t0\na\ty\t1\nb\tx\t2\n");
  const Dataset ds = load_interactions(p);
  CHECK(ds.records[0].split == Split::train);
  CHECK(ds.records[1].split == Split::valid);
  CHECK(ds.records[2].split == Split::test);
}

TEST_CASE("load_interactions: malformed line reports its number") {
  TempDir tmp;
  const auto p = tmp.file("bad.tsv");
  write_text(p, "user\titem\na\tx\nonly_one_column\n");
  try {
    load_interactions(p);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("load_interactions: bad split label is a format error") {
  TempDir tmp;
  const auto p = tmp.file("badsplit.tsv");
  write_text(p, "user\titem\tsplit\na\tx\t7\n");
  CHECK_THROWS_AS(load_interactions(p), FormatError);
}

TEST_CASE("load_interactions: duplicates rejected or deduplicated per flag") {
  TempDir tmp;
  const auto p = tmp.file("dup.tsv");
  write_text(p, "user\titem\na\tx\na\tx\n");
  CHECK_THROWS_AS(load_interactions(p), ParseError);
  LoadOptions opts;
  opts.dedup = true;
  const Dataset ds = load_interactions(p, opts);
  CHECK(ds.records.size() == 1);
}

TEST_CASE("load_interactions: vocabulary larger than expected is an error") {
  TempDir tmp;
  const auto p = tmp.file("oob.tsv");
  write_text(p, "user\titem\na\tx\na\ty\na\tz\n");
  LoadOptions opts;
  opts.expect_items = 2;
  CHECK_THROWS_AS(load_interactions(p, opts), ContractError);
}

TEST_CASE("load_interactions: extra columns are ignored") {
  TempDir tmp;
  const auto p = tmp.file("rating.tsv");
  write_text(p, "user\titem\na\tx\t4.5\t1234\nb\ty\t2.0\t999\n");
  const Dataset ds = load_interactions(p);
  CHECK(ds.records.size() == 2);
}

TEST_CASE("dataset validate catches out-of-bounds indices") {
  Dataset ds = testing::make_dataset(2, 2, {{0, 0, Split::train}});
  ds.records.push_back({0, 5, Split::train});
  CHECK_THROWS_AS(ds.validate(), ContractError);
}

TEST_CASE("split_random: user with exactly 5 interactions gets 3/1/1") {
  const Dataset ds = testing::make_random_dataset(1, 10, 5, 0, 0, 3);
  const Dataset out = split_random(ds, {0.8, 0.1, 0.1}, 7);
  CHECK(out.count(Split::train) == 3);
  CHECK(out.count(Split::valid) == 1);
  CHECK(out.count(Split::test) == 1);
}

TEST_CASE("split_random: same seed gives identical assignment") {
  const Dataset ds = testing::make_random_dataset(20, 50, 9, 0, 0, 5);
  const Dataset a = split_random(ds, {0.8, 0.1, 0.1}, 99);
  const Dataset b = split_random(ds, {0.8, 0.1, 0.1}, 99);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].split == b.records[i].split);
}

TEST_CASE("split_random: per-user counts follow the floor/remainder rule") {
  // enumeration oracle over user sizes 5..60
  for (int n = 5; n <= 60; ++n) {
    const Dataset ds = testing::make_random_dataset(1, 80, n, 0, 0, 11);
    const Dataset out = split_random(ds, {0.8, 0.1, 0.1}, 17);
    const size_t expect_test = std::max<size_t>(1, static_cast<size_t>(0.1 * n));
    const size_t expect_valid = std::max<size_t>(1, static_cast<size_t>(0.1 * n));
    CHECK(out.count(Split::test) == expect_test);
    CHECK(out.count(Split::valid) == expect_valid);
    CHECK(out.count(Split::train) == static_cast<size_t>(n) - expect_test - expect_valid);
    CHECK(out.count(Split::train) >= 3);
  }
  // 10 interactions -> 8/1/1
  const Dataset ds10 = testing::make_random_dataset(1, 20, 10, 0, 0, 2);
  const Dataset out10 = split_random(ds10, {0.8, 0.1, 0.1}, 5);
  CHECK(out10.count(Split::train) == 8);
  CHECK(out10.count(Split::valid) == 1);
  CHECK(out10.count(Split::test) == 1);
}

TEST_CASE("split_random: users below 5 interactions are listed in the error") {
  Dataset ds = testing::make_random_dataset(3, 30, 6, 0, 0, 21);
  // strip user u1 down to 2 interactions
  std::vector<InteractionRecord> kept;
  int seen = 0;
  for (const auto& r : ds.records) {
    if (r.user == 1 && ++seen > 2) continue;
    kept.push_back(r);
  }
  ds.records = kept;
  try {
    split_random(ds, {0.8, 0.1, 0.1}, 1);
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("u1") != std::string::npos);
  }
}

TEST_CASE("split_random preserves the interaction multiset for any seed") {
  const Dataset ds = testing::make_random_dataset(12, 40, 7, 0, 0, 31);
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const Dataset out = split_random(ds, {0.8, 0.1, 0.1}, seed);
    REQUIRE(out.records.size() == ds.records.size());
    std::multiset<std::pair<int32_t, int32_t>> before, after;
    for (const auto& r : ds.records) before.emplace(r.user, r.item);
    for (const auto& r : out.records) after.emplace(r.user, r.item);
    CHECK(before == after);
    // per-user counts are preserved and the 3/1/1 floor holds
    const auto train = out.items_by_user(Split::train);
    const auto valid = out.items_by_user(Split::valid);
    const auto test = out.items_by_user(Split::test);
    for (int32_t u = 0; u < out.num_users; ++u) {
      CHECK(train[u].size() + valid[u].size() + test[u].size() == 7);
      CHECK(train[u].size() >= 3);
      CHECK(valid[u].size() >= 1);
      CHECK(test[u].size() >= 1);
    }
  }
}

TEST_CASE("split_cold_start: 10 items at 0.2 hold out 1 valid and 1 test item") {
  const Dataset ds = testing::make_random_dataset(6, 10, 8, 0, 0, 41);
  const Dataset out = split_cold_start(ds, 0.2, 13);
  std::set<int32_t> train_items, valid_items, test_items;
  for (const auto& r : out.records) {
    if (r.split == Split::train) train_items.insert(r.item);
    if (r.split == Split::valid) valid_items.insert(r.item);
    if (r.split == Split::test) test_items.insert(r.item);
  }
  CHECK(valid_items.size() <= 1);
  CHECK(test_items.size() <= 1);
  // interactions follow their item's membership; held-out items never train
  for (const int32_t i : valid_items) CHECK(train_items.count(i) == 0);
  for (const int32_t i : test_items) CHECK(train_items.count(i) == 0);
}

TEST_CASE("split_cold_start: membership decides every record's label") {
  const Dataset ds = testing::make_random_dataset(10, 30, 12, 0, 0, 5);
  const Dataset out = split_cold_start(ds, 0.2, 77);
  std::set<int32_t> valid_items, test_items;
  for (const auto& r : out.records) {
    if (r.split == Split::valid) valid_items.insert(r.item);
    if (r.split == Split::test) test_items.insert(r.item);
  }
  // an item appears under exactly one label
  for (const auto& r : out.records) {
    if (valid_items.count(r.item)) CHECK(r.split == Split::valid);
    if (test_items.count(r.item)) CHECK(r.split == Split::test);
  }
  // counts differ by at most one and the sets are disjoint
  CHECK(std::abs(static_cast<int>(valid_items.size()) - static_cast<int>(test_items.size())) <= 1);
  for (const int32_t i : valid_items) CHECK(test_items.count(i) == 0);
}

TEST_CASE("feature container round-trip is byte-identical") {
  TempDir tmp;
  Rng rng(3);
  FeatureMatrix m;
  m.modality_id = "visual";
  m.values = Tensor<float>::randn(7, 3, rng);
  const auto p1 = tmp.file("a.fmx");
  const auto p2 = tmp.file("b.fmx");
  store_features(m, p1);
  const FeatureMatrix loaded = load_features(p1, "visual");
  CHECK(loaded.rows() == 7);
  CHECK(loaded.cols() == 3);
  store_features(loaded, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  for (size_t i = 0; i < m.values.size(); ++i) CHECK(m.values.at(i) == loaded.values.at(i));
}

TEST_CASE("feature container rejects corruption, truncation and NaN") {
  TempDir tmp;
  Rng rng(4);
  FeatureMatrix m;
  m.modality_id = "textual";
  m.values = Tensor<float>::randn(5, 4, rng);
  const auto p = tmp.file("f.fmx");
  store_features(m, p);

  SUBCASE("flipped payload byte fails the checksum") {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4 + 4 + 4 + 8 + 3);
    char c;
    f.seekg(4 + 4 + 4 + 8 + 3);
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x40);
    f.seekp(4 + 4 + 4 + 8 + 3);
    f.write(&c, 1);
    f.close();
    CHECK_THROWS_WITH_AS(load_features(p), doctest::Contains("checksum"), FormatError);
  }
  SUBCASE("truncation is detected") {
    std::filesystem::resize_file(p, 30);
    CHECK_THROWS_WITH_AS(load_features(p), doctest::Contains("truncated"), FormatError);
  }
  SUBCASE("NaN payload is rejected") {
    FeatureMatrix bad = m;
    bad.values(2, 2) = std::numeric_limits<float>::quiet_NaN();
    const auto pb = tmp.file("nan.fmx");
    store_features(bad, pb);
    CHECK_THROWS_WITH_AS(load_features(pb), doctest::Contains("NaN"), FormatError);
  }
  SUBCASE("wrong magic is rejected") {
    write_text(tmp.file("junk.fmx"), "not a container at all");
    CHECK_THROWS_AS(load_features(tmp.file("junk.fmx")), FormatError);
  }
  SUBCASE("modality tag mismatch is rejected") {
    CHECK_THROWS_WITH_AS(load_features(p, "visual"), doctest::Contains("tag"), FormatError);
  }
}

TEST_CASE("graph container round-trips CSR with its tag") {
  TempDir tmp;
  const auto g = Csr<float>::from_coo(4, 4, {{0, 1, 0.5f}, {1, 0, 0.5f}, {2, 3, 1.0f}});
  const auto p = tmp.file("g.grx");
  store_graph(g, 0xdeadbeefcafef00dull, p);
  uint64_t tag = 0;
  const auto loaded = load_graph(p, &tag);
  CHECK(tag == 0xdeadbeefcafef00dull);
  CHECK(loaded == g);
}

TEST_CASE("checkpoint sections round-trip") {
  TempDir tmp;
  Rng rng(5);
  std::vector<NamedTensor> sections;
  sections.push_back({"user_emb", Tensor<float>::randn(4, 6, rng)});
  sections.push_back({"proj.visual.w1", Tensor<float>::randn(3, 2, rng)});
  const auto p = tmp.file("c.ckpt");
  store_sections(sections, p);
  const auto loaded = load_sections(p);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "user_emb");
  CHECK(loaded[1].name == "proj.visual.w1");
  CHECK(max_abs_diff(loaded[0].data, sections[0].data) == 0.0f);
}

TEST_CASE("subsample keeps only touched items and stays dense") {
  const Dataset ds = testing::make_random_dataset(30, 100, 6, 1, 1, 9);
  const Dataset sub = subsample_users(ds, 10, 4);
  CHECK(sub.num_users == 10);
  CHECK(sub.num_items <= 100);
  sub.validate();
  for (const auto& r : sub.records) {
    CHECK(r.user < sub.num_users);
    CHECK(r.item < sub.num_items);
  }
}

// Full-dataset statistics; runs only when the real dataset directory is
// provided (LIRDREC_BABY_DIR with baby.tsv, visual.fmx, textual.fmx).
TEST_CASE("baby dataset statistics match the published table") {
  const char* dir = std::getenv("LIRDREC_BABY_DIR");
  if (dir == nullptr) return;  // skipped silently in CI environments
  const Dataset ds = load_interactions(std::string(dir) + "/baby.tsv");
  CHECK(ds.num_users == 19445);
  CHECK(ds.num_items == 7050);
  CHECK(ds.records.size() == 160792);
  const FeatureMatrix vis = load_features(std::string(dir) + "/visual.fmx", "visual");
  CHECK(vis.rows() == 7050);
  CHECK(vis.cols() == 4096);
}
