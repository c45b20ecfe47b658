#include "lirdrec/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "lirdrec/rng.hpp"

namespace lirdrec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

int32_t intern(const std::string& key, std::unordered_map<std::string, int32_t>& index,
               std::vector<std::string>& ids) {
  auto [it, inserted] = index.emplace(key, static_cast<int32_t>(ids.size()));
  if (inserted) ids.push_back(key);
  return it->second;
}

uint64_t pair_key(int32_t u, int32_t i) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(u)) << 32) | static_cast<uint32_t>(i);
}

}  // namespace

size_t Dataset::count(Split s) const {
  size_t n = 0;
  for (const auto& r : records) n += (r.split == s);
  return n;
}

std::vector<std::vector<int32_t>> Dataset::items_by_user(Split s) const {
  std::vector<std::vector<int32_t>> out(num_users);
  for (const auto& r : records)
    if (r.split == s) out[r.user].push_back(r.item);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

void Dataset::validate() const {
  std::set<std::pair<uint64_t, uint8_t>> seen;
  for (const auto& r : records) {
    if (r.user < 0 || r.user >= num_users)
      throw ContractError("record user index " + std::to_string(r.user) +
                          " outside vocabulary of size " + std::to_string(num_users));
    if (r.item < 0 || r.item >= num_items)
      throw ContractError("record item index " + std::to_string(r.item) +
                          " outside vocabulary of size " + std::to_string(num_items));
    if (!seen.emplace(pair_key(r.user, r.item), static_cast<uint8_t>(r.split)).second)
      throw ContractError("duplicate (user,item) pair within a split");
  }
}

Dataset load_interactions(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path);

  Dataset ds;
  std::string line;
  size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++line_no;
  line = strip_cr(line);
  const auto header = split_tabs(line);
  bool has_split = false;
  if (header.size() == 3 && header[0] == "user" && header[1] == "item" && header[2] == "split")
    has_split = true;
  else if (header.size() == 2 && header[0] == "user" && header[1] == "item")
    has_split = false;
  else
    throw ParseError(path + ":1: expected header 'user\\titem' or 'user\\titem\\tsplit'");

  std::set<std::pair<uint64_t, uint8_t>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    // extra columns (ratings, timestamps) are ignored
    if (cols.size() < (has_split ? 3u : 2u) || cols[0].empty() || cols[1].empty())
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed line");
    InteractionRecord rec;
    rec.user = intern(cols[0], ds.user_index, ds.user_ids);
    rec.item = intern(cols[1], ds.item_index, ds.item_ids);
    if (has_split) {
      if (cols[2] == "0")
        rec.split = Split::train;
      else if (cols[2] == "1")
        rec.split = Split::valid;
      else if (cols[2] == "2")
        rec.split = Split::test;
      else
        throw FormatError(path + ":" + std::to_string(line_no) + ": split label '" + cols[2] +
                          "' not in {0,1,2}");
    }
    const auto key = std::make_pair(pair_key(rec.user, rec.item), static_cast<uint8_t>(rec.split));
    if (!seen.insert(key).second) {
      if (opts.dedup) continue;
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": duplicate (user,item) pair within a split");
    }
    ds.records.push_back(rec);
  }
  ds.num_users = static_cast<int32_t>(ds.user_ids.size());
  ds.num_items = static_cast<int32_t>(ds.item_ids.size());
  if (opts.expect_users >= 0 && ds.num_users > opts.expect_users)
    throw ContractError(path + ": found " + std::to_string(ds.num_users) +
                        " users, expected at most " + std::to_string(opts.expect_users));
  if (opts.expect_items >= 0 && ds.num_items > opts.expect_items)
    throw ContractError(path + ": found " + std::to_string(ds.num_items) +
                        " items, expected at most " + std::to_string(opts.expect_items));
  return ds;
}

void store_interactions(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << "user\titem\tsplit\n";
  for (const auto& r : ds.records)
    out << ds.user_ids[r.user] << '\t' << ds.item_ids[r.item] << '\t'
        << static_cast<int>(r.split) << '\n';
  if (!out) throw FormatError("write failed: " + path);
}

Dataset split_random(const Dataset& ds, std::array<double, 3> ratios, uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ContractError("split_random: ratios must sum to 1");

  std::vector<std::vector<size_t>> rec_of_user(ds.num_users);
  for (size_t i = 0; i < ds.records.size(); ++i) rec_of_user[ds.records[i].user].push_back(i);

  std::string offenders;
  int offender_count = 0;
  for (int32_t u = 0; u < ds.num_users; ++u) {
    if (rec_of_user[u].size() < 5) {
      if (offender_count < 20) offenders += (offender_count ? ", " : "") + ds.user_ids[u];
      ++offender_count;
    }
  }
  if (offender_count > 0)
    throw ContractError("split_random: " + std::to_string(offender_count) +
                        " user(s) with fewer than 5 interactions: " + offenders +
                        (offender_count > 20 ? ", ..." : ""));

  Dataset out = ds;
  Rng rng(seed);
  for (int32_t u = 0; u < ds.num_users; ++u) {
    auto& recs = rec_of_user[u];
    const size_t n = recs.size();
    // Fisher-Yates on this user's record list
    for (size_t i = n - 1; i > 0; --i)
      std::swap(recs[i], recs[rng.uniform_index(i + 1)]);
    const size_t n_test = std::max<size_t>(1, static_cast<size_t>(ratios[2] * n));
    const size_t n_valid = std::max<size_t>(1, static_cast<size_t>(ratios[1] * n));
    for (size_t i = 0; i < n; ++i) {
      Split s = Split::train;
      if (i < n_test)
        s = Split::test;
      else if (i < n_test + n_valid)
        s = Split::valid;
      out.records[recs[i]].split = s;
    }
  }
  return out;
}

Dataset split_cold_start(const Dataset& ds, double holdout_fraction, uint64_t seed) {
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
    throw ContractError("split_cold_start: holdout fraction must be in (0,1)");
  const auto n_hold = static_cast<size_t>(
      std::llround(holdout_fraction * static_cast<double>(ds.num_items)));
  if (n_hold < 2)
    throw ContractError("split_cold_start: holdout selects fewer than 2 items");

  std::vector<int32_t> items(ds.num_items);
  std::iota(items.begin(), items.end(), 0);
  Rng rng(seed);
  for (size_t i = items.size() - 1; i > 0; --i)
    std::swap(items[i], items[rng.uniform_index(i + 1)]);

  // held-out set split into two halves: valid gets floor, test the remainder
  const size_t n_valid_items = n_hold / 2;
  std::vector<uint8_t> label(ds.num_items, 0);  // 0 train, 1 valid, 2 test
  for (size_t i = 0; i < n_hold; ++i) label[items[i]] = i < n_valid_items ? 1 : 2;

  Dataset out = ds;
  for (auto& r : out.records) r.split = static_cast<Split>(label[r.item]);
  return out;
}

Dataset subsample_users(const Dataset& ds, int32_t keep_users, uint64_t seed) {
  if (keep_users <= 0 || keep_users > ds.num_users)
    throw ContractError("subsample_users: bad target size");
  std::vector<int32_t> users(ds.num_users);
  std::iota(users.begin(), users.end(), 0);
  Rng rng(seed);
  for (size_t i = users.size() - 1; i > 0; --i)
    std::swap(users[i], users[rng.uniform_index(i + 1)]);
  users.resize(keep_users);
  std::sort(users.begin(), users.end());

  std::vector<int32_t> user_map(ds.num_users, -1);
  Dataset out;
  for (const int32_t u : users) {
    user_map[u] = static_cast<int32_t>(out.user_ids.size());
    out.user_ids.push_back(ds.user_ids[u]);
    out.user_index.emplace(ds.user_ids[u], user_map[u]);
  }
  std::vector<int32_t> item_map(ds.num_items, -1);
  for (const auto& r : ds.records) {
    if (user_map[r.user] < 0) continue;
    if (item_map[r.item] < 0) {
      item_map[r.item] = static_cast<int32_t>(out.item_ids.size());
      out.item_ids.push_back(ds.item_ids[r.item]);
      out.item_index.emplace(ds.item_ids[r.item], item_map[r.item]);
    }
    out.records.push_back({user_map[r.user], item_map[r.item], r.split});
  }
  out.num_users = static_cast<int32_t>(out.user_ids.size());
  out.num_items = static_cast<int32_t>(out.item_ids.size());
  return out;
}

}  // namespace lirdrec
