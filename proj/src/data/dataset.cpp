#include "dcnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dcnn/io.hpp"
#include "dcnn/rng.hpp"

namespace dcnn {

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

Split split_from(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "unassigned" || s.empty()) return Split::Unassigned;
  throw ManifestError("unknown split token: '" + s + "'");
}

std::string eye_name(EyeSide e) {
  switch (e) {
    case EyeSide::Left: return "left";
    case EyeSide::Right: return "right";
    case EyeSide::Unknown: return "unknown";
  }
  return "unknown";
}

EyeSide eye_from(const std::string& s) {
  if (s == "left") return EyeSide::Left;
  if (s == "right") return EyeSide::Right;
  if (s == "unknown" || s.empty()) return EyeSide::Unknown;
  throw ManifestError("unknown eye token: '" + s + "'");
}

const std::vector<std::string>& odir_class_names() {
  static const std::vector<std::string> names = {"N", "D", "G", "C", "A", "H", "M", "O"};
  return names;
}

std::vector<std::int64_t> Dataset::class_counts() const {
  std::vector<std::int64_t> counts(class_names.size(), 0);
  for (const auto& s : samples) counts.at(static_cast<std::size_t>(s.label))++;
  return counts;
}

std::vector<int> Dataset::split_indices(Split s) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == s) idx.push_back(static_cast<int>(i));
  return idx;
}

std::int64_t Dataset::split_size(Split s) const {
  std::int64_t n = 0;
  for (const auto& smp : samples)
    if (smp.split == s) ++n;
  return n;
}

Dataset load_manifest(const std::string& csv_path) {
  std::string text;
  try {
    text = io::read_text_file(csv_path);
  } catch (const io::IoError& e) {
    throw ManifestError(e.what());
  }

  Dataset ds;
  ds.class_names = odir_class_names();

  std::size_t pos = 0;
  int line_no = 0;
  bool has_split = false;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (line_no == 1) {
      auto cols = io::split_line(line);
      if (cols.size() == 3 && cols[0] == "image_path" && cols[1] == "eye" && cols[2] == "label") {
        has_split = false;
      } else if (cols.size() == 4 && cols[0] == "image_path" && cols[1] == "eye" &&
                 cols[2] == "label" && cols[3] == "split") {
        has_split = true;
      } else {
        throw ManifestError("manifest header must be image_path,eye,label[,split], got: " + line);
      }
      continue;
    }
    if (line.empty() || line == "\r") continue;
    auto cols = io::split_line(line);
    const std::size_t want = has_split ? 4 : 3;
    if (cols.size() != want)
      throw ManifestError("line " + std::to_string(line_no) + ": expected " + std::to_string(want) +
                          " columns, got " + std::to_string(cols.size()) +
                          " (paths containing commas are not supported)");
    Sample s;
    s.image_path = cols[0];
    if (s.image_path.empty())
      throw ManifestError("line " + std::to_string(line_no) + ": empty image path");
    try {
      s.eye = eye_from(cols[1]);
      const auto& names = odir_class_names();
      auto it = std::find(names.begin(), names.end(), cols[2]);
      if (it == names.end()) throw ManifestError("unknown class token: '" + cols[2] + "'");
      s.label = static_cast<int>(it - names.begin());
      if (has_split) s.split = split_from(cols[3]);
    } catch (const ManifestError& e) {
      throw ManifestError("line " + std::to_string(line_no) + ": " + e.what());
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_manifest(const Dataset& ds, const std::string& csv_path) {
  std::string out = "image_path,eye,label,split\n";
  for (const auto& s : ds.samples) {
    out += s.image_path;
    out += ',';
    out += eye_name(s.eye);
    out += ',';
    out += ds.class_names.at(static_cast<std::size_t>(s.label));
    out += ',';
    out += split_name(s.split);
    out += '\n';
  }
  io::write_text_file(csv_path, out);
}

void split_dataset(Dataset& ds, SplitRatios ratios, std::uint64_t seed, bool stratify) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ManifestError("split ratios must sum to 1, got " + io::fmt_g(sum));
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    throw ManifestError("split ratios must be nonnegative");

  const double r[3] = {ratios.train, ratios.val, ratios.test};
  int active_splits = 0;
  for (double v : r)
    if (v > 0) ++active_splits;

  std::vector<std::vector<int>> groups;
  if (stratify) {
    groups.resize(ds.class_names.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
      groups[static_cast<std::size_t>(ds.samples[i].label)].push_back(static_cast<int>(i));
  } else {
    groups.emplace_back();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) groups[0].push_back(static_cast<int>(i));
  }

  Rng64 rng(splitmix64(seed));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& idx = groups[g];
    if (idx.empty()) continue;
    const auto n = static_cast<std::int64_t>(idx.size());
    if (stratify && n < active_splits)
      throw ManifestError("class " + ds.class_names[g] + " has " + std::to_string(n) +
                          " samples, fewer than the " + std::to_string(active_splits) +
                          " requested splits");

    std::int64_t counts[3];
    double frac[3];
    std::int64_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double want = static_cast<double>(n) * r[s];
      counts[s] = static_cast<std::int64_t>(std::floor(want));
      frac[s] = want - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&frac](int a, int b) { return frac[a] > frac[b]; });
    for (std::int64_t lft = n - assigned, k = 0; lft > 0; --lft, ++k) counts[order[k % 3]]++;

    rng.shuffle(idx.begin(), idx.end());
    std::int64_t at = 0;
    const Split splits[3] = {Split::Train, Split::Val, Split::Test};
    for (int s = 0; s < 3; ++s)
      for (std::int64_t k = 0; k < counts[s]; ++k) ds.samples[idx[at++]].split = splits[s];
  }
}

Dataset binary_task_filter(const Dataset& ds, const std::vector<std::string>& positive,
                           const std::vector<std::string>& negative) {
  if (positive.empty() || negative.empty())
    throw ManifestError("binary task needs nonempty positive and negative class sets");
  std::set<int> pos, neg;
  auto resolve = [&ds](const std::string& token) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), token);
    if (it == ds.class_names.end()) throw ManifestError("unknown class token: '" + token + "'");
    return static_cast<int>(it - ds.class_names.begin());
  };
  for (const auto& t : positive) pos.insert(resolve(t));
  for (const auto& t : negative) neg.insert(resolve(t));
  for (int p : pos)
    if (neg.count(p))
      throw ManifestError("class " + ds.class_names[static_cast<std::size_t>(p)] +
                          " appears in both the positive and negative sets");

  Dataset out;
  out.class_names = {"0", "1"};
  for (const auto& s : ds.samples) {
    if (pos.count(s.label)) {
      out.samples.push_back(s);
      out.samples.back().label = 1;
    } else if (neg.count(s.label)) {
      out.samples.push_back(s);
      out.samples.back().label = 0;
    }
  }
  return out;
}

}  // namespace dcnn
