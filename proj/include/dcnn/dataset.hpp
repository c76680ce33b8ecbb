#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcnn {

class ManifestError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EyeSide { Left, Right, Unknown };
enum class Split { Train, Val, Test, Unassigned };

std::string split_name(Split s);
Split split_from(const std::string& s);
std::string eye_name(EyeSide e);
EyeSide eye_from(const std::string& s);

/// The eight fundus classes, in sheet order: Normal, Diabetes, Glaucoma,
/// Cataract, Age-related macular degeneration, Hypertension, Myopia, Other.
const std::vector<std::string>& odir_class_names();

struct Sample {
  std::string image_path;
  EyeSide eye = EyeSide::Unknown;
  int label = 0;
  Split split = Split::Unassigned;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;

  std::size_t size() const { return samples.size(); }
  std::vector<std::int64_t> class_counts() const;
  std::vector<int> split_indices(Split s) const;
  std::int64_t split_size(Split s) const;
};

/// CSV manifest with header image_path,eye,label[,split]. Strict: no
/// quoting, so paths containing commas are rejected (as a column-count
/// error naming the line).
Dataset load_manifest(const std::string& csv_path);
void save_manifest(const Dataset& ds, const std::string& csv_path);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

/// Deterministic split assignment. Per group (the whole set, or each class
/// when stratified), sizes are floor(n*ratio) with the remainder handed out
/// in largest-fractional-remainder order (ties broken train < val < test),
/// then a seeded shuffle fills the splits in that order.
void split_dataset(Dataset& ds, SplitRatios ratios, std::uint64_t seed, bool stratify);

/// Keep only the listed classes and relabel: positives -> 1, negatives -> 0.
Dataset binary_task_filter(const Dataset& ds, const std::vector<std::string>& positive,
                           const std::vector<std::string>& negative);

}  // namespace dcnn
