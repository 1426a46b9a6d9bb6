#pragma once

#include "sfca/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sfca {

/// Binary raster, row-major, height x width; true marks the shelter class.
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(Eigen::Index width, Eigen::Index height);
  explicit BinaryMask(MaskArray bits);

  [[nodiscard]] Eigen::Index width() const { return bits_.cols(); }
  [[nodiscard]] Eigen::Index height() const { return bits_.rows(); }
  [[nodiscard]] std::int64_t count() const { return static_cast<std::int64_t>(bits_.count()); }
  [[nodiscard]] bool empty() const { return count() == 0; }

  [[nodiscard]] bool operator()(Eigen::Index row, Eigen::Index col) const { return bits_(row, col); }
  void set(Eigen::Index row, Eigen::Index col, bool v = true) { bits_(row, col) = v; }

  [[nodiscard]] const MaskArray& bits() const { return bits_; }
  [[nodiscard]] MaskArray& bits() { return bits_; }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.width() == b.width() && a.height() == b.height() && (a.bits_ == b.bits_).all();
  }

 private:
  MaskArray bits_;
};

/// Rigid pixel transform: rotation by `theta` degrees about the mask
/// center, then an integer shift of `du` columns and `dv` rows. In
/// (column, row) offsets a positive angle maps (x, y) to
/// (x cos - y sin, x sin + y cos).
struct Transform {
  int du = 0;
  int dv = 0;
  double theta = 0.0;

  friend bool operator==(const Transform&, const Transform&) = default;
};

struct BBox {
  Eigen::Index min_col = 0;
  Eigen::Index min_row = 0;
  Eigen::Index max_col = 0;
  Eigen::Index max_row = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  [[nodiscard]] std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Metrics with a zero denominator are left empty.
struct SegmentationMetrics {
  ConfusionCounts counts;
  std::optional<double> iou;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

/// Nearest-neighbour rotation, zero padding, then the shift; output keeps
/// the input dimensions.
[[nodiscard]] BinaryMask apply_transform(const BinaryMask& m, const Transform& t);

/// Rotation only (the first stage of apply_transform).
[[nodiscard]] BinaryMask rotate(const BinaryMask& m, double theta_degrees);

/// Integer shift with zero padding.
[[nodiscard]] BinaryMask shift(const BinaryMask& m, int du, int dv);

/// Dice overlap 2|a & b| / (|a| + |b|); 1 when both are empty.
[[nodiscard]] double mask_f1(const BinaryMask& a, const BinaryMask& b);

struct AlignOptions {
  int max_shift = 8;          // R_t, pixels
  double max_rotation = 5.0;  // R_r, degrees
  double rotation_step = 1.0; // degrees
};

struct AlignResult {
  Transform transform;
  double score = 0.0;
  std::int64_t overlap = 0;      // |ref & T(y)|
  std::int64_t denominator = 0;  // |ref| + |T(y)|
  bool both_empty = false;
};

/// Rotation angles searched: integer multiples of the step within the range.
[[nodiscard]] std::vector<double> rotation_candidates(const AlignOptions& opt);

/// Exhaustive search over shifts and rotations maximizing mask_f1(ref, T(y)).
/// Ties prefer smaller |du|+|dv|, then smaller |theta|, then (du, dv, theta).
[[nodiscard]] AlignResult align(const BinaryMask& y, const BinaryMask& ref, const AlignOptions& opt = {});

enum class Connectivity { kFour = 4, kEight = 8 };

/// One box per connected component, sorted by (min_row, min_col).
[[nodiscard]] std::vector<BBox> extract_bboxes(const BinaryMask& m, Connectivity conn = Connectivity::kEight);

/// Component label per pixel (0 = background, labels from 1 in scan order).
[[nodiscard]] Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label_components(
    const BinaryMask& m, Connectivity conn = Connectivity::kEight);

/// Pixelwise intersection of teacher and reference masks.
[[nodiscard]] BinaryMask refine(const BinaryMask& teacher, const BinaryMask& reference);

[[nodiscard]] ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);
[[nodiscard]] SegmentationMetrics metrics_from_counts(const ConfusionCounts& c);
[[nodiscard]] SegmentationMetrics score(const BinaryMask& pred, const BinaryMask& gt);

/// Harmonic mean of precision and recall (any consistent unit).
[[nodiscard]] double f1_from_precision_recall(double precision, double recall);

enum class CorpusMode { kMicro, kMacro };

struct CorpusMetrics {
  CorpusMode mode = CorpusMode::kMicro;
  std::size_t pairs = 0;
  ConfusionCounts counts;  // summed over all pairs
  std::optional<double> iou;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  // Macro mode: pairs skipped because the metric was undefined for them.
  std::size_t skipped_iou = 0;
  std::size_t skipped_precision = 0;
  std::size_t skipped_recall = 0;
  std::size_t skipped_f1 = 0;
};

struct MaskPair {
  BinaryMask pred;
  BinaryMask gt;
};

[[nodiscard]] CorpusMetrics score_corpus(std::span<const MaskPair> pairs, CorpusMode mode);

}  // namespace sfca
