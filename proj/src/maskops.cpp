#include "sfca/maskops.hpp"

#include "sfca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sfca {

BinaryMask::BinaryMask(Eigen::Index width, Eigen::Index height) {
  if (width <= 0 || height <= 0) throw Error("mask dimensions must be positive");
  bits_ = MaskArray::Constant(height, width, false);
}

BinaryMask::BinaryMask(MaskArray bits) : bits_(std::move(bits)) {
  if (bits_.rows() <= 0 || bits_.cols() <= 0) throw Error("mask dimensions must be positive");
}

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(std::string(what) + ": mask dimensions differ (" + std::to_string(a.width()) + "x" +
                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
}

// Exact at multiples of 90 degrees.
std::pair<double, double> cos_sin_degrees(double theta) {
  const double turns = theta / 90.0;
  if (turns == std::floor(turns)) {
    const auto q = ((static_cast<long long>(turns) % 4) + 4) % 4;
    constexpr double c[] = {1.0, 0.0, -1.0, 0.0};
    constexpr double s[] = {0.0, 1.0, 0.0, -1.0};
    return {c[q], s[q]};
  }
  const double rad = theta * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

struct Window {
  Eigen::Index dst_row, dst_col, src_row, src_col, rows, cols;
};

// Overlap of a frame with itself shifted by (du, dv).
Window shift_window(Eigen::Index height, Eigen::Index width, int du, int dv) {
  Window w{};
  w.rows = std::max<Eigen::Index>(0, height - std::abs(dv));
  w.cols = std::max<Eigen::Index>(0, width - std::abs(du));
  w.dst_row = std::max(0, dv);
  w.dst_col = std::max(0, du);
  w.src_row = std::max(0, -dv);
  w.src_col = std::max(0, -du);
  return w;
}

}  // namespace

BinaryMask rotate(const BinaryMask& m, double theta_degrees) {
  if (theta_degrees == 0.0) return m;
  const auto [c, s] = cos_sin_degrees(theta_degrees);
  const double cx = 0.5 * static_cast<double>(m.width() - 1);
  const double cy = 0.5 * static_cast<double>(m.height() - 1);
  BinaryMask out(m.width(), m.height());
  for (Eigen::Index r = 0; r < m.height(); ++r) {
    const double y = static_cast<double>(r) - cy;
    for (Eigen::Index col = 0; col < m.width(); ++col) {
      const double x = static_cast<double>(col) - cx;
      // Inverse mapping of the forward rotation (x, y) -> (c x - s y, s x + c y).
      const double sx = std::floor(c * x + s * y + cx + 0.5);
      const double sy = std::floor(-s * x + c * y + cy + 0.5);
      if (sx < 0 || sy < 0 || sx >= static_cast<double>(m.width()) || sy >= static_cast<double>(m.height())) continue;
      if (m(static_cast<Eigen::Index>(sy), static_cast<Eigen::Index>(sx))) out.set(r, col);
    }
  }
  return out;
}

BinaryMask shift(const BinaryMask& m, int du, int dv) {
  BinaryMask out(m.width(), m.height());
  const Window w = shift_window(m.height(), m.width(), du, dv);
  if (w.rows > 0 && w.cols > 0)
    out.bits().block(w.dst_row, w.dst_col, w.rows, w.cols) = m.bits().block(w.src_row, w.src_col, w.rows, w.cols);
  return out;
}

BinaryMask apply_transform(const BinaryMask& m, const Transform& t) {
  return shift(rotate(m, t.theta), t.du, t.dv);
}

double mask_f1(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask_f1");
  const auto denom = a.count() + b.count();
  if (denom == 0) return 1.0;
  const auto inter = static_cast<std::int64_t>((a.bits() && b.bits()).count());
  return 2.0 * static_cast<double>(inter) / static_cast<double>(denom);
}

std::vector<double> rotation_candidates(const AlignOptions& opt) {
  if (!(opt.max_rotation >= 0.0)) throw Error("align: rotation range must be >= 0");
  if (opt.max_rotation == 0.0) return {0.0};
  if (!(opt.rotation_step > 0.0)) throw Error("align: rotation step must be > 0");
  const auto k_max = static_cast<long long>(std::floor(opt.max_rotation / opt.rotation_step + 1e-9));
  std::vector<double> out;
  for (long long k = -k_max; k <= k_max; ++k) out.push_back(static_cast<double>(k) * opt.rotation_step);
  return out;
}

namespace {

struct Candidate {
  Transform t;
  std::int64_t overlap = 0;
  std::int64_t denom = 0;
};

// Strict total order: true when a ranks above b.
bool better(const Candidate& a, const Candidate& b) {
  // Empty denominators score 1 by convention, i.e. overlap/denom = 1/1 after doubling.
  const std::int64_t an = a.denom == 0 ? 1 : 2 * a.overlap;
  const std::int64_t ad = a.denom == 0 ? 1 : a.denom;
  const std::int64_t bn = b.denom == 0 ? 1 : 2 * b.overlap;
  const std::int64_t bd = b.denom == 0 ? 1 : b.denom;
  if (an * bd != bn * ad) return an * bd > bn * ad;
  const int ash = std::abs(a.t.du) + std::abs(a.t.dv);
  const int bsh = std::abs(b.t.du) + std::abs(b.t.dv);
  if (ash != bsh) return ash < bsh;
  if (std::abs(a.t.theta) != std::abs(b.t.theta)) return std::abs(a.t.theta) < std::abs(b.t.theta);
  if (a.t.du != b.t.du) return a.t.du < b.t.du;
  if (a.t.dv != b.t.dv) return a.t.dv < b.t.dv;
  return a.t.theta < b.t.theta;
}

}  // namespace

AlignResult align(const BinaryMask& y, const BinaryMask& ref, const AlignOptions& opt) {
  require_same_shape(y, ref, "align");
  if (opt.max_shift < 0) throw Error("align: shift range must be >= 0");
  const std::vector<double> thetas = rotation_candidates(opt);

  AlignResult result;
  if (y.empty() && ref.empty()) {
    result.score = 1.0;
    result.both_empty = true;
    return result;
  }

  const std::int64_t ref_count = ref.count();
  std::vector<Candidate> best_per_theta(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t ti) {
    const BinaryMask rot = rotate(y, thetas[ti]);
    std::optional<Candidate> best;
    for (int dv = -opt.max_shift; dv <= opt.max_shift; ++dv) {
      for (int du = -opt.max_shift; du <= opt.max_shift; ++du) {
        const Window w = shift_window(y.height(), y.width(), du, dv);
        Candidate c{{du, dv, thetas[ti]}, 0, ref_count};
        if (w.rows > 0 && w.cols > 0) {
          const auto src = rot.bits().block(w.src_row, w.src_col, w.rows, w.cols);
          c.overlap = static_cast<std::int64_t>((ref.bits().block(w.dst_row, w.dst_col, w.rows, w.cols) && src).count());
          c.denom += static_cast<std::int64_t>(src.count());
        }
        if (!best || better(c, *best)) best = c;
      }
    }
    best_per_theta[ti] = *best;
  });

  Candidate best = best_per_theta.front();
  for (const auto& c : best_per_theta)
    if (better(c, best)) best = c;
  result.transform = best.t;
  result.overlap = best.overlap;
  result.denominator = best.denom;
  result.score = best.denom == 0 ? 1.0 : 2.0 * static_cast<double>(best.overlap) / static_cast<double>(best.denom);
  return result;
}

// ---------------------------------------------------------------------------
// Components

Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label_components(const BinaryMask& m,
                                                                                            Connectivity conn) {
  const Eigen::Index h = m.height();
  const Eigen::Index w = m.width();
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label =
      Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(h, w);
  std::vector<std::int32_t> parent{0};
  auto find = [&](std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  auto unite = [&](std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[static_cast<std::size_t>(a)] = b;
  };

  // First pass: provisional labels from already-visited neighbours.
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      if (!m(r, c)) continue;
      std::int32_t best = 0;
      auto look = [&](Eigen::Index rr, Eigen::Index cc) {
        if (rr < 0 || cc < 0 || cc >= w) return;
        const std::int32_t l = label(rr, cc);
        if (l == 0) return;
        if (best == 0) {
          best = l;
        } else {
          unite(best, l);
        }
      };
      look(r, c - 1);
      look(r - 1, c);
      if (conn == Connectivity::kEight) {
        look(r - 1, c - 1);
        look(r - 1, c + 1);
      }
      if (best == 0) {
        best = static_cast<std::int32_t>(parent.size());
        parent.push_back(best);
      }
      label(r, c) = best;
    }
  }

  // Second pass: resolve and renumber in scan order.
  std::vector<std::int32_t> final_label(parent.size(), 0);
  std::int32_t next = 0;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      if (label(r, c) == 0) continue;
      const std::int32_t root = find(label(r, c));
      if (final_label[static_cast<std::size_t>(root)] == 0) final_label[static_cast<std::size_t>(root)] = ++next;
      label(r, c) = final_label[static_cast<std::size_t>(root)];
    }
  }
  return label;
}

std::vector<BBox> extract_bboxes(const BinaryMask& m, Connectivity conn) {
  const auto label = label_components(m, conn);
  const std::int32_t n = label.maxCoeff();
  std::vector<BBox> boxes(static_cast<std::size_t>(std::max(n, 0)));
  std::vector<bool> seen(boxes.size(), false);
  for (Eigen::Index r = 0; r < m.height(); ++r) {
    for (Eigen::Index c = 0; c < m.width(); ++c) {
      const std::int32_t l = label(r, c);
      if (l == 0) continue;
      const auto k = static_cast<std::size_t>(l - 1);
      BBox& b = boxes[k];
      if (!seen[k]) {
        b = {c, r, c, r};
        seen[k] = true;
      } else {
        b.min_col = std::min(b.min_col, c);
        b.max_col = std::max(b.max_col, c);
        b.min_row = std::min(b.min_row, r);
        b.max_row = std::max(b.max_row, r);
      }
    }
  }
  std::sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) {
    if (a.min_row != b.min_row) return a.min_row < b.min_row;
    if (a.min_col != b.min_col) return a.min_col < b.min_col;
    if (a.max_row != b.max_row) return a.max_row < b.max_row;
    return a.max_col < b.max_col;
  });
  return boxes;
}

BinaryMask refine(const BinaryMask& teacher, const BinaryMask& reference) {
  require_same_shape(teacher, reference, "refine");
  return BinaryMask(MaskArray(teacher.bits() && reference.bits()));
}

// ---------------------------------------------------------------------------
// Scoring

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "score");
  ConfusionCounts c;
  c.tp = static_cast<std::int64_t>((pred.bits() && gt.bits()).count());
  c.fp = pred.count() - c.tp;
  c.fn = gt.count() - c.tp;
  c.tn = static_cast<std::int64_t>(pred.width() * pred.height()) - c.tp - c.fp - c.fn;
  return c;
}

SegmentationMetrics metrics_from_counts(const ConfusionCounts& c) {
  SegmentationMetrics m;
  m.counts = c;
  const auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.iou = ratio(c.tp, c.tp + c.fp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  // Harmonic mean of precision and recall, written over the counts.
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

SegmentationMetrics score(const BinaryMask& pred, const BinaryMask& gt) { return metrics_from_counts(confusion(pred, gt)); }

double f1_from_precision_recall(double precision, double recall) {
  if (!(precision + recall > 0.0)) throw Error("f1: precision + recall must be positive");
  return 2.0 * precision * recall / (precision + recall);
}

CorpusMetrics score_corpus(std::span<const MaskPair> pairs, CorpusMode mode) {
  if (pairs.empty()) throw Error("score_corpus: empty corpus");
  std::vector<SegmentationMetrics> per(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) { per[i] = score(pairs[i].pred, pairs[i].gt); });

  CorpusMetrics out;
  out.mode = mode;
  out.pairs = pairs.size();
  for (const auto& m : per) out.counts += m.counts;
  if (mode == CorpusMode::kMicro) {
    const SegmentationMetrics total = metrics_from_counts(out.counts);
    out.iou = total.iou;
    out.precision = total.precision;
    out.recall = total.recall;
    out.f1 = total.f1;
    return out;
  }
  const auto macro = [&](auto member, std::size_t& skipped) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& m : per) {
      const std::optional<double>& v = m.*member;
      if (v) {
        sum += *v;
        ++n;
      } else {
        ++skipped;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  out.iou = macro(&SegmentationMetrics::iou, out.skipped_iou);
  out.precision = macro(&SegmentationMetrics::precision, out.skipped_precision);
  out.recall = macro(&SegmentationMetrics::recall, out.skipped_recall);
  out.f1 = macro(&SegmentationMetrics::f1, out.skipped_f1);
  return out;
}

}  // namespace sfca
