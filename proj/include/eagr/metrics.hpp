// Copyright 2026 The EAGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eagr/data.hpp"

namespace eagr {

/// counts[gt][pred]. Accumulation is additive, so shards merge by summation.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {}

  std::size_t classes() const { return n_; }
  std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts_[gt * n_ + pred]; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * n_ + pred]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }
  std::uint64_t row_sum(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += at(c, j);
    return s;
  }
  std::uint64_t col_sum(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, c);
    return s;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    if (o.n_ != n_) throw ContractError("confusion matrices of different class counts");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

inline void accumulate(ConfusionMatrix& cm, const LabelMap& pred, const LabelMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw ContractError("accumulate: prediction " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                        " vs ground truth " + std::to_string(gt.height) + "x" + std::to_string(gt.width));
  pred.validate(cm.classes());
  gt.validate(cm.classes());
  for (std::size_t i = 0; i < gt.size(); ++i) ++cm.at(gt.classes[i], pred.classes[i]);
}

inline double f1_from(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t d = 2 * tp + fp + fn;
  return d == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(d);
}

inline double iou_from(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t d = tp + fp + fn;
  return d == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(d);
}

struct Scores {
  double pixel_acc = 0.0;
  std::vector<double> per_class_f1;
  std::vector<double> per_class_iou;
  std::vector<bool> present;  ///< class occurs in gt or prediction
  double miou = 0.0;
  double mean_f1_excl_bg = 0.0;
};

/// Class 0 is background. Classes absent from both gt and prediction are
/// left out of every mean.
inline Scores scores(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ContractError("scores: empty confusion matrix");
  const std::size_t n = cm.classes();
  Scores s;
  s.per_class_f1.assign(n, 0.0);
  s.per_class_iou.assign(n, 0.0);
  s.present.assign(n, false);
  std::uint64_t trace = 0;
  double iou_sum = 0.0, f1_sum = 0.0;
  std::size_t iou_n = 0, f1_n = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t tp = cm.at(c, c), fp = cm.col_sum(c) - tp, fn = cm.row_sum(c) - tp;
    trace += tp;
    s.present[c] = tp + fp + fn > 0;
    if (!s.present[c]) continue;
    s.per_class_f1[c] = f1_from(tp, fp, fn);
    s.per_class_iou[c] = iou_from(tp, fp, fn);
    iou_sum += s.per_class_iou[c];
    ++iou_n;
    if (c != 0) {
      f1_sum += s.per_class_f1[c];
      ++f1_n;
    }
  }
  s.pixel_acc = static_cast<double>(trace) / static_cast<double>(total);
  s.miou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
  s.mean_f1_excl_bg = f1_n ? f1_sum / static_cast<double>(f1_n) : 0.0;
  return s;
}

struct MergedCategory {
  std::string name;
  std::vector<std::size_t> classes;
};

/// Named groups of class ids scored as single categories. Classes outside
/// every group fall into one "other" bucket that is not scored.
struct MergeSpec {
  std::vector<MergedCategory> categories;

  /// Category index per class; categories.size() marks the "other" bucket.
  std::vector<std::size_t> category_of(std::size_t num_classes) const {
    std::vector<std::size_t> map(num_classes, categories.size());
    for (std::size_t k = 0; k < categories.size(); ++k) {
      if (categories[k].classes.empty()) throw ContractError("merge category \"" + categories[k].name + "\" is empty");
      for (auto c : categories[k].classes) {
        if (c >= num_classes) throw ContractError("merge category \"" + categories[k].name + "\" names invalid class");
        if (map[c] != categories.size() && map[c] != k)
          throw ContractError("class " + std::to_string(c) + " appears in overlapping merge categories");
        map[c] = k;
      }
    }
    return map;
  }
};

/// eyes, brows, nose and mouth of the synthetic face classes.
inline MergeSpec face_part_merge() {
  return {{{"eyes", {kLeftEye, kRightEye}}, {"brows", {kLeftBrow, kRightBrow}}, {"nose", {kNose}}, {"mouth", {kMouth}}}};
}

inline ConfusionMatrix merge_confusion(const ConfusionMatrix& cm, const MergeSpec& spec) {
  auto map = spec.category_of(cm.classes());
  ConfusionMatrix merged(spec.categories.size() + 1);
  for (std::size_t i = 0; i < cm.classes(); ++i)
    for (std::size_t j = 0; j < cm.classes(); ++j) merged.at(map[i], map[j]) += cm.at(i, j);
  return merged;
}

struct MergedF1 {
  double micro = 0.0;  ///< 2ΣTP / (2ΣTP + ΣFP + ΣFN) over merged categories
  double macro = 0.0;  ///< mean of per-category F1 over categories present
  std::vector<double> per_category;
};

inline MergedF1 merged_f1(const ConfusionMatrix& cm, const MergeSpec& spec) {
  ConfusionMatrix m = merge_confusion(cm, spec);
  MergedF1 r;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  std::size_t macro_n = 0;
  for (std::size_t k = 0; k < spec.categories.size(); ++k) {
    const std::uint64_t t = m.at(k, k), p = m.col_sum(k) - t, n = m.row_sum(k) - t;
    tp += t;
    fp += p;
    fn += n;
    r.per_category.push_back(f1_from(t, p, n));
    if (t + p + n > 0) {
      macro_sum += r.per_category.back();
      ++macro_n;
    }
  }
  r.micro = f1_from(tp, fp, fn);
  r.macro = macro_n ? macro_sum / static_cast<double>(macro_n) : 0.0;
  return r;
}

inline double merged_overall_f1(const ConfusionMatrix& cm, const MergeSpec& spec) { return merged_f1(cm, spec).micro; }

}  // namespace eagr
