#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace feec {

/// Uniform bucket grid over axis-aligned boxes; each bucket keeps ascending item ids.
class BoxGrid {
 public:
  BoxGrid() = default;

  /// boxes[i] = {lo0, lo1, lo2, hi0, hi1, hi2}; pad is added on every side.
  void build(int n, const std::vector<std::array<double, 6>>& boxes, double pad) {
    n_ = n;
    pad_ = pad;
    count_ = int(boxes.size());
    if (boxes.empty()) return;
    for (int i = 0; i < 3; ++i) {
      lo_[i] = 0.0;
      hi_[i] = 0.0;
      res_[i] = 1;
    }
    for (int i = 0; i < n; ++i) {
      lo_[i] = boxes[0][i];
      hi_[i] = boxes[0][3 + i];
      for (const auto& b : boxes) {
        lo_[i] = std::min(lo_[i], b[i]);
        hi_[i] = std::max(hi_[i], b[3 + i]);
      }
      lo_[i] -= 2 * pad;
      hi_[i] += 2 * pad;
    }
    const int per_axis = std::max(1, int(std::ceil(std::pow(double(boxes.size()), 1.0 / n))));
    for (int i = 0; i < n; ++i) res_[i] = per_axis;
    buckets_.assign(res_[0] * res_[1] * res_[2], {});
    for (int id = 0; id < count_; ++id) {
      int a[3], b[3];
      for (int i = 0; i < 3; ++i) {
        if (i < n) {
          a[i] = cell(i, boxes[id][i] - pad);
          b[i] = cell(i, boxes[id][3 + i] + pad);
        } else {
          a[i] = b[i] = 0;
        }
      }
      for (int x = a[0]; x <= b[0]; ++x)
        for (int y = a[1]; y <= b[1]; ++y)
          for (int z = a[2]; z <= b[2]; ++z) buckets_[x + res_[0] * (y + res_[1] * z)].push_back(id);
    }
  }

  double pad() const { return pad_; }
  bool empty() const { return count_ == 0; }

  /// Sorted ids whose padded boxes may overlap [lo, hi].
  void candidates_box(const double* lo, const double* hi, std::vector<int>& out) const {
    out.clear();
    if (count_ == 0) return;
    int a[3] = {0, 0, 0}, b[3] = {0, 0, 0};
    for (int i = 0; i < n_; ++i) {
      if (hi[i] < lo_[i] || lo[i] > hi_[i]) return;
      a[i] = cell(i, lo[i]);
      b[i] = cell(i, hi[i]);
    }
    for (int x = a[0]; x <= b[0]; ++x)
      for (int y = a[1]; y <= b[1]; ++y)
        for (int z = a[2]; z <= b[2]; ++z) {
          const auto& bucket = buckets_[x + res_[0] * (y + res_[1] * z)];
          out.insert(out.end(), bucket.begin(), bucket.end());
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

  /// Candidate ids for a point, or nullptr when the point lies outside the grid.
  const std::vector<int>* candidates(const double* x) const {
    if (count_ == 0) return nullptr;
    int k[3] = {0, 0, 0};
    for (int i = 0; i < n_; ++i) {
      if (x[i] < lo_[i] || x[i] > hi_[i]) return nullptr;
      k[i] = cell(i, x[i]);
    }
    return &buckets_[k[0] + res_[0] * (k[1] + res_[1] * k[2])];
  }

 private:
  int cell(int i, double v) const {
    int c = int(std::floor((v - lo_[i]) / (hi_[i] - lo_[i]) * res_[i]));
    return std::clamp(c, 0, res_[i] - 1);
  }

  int n_ = 0, count_ = 0;
  double pad_ = 0.0;
  double lo_[3] = {0, 0, 0}, hi_[3] = {0, 0, 0};
  int res_[3] = {1, 1, 1};
  std::vector<std::vector<int>> buckets_;
};

}  // namespace feec
