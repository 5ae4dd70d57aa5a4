#pragma once

#include <initializer_list>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "awm/basis.hpp"

namespace awm {

using CoefficientMap =
    std::unordered_map<WaveletIndex, double, WaveletIndexHash>;

/// Finite mapping from wavelet indices to coefficients, stored sorted by
/// index. Exact zeros are never stored.
class SparseCoefficientVector {
 public:
  using Entry = std::pair<WaveletIndex, double>;

  SparseCoefficientVector() = default;
  explicit SparseCoefficientVector(BasisKind basis) : basis_(basis) {}
  /// Duplicate indices are summed.
  SparseCoefficientVector(BasisKind basis, std::vector<Entry> entries);
  SparseCoefficientVector(BasisKind basis, const CoefficientMap& map);
  SparseCoefficientVector(BasisKind basis, std::initializer_list<Entry> entries)
      : SparseCoefficientVector(basis, std::vector<Entry>(entries)) {}

  BasisKind basis() const { return basis_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const Entry> entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  double get(WaveletIndex index) const;
  bool contains(WaveletIndex index) const;
  void set(WaveletIndex index, double value);

  double norm() const;
  int max_level() const;

  /// this += alpha * other.
  SparseCoefficientVector& axpy(double alpha,
                                const SparseCoefficientVector& other);
  SparseCoefficientVector scaled(double alpha) const;

  /// Entries ordered by decreasing magnitude; equal magnitudes by index.
  std::vector<Entry> by_magnitude() const;

  friend SparseCoefficientVector operator+(SparseCoefficientVector a,
                                           const SparseCoefficientVector& b) {
    return std::move(a.axpy(1.0, b));
  }
  friend SparseCoefficientVector operator-(SparseCoefficientVector a,
                                           const SparseCoefficientVector& b) {
    return std::move(a.axpy(-1.0, b));
  }
  bool operator==(const SparseCoefficientVector&) const = default;

 private:
  BasisKind basis_{};
  std::vector<Entry> entries_;
};

/// Strict weak order used for every magnitude sort: larger |value| first,
/// then smaller index.
bool magnitude_before(const SparseCoefficientVector::Entry& a,
                      const SparseCoefficientVector::Entry& b);

}  // namespace awm
