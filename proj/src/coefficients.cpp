#include "awm/coefficients.hpp"

#include <algorithm>
#include <cmath>

#include "awm/errors.hpp"

namespace awm {
namespace {

bool index_less(const SparseCoefficientVector::Entry& a,
                const SparseCoefficientVector::Entry& b) {
  return a.first < b.first;
}

}  // namespace

bool magnitude_before(const SparseCoefficientVector::Entry& a,
                      const SparseCoefficientVector::Entry& b) {
  const double ma = std::abs(a.second), mb = std::abs(b.second);
  if (ma != mb) return ma > mb;
  return a.first < b.first;
}

SparseCoefficientVector::SparseCoefficientVector(BasisKind basis,
                                                 std::vector<Entry> entries)
    : basis_(basis) {
  std::stable_sort(entries.begin(), entries.end(), index_less);
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    require_valid(e.first);
    if (!entries_.empty() && entries_.back().first == e.first)
      entries_.back().second += e.second;
    else
      entries_.push_back(e);
  }
  std::erase_if(entries_, [](const Entry& e) { return e.second == 0.0; });
}

SparseCoefficientVector::SparseCoefficientVector(BasisKind basis,
                                                 const CoefficientMap& map)
    : SparseCoefficientVector(basis, std::vector<Entry>(map.begin(), map.end())) {}

double SparseCoefficientVector::get(WaveletIndex index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(),
                             Entry{index, 0.0}, index_less);
  return it != entries_.end() && it->first == index ? it->second : 0.0;
}

bool SparseCoefficientVector::contains(WaveletIndex index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(),
                             Entry{index, 0.0}, index_less);
  return it != entries_.end() && it->first == index;
}

void SparseCoefficientVector::set(WaveletIndex index, double value) {
  require_valid(index);
  auto it = std::lower_bound(entries_.begin(), entries_.end(),
                             Entry{index, 0.0}, index_less);
  const bool present = it != entries_.end() && it->first == index;
  if (value == 0.0) {
    if (present) entries_.erase(it);
  } else if (present) {
    it->second = value;
  } else {
    entries_.insert(it, {index, value});
  }
}

double SparseCoefficientVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.second * e.second;
  return std::sqrt(s);
}

int SparseCoefficientVector::max_level() const {
  int m = -2;
  for (const auto& e : entries_) m = std::max(m, e.first.level);
  return m;
}

SparseCoefficientVector& SparseCoefficientVector::axpy(
    double alpha, const SparseCoefficientVector& other) {
  if (!other.empty() && !empty() && other.basis_ != basis_)
    throw DomainError("cannot combine coefficient vectors of different bases");
  if (empty()) basis_ = other.basis_;
  std::vector<Entry> merged;
  merged.reserve(entries_.size() + other.entries_.size());
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() || b != other.entries_.end()) {
    if (b == other.entries_.end() || (a != entries_.end() && a->first < b->first)) {
      merged.push_back(*a++);
    } else if (a == entries_.end() || b->first < a->first) {
      merged.push_back({b->first, alpha * b->second});
      ++b;
    } else {
      const double v = a->second + alpha * b->second;
      if (v != 0.0) merged.push_back({a->first, v});
      ++a;
      ++b;
    }
  }
  std::erase_if(merged, [](const Entry& e) { return e.second == 0.0; });
  entries_ = std::move(merged);
  return *this;
}

SparseCoefficientVector SparseCoefficientVector::scaled(double alpha) const {
  SparseCoefficientVector out(basis_);
  if (alpha == 0.0) return out;
  out.entries_ = entries_;
  for (auto& e : out.entries_) e.second *= alpha;
  std::erase_if(out.entries_, [](const Entry& e) { return e.second == 0.0; });
  return out;
}

std::vector<SparseCoefficientVector::Entry>
SparseCoefficientVector::by_magnitude() const {
  std::vector<Entry> sorted = entries_;
  std::sort(sorted.begin(), sorted.end(), magnitude_before);
  return sorted;
}

}  // namespace awm
