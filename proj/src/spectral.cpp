#include "dbm/spectral.hpp"

namespace dbm {

Eigen::Index quantile_index(double x, Eigen::Index size) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("quantile_index: x must lie in [0, 1]");
  if (size < 1) throw InvalidArgument("quantile_index: size must be >= 1");
  const auto rank = static_cast<Eigen::Index>(std::llround(x * static_cast<double>(size)));
  return std::clamp<Eigen::Index>(rank, 1, size);
}

double Histogram::density(std::size_t b) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts.at(b)) / static_cast<double>(total) / width();
}

long bin_of(double x, std::size_t bins, double lo, double hi) {
  if (!(x >= lo && x < hi)) return -1;
  const auto b = static_cast<long>((x - lo) / (hi - lo) * static_cast<double>(bins));
  return std::min(b, static_cast<long>(bins) - 1);
}

Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram: need bins >= 1 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  h.total = samples.size();
  for (double x : samples) {
    const long b = bin_of(x, bins, lo, hi);
    if (b >= 0) ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace dbm
