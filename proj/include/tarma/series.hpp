#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "tarma/errors.hpp"

namespace tarma {

/// Ordered real-valued observations X_1..X_n.
struct TimeSeries {
  std::vector<double> values;

  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> v) : values(std::move(v)) {}

  int n() const { return static_cast<int>(values.size()); }

  void validate() const {
    if (values.empty()) throw ValidationError("time series must contain at least one value");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]))
        throw ValidationError("non-finite value in time series at position " + std::to_string(i + 1));
    }
  }
};

}  // namespace tarma
