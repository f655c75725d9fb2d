#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "affekt/matrix.hpp"

namespace affekt {

/// Binary head class order: index 0 is Negative, index 1 is Positive.
enum class BinaryLabel { Negative = 0, Positive = 1 };

std::string_view to_string(BinaryLabel label);

struct ClassLabel {
  std::optional<BinaryLabel> binary;  ///< absent for neutral windows
  int categorical = 0;

  bool operator==(const ClassLabel&) const = default;
};

/// Fixed-length channels x samples slice of a recording with its label.
struct LabeledWindow {
  Matrix data;
  ClassLabel label;
  std::string subject_id;
  std::string window_id;
};

}  // namespace affekt
