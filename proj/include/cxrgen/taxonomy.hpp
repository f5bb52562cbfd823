#pragma once

#include <array>
#include <string_view>

namespace cxrgen {

inline constexpr int kNumAbnormalityClasses = 20;
inline constexpr int kBackgroundClassId = 0;
inline constexpr int kDeviceClassId = 3;

// One row of the CXR abnormality taxonomy. `label` is the lowercase,
// alias-shortened form used in prompts; `display_label` keeps the original
// casing and aliases for human-facing output.
struct AbnormalityClass {
  int class_id;
  std::string_view label;
  std::string_view display_label;
};

const std::array<AbnormalityClass, kNumAbnormalityClasses>& all_classes();

// Throws UnknownClass outside [0, 19].
const AbnormalityClass& class_of(int class_id);

std::string_view label_of(int class_id);

}  // namespace cxrgen
