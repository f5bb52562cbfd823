#include "cxrgen/taxonomy.hpp"

#include "cxrgen/errors.hpp"

namespace cxrgen {

const std::array<AbnormalityClass, kNumAbnormalityClasses>& all_classes() {
  static const std::array<AbnormalityClass, kNumAbnormalityClasses> kClasses = {{
      {0, "background", "Background"},
      {1, "lesion", "Lesion"},
      {2, "consolidation", "Consolidation"},
      {3, "device", "Device"},
      {4, "atelectasis", "Atelectasis"},
      {5, "pleural effusion", "Pleural Effusion"},
      {6, "fibrosis", "Fibrosis"},
      {7, "pneumothorax", "Pneumothorax (PTX)"},
      {8, "calcification", "Calcification"},
      {9, "fracture", "Fracture"},
      {10, "hilar enlargement", "Hilar Enlargement"},
      {11, "scoliosis", "Scoliosis"},
      {12, "eventration", "Eventration"},
      {13, "pneumoperitoneum", "Pneumoperitoneum"},
      {14, "hernia", "Hernia"},
      {15, "emphysema", "Emphysema"},
      {16, "aortic dilatation", "Aortic Dilatation"},
      {17, "thickening", "Thickening"},
      {18, "tracheal deviation", "Tracheal Deviation"},
      {19, "subcutaneous emphysema", "Subcutaneous Emphysema"},
  }};
  return kClasses;
}

const AbnormalityClass& class_of(int class_id) {
  if (class_id < 0 || class_id >= kNumAbnormalityClasses) throw UnknownClass(class_id);
  return all_classes()[static_cast<size_t>(class_id)];
}

std::string_view label_of(int class_id) { return class_of(class_id).label; }

}  // namespace cxrgen
