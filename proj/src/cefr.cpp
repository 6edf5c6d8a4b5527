#include "qiraa/cefr.hpp"

namespace qiraa {

std::string to_string(CefrLevel level) {
  static constexpr std::array<const char*, 6> names = {"A1", "A2", "B1", "B2", "C1", "C2"};
  return names[static_cast<int>(level)];
}

std::string to_string(CoarseLevel level) {
  static constexpr std::array<const char*, 3> names = {"A", "B", "C"};
  return names[static_cast<int>(level)];
}

std::string to_string(LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::five_way: return "five_way";
    case LabelScheme::three_way: return "three_way";
    case LabelScheme::binary: return "binary";
  }
  return "three_way";
}

std::optional<LabelScheme> parse_scheme(std::string_view text) {
  if (text == "five_way") return LabelScheme::five_way;
  if (text == "three_way") return LabelScheme::three_way;
  if (text == "binary") return LabelScheme::binary;
  return std::nullopt;
}

std::string CefrLabel::str() const { return to_string(level_); }

std::optional<CefrLabel> CefrLabel::parse(std::string_view text) {
  for (CefrLevel level : kAllLevels) {
    if (text == to_string(level)) return CefrLabel(level);
  }
  return std::nullopt;
}

int class_of(CefrLabel label, LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::five_way: return static_cast<int>(label.level());
    case LabelScheme::three_way: return static_cast<int>(label.coarse());
    case LabelScheme::binary: return label.complex() ? 1 : 0;
  }
  return 0;
}

std::vector<std::string> class_names(LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::five_way: return {"A1", "A2", "B1", "B2", "C1", "C2"};
    case LabelScheme::three_way: return {"A", "B", "C"};
    case LabelScheme::binary: return {"Simple", "Complex"};
  }
  return {};
}

}  // namespace qiraa
