#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qiraa {

enum class CefrLevel { A1 = 0, A2, B1, B2, C1, C2 };
enum class CoarseLevel { A = 0, B, C };
enum class LabelScheme { five_way, three_way, binary };

inline constexpr std::array<CefrLevel, 6> kAllLevels = {CefrLevel::A1, CefrLevel::A2, CefrLevel::B1,
                                                        CefrLevel::B2, CefrLevel::C1, CefrLevel::C2};

/// A sentence's proficiency label. Ordered A1 < A2 < ... < C2.
class CefrLabel {
 public:
  constexpr CefrLabel() = default;
  constexpr explicit CefrLabel(CefrLevel level) : level_(level) {}

  constexpr CefrLevel level() const { return level_; }
  constexpr CoarseLevel coarse() const { return static_cast<CoarseLevel>(static_cast<int>(level_) / 2); }
  /// A -> 1, B -> 2, C -> 3.
  constexpr int ordinal() const { return static_cast<int>(coarse()) + 1; }
  constexpr bool complex() const { return coarse() == CoarseLevel::C; }

  std::string str() const;
  static std::optional<CefrLabel> parse(std::string_view text);

  friend constexpr bool operator==(CefrLabel, CefrLabel) = default;
  friend constexpr auto operator<=>(CefrLabel a, CefrLabel b) { return a.level_ <=> b.level_; }

 private:
  CefrLevel level_ = CefrLevel::A1;
};

std::string to_string(CefrLevel level);
std::string to_string(CoarseLevel level);
std::string to_string(LabelScheme scheme);
std::optional<LabelScheme> parse_scheme(std::string_view text);

/// Class id of a label under a scheme: five_way -> level index 0..5,
/// three_way -> A=0 B=1 C=2, binary -> Simple=0 Complex=1.
int class_of(CefrLabel label, LabelScheme scheme);

/// Display names for the classes of a scheme, indexed by class id.
std::vector<std::string> class_names(LabelScheme scheme);

}  // namespace qiraa
