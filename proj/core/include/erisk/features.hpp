#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "erisk/annotate.hpp"
#include "erisk/corpus.hpp"
#include "erisk/error.hpp"
#include "erisk/lexdiv.hpp"
#include "erisk/readability.hpp"

namespace erisk::features {

inline constexpr std::size_t kVolumetryDim = 6 + annotate::kPosCount;  // 25
inline constexpr std::size_t kLexDivDim = 8;
inline constexpr std::size_t kReadabilityDim = 12;
inline constexpr std::size_t kBasicEmotions = 6;
inline constexpr std::size_t kFineEmotions = 28;
inline constexpr std::size_t kEmotionDim = kBasicEmotions + kFineEmotions;  // 34
inline constexpr std::size_t kFeatureDim = kVolumetryDim + kLexDivDim + kReadabilityDim + kEmotionDim;
static_assert(kFeatureDim == 79);

/// Label orders for the two emotion score vectors.
const std::array<std::string_view, kBasicEmotions>& basic_emotion_labels();
const std::array<std::string_view, kFineEmotions>& fine_emotion_labels();

/// Column names in FeatureVector layout order.
const std::array<std::string, kFeatureDim>& feature_names();

enum class Preprocess { none, strip_urls };

struct VolumetryScores {
  double n_words = 0;
  double n_unique_words = 0;
  double n_chars = 0;
  double avg_word_len = 0;
  double n_unique_lemmas = 0;
  double avg_lemma_len = 0;
  std::array<double, annotate::kPosCount> pos_counts{};
};

struct EmotionScores {
  std::array<double, kBasicEmotions> basic{};
  std::array<double, kFineEmotions> fine{};
};

struct FeatureVector {
  std::vector<double> values;          // kFeatureDim entries
  std::vector<std::size_t> repaired;   // slots whose non-finite input was replaced by 0
};

/// Raised by `assemble` when a part is absent; `part()` is one of
/// "volumetry", "lexdiv", "readability", "emotions".
class AssemblyError : public ValidationError {
 public:
  explicit AssemblyError(std::string part)
      : ValidationError("missing feature part: " + part), part_(std::move(part)) {}
  const std::string& part() const noexcept { return part_; }

 private:
  std::string part_;
};

/// Removes http(s):// and www. URLs, removes any (...) or [...] group whose
/// content holds a URL (delimiters included) and collapses whitespace.
std::string strip_urls(std::string_view text);

/// Title and text of every post, oldest first, joined by single spaces.
/// Empty fields are skipped.
std::string concat_window(const corpus::PostWindow& window, Preprocess preprocess);

VolumetryScores volumetry(const annotate::AnnotatedDoc& doc);

FeatureVector assemble(const std::optional<VolumetryScores>& v,
                       const std::optional<lexdiv::LexDivScores>& l,
                       const std::optional<readability::ReadabilityScores>& r,
                       const std::optional<EmotionScores>& e);

struct Scaler {
  std::vector<double> min;
  std::vector<double> max;
};

/// Per-dimension min/max. DomainError for an empty set or ragged vectors.
Scaler fit_scaler(std::span<const FeatureVector> train);

/// (x - min) / (max - min), clamped to [0,1]; constant dimensions map to 0.
FeatureVector apply_scaler(const Scaler& s, const FeatureVector& v);

std::string scaler_to_json(const Scaler& s);
Scaler scaler_from_json(std::string_view text);
void save_scaler(const std::filesystem::path& path, const Scaler& s);
Scaler load_scaler(const std::filesystem::path& path);

/// CSV with header "subject_id,<79 feature names>".
void write_feature_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                       std::span<const FeatureVector> rows);

}  // namespace erisk::features
