#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "erisk/corpus.hpp"
#include "erisk/embed.hpp"

namespace erisk::edeq {

enum class ItemKind { day_based, scale_based };
enum class Subscale { RS, ECS, SCS, WCS };
inline constexpr std::array<Subscale, 4> kSubscales = {Subscale::RS, Subscale::ECS, Subscale::SCS,
                                                       Subscale::WCS};
std::string_view subscale_name(Subscale s);

struct Item {
  int number = 0;
  std::string text;
  ItemKind kind = ItemKind::scale_based;
  std::vector<Subscale> subscales;
};

/// The 22 answered items (1-12 and 19-28), ordered by number.
struct Questionnaire {
  std::vector<Item> items;

  const Item& item(int number) const;
  std::vector<int> members(Subscale s) const;
};

/// JSON array of {"number", "text", "kind": "day"|"scale", "subscales": ["RS",...]}.
/// ValidationError unless there are exactly the items 1-12 and 19-28,
/// RS = {1..5} and SCS = {6,8,10,11,23,26,27,28}.
Questionnaire questionnaire_from_json(std::string_view text);
Questionnaire load_questionnaire(const std::filesystem::path& path);
const Questionnaire& bundled_questionnaire();

struct EdeqConfig {
  double day_threshold = 0.4;
  int window_days = 28;
  bool inclusive_span = false;  // count both end days of the span
};

/// Runs 1, 2 and 3 use day thresholds 0.4, 0.35 and 0.375.
EdeqConfig config_for_run(int run);

/// 0 -> 0, 1-5 -> 1, 6-12 -> 2, 13-15 -> 3, 16-22 -> 4, 23-27 -> 5, >= 28 -> 6.
int day_bucket(long days);
/// Half-open tenths: [0,0.1) -> 0 ... [0.5,0.6) -> 5, [0.6,1] -> 6.
/// Input is clamped to [0,1] first.
int scale_bucket(double similarity);

struct AnswerSheet {
  std::string user_id;
  std::map<int, int> answers;  // item number -> 0..6
};

struct SheetScores {
  double rs = 0;
  double ecs = 0;
  double scs = 0;
  double wcs = 0;
  double global = 0;

  double subscale(Subscale s) const;
};

/// Subscale = mean of member answers; global = mean of the four subscales.
/// ValidationError when an item is unanswered or outside 0..6.
SheetScores score_sheet(const AnswerSheet& sheet, const Questionnaire& q);

/// Similarity of every window post to an item, negative cosines clamped to
/// 0 and empty (degenerate) texts scored 0.
std::vector<double> post_similarities(const corpus::PostWindow& window, const Item& item,
                                      const embed::EmbeddingProvider& provider);

/// Indices into window.posts whose similarity exceeds `threshold`.
std::vector<std::size_t> qualifying_posts(const corpus::PostWindow& window, const Item& item,
                                          double threshold, const embed::EmbeddingProvider& provider);

/// Whole days between the first and last qualifying post, bucketed.
int answer_day_question(const corpus::PostWindow& window, const Item& item, const EdeqConfig& cfg,
                        const embed::EmbeddingProvider& provider);
/// Bucket of the best post's similarity; 0 for an empty window.
int answer_scale_question(const corpus::PostWindow& window, const Item& item,
                          const embed::EmbeddingProvider& provider);

/// Last `window_days` of the history, then every item by its kind.
AnswerSheet fill_questionnaire(const corpus::UserHistory& history, const Questionnaire& q,
                               const EdeqConfig& cfg, const embed::EmbeddingProvider& provider);

/// Document ids used with keyed providers (file_cache).
std::string post_doc_id(std::string_view subject_id, std::size_t round_index);
std::string item_doc_id(int number);
std::string post_text(const corpus::Post& p);

/// Flat format: "user_id a1 ... a22" per line, items in questionnaire order.
std::string answers_to_text(std::span<const AnswerSheet> sheets, const Questionnaire& q);
void write_answers(const std::filesystem::path& path, std::span<const AnswerSheet> sheets,
                   const Questionnaire& q);
std::vector<AnswerSheet> read_answers(const std::filesystem::path& path, const Questionnaire& q);

}  // namespace erisk::edeq
