#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "erisk/timestamp.hpp"

namespace erisk::corpus {

enum class Label { negative, positive, unknown };

struct Post {
  Timestamp date;
  std::string title;
  std::string text;
  std::size_t round_index = 0;
};

/// A subject's writings, oldest first. Construct through `make_history` (or
/// the ingest functions) so that the ordering invariants hold.
struct UserHistory {
  std::string subject_id;
  Label label = Label::unknown;
  std::vector<Post> posts;
};

struct LastN {
  std::size_t n;
};
struct LastDays {
  int days;
  Timestamp reference;
};
using Selection = std::variant<LastN, LastDays>;

struct PostWindow {
  std::string subject_id;
  std::vector<Post> posts;
  Selection selection;
};

/// Stable-sorts posts by date and renumbers round_index from 0.
UserHistory make_history(std::string subject_id, Label label, std::vector<Post> posts);

/// One JSON object per line: {"subject", "label": 0|1|null, "posts": [{"date","title","text"}]}.
/// Blank lines are skipped. Result is sorted by subject_id.
std::vector<UserHistory> ingest_jsonl(const std::filesystem::path& path);

/// Directory of eRisk writings files (`*.xml`), one INDIVIDUAL per file.
/// Labels come from `golden_truth` ("subject_id label" per line) when given.
std::vector<UserHistory> ingest_erisk_xml(
    const std::filesystem::path& dir,
    const std::optional<std::filesystem::path>& golden_truth = std::nullopt);

/// Whitespace-separated "subject_id label" pairs.
std::map<std::string, Label> read_golden_truth(const std::filesystem::path& path);

/// The min(n, |posts|) most recent posts, oldest first. Throws DomainError for n == 0.
PostWindow select_last_n(const UserHistory& history, std::size_t n);
PostWindow select_last_n(const PostWindow& window, std::size_t n);

/// Posts with reference - days*24h <= date <= reference.
PostWindow select_last_days(const UserHistory& history, int days, Timestamp reference);
/// Same, with the reference defaulting to the newest post's date.
PostWindow select_last_days(const UserHistory& history, int days);

/// Writes histories back as JSONL in the ingest_jsonl format.
void write_jsonl(const std::filesystem::path& path, const std::vector<UserHistory>& histories);

int label_to_int(Label l);  // positive 1, negative 0, unknown -1

}  // namespace erisk::corpus
