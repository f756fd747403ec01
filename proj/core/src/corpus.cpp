#include "erisk/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "erisk/error.hpp"

namespace erisk::corpus {
namespace {

using nlohmann::json;

void check_unique(const std::vector<UserHistory>& hs) {
  for (std::size_t i = 1; i < hs.size(); ++i) {
    if (hs[i].subject_id == hs[i - 1].subject_id) {
      throw ValidationError("duplicate subject_id '" + hs[i].subject_id + "'");
    }
  }
}

void sort_by_subject(std::vector<UserHistory>& hs) {
  std::stable_sort(hs.begin(), hs.end(), [](const auto& a, const auto& b) {
    return a.subject_id < b.subject_id;
  });
  check_unique(hs);
}

std::string trim(const std::string& s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

Label label_from_json(const json& j, std::size_t line) {
  if (j.is_null()) return Label::unknown;
  if (j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v == 0) return Label::negative;
    if (v == 1) return Label::positive;
  }
  throw ParseError("line " + std::to_string(line) + ": label must be 0, 1 or null", line);
}

}  // namespace

int label_to_int(Label l) {
  switch (l) {
    case Label::positive: return 1;
    case Label::negative: return 0;
    case Label::unknown: break;
  }
  return -1;
}

UserHistory make_history(std::string subject_id, Label label, std::vector<Post> posts) {
  std::stable_sort(posts.begin(), posts.end(),
                   [](const Post& a, const Post& b) { return a.date < b.date; });
  for (std::size_t i = 0; i < posts.size(); ++i) posts[i].round_index = i;
  return UserHistory{std::move(subject_id), label, std::move(posts)};
}

std::vector<UserHistory> ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());

  std::vector<UserHistory> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what(), line);
    }
    const auto where = path.string() + ":" + std::to_string(line);
    if (!j.is_object() || !j.contains("subject") || !j["subject"].is_string()) {
      throw ParseError(where + ": missing string field 'subject'", line);
    }
    std::vector<Post> posts;
    if (j.contains("posts")) {
      if (!j["posts"].is_array()) throw ParseError(where + ": 'posts' must be an array", line);
      for (const auto& p : j["posts"]) {
        if (!p.is_object() || !p.contains("date") || !p["date"].is_string()) {
          throw ParseError(where + ": post without string 'date'", line);
        }
        const auto date = parse_timestamp(p["date"].get<std::string>());
        if (!date) {
          throw ParseError(where + ": unparseable date '" + p["date"].get<std::string>() + "'",
                           line);
        }
        posts.push_back(Post{*date, p.value("title", std::string{}),
                             p.value("text", std::string{}), 0});
      }
    }
    const auto label = label_from_json(j.contains("label") ? j["label"] : json(nullptr), line);
    out.push_back(make_history(j["subject"].get<std::string>(), label, std::move(posts)));
  }
  sort_by_subject(out);
  return out;
}

std::map<std::string, Label> read_golden_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open golden truth file " + path.string());
  std::map<std::string, Label> out;
  std::string id, value;
  std::size_t pair = 0;
  while (in >> id) {
    ++pair;
    if (!(in >> value)) {
      throw ParseError(path.string() + ": subject '" + id + "' has no label", pair);
    }
    if (value == "1") {
      out[id] = Label::positive;
    } else if (value == "0") {
      out[id] = Label::negative;
    } else {
      throw ParseError(path.string() + ": bad label '" + value + "' for '" + id + "'", pair);
    }
  }
  return out;
}

std::vector<UserHistory> ingest_erisk_xml(const std::filesystem::path& dir,
                                          const std::optional<std::filesystem::path>& golden_truth) {
  namespace pt = boost::property_tree;
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("not a directory: " + dir.string());
  }
  std::map<std::string, Label> labels;
  if (golden_truth) labels = read_golden_truth(*golden_truth);

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<UserHistory> out;
  for (const auto& file : files) {
    pt::ptree tree;
    try {
      pt::read_xml(file.string(), tree);
    } catch (const pt::xml_parser_error& e) {
      throw ParseError(file.string() + ": " + e.message(), e.line());
    }
    const auto individual = tree.get_child_optional("INDIVIDUAL");
    if (!individual) throw ValidationError(file.string() + ": missing INDIVIDUAL element");
    const auto id = individual->get_optional<std::string>("ID");
    if (!id || trim(*id).empty()) throw ValidationError(file.string() + ": missing ID element");

    std::vector<Post> posts;
    std::size_t index = 0;
    for (const auto& [name, node] : *individual) {
      if (name != "WRITING") continue;
      const auto date_text = node.get_optional<std::string>("DATE");
      if (!date_text) {
        throw ValidationError(file.string() + ": WRITING " + std::to_string(index + 1) +
                              " has no DATE element");
      }
      const auto date = parse_timestamp(*date_text);
      if (!date) {
        throw ValidationError(file.string() + ": WRITING " + std::to_string(index + 1) +
                              " has unparseable DATE '" + trim(*date_text) + "'");
      }
      posts.push_back(Post{*date, trim(node.get<std::string>("TITLE", "")),
                           trim(node.get<std::string>("TEXT", "")), 0});
      ++index;
    }
    const auto subject = trim(*id);
    const auto it = labels.find(subject);
    out.push_back(make_history(subject, it == labels.end() ? Label::unknown : it->second,
                               std::move(posts)));
  }
  sort_by_subject(out);
  return out;
}

PostWindow select_last_n(const PostWindow& window, std::size_t n) {
  if (n == 0) throw DomainError("select_last_n: n must be >= 1");
  const auto& posts = window.posts;
  const auto keep = std::min(n, posts.size());
  return PostWindow{window.subject_id,
                    std::vector<Post>(posts.end() - static_cast<std::ptrdiff_t>(keep), posts.end()),
                    LastN{n}};
}

PostWindow select_last_n(const UserHistory& history, std::size_t n) {
  return select_last_n(PostWindow{history.subject_id, history.posts, LastN{n}}, n);
}

PostWindow select_last_days(const UserHistory& history, int days, Timestamp reference) {
  if (days < 1) throw DomainError("select_last_days: days must be >= 1");
  const auto lower = reference - std::chrono::hours{24} * days;
  PostWindow w{history.subject_id, {}, LastDays{days, reference}};
  for (const auto& p : history.posts) {
    if (p.date >= lower && p.date <= reference) w.posts.push_back(p);
  }
  return w;
}

PostWindow select_last_days(const UserHistory& history, int days) {
  if (history.posts.empty()) {
    if (days < 1) throw DomainError("select_last_days: days must be >= 1");
    return PostWindow{history.subject_id, {}, LastDays{days, Timestamp{}}};
  }
  return select_last_days(history, days, history.posts.back().date);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<UserHistory>& histories) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& h : histories) {
    json j;
    j["subject"] = h.subject_id;
    const auto l = label_to_int(h.label);
    j["label"] = l < 0 ? json(nullptr) : json(l);
    j["posts"] = json::array();
    for (const auto& p : h.posts) {
      j["posts"].push_back({{"date", format_timestamp(p.date)}, {"title", p.title}, {"text", p.text}});
    }
    out << j.dump() << '\n';
  }
}

}  // namespace erisk::corpus
