#include "erisk/edeq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "erisk/data.hpp"
#include "erisk/error.hpp"

namespace erisk::edeq {
namespace {

using nlohmann::json;

Subscale parse_subscale(const std::string& s) {
  if (s == "RS") return Subscale::RS;
  if (s == "ECS") return Subscale::ECS;
  if (s == "SCS") return Subscale::SCS;
  if (s == "WCS") return Subscale::WCS;
  throw ValidationError("unknown subscale '" + s + "'");
}

std::string set_text(const std::vector<int>& v) {
  std::string out = "{";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out + "}";
}

void validate(const Questionnaire& q) {
  std::vector<int> expected;
  for (int n = 1; n <= 12; ++n) expected.push_back(n);
  for (int n = 19; n <= 28; ++n) expected.push_back(n);
  std::vector<int> got;
  for (const auto& it : q.items) got.push_back(it.number);
  if (got.size() != 22) {
    throw ValidationError("questionnaire must have 22 items (1-12, 19-28), got " +
                          std::to_string(got.size()));
  }
  if (got != expected) throw ValidationError("questionnaire items must be 1-12 and 19-28, got " + set_text(got));

  const std::vector<int> rs = {1, 2, 3, 4, 5};
  const std::vector<int> scs = {6, 8, 10, 11, 23, 26, 27, 28};
  if (q.members(Subscale::RS) != rs) {
    throw ValidationError("RS must be " + set_text(rs) + ", got " + set_text(q.members(Subscale::RS)));
  }
  if (q.members(Subscale::SCS) != scs) {
    throw ValidationError("SCS must be " + set_text(scs) + ", got " + set_text(q.members(Subscale::SCS)));
  }
  for (auto s : {Subscale::ECS, Subscale::WCS}) {
    if (q.members(s).empty()) throw ValidationError(std::string(subscale_name(s)) + " has no items");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

double similarity(const embed::Embedding& a, const embed::Embedding& b) {
  if (a.degenerate || b.degenerate) return 0.0;
  return std::max(0.0, embed::cosine(a, b));
}

std::vector<embed::Embedding> embed_posts(const corpus::PostWindow& window,
                                          const embed::EmbeddingProvider& provider) {
  std::vector<embed::Document> docs;
  docs.reserve(window.posts.size());
  for (const auto& p : window.posts) {
    docs.push_back({post_doc_id(window.subject_id, p.round_index), post_text(p)});
  }
  return provider.embed_batch(docs);
}

embed::Embedding embed_item(const Item& item, const embed::EmbeddingProvider& provider) {
  return provider.embed({item_doc_id(item.number), item.text});
}

std::vector<double> similarities(const std::vector<embed::Embedding>& posts,
                                 const embed::Embedding& item) {
  std::vector<double> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(similarity(p, item));
  return out;
}

int day_answer(const corpus::PostWindow& window, const std::vector<double>& sims,
               const EdeqConfig& cfg) {
  std::optional<Timestamp> first, last;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i] <= cfg.day_threshold) continue;
    const auto d = window.posts[i].date;
    if (!first || d < *first) first = d;
    if (!last || d > *last) last = d;
  }
  if (!first) return 0;
  long days = static_cast<long>(std::chrono::floor<std::chrono::days>(*last - *first).count());
  if (cfg.inclusive_span) days += 1;
  return day_bucket(days);
}

int scale_answer(const std::vector<double>& sims) {
  if (sims.empty()) return 0;
  return scale_bucket(*std::max_element(sims.begin(), sims.end()));
}

}  // namespace

std::string_view subscale_name(Subscale s) {
  switch (s) {
    case Subscale::RS: return "RS";
    case Subscale::ECS: return "ECS";
    case Subscale::SCS: return "SCS";
    case Subscale::WCS: return "WCS";
  }
  return "?";
}

const Item& Questionnaire::item(int number) const {
  for (const auto& it : items) {
    if (it.number == number) return it;
  }
  throw LookupError("questionnaire has no item " + std::to_string(number), std::to_string(number));
}

std::vector<int> Questionnaire::members(Subscale s) const {
  std::vector<int> out;
  for (const auto& it : items) {
    if (std::find(it.subscales.begin(), it.subscales.end(), s) != it.subscales.end()) {
      out.push_back(it.number);
    }
  }
  return out;
}

Questionnaire questionnaire_from_json(std::string_view text) {
  Questionnaire q;
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw ValidationError("questionnaire must be a JSON array");
    for (const auto& rec : j) {
      Item it;
      it.number = rec.at("number").get<int>();
      it.text = rec.at("text").get<std::string>();
      const auto kind = rec.at("kind").get<std::string>();
      if (kind == "day" || kind == "day_based") {
        it.kind = ItemKind::day_based;
      } else if (kind == "scale" || kind == "scale_based") {
        it.kind = ItemKind::scale_based;
      } else {
        throw ValidationError("item " + std::to_string(it.number) + " has unknown kind '" + kind + "'");
      }
      for (const auto& s : rec.value("subscales", json::array())) {
        it.subscales.push_back(parse_subscale(s.get<std::string>()));
      }
      q.items.push_back(std::move(it));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("questionnaire json: ") + e.what());
  }
  std::sort(q.items.begin(), q.items.end(), [](const Item& a, const Item& b) { return a.number < b.number; });
  validate(q);
  return q;
}

Questionnaire load_questionnaire(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open questionnaire " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return questionnaire_from_json(ss.str());
}

const Questionnaire& bundled_questionnaire() {
  static const Questionnaire q = load_questionnaire(bundled_data("edeq_questionnaire.json"));
  return q;
}

EdeqConfig config_for_run(int run) {
  switch (run) {
    case 1: return {0.4, 28, false};
    case 2: return {0.35, 28, false};
    case 3: return {0.375, 28, false};
    default: break;
  }
  throw ConfigError("unknown task 3 run id " + std::to_string(run) + " (expected 1, 2 or 3)");
}

int day_bucket(long days) {
  if (days <= 0) return 0;
  if (days <= 5) return 1;
  if (days <= 12) return 2;
  if (days <= 15) return 3;
  if (days <= 22) return 4;
  if (days <= 27) return 5;
  return 6;
}

int scale_bucket(double similarity) {
  const double s = std::clamp(std::isnan(similarity) ? 0.0 : similarity, 0.0, 1.0);
  // Compare against the literal edges so 0.3 lands in [0.3,0.4) exactly.
  constexpr std::array<double, 6> edges = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  int bucket = 0;
  for (double e : edges) {
    if (s >= e) ++bucket;
  }
  return bucket;
}

double SheetScores::subscale(Subscale s) const {
  switch (s) {
    case Subscale::RS: return rs;
    case Subscale::ECS: return ecs;
    case Subscale::SCS: return scs;
    case Subscale::WCS: return wcs;
  }
  return 0;
}

SheetScores score_sheet(const AnswerSheet& sheet, const Questionnaire& q) {
  for (const auto& it : q.items) {
    const auto a = sheet.answers.find(it.number);
    if (a == sheet.answers.end()) {
      throw ValidationError("sheet for '" + sheet.user_id + "' has no answer for item " +
                            std::to_string(it.number));
    }
    if (a->second < 0 || a->second > 6) {
      throw ValidationError("sheet for '" + sheet.user_id + "' has answer " +
                            std::to_string(a->second) + " for item " + std::to_string(it.number));
    }
  }
  auto mean_of = [&](Subscale s) {
    const auto members = q.members(s);
    double sum = 0;
    for (int n : members) sum += sheet.answers.at(n);
    return sum / static_cast<double>(members.size());
  };
  SheetScores out;
  out.rs = mean_of(Subscale::RS);
  out.ecs = mean_of(Subscale::ECS);
  out.scs = mean_of(Subscale::SCS);
  out.wcs = mean_of(Subscale::WCS);
  out.global = (out.rs + out.ecs + out.scs + out.wcs) / 4.0;
  return out;
}

std::string post_doc_id(std::string_view subject_id, std::size_t round_index) {
  return std::string(subject_id) + "#" + std::to_string(round_index);
}

std::string item_doc_id(int number) { return "edeq_q" + std::to_string(number); }

std::string post_text(const corpus::Post& p) {
  if (p.title.empty()) return p.text;
  if (p.text.empty()) return p.title;
  return p.title + " " + p.text;
}

std::vector<double> post_similarities(const corpus::PostWindow& window, const Item& item,
                                      const embed::EmbeddingProvider& provider) {
  if (window.posts.empty()) return {};
  return similarities(embed_posts(window, provider), embed_item(item, provider));
}

std::vector<std::size_t> qualifying_posts(const corpus::PostWindow& window, const Item& item,
                                          double threshold, const embed::EmbeddingProvider& provider) {
  const auto sims = post_similarities(window, item, provider);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i] > threshold) out.push_back(i);
  }
  return out;
}

int answer_day_question(const corpus::PostWindow& window, const Item& item, const EdeqConfig& cfg,
                        const embed::EmbeddingProvider& provider) {
  if (item.kind != ItemKind::day_based) {
    throw DomainError("item " + std::to_string(item.number) + " is not day-based");
  }
  return day_answer(window, post_similarities(window, item, provider), cfg);
}

int answer_scale_question(const corpus::PostWindow& window, const Item& item,
                          const embed::EmbeddingProvider& provider) {
  if (item.kind != ItemKind::scale_based) {
    throw DomainError("item " + std::to_string(item.number) + " is not scale-based");
  }
  return scale_answer(post_similarities(window, item, provider));
}

AnswerSheet fill_questionnaire(const corpus::UserHistory& history, const Questionnaire& q,
                               const EdeqConfig& cfg, const embed::EmbeddingProvider& provider) {
  AnswerSheet sheet{history.subject_id, {}};
  const auto window = corpus::select_last_days(history, cfg.window_days);
  const auto posts = window.posts.empty() ? std::vector<embed::Embedding>{} : embed_posts(window, provider);
  for (const auto& it : q.items) {
    if (posts.empty()) {
      sheet.answers[it.number] = 0;
      continue;
    }
    const auto sims = similarities(posts, embed_item(it, provider));
    sheet.answers[it.number] =
        it.kind == ItemKind::day_based ? day_answer(window, sims, cfg) : scale_answer(sims);
  }
  return sheet;
}

std::string answers_to_text(std::span<const AnswerSheet> sheets, const Questionnaire& q) {
  std::string out;
  for (const auto& s : sheets) {
    out += s.user_id;
    for (const auto& it : q.items) {
      const auto a = s.answers.find(it.number);
      if (a == s.answers.end()) {
        throw ValidationError("sheet for '" + s.user_id + "' has no answer for item " +
                              std::to_string(it.number));
      }
      out += ' ' + std::to_string(a->second);
    }
    out += '\n';
  }
  return out;
}

void write_answers(const std::filesystem::path& path, std::span<const AnswerSheet> sheets,
                   const Questionnaire& q) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << answers_to_text(sheets, q);
}

std::vector<AnswerSheet> read_answers(const std::filesystem::path& path, const Questionnaire& q) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open answers file " + path.string());
  std::vector<AnswerSheet> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    AnswerSheet s;
    ss >> s.user_id;
    if (!seen.insert(s.user_id).second) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": duplicate user '" +
                            s.user_id + "'");
    }
    for (const auto& it : q.items) {
      int a = -1;
      if (!(ss >> a) || a < 0 || a > 6) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": answer for item " +
                             std::to_string(it.number) + " missing or outside 0..6",
                         lineno);
      }
      s.answers[it.number] = a;
    }
    std::string extra;
    if (ss >> extra) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": more than 22 answers", lineno);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace erisk::edeq
