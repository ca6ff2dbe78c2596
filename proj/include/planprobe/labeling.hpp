#ifndef PLANPROBE_LABELING_HPP
#define PLANPROBE_LABELING_HPP

// Attribute rules that turn a greedy response into a probing target, and the
// parser for verbalized length self-estimates.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "planprobe/error.hpp"
#include "planprobe/sha256.hpp"

namespace planprobe {

enum class TaskId {
  kResponseLength,
  kReasoningSteps,
  kCharacterChoice,
  kMultipleChoice,
  kAnswerConfidence,
  kFactualConsistency,
};

inline constexpr TaskId kAllTasks[] = {TaskId::kResponseLength,   TaskId::kReasoningSteps,
                                       TaskId::kCharacterChoice,  TaskId::kMultipleChoice,
                                       TaskId::kAnswerConfidence, TaskId::kFactualConsistency};

inline std::string_view task_name(TaskId id) {
  switch (id) {
    case TaskId::kResponseLength: return "response_length";
    case TaskId::kReasoningSteps: return "reasoning_steps";
    case TaskId::kCharacterChoice: return "character_choice";
    case TaskId::kMultipleChoice: return "multiple_choice";
    case TaskId::kAnswerConfidence: return "answer_confidence";
    case TaskId::kFactualConsistency: return "factual_consistency";
  }
  return "unknown";
}

inline std::optional<TaskId> parse_task(std::string_view name) {
  for (auto id : kAllTasks) {
    if (task_name(id) == name) return id;
  }
  return std::nullopt;
}

enum class TaskKind { kRegression, kClassification };

/// Truncated response-length records are labeled with the tokens still to
/// come (remaining) or with the full response length (total).
enum class LengthMode { kRemaining, kTotal };

struct LabelingParams {
  std::uint32_t length_cap = 1000;
  int step_cap = 8;
  int option_count = 5;
  int top_k = 4;
  std::uint32_t min_tokens = 8;
  LengthMode length_mode = LengthMode::kRemaining;
};

struct TaskDefinition {
  TaskId id = TaskId::kResponseLength;
  TaskKind kind = TaskKind::kRegression;
  /// 0 for regression.
  int num_classes = 0;
  LabelingParams params;

  static TaskDefinition make(TaskId id, LabelingParams params = {}) {
    TaskDefinition t{id, TaskKind::kClassification, 0, params};
    switch (id) {
      case TaskId::kResponseLength:
      case TaskId::kReasoningSteps: t.kind = TaskKind::kRegression; break;
      case TaskId::kCharacterChoice: t.num_classes = params.top_k; break;
      case TaskId::kMultipleChoice: t.num_classes = params.option_count; break;
      case TaskId::kAnswerConfidence:
      case TaskId::kFactualConsistency: t.num_classes = 2; break;
    }
    return t;
  }

  bool is_classification() const { return kind == TaskKind::kClassification; }
};

enum class ExclusionReason {
  kTooLong,
  kIncomplete,
  kTooManySteps,
  kNoEntity,
  kMultipleEntities,
  kEntityTooEarly,
  kNoAnswer,
  kMultipleAnswers,
  kAnswerAtStart,
  kNoStance,
  kTooShort,
};

inline constexpr ExclusionReason kAllExclusionReasons[] = {
    ExclusionReason::kTooLong,         ExclusionReason::kIncomplete,     ExclusionReason::kTooManySteps,
    ExclusionReason::kNoEntity,        ExclusionReason::kMultipleEntities, ExclusionReason::kEntityTooEarly,
    ExclusionReason::kNoAnswer,        ExclusionReason::kMultipleAnswers, ExclusionReason::kAnswerAtStart,
    ExclusionReason::kNoStance,        ExclusionReason::kTooShort};

inline std::string_view reason_name(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::kTooLong: return "too_long";
    case ExclusionReason::kIncomplete: return "incomplete";
    case ExclusionReason::kTooManySteps: return "too_many_steps";
    case ExclusionReason::kNoEntity: return "no_entity";
    case ExclusionReason::kMultipleEntities: return "multiple_entities";
    case ExclusionReason::kEntityTooEarly: return "entity_too_early";
    case ExclusionReason::kNoAnswer: return "no_answer";
    case ExclusionReason::kMultipleAnswers: return "multiple_answers";
    case ExclusionReason::kAnswerAtStart: return "answer_at_start";
    case ExclusionReason::kNoStance: return "no_stance";
    case ExclusionReason::kTooShort: return "too_short";
  }
  return "unknown";
}

inline std::optional<ExclusionReason> parse_reason(std::string_view name) {
  for (auto r : kAllExclusionReasons) {
    if (reason_name(r) == name) return r;
  }
  return std::nullopt;
}

/// Either a label value or an exclusion, never both.
class LabelOutcome {
 public:
  static LabelOutcome of(double value, std::optional<std::size_t> key_char = std::nullopt) {
    LabelOutcome o;
    o.value_ = value;
    o.key_char_ = key_char;
    return o;
  }
  static LabelOutcome excluded(ExclusionReason reason) {
    LabelOutcome o;
    o.reason_ = reason;
    return o;
  }

  bool is_excluded() const { return reason_.has_value(); }
  double value() const {
    if (!value_) fail(ErrorKind::kData, "label is excluded (" + std::string(reason_name(*reason_)) + ")");
    return *value_;
  }
  std::optional<double> maybe_value() const { return value_; }
  std::optional<ExclusionReason> exclusion_reason() const { return reason_; }
  /// Character offset where the attribute-revealing text begins, when the
  /// rule locates one (entity mention, answer phrase, stance phrase).
  std::optional<std::size_t> key_char() const { return key_char_; }

  friend bool operator==(const LabelOutcome& a, const LabelOutcome& b) {
    return a.value_ == b.value_ && a.reason_ == b.reason_;
  }

 private:
  LabelOutcome() = default;
  std::optional<double> value_;
  std::optional<ExclusionReason> reason_;
  std::optional<std::size_t> key_char_;
};

// ---------------------------------------------------------------------------
// Tokenizers

struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool special = false;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<Token> tokenize(std::string_view text) const = 0;

  std::size_t count(std::string_view text) const {
    const auto tokens = tokenize(text);
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return !t.special; }));
  }
};

/// Offline fallback: maximal runs of non-whitespace characters.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<Token> tokenize(std::string_view text) const override {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i == text.size()) break;
      const std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      out.push_back({start, i, false});
    }
    return out;
  }
};

/// Character offset of token `index`, or text size when index is past the end.
inline std::size_t token_char_offset(const Tokenizer& tok, std::string_view text, std::size_t index) {
  const auto tokens = tok.tokenize(text);
  return index < tokens.size() ? tokens[index].begin : text.size();
}

/// Index of the token containing (or first following) character `pos`.
inline std::size_t char_to_token_index(const Tokenizer& tok, std::string_view text, std::size_t pos) {
  const auto tokens = tok.tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end > pos) return i;
  }
  return tokens.size();
}

// ---------------------------------------------------------------------------
// Pattern data files

namespace detail {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

/// Non-blank, non-comment lines of a line-oriented data file.
inline std::vector<std::string> data_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.emplace_back(t);
  }
  return lines;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Literal phrase template to ECMAScript regex. Whitespace runs match any
/// whitespace, apostrophes match straight or curly quotes, and `<L>` becomes
/// the option-letter capture group (optionally parenthesized).
inline std::string template_to_regex(std::string_view tmpl, std::string_view letter_class) {
  std::string re;
  const auto body = trim(tmpl);
  if (!body.empty() && is_word_char(body.front())) re += "\\b";
  bool pending_space = false;
  bool ends_with_letter = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      re += "\\s+";
      pending_space = false;
    }
    ends_with_letter = false;
    if (body.substr(i, 3) == "<L>") {
      re += "\\(?(";
      re += letter_class;
      re += ")\\)?";
      i += 2;
      ends_with_letter = true;
    } else if (c == '\'') {
      re += "(?:'|\xE2\x80\x99)";
    } else if (std::string_view("\\^$.|?*+()[]{}/").find(c) != std::string_view::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  if (ends_with_letter) {
    re += "(?![A-Za-z0-9])";
  } else if (!body.empty() && is_word_char(body.back())) {
    re += "\\b";
  }
  return re;
}

inline std::string letter_class(int option_count) {
  if (option_count < 1 || option_count > 26) {
    fail(ErrorKind::kConfig, "option count " + std::to_string(option_count) + " outside [1, 26]");
  }
  return std::string("[A-") + static_cast<char>('A' + option_count - 1) + "]";
}

}  // namespace detail

inline constexpr std::string_view kDefaultAnswerPatterns = R"(# One case-insensitive phrase per line; <L> is the option letter.
# Lines starting with "re:" are raw ECMAScript regexes where <L> expands to
# the letter capture group.
the answer is <L>
answer: <L>
I choose <L>
option <L> is correct
re:\((<L>)\)(?=[.!?]|$)
)";

inline constexpr std::string_view kDefaultStancePatterns = R"(# "agree:" or "disagree:" followed by a case-insensitive phrase.
agree: I agree
agree: I do agree
agree: I fully agree
agree: I completely agree
agree: I strongly agree
agree: I would agree
agree: the statement is true
agree: the statement is correct
agree: this statement is true
agree: this statement is correct
disagree: I disagree
disagree: I strongly disagree
disagree: I completely disagree
disagree: I do not agree
disagree: I don't agree
disagree: I cannot agree
disagree: I can't agree
disagree: I would disagree
disagree: the statement is false
disagree: the statement is incorrect
disagree: this statement is false
disagree: this statement is incorrect
)";

inline constexpr std::string_view kDefaultAnimalLexicon = R"(# canonical, other forms...
ant, ants
bat, bats
bear, bears
beaver, beavers
bee, bees
bird, birds
bunny, bunnies
butterfly, butterflies
camel, camels
cat, cats
caterpillar, caterpillars
chicken, chickens
cow, cows
crab, crabs
crow, crows
deer
dog, dogs
dolphin, dolphins
donkey, donkeys
duck, ducks
eagle, eagles
elephant, elephants
fish, fishes
fox, foxes
frog, frogs
giraffe, giraffes
goat, goats
goose, geese
hamster, hamsters
hedgehog, hedgehogs
hen, hens
horse, horses
kangaroo, kangaroos
kitten, kittens
koala, koalas
ladybug, ladybugs
lion, lions
lizard, lizards
monkey, monkeys
mouse, mice
octopus, octopuses
otter, otters
owl, owls
panda, pandas
parrot, parrots
penguin, penguins
pig, pigs
puppy, puppies
rabbit, rabbits
raccoon, raccoons
shark, sharks
sheep
snail, snails
snake, snakes
spider, spiders
squirrel, squirrels
swan, swans
tiger, tigers
turtle, turtles
whale, whales
wolf, wolves
zebra, zebras
)";

/// Ordered list of answer-extraction patterns, compiled for one option count.
class AnswerPatternSet {
 public:
  static AnswerPatternSet parse(std::string_view text, int option_count = 5) {
    AnswerPatternSet set;
    set.source_hash_ = sha256_hex(text);
    const auto letters = detail::letter_class(option_count);
    for (const auto& line : detail::data_lines(text)) {
      std::string re;
      if (line.rfind("re:", 0) == 0) {
        re = line.substr(3);
        for (auto pos = re.find("<L>"); pos != std::string::npos; pos = re.find("<L>", pos)) {
          re.replace(pos, 3, letters);
        }
      } else {
        re = detail::template_to_regex(line, letters);
      }
      try {
        set.patterns_.emplace_back(re, std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        fail(ErrorKind::kConfig, "bad answer pattern '" + line + "': " + e.what());
      }
      set.sources_.push_back(line);
    }
    if (set.patterns_.empty()) fail(ErrorKind::kConfig, "answer pattern set is empty");
    return set;
  }
  static AnswerPatternSet defaults(int option_count = 5) { return parse(kDefaultAnswerPatterns, option_count); }
  static AnswerPatternSet load(const std::filesystem::path& path, int option_count = 5) {
    return parse(detail::read_text_file(path), option_count);
  }

  const std::vector<std::regex>& patterns() const { return patterns_; }
  const std::string& source_hash() const { return source_hash_; }

 private:
  std::vector<std::regex> patterns_;
  std::vector<std::string> sources_;
  std::string source_hash_;
};

class StancePatternSet {
 public:
  static StancePatternSet parse(std::string_view text) {
    StancePatternSet set;
    set.source_hash_ = sha256_hex(text);
    for (const auto& line : detail::data_lines(text)) {
      const auto colon = line.find(':');
      const auto side = colon == std::string::npos ? std::string() : detail::to_lower(detail::trim(line.substr(0, colon)));
      if (side != "agree" && side != "disagree") {
        fail(ErrorKind::kConfig, "stance pattern line must start with 'agree:' or 'disagree:': " + line);
      }
      std::regex re(detail::template_to_regex(line.substr(colon + 1), "[A-Z]"),
                    std::regex::ECMAScript | std::regex::icase);
      (side == "agree" ? set.agree_ : set.disagree_).push_back(std::move(re));
    }
    if (set.agree_.empty() || set.disagree_.empty()) {
      fail(ErrorKind::kConfig, "stance pattern set needs both agree and disagree phrases");
    }
    return set;
  }
  static StancePatternSet defaults() { return parse(kDefaultStancePatterns); }
  static StancePatternSet load(const std::filesystem::path& path) { return parse(detail::read_text_file(path)); }

  const std::vector<std::regex>& agree() const { return agree_; }
  const std::vector<std::regex>& disagree() const { return disagree_; }
  const std::string& source_hash() const { return source_hash_; }

 private:
  std::vector<std::regex> agree_;
  std::vector<std::regex> disagree_;
  std::string source_hash_;
};

/// Entity lexicon: each line is a canonical name followed by alternate forms.
class Lexicon {
 public:
  static Lexicon parse(std::string_view text) {
    Lexicon lex;
    lex.source_hash_ = sha256_hex(text);
    for (const auto& line : detail::data_lines(text)) {
      std::vector<std::string> forms;
      std::istringstream in(line);
      std::string item;
      while (std::getline(in, item, ',')) {
        auto t = detail::trim(item);
        if (!t.empty()) forms.push_back(detail::to_lower(t));
      }
      if (forms.empty()) continue;
      lex.entries_.push_back(forms.front());
      for (const auto& f : forms) lex.forms_[f] = forms.front();
    }
    if (lex.entries_.empty()) fail(ErrorKind::kConfig, "entity lexicon is empty");
    return lex;
  }
  static Lexicon defaults() { return parse(kDefaultAnimalLexicon); }
  static Lexicon load(const std::filesystem::path& path) { return parse(detail::read_text_file(path)); }

  const std::vector<std::string>& entries() const { return entries_; }
  const std::string& source_hash() const { return source_hash_; }

  /// Canonical entry for a lowercase word, if it is one of the entry forms.
  const std::string* lookup(const std::string& word) const {
    auto it = forms_.find(word);
    return it == forms_.end() ? nullptr : &it->second;
  }

 private:
  std::vector<std::string> entries_;
  std::map<std::string, std::string> forms_;
  std::string source_hash_;
};

// ---------------------------------------------------------------------------
// Rules

inline LabelOutcome label_response_length(std::size_t token_count, bool complete, std::uint32_t cap = 1000) {
  if (token_count > cap) return LabelOutcome::excluded(ExclusionReason::kTooLong);
  if (!complete) return LabelOutcome::excluded(ExclusionReason::kIncomplete);
  return LabelOutcome::of(static_cast<double>(token_count));
}

inline LabelOutcome label_response_length(std::string_view response, const Tokenizer& tok, std::uint32_t cap,
                                          bool complete) {
  return label_response_length(tok.count(response), complete, cap);
}

struct StepMarker {
  std::size_t position;
  long number;
};

/// "Step <n>:" anywhere, or "<n>." at the start of a line.
inline std::vector<StepMarker> find_step_markers(std::string_view response) {
  static const std::regex kStep(R"(\bstep\s+(\d+)\s*:)", std::regex::ECMAScript | std::regex::icase);
  static const std::regex kNumbered(R"((^|\n)[ \t]*(\d+)\.(?=\s|$))", std::regex::ECMAScript);
  std::vector<StepMarker> out;
  const std::string text(response);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kStep); it != std::sregex_iterator(); ++it) {
    out.push_back({static_cast<std::size_t>(it->position(0)), std::stol(it->str(1))});
  }
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumbered); it != std::sregex_iterator(); ++it) {
    out.push_back({static_cast<std::size_t>(it->position(2)), std::stol(it->str(2))});
  }
  std::sort(out.begin(), out.end(), [](const StepMarker& a, const StepMarker& b) { return a.position < b.position; });
  return out;
}

/// Number of distinct step numbers among markers at or after `from_char`.
inline LabelOutcome label_reasoning_steps(std::string_view response, int cap = 8, std::size_t from_char = 0) {
  std::set<long> distinct;
  for (const auto& m : find_step_markers(response)) {
    if (m.position >= from_char) distinct.insert(m.number);
  }
  if (static_cast<int>(distinct.size()) > cap) return LabelOutcome::excluded(ExclusionReason::kTooManySteps);
  return LabelOutcome::of(static_cast<double>(distinct.size()));
}

struct EntityMention {
  std::string entity;
  std::size_t begin;
  std::size_t end;
};

/// Whole-word, case-insensitive lexicon matches in order of appearance.
inline std::vector<EntityMention> find_entities(std::string_view text, const Lexicon& lexicon) {
  std::vector<EntityMention> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
    if (start > 0 && detail::is_word_char(text[start - 1])) continue;
    if (i < text.size() && detail::is_word_char(text[i])) continue;
    if (const auto* entity = lexicon.lookup(detail::to_lower(text.substr(start, i - start)))) {
      out.push_back({*entity, start, i});
    }
  }
  return out;
}

/// The single distinct entity of a response, if it has exactly one.
inline std::optional<std::string> unique_entity(std::string_view text, const Lexicon& lexicon) {
  std::optional<std::string> found;
  for (const auto& m : find_entities(text, lexicon)) {
    if (found && *found != m.entity) return std::nullopt;
    found = m.entity;
  }
  return found;
}

/// The k lexicon entries that are most often a response's unique entity.
/// Ties are broken lexicographically.
inline std::vector<std::string> derive_top_classes(std::span<const std::string> corpus, const Lexicon& lexicon,
                                                   int k = 4) {
  if (k < 1) fail(ErrorKind::kConfig, "top-k must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    if (auto e = unique_entity(text, lexicon)) ++counts[*e];
  }
  if (counts.size() < static_cast<std::size_t>(k)) {
    fail(ErrorKind::kConfig, "only " + std::to_string(counts.size()) + " distinct entities occur in the corpus, " +
                                 std::to_string(k) + " classes requested (short by " +
                                 std::to_string(k - counts.size()) + ")");
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back(ranked[static_cast<std::size_t>(i)].first);
  return out;
}

/// End character of the second whitespace word (after leading-space strip).
inline std::size_t second_word_end(std::string_view text) {
  WhitespaceTokenizer ws;
  const auto words = ws.tokenize(text);
  if (words.empty()) return 0;
  return words[std::min<std::size_t>(1, words.size() - 1)].end;
}

inline LabelOutcome label_character_choice(std::string_view response, std::span<const std::string> classes,
                                           const Lexicon& lexicon) {
  const auto mentions = find_entities(response, lexicon);
  if (mentions.empty()) return LabelOutcome::excluded(ExclusionReason::kNoEntity);
  for (const auto& m : mentions) {
    if (m.entity != mentions.front().entity) return LabelOutcome::excluded(ExclusionReason::kMultipleEntities);
  }
  const std::size_t early_end = second_word_end(response);
  for (const auto& m : mentions) {
    if (m.begin < early_end) return LabelOutcome::excluded(ExclusionReason::kEntityTooEarly);
  }
  const auto it = std::find(classes.begin(), classes.end(), mentions.front().entity);
  if (it == classes.end()) return LabelOutcome::excluded(ExclusionReason::kNoEntity);
  return LabelOutcome::of(static_cast<double>(it - classes.begin()), mentions.front().begin);
}

struct AnswerMatch {
  std::size_t begin;
  std::size_t end;
  int option;
};

/// Every answer declaration in the response; overlapping matches naming the
/// same option are merged.
inline std::vector<AnswerMatch> find_answers(std::string_view response, const AnswerPatternSet& patterns) {
  std::vector<AnswerMatch> raw;
  const std::string text(response);
  for (const auto& re : patterns.patterns()) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      std::optional<int> option;
      for (std::size_t g = 1; g < m.size() && !option; ++g) {
        if (m[g].matched && m[g].length() == 1) {
          option = std::toupper(static_cast<unsigned char>(m[g].str()[0])) - 'A';
        }
      }
      if (!option) continue;
      raw.push_back({static_cast<std::size_t>(m.position(0)),
                     static_cast<std::size_t>(m.position(0) + m.length(0)), *option});
    }
  }
  std::sort(raw.begin(), raw.end(), [](const AnswerMatch& a, const AnswerMatch& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
  });
  std::vector<AnswerMatch> merged;
  for (const auto& m : raw) {
    if (!merged.empty() && m.begin < merged.back().end && m.option == merged.back().option) {
      merged.back().end = std::max(merged.back().end, m.end);
    } else {
      merged.push_back(m);
    }
  }
  return merged;
}

inline std::size_t first_content_char(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  return i;
}

/// The declared option index, or the reason no single option was declared.
inline LabelOutcome extract_choice(std::string_view response, const AnswerPatternSet& patterns) {
  const auto matches = find_answers(response, patterns);
  if (matches.empty()) return LabelOutcome::excluded(ExclusionReason::kNoAnswer);
  for (const auto& m : matches) {
    if (m.option != matches.front().option) return LabelOutcome::excluded(ExclusionReason::kMultipleAnswers);
  }
  if (matches.size() == 1 && matches.front().begin == first_content_char(response)) {
    return LabelOutcome::excluded(ExclusionReason::kAnswerAtStart);
  }
  return LabelOutcome::of(matches.front().option, matches.front().begin);
}

inline LabelOutcome label_multiple_choice(std::string_view response, const AnswerPatternSet& patterns) {
  return extract_choice(response, patterns);
}

inline LabelOutcome label_multiple_choice(std::string_view response, int option_count = 5) {
  return extract_choice(response, AnswerPatternSet::defaults(option_count));
}

inline std::optional<int> parse_option_letter(std::string_view letter, int option_count) {
  const auto t = detail::trim(letter);
  if (t.size() != 1) return std::nullopt;
  const int idx = std::toupper(static_cast<unsigned char>(t[0])) - 'A';
  if (idx < 0 || idx >= option_count) return std::nullopt;
  return idx;
}

inline LabelOutcome label_answer_confidence(std::string_view response, std::string_view gold_letter,
                                            const AnswerPatternSet& patterns, int option_count = 5) {
  const auto gold = parse_option_letter(gold_letter, option_count);
  if (!gold) fail(ErrorKind::kData, "gold option '" + std::string(gold_letter) + "' outside the option range");
  const auto choice = extract_choice(response, patterns);
  if (choice.is_excluded()) return choice;
  return LabelOutcome::of(static_cast<int>(choice.value()) == *gold ? 1.0 : 0.0, choice.key_char());
}

inline LabelOutcome label_answer_confidence(std::string_view response, std::string_view gold_letter,
                                            int option_count = 5) {
  return label_answer_confidence(response, gold_letter, AnswerPatternSet::defaults(option_count), option_count);
}

enum class Stance { kAgree, kDisagree };

struct StanceMatch {
  Stance stance;
  std::size_t begin;
};

/// The explicit stance, or nullopt when absent or contradictory.
inline std::optional<StanceMatch> detect_stance(std::string_view response, const StancePatternSet& patterns) {
  const std::string text(response);
  auto first = [&](const std::vector<std::regex>& set) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (const auto& re : set) {
      std::smatch m;
      if (std::regex_search(text, m, re)) {
        const auto pos = static_cast<std::size_t>(m.position(0));
        if (!best || pos < *best) best = pos;
      }
    }
    return best;
  };
  const auto agree = first(patterns.agree());
  const auto disagree = first(patterns.disagree());
  if (agree.has_value() == disagree.has_value()) return std::nullopt;
  return agree ? StanceMatch{Stance::kAgree, *agree} : StanceMatch{Stance::kDisagree, *disagree};
}

inline LabelOutcome label_factual_consistency(std::string_view response, bool statement_is_true,
                                              const StancePatternSet& patterns) {
  const auto stance = detect_stance(response, patterns);
  if (!stance) return LabelOutcome::excluded(ExclusionReason::kNoStance);
  const bool consistent = (stance->stance == Stance::kAgree) == statement_is_true;
  return LabelOutcome::of(consistent ? 1.0 : 0.0, stance->begin);
}

inline LabelOutcome label_factual_consistency(std::string_view response, bool statement_is_true) {
  return label_factual_consistency(response, statement_is_true, StancePatternSet::defaults());
}

inline std::optional<bool> parse_truth(std::string_view gold) {
  const auto t = detail::to_lower(detail::trim(gold));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  return std::nullopt;
}

/// Integer inside the first well-formed [TOKENS]n[/TOKENS] span.
inline std::optional<std::int64_t> parse_verbalized_estimate(std::string_view response) {
  static constexpr std::string_view kOpen = "[TOKENS]";
  static constexpr std::string_view kClose = "[/TOKENS]";
  std::size_t pos = 0;
  while ((pos = response.find(kOpen, pos)) != std::string_view::npos) {
    const std::size_t start = pos + kOpen.size();
    const std::size_t close = response.find(kClose, start);
    if (close == std::string_view::npos) return std::nullopt;
    const auto payload = detail::trim(response.substr(start, close - start));
    pos = start;
    if (payload.empty() || payload.size() > 18) continue;
    if (!std::all_of(payload.begin(), payload.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    return std::stoll(std::string(payload));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Dispatcher used by the pipeline

struct LabelInput {
  std::string_view response;
  /// Model token count of the response (excluding special tokens).
  std::size_t token_count = 0;
  bool complete = true;
  std::int64_t truncation_offset = -1;
  std::optional<std::string> gold;
};

/// Everything a rule may need besides the response itself.
struct LabelContext {
  TaskDefinition task;
  const Tokenizer* tokenizer = nullptr;
  const AnswerPatternSet* answers = nullptr;
  const StancePatternSet* stances = nullptr;
  const Lexicon* lexicon = nullptr;
  std::vector<std::string> classes;
};

/// Applies the task's rule, the truncation adjustment and the minimum-length
/// exclusion to one (possibly truncated) record.
inline LabelOutcome label_example(const LabelContext& ctx, const LabelInput& in) {
  const auto& p = ctx.task.params;
  auto need = [](const void* ptr, const char* what) {
    if (!ptr) fail(ErrorKind::kConfig, std::string("labeling context is missing the ") + what);
  };
  LabelOutcome out = LabelOutcome::excluded(ExclusionReason::kNoAnswer);
  switch (ctx.task.id) {
    case TaskId::kResponseLength: {
      out = label_response_length(in.token_count, in.complete, p.length_cap);
      if (!out.is_excluded() && in.truncation_offset >= 0 && p.length_mode == LengthMode::kRemaining) {
        out = LabelOutcome::of(static_cast<double>(in.token_count - static_cast<std::size_t>(in.truncation_offset)));
      }
      break;
    }
    case TaskId::kReasoningSteps: {
      std::size_t from = 0;
      if (in.truncation_offset >= 0) {
        need(ctx.tokenizer, "tokenizer");
        from = token_char_offset(*ctx.tokenizer, in.response, static_cast<std::size_t>(in.truncation_offset));
      }
      out = label_reasoning_steps(in.response, p.step_cap, from);
      break;
    }
    case TaskId::kCharacterChoice:
      need(ctx.lexicon, "entity lexicon");
      out = label_character_choice(in.response, ctx.classes, *ctx.lexicon);
      break;
    case TaskId::kMultipleChoice:
      need(ctx.answers, "answer pattern set");
      out = label_multiple_choice(in.response, *ctx.answers);
      break;
    case TaskId::kAnswerConfidence:
      need(ctx.answers, "answer pattern set");
      if (!in.gold) fail(ErrorKind::kData, "answer_confidence requires a gold option letter");
      out = label_answer_confidence(in.response, *in.gold, *ctx.answers, p.option_count);
      break;
    case TaskId::kFactualConsistency: {
      need(ctx.stances, "stance pattern set");
      const auto truth = in.gold ? parse_truth(*in.gold) : std::nullopt;
      if (!truth) fail(ErrorKind::kData, "factual_consistency requires a true/false gold label");
      out = label_factual_consistency(in.response, *truth, *ctx.stances);
      break;
    }
  }
  if (!out.is_excluded() && in.token_count < p.min_tokens) return LabelOutcome::excluded(ExclusionReason::kTooShort);
  return out;
}

}  // namespace planprobe

#endif  // PLANPROBE_LABELING_HPP
