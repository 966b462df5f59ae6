#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "affecton/common.hpp"

namespace affecton {

/// What to do to the stem after a suffix has been removed.
enum class StemRepair {
  none,
  /// Undouble a final doubled consonant (runn -> run), otherwise restore a
  /// silent e on short consonant-vowel-consonant stems (lov -> love).
  verb_ending,
};

struct SuffixRule {
  std::string suffix;
  std::string replacement;
  std::size_t min_stem = 2;
  /// Stem must end with one of these (empty = no constraint).
  std::vector<std::string> stem_endings;
  /// Stem must not end with any of these.
  std::vector<std::string> blocked_endings;
  StemRepair repair = StemRepair::none;
  /// Stem must contain a vowel (a, e, i, o, u, y).
  bool needs_vowel = false;
};

/// Exception table plus ordered suffix rules. Exceptions win over rules.
struct LemmaRules {
  std::unordered_map<std::string, std::string> exceptions;
  std::vector<SuffixRule> suffix_rules;
};

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline bool has_vowel(std::string_view s) {
  for (char c : s)
    if (is_vowel(c) || c == 'y') return true;
  return false;
}

inline std::size_t vowel_groups(std::string_view s) {
  std::size_t groups = 0;
  bool prev = false;
  for (char c : s) {
    const bool v = is_vowel(c);
    if (v && !prev) ++groups;
    prev = v;
  }
  return groups;
}

inline std::string repair_verb_stem(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1])) {
    const char c = stem[n - 1];
    if (c != 'l' && c != 's' && c != 'z' && c != 'f') {
      stem.pop_back();
      return stem;
    }
    return stem;
  }
  // Endings English words rarely keep without a silent e: believ(e),
  // produc(e), admir(e), endur(e), realiz(e).
  if (n >= 3) {
    const char last = stem[n - 1];
    const bool cons_before = !is_vowel(stem[n - 3]);
    if (last == 'v' || (last == 'c' && stem[n - 2] != 'i') ||
        (cons_before && (stem[n - 2] == 'i' || stem[n - 2] == 'u') && (last == 'r' || last == 'z'))) {
      stem.push_back('e');
      return stem;
    }
  }
  // Monosyllabic consonant-vowel-consonant stem: hop(e), lov(e), smil(e).
  if (n >= 2 && vowel_groups(stem) == 1) {
    const char last = stem[n - 1];
    const char mid = stem[n - 2];
    const bool cvc_tail = !is_vowel(last) && last != 'w' && last != 'x' && last != 'y' && is_vowel(mid) &&
                          (n == 2 || !is_vowel(stem[n - 3]));
    if (cvc_tail && n >= 3) stem.push_back('e');
  }
  return stem;
}

inline bool rule_applies(const SuffixRule& rule, std::string_view token) {
  if (!ends_with(token, rule.suffix)) return false;
  const std::string_view stem = token.substr(0, token.size() - rule.suffix.size());
  if (stem.size() < rule.min_stem) return false;
  if (rule.needs_vowel && !has_vowel(stem)) return false;
  for (const auto& b : rule.blocked_endings)
    if (ends_with(stem, b)) return false;
  if (rule.stem_endings.empty()) return true;
  for (const auto& e : rule.stem_endings)
    if (ends_with(stem, e)) return true;
  return false;
}

/// One rewrite step: exception, else first matching rule, else unchanged.
inline std::string lemmatize_step(const LemmaRules& rules, const std::string& token) {
  if (const auto it = rules.exceptions.find(token); it != rules.exceptions.end()) return it->second;
  for (const auto& rule : rules.suffix_rules) {
    if (!rule_applies(rule, token)) continue;
    std::string stem = token.substr(0, token.size() - rule.suffix.size());
    if (rule.repair == StemRepair::verb_ending) stem = repair_verb_stem(std::move(stem));
    return stem + rule.replacement;
  }
  return token;
}

}  // namespace detail

/// The built-in English rule set: irregular forms plus plural/-ed/-ing stripping.
inline LemmaRules default_lemma_rules() {
  LemmaRules rules;
  rules.exceptions = {
      // be / have / do / go
      {"am", "be"}, {"is", "be"}, {"are", "be"}, {"was", "be"}, {"were", "be"}, {"been", "be"}, {"being", "be"},
      {"has", "have"}, {"had", "have"}, {"having", "have"}, {"does", "do"}, {"did", "do"}, {"done", "do"},
      {"goes", "go"}, {"went", "go"}, {"gone", "go"},
      // common irregular verbs
      {"felt", "feel"}, {"made", "make"}, {"said", "say"}, {"saw", "see"}, {"seen", "see"}, {"took", "take"},
      {"taken", "take"}, {"came", "come"}, {"got", "get"}, {"gotten", "get"}, {"gave", "give"}, {"given", "give"},
      {"knew", "know"}, {"known", "know"}, {"thought", "think"}, {"told", "tell"}, {"found", "find"},
      {"left", "leave"}, {"lost", "lose"}, {"won", "win"}, {"ran", "run"}, {"ate", "eat"}, {"eaten", "eat"},
      {"wrote", "write"}, {"written", "write"}, {"broke", "break"}, {"broken", "break"}, {"fell", "fall"},
      {"fallen", "fall"}, {"fought", "fight"}, {"hurt", "hurt"}, {"kept", "keep"}, {"met", "meet"},
      {"paid", "pay"}, {"sent", "send"}, {"spent", "spend"}, {"stood", "stand"}, {"understood", "understand"},
      {"became", "become"}, {"began", "begin"}, {"begun", "begin"}, {"brought", "bring"}, {"bought", "buy"},
      {"caught", "catch"}, {"chose", "choose"}, {"chosen", "choose"}, {"drove", "drive"}, {"flew", "fly"},
      {"forgot", "forget"}, {"forgotten", "forget"}, {"heard", "hear"}, {"held", "hold"}, {"led", "lead"},
      {"meant", "mean"}, {"sang", "sing"}, {"slept", "sleep"}, {"spoke", "speak"}, {"stole", "steal"},
      {"swore", "swear"}, {"taught", "teach"}, {"threw", "throw"}, {"wore", "wear"}, {"woke", "wake"},
      {"killed", "kill"}, {"died", "die"}, {"dying", "die"}, {"lied", "lie"}, {"lying", "lie"}, {"tied", "tie"},
      {"used", "use"}, {"added", "add"}, {"adding", "add"},
      // irregular plurals
      {"men", "man"}, {"women", "woman"}, {"children", "child"}, {"people", "person"}, {"feet", "foot"},
      {"teeth", "tooth"}, {"mice", "mouse"}, {"lives", "life"}, {"wives", "wife"}, {"knives", "knife"},
      {"wolves", "wolf"}, {"thieves", "thief"},
      // words that look inflected but are not
      {"this", "this"}, {"his", "his"}, {"its", "its"}, {"hers", "hers"}, {"yours", "yours"}, {"ours", "ours"},
      {"theirs", "theirs"}, {"us", "us"}, {"yes", "yes"}, {"news", "news"}, {"always", "always"},
      {"perhaps", "perhaps"}, {"sometimes", "sometimes"}, {"series", "series"}, {"species", "species"},
      {"thus", "thus"}, {"physics", "physics"}, {"need", "need"}, {"red", "red"}, {"bed", "bed"},
      {"sled", "sled"}, {"hundred", "hundred"}, {"sacred", "sacred"}, {"naked", "naked"}, {"wicked", "wicked"},
      {"wretched", "wretched"}, {"beloved", "beloved"}, {"nothing", "nothing"}, {"something", "something"},
      {"anything", "anything"}, {"everything", "everything"}, {"morning", "morning"}, {"evening", "evening"},
      {"wedding", "wedding"}, {"ceiling", "ceiling"}, {"during", "during"}, {"amazing", "amazing"},
      {"interesting", "interesting"}, {"boring", "boring"}, {"exciting", "exciting"}, {"charming", "charming"},
      {"darling", "darling"}, {"king", "king"}, {"ring", "ring"}, {"sing", "sing"}, {"thing", "thing"},
      {"bring", "bring"}, {"spring", "spring"}, {"string", "string"}, {"wing", "wing"}, {"swing", "swing"},
      {"sting", "sting"}, {"ping", "ping"},
      // participial adjectives listed under their own form in affect lexicons
      {"excited", "excited"}, {"tired", "tired"}, {"bored", "bored"}, {"interested", "interested"},
      {"surprised", "surprised"}, {"pleased", "pleased"}, {"annoyed", "annoyed"}, {"depressed", "depressed"},
      {"disappointed", "disappointed"}, {"embarrassed", "embarrassed"}, {"ashamed", "ashamed"},
      {"relaxed", "relaxed"}, {"confused", "confused"}, {"delighted", "delighted"}, {"frightened", "frightened"},
      {"terrified", "terrified"}, {"satisfied", "satisfied"}, {"stressed", "stressed"}, {"scared", "scared"},
      {"thrilled", "thrilled"}, {"worried", "worried"}, {"amused", "amused"}, {"talented", "talented"},
  };
  // kiss, bus, this, and possessive stems keep their final s.
  const std::vector<std::string> plural_blocked = {"s", "u", "i", "'"};
  rules.suffix_rules = {
      {"ies", "y", 2, {}, {}, StemRepair::none, false},
      {"ied", "y", 2, {}, {}, StemRepair::none, false},
      {"es", "", 2, {"ss", "x", "zz", "ch", "sh"}, {}, StemRepair::none, false},
      {"s", "", 2, {}, plural_blocked, StemRepair::none, false},
      {"ed", "", 2, {}, {"e"}, StemRepair::verb_ending, true},
      {"ing", "", 2, {}, {}, StemRepair::verb_ending, true},
  };
  return rules;
}

/// Lowercases `token`, then applies single rewrite steps until the result is
/// stable, so the result is always a fixed point of the rules.
inline std::string lemmatize(const LemmaRules& rules, std::string_view token) {
  std::string current = util::to_lower(token);
  if (current.empty()) return current;
  // Each rule application shortens the token by at least one character, so
  // this terminates; the cap guards against user exception tables with cycles.
  for (int i = 0; i < 16; ++i) {
    std::string next = detail::lemmatize_step(rules, current);
    if (next.empty() || next == current) break;
    current = std::move(next);
  }
  return current;
}

/// Defaults, with exception lines (`token<TAB>lemma`) from `in` merged over them.
inline LemmaRules load_rules(std::istream* in) {
  LemmaRules rules = default_lemma_rules();
  if (in == nullptr) return rules;
  std::string line;
  std::size_t line_no = 0;
  while (util::read_line(*in, line)) {
    ++line_no;
    if (util::trim(line).empty() || line.front() == '#') continue;
    const auto fields = util::split(line, '\t');
    if (fields.size() != 2) throw ParseError("expected token<TAB>lemma", line_no);
    const std::string token = util::to_lower(util::trim(fields[0]));
    const std::string lemma = util::to_lower(util::trim(fields[1]));
    if (token.empty() || lemma.empty() || util::has_whitespace(token) || util::has_whitespace(lemma)) {
      throw ParseError("empty or multi-word exception entry", line_no);
    }
    rules.exceptions[token] = lemma;
  }
  return rules;
}

}  // namespace affecton
