#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace memefuse {

// Single-pass nonstandard-form to standard-form rewrites ("plz" -> "please").
class ReplacementLexicon {
public:
    ReplacementLexicon() = default;

    // One "nonstandard<TAB>standard" pair per line; "#" starts a comment.
    static ReplacementLexicon load(const std::string& path);
    static ReplacementLexicon parse(const std::string& content, const std::string& origin);
    // The built-in 50-entry netspeak list (mirrors data/netspeak.lex).
    static const ReplacementLexicon& builtin();

    void insert(const std::string& key, const std::string& value);
    const std::string* find(const std::string& token) const;
    std::size_t size() const { return map_.size(); }

    // FNV-1a over the sorted key/value pairs; stored in model bundles so a
    // bundle can be matched with the lexicon it was trained with.
    std::uint64_t hash() const;

private:
    std::map<std::string, std::string> map_;
};

// Deletes URLs, e-mail addresses and punctuation, collapses whitespace,
// lowercases. Apostrophes between alphanumerics survive ("don't").
std::string clean(const std::string& text);

// Replaces every whitespace-delimited token found in the lexicon.
std::string restore(const std::string& text, const ReplacementLexicon& lex);

// Whitespace split; any token with a character outside [a-z0-9'] becomes
// "<unk>"; at most the first 128 tokens are kept.
std::vector<std::string> tokenize(const std::string& text);

// clean + restore + tokenize.
std::vector<std::string> preprocess(const std::string& text, const ReplacementLexicon& lex);

inline constexpr std::size_t kMaxTokens = 128;
inline constexpr const char* kUnkToken = "<unk>";

}  // namespace memefuse
