#include "memefuse/preprocess.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "memefuse/error.hpp"

namespace memefuse {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_ascii_punct(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

// True if s[pos..] starts with "scheme://" for some [A-Za-z][A-Za-z0-9+.-]*.
bool url_scheme_at(const std::string& s, std::size_t pos, std::size_t* body_start) {
    std::size_t i = pos;
    if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i]))) return false;
    ++i;
    while (i < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '+' || s[i] == '.' ||
            s[i] == '-')) {
        ++i;
    }
    if (i + 2 < s.size() && s[i] == ':' && s[i + 1] == '/' && s[i + 2] == '/') {
        *body_start = i + 3;
        return true;
    }
    return false;
}

bool www_at(const std::string& s, std::size_t pos) {
    return s.compare(pos, 4, "www.") == 0;
}

// Deletes every maximal non-whitespace run that starts with scheme:// or
// www., or that contains '@' followed by a dotted domain. Runs before the
// punctuation pass so "a.com" is never shredded into tokens first.
std::string strip_urls_and_emails(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_ascii_space(s[i])) {
            out.push_back(s[i]);
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < s.size() && !is_ascii_space(s[end])) ++end;

        bool drop = false;
        std::size_t ignored;
        for (std::size_t k = i; k < end && !drop; ++k) {
            if (url_scheme_at(s, k, &ignored) || www_at(s, k)) drop = true;
        }
        if (!drop) {
            // e-mail: '@' with a dot somewhere in the rest of the token
            std::size_t at = s.find('@', i);
            if (at != std::string::npos && at < end) {
                std::size_t d = s.find('.', at + 1);
                if (d != std::string::npos && d < end) drop = true;
            }
        }
        if (!drop) out.append(s, i, end - i);
        i = end;
    }
    return out;
}

std::string strip_punct(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (!is_ascii_punct(c)) {
            out.push_back(c);
            continue;
        }
        if (c == '\'' && i > 0 && i + 1 < s.size() && is_ascii_alnum(s[i - 1]) &&
            is_ascii_alnum(s[i + 1])) {
            out.push_back(c);  // apostrophe inside a word
        }
    }
    return out;
}

std::string collapse_and_lower(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.push_back(c);
    }
    return out;
}

bool plain_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

}  // namespace

std::string clean(const std::string& text) {
    return collapse_and_lower(strip_punct(strip_urls_and_emails(text)));
}

std::string restore(const std::string& text, const ReplacementLexicon& lex) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_ascii_space(text[i])) {
            out.push_back(text[i]);
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && !is_ascii_space(text[end])) ++end;
        std::string token = text.substr(i, end - i);
        if (const std::string* v = lex.find(token)) {
            out.append(*v);
        } else {
            out.append(token);
        }
        i = end;
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size() && tokens.size() < kMaxTokens) {
        if (is_ascii_space(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        bool plain = true;
        while (end < text.size() && !is_ascii_space(text[end])) {
            if (!plain_token_char(text[end])) plain = false;
            ++end;
        }
        tokens.push_back(plain ? text.substr(i, end - i) : std::string(kUnkToken));
        i = end;
    }
    return tokens;
}

std::vector<std::string> preprocess(const std::string& text, const ReplacementLexicon& lex) {
    return tokenize(restore(clean(text), lex));
}

ReplacementLexicon ReplacementLexicon::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("lexicon: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

ReplacementLexicon ReplacementLexicon::parse(const std::string& content,
                                             const std::string& origin) {
    ReplacementLexicon lex;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("lexicon: " + origin + ":" + std::to_string(lineno) +
                            ": expected 'nonstandard<TAB>standard'");
        }
        std::string key = line.substr(0, tab);
        std::string value = line.substr(tab + 1);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
        if (key.empty() || value.empty()) {
            throw DataError("lexicon: " + origin + ":" + std::to_string(lineno) +
                            ": empty key or value");
        }
        for (char c : key) {
            if ((c >= 'A' && c <= 'Z') || is_ascii_space(c)) {
                throw DataError("lexicon: " + origin + ":" + std::to_string(lineno) +
                                ": keys must be lowercase single tokens");
            }
        }
        if (key == value) {
            throw DataError("lexicon: " + origin + ":" + std::to_string(lineno) +
                            ": key maps to itself");
        }
        lex.insert(key, value);
    }
    return lex;
}

const ReplacementLexicon& ReplacementLexicon::builtin() {
    static const ReplacementLexicon lex = parse(
#include "netspeak_lex.inc"
        , "<builtin>");
    return lex;
}

void ReplacementLexicon::insert(const std::string& key, const std::string& value) {
    map_[key] = value;
}

const std::string* ReplacementLexicon::find(const std::string& token) const {
    auto it = map_.find(token);
    return it == map_.end() ? nullptr : &it->second;
}

std::uint64_t ReplacementLexicon::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const std::string& s) {
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [k, v] : map_) {  // std::map: sorted, canonical order
        mix(k);
        h ^= '\t';
        h *= 0x100000001b3ULL;
        mix(v);
        h ^= '\n';
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace memefuse
