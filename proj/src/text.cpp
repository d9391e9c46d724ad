#include "cbd/text.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cbd/error.hpp"

namespace cbd {

namespace {

constexpr char32_t kInvalid = 0xFFFD;

// Decodes one code point starting at s[i]; advances i. Malformed bytes decode
// to U+FFFD one byte at a time.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
        len = 4;
        cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if (b0 >= 0x80) {
        ++i;
        return kInvalid;
    }
    if (len > 1) {
        if (i + len > s.size()) {
            ++i;
            return kInvalid;
        }
        for (int k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) {
                ++i;
                return kInvalid;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
    }
    i += len;
    return cp;
}

bool is_space(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_punct(char32_t c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
               (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    }
    // Latin-1 punctuation, general punctuation block, CJK punctuation,
    // fullwidth ASCII punctuation.
    if (c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB ||
        c == 0xBF) {
        return true;
    }
    if (c >= 0x2010 && c <= 0x2027) return true;
    if (c >= 0x2030 && c <= 0x205E) return true;
    if (c >= 0x3001 && c <= 0x3003) return true;
    if (c >= 0x3008 && c <= 0x3011) return true;
    if (c >= 0xFF01 && c <= 0xFF0F) return true;
    return false;
}

struct Piece {
    char32_t cp;
    std::size_t begin;
    std::size_t end;
};

void flush(std::string_view src, std::vector<Piece>& word, TokenList& out) {
    std::size_t lo = 0;
    std::size_t hi = word.size();
    while (lo < hi && is_punct(word[lo].cp)) ++lo;
    while (hi > lo && is_punct(word[hi - 1].cp)) --hi;
    if (lo < hi) {
        std::string tok;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto& p = word[k];
            if (p.cp < 0x80) {
                char c = static_cast<char>(p.cp);
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
                tok.push_back(c);
            } else {
                tok.append(src.substr(p.begin, p.end - p.begin));
            }
        }
        out.push_back(std::move(tok));
    }
    word.clear();
}

}  // namespace

TokenList tokenize(std::string_view s) {
    TokenList out;
    std::vector<Piece> word;
    std::size_t i = 0;
    while (i < s.size()) {
        const std::size_t begin = i;
        const char32_t cp = next_code_point(s, i);
        if (is_space(cp)) {
            flush(s, word, out);
        } else {
            word.push_back({cp, begin, i});
        }
    }
    flush(s, word, out);
    return out;
}

// ---------------------------------------------------------------------------

Vocab::Vocab() {
    for (auto name : kReservedNames) push(std::string(name), 0);
}

void Vocab::push(std::string token, std::uint64_t count) {
    const auto id = static_cast<TokenId>(tokens_.size());
    if (!index_.emplace(token, id).second) {
        throw FormatError("vocab: duplicate token '" + token + "'");
    }
    tokens_.push_back(std::move(token));
    counts_.push_back(count);
}

Vocab Vocab::build(const std::vector<TokenList>& corpus, std::size_t min_count,
                   std::size_t max_size) {
    if (corpus.empty()) throw DataError("build_vocab: empty corpus");
    if (min_count == 0 || max_size == 0) throw UsageError("build_vocab: min_count and max_size must be positive");
    std::map<std::string, std::uint64_t, std::less<>> freq;
    for (const auto& sentence : corpus) {
        for (const auto& t : sentence) ++freq[t];
    }
    for (auto name : kReservedNames) {
        if (auto it = freq.find(name); it != freq.end()) freq.erase(it);
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [tok, n] : freq) {
        if (n >= min_count) kept.emplace_back(tok, n);
    }
    if (kept.empty()) throw DataError("build_vocab: no token meets min_count");
    // freq is ordered, so a stable sort by count leaves ties lexicographic.
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (kept.size() > max_size) kept.resize(max_size);
    Vocab v;
    for (auto& [tok, n] : kept) v.push(std::move(tok), n);
    return v;
}

TokenId Vocab::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
    return index_.contains(std::string(token));
}

const std::string& Vocab::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw DataError("vocab: id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocab::count(TokenId id) const {
    (void)token(id);
    return counts_[static_cast<std::size_t>(id)];
}

void Vocab::write(std::ostream& os) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (i < kFirstToken) {
            os << tokens_[i] << '\n';
        } else {
            os << tokens_[i] << '\t' << counts_[i] << '\n';
        }
    }
}

Vocab Vocab::read(std::istream& is) {
    Vocab v;
    std::string line;
    for (auto name : kReservedNames) {
        if (!std::getline(is, line) || line != name) {
            throw FormatError("vocab: expected reserved token header line '" + std::string(name) + "'");
        }
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        std::uint64_t count = 0;
        std::string tok = line.substr(0, tab);
        if (tab != std::string::npos) {
            std::istringstream num(line.substr(tab + 1));
            if (!(num >> count)) throw FormatError("vocab: bad count for token '" + tok + "'");
        }
        v.push(std::move(tok), count);
    }
    return v;
}

Vocab build_vocab(const std::vector<TokenList>& corpus, std::size_t min_count,
                  std::size_t max_size) {
    return Vocab::build(corpus, min_count, max_size);
}

// ---------------------------------------------------------------------------

std::size_t EncodedText::real_tokens() const noexcept {
    return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
}

EncodedText encode(const TokenList& tokens, const Vocab& v, std::size_t max_len) {
    if (max_len == 0) throw UsageError("encode: max_len must be at least 1");
    EncodedText x;
    x.ids.assign(max_len, Vocab::kPad);
    x.attention_mask.assign(max_len, 0);
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) {
        x.ids[i] = v.id(tokens[i]);
        x.attention_mask[i] = 1;
    }
    return x;
}

TokenList decode(const EncodedText& x, const Vocab& v) {
    TokenList out;
    for (std::size_t i = 0; i < x.ids.size(); ++i) {
        if (x.attention_mask[i]) out.push_back(v.token(x.ids[i]));
    }
    return out;
}

}  // namespace cbd
