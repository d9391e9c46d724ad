#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cbd {

using TokenList = std::vector<std::string>;
using TokenId = std::int32_t;

/// Lowercase, split on Unicode whitespace, strip leading/trailing punctuation
/// from each token, drop empties. Interior punctuation (won't, e-mail) stays.
TokenList tokenize(std::string_view s);

class Vocab {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;
    static constexpr TokenId kMask = 2;
    static constexpr TokenId kFirstToken = 3;
    static constexpr std::string_view kReservedNames[3] = {"<pad>", "<unk>", "<mask>"};

    Vocab();

    /// Most frequent tokens with count >= min_count, at most max_size of them
    /// (reserved ids not counted). Ties broken lexicographically.
    static Vocab build(const std::vector<TokenList>& corpus, std::size_t min_count,
                       std::size_t max_size);

    /// Unknown tokens map to kUnk.
    [[nodiscard]] TokenId id(std::string_view token) const;
    [[nodiscard]] bool contains(std::string_view token) const;
    [[nodiscard]] const std::string& token(TokenId id) const;
    [[nodiscard]] std::uint64_t count(TokenId id) const;
    [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
    [[nodiscard]] const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

    void write(std::ostream& os) const;
    static Vocab read(std::istream& is);

    friend bool operator==(const Vocab& a, const Vocab& b) {
        return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
    }

private:
    void push(std::string token, std::uint64_t count);

    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, TokenId> index_;
};

Vocab build_vocab(const std::vector<TokenList>& corpus, std::size_t min_count,
                  std::size_t max_size);

/// Fixed-length id sequence. mask[i] == 1 marks a real token; the mask is a
/// run of ones followed by zeros.
struct EncodedText {
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> attention_mask;

    [[nodiscard]] std::size_t length() const noexcept { return ids.size(); }
    [[nodiscard]] std::size_t real_tokens() const noexcept;
};

/// Truncates at the tail (keeps the head), pads with kPad / mask 0.
EncodedText encode(const TokenList& tokens, const Vocab& v, std::size_t max_len);

TokenList decode(const EncodedText& x, const Vocab& v);

}  // namespace cbd
