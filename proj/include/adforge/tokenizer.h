#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adforge/real.h"

ADFORGE_NAMESPACE_BEGIN

// Byte-level vocabulary: ids 0..255 are raw bytes, then three specials.
inline constexpr int kBosToken = 256;
inline constexpr int kEosToken = 257;
inline constexpr int kPadToken = 258;
inline constexpr int kVocabSize = 259;

struct TokenSeq {
    std::vector<int> ids;

    size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
    friend bool operator==(const TokenSeq &, const TokenSeq &) = default;
};

// BOS followed by the UTF-8 bytes of `text`. Throws SequenceLengthError when
// the result would exceed `max_seq` (0 disables the check).
TokenSeq Tokenize(std::string_view text, int64_t max_seq = 0);

// Raw byte ids of `text`, without BOS.
std::vector<int> TokenizeBytes(std::string_view text);

// Concatenates byte tokens; specials are dropped.
std::string Detokenize(const TokenSeq &tokens);
std::string Detokenize(const std::vector<int> &ids);

void CheckSequenceLength(int64_t length, int64_t max_seq, const std::string &what);

ADFORGE_NAMESPACE_END
