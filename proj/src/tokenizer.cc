#include "adforge/tokenizer.h"

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

void CheckSequenceLength(int64_t length, int64_t max_seq, const std::string &what) {
    if (max_seq > 0 && length > max_seq) {
        throw SequenceLengthError(what + " of " + std::to_string(length) + " tokens exceeds max_seq "
                                  + std::to_string(max_seq));
    }
}

std::vector<int> TokenizeBytes(std::string_view text) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) {
        ids.push_back(static_cast<int>(c));
    }
    return ids;
}

TokenSeq Tokenize(std::string_view text, int64_t max_seq) {
    CheckSequenceLength(static_cast<int64_t>(text.size()) + 1, max_seq, "token sequence");
    TokenSeq seq;
    seq.ids.reserve(text.size() + 1);
    seq.ids.push_back(kBosToken);
    for (unsigned char c : text) {
        seq.ids.push_back(static_cast<int>(c));
    }
    return seq;
}

std::string Detokenize(const std::vector<int> &ids) {
    std::string out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id >= 0 && id < 256) {
            out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
        }
    }
    return out;
}

std::string Detokenize(const TokenSeq &tokens) { return Detokenize(tokens.ids); }

ADFORGE_NAMESPACE_END
