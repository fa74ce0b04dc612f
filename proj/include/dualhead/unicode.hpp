#pragma once

#include <string>
#include <string_view>

namespace dualhead {

// NFC normalization. Ill-formed UTF-8 sequences become U+FFFD.
std::string nfc(std::string_view text);

// NFC, then ASCII whitespace runs collapsed to one space and trimmed.
std::string normalize_text(std::string_view text);

bool is_valid_utf8(std::string_view text);

// Length of the well-formed UTF-8 sequence starting at `pos`, or 0.
std::size_t utf8_sequence_length(std::string_view text, std::size_t pos);

}  // namespace dualhead
