#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace genst {

// Lowercasing tokenizer used for all matching and BLEU scoring.
// Rules: whitespace separates tokens; every punctuation codepoint becomes a
// token of its own (so "..." -> [".", ".", "."], "j'étais" -> [j, ', étais]);
// letters, digits and '_' form word tokens. ASCII and Latin-1 uppercase
// letters are lowercased.
std::vector<std::string> tokenize(std::string_view text);

// True iff `needle` occurs as a contiguous run inside `haystack`.
bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle);

// Split on single spaces without any case folding; used for the toy
// language whose tokens (e.g. "<to-f>", "t_am") must stay intact.
std::vector<std::string> split_ws(std::string_view text);

}  // namespace genst
