#pragma once
// A synthetic syllabified language used in place of licensed corpora.
//
// Syllables are drawn from the V, CV, VC and CVC templates over a fixed
// inventory, concatenated into words of 1-5 syllables, and then
// re-syllabified by the maximal-onset rule: between two vowels with no
// consonants the boundary falls right after the first vowel; otherwise the
// last intervocalic consonant becomes the onset of the next syllable. Gold
// labels are therefore a deterministic function of the phone string.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "syllab/lexicon.hpp"

namespace syllab {

inline constexpr std::string_view kSyntheticConsonants = "ptkbdgmnlrsfvz";
inline constexpr std::string_view kSyntheticVowels = "aeiou";

bool is_synthetic_vowel(std::string_view phone);

// Boundary labels for `phones` under the maximal-onset rule.
std::vector<Label> maximal_onset_boundaries(std::span<const std::string> phones);

// n_words entries with distinct words; the word is the phone string itself.
std::vector<SyllabifiedEntry> generate_synthetic_language(std::size_t n_words, std::uint64_t seed);

}  // namespace syllab
