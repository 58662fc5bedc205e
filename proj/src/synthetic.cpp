#include "syllab/synthetic.hpp"

#include <unordered_set>

#include "syllab/error.hpp"
#include "syllab/tensor.hpp"

namespace syllab {

bool is_synthetic_vowel(std::string_view phone) {
    return phone.size() == 1 && kSyntheticVowels.find(phone[0]) != std::string_view::npos;
}

std::vector<Label> maximal_onset_boundaries(std::span<const std::string> phones) {
    std::vector<Label> labels(phones.size(), 0);
    std::size_t previous_vowel = phones.size();
    for (std::size_t i = 0; i < phones.size(); ++i) {
        if (!is_synthetic_vowel(phones[i])) continue;
        if (previous_vowel != phones.size()) {
            const std::size_t consonants = i - previous_vowel - 1;
            // One-consonant onsets: the boundary precedes the last consonant.
            labels[consonants == 0 ? previous_vowel : i - 2] = 1;
        }
        previous_vowel = i;
    }
    return labels;
}

std::vector<SyllabifiedEntry> generate_synthetic_language(std::size_t n_words, std::uint64_t seed) {
    if (n_words < 1) throw DataError("generate_synthetic_language: n_words must be >= 1");
    Rng rng(seed);
    auto pick = [&](std::string_view inventory) { return std::string(1, inventory[rng.below(inventory.size())]); };

    std::vector<SyllabifiedEntry> out;
    out.reserve(n_words);
    std::unordered_set<std::string> seen;
    while (out.size() < n_words) {
        const std::size_t syllables = 1 + rng.below(5);
        std::vector<std::string> phones;
        for (std::size_t s = 0; s < syllables; ++s) {
            const auto shape = rng.below(4);  // 0 V, 1 CV, 2 VC, 3 CVC
            if (shape == 1 || shape == 3) phones.push_back(pick(kSyntheticConsonants));
            phones.push_back(pick(kSyntheticVowels));
            if (shape == 2 || shape == 3) phones.push_back(pick(kSyntheticConsonants));
        }
        std::string word;
        for (const auto& p : phones) word += p;
        if (!seen.insert(word).second) continue;
        SyllabifiedEntry entry;
        entry.word = std::move(word);
        entry.boundaries = maximal_onset_boundaries(phones);
        entry.phones = std::move(phones);
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace syllab
