#pragma once

// Text normalization, tokenization and the shipped stopword list.
//
// Every string comparison in the engine (exact label/alias match, token
// postings, context similarity) goes through normalize(), so the result of
// a link is reproducible as long as kNormalizationVersion and
// kStopwordVersion are unchanged. Both versions are recorded in index
// manifests.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace tablink::text {

inline constexpr std::string_view kNormalizationVersion = "nfc-lower-ws-1";
inline constexpr std::string_view kStopwordVersion = "en-stop-1";

namespace detail {

inline bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string normalize_ascii(std::string_view s) {
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
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

inline std::string normalize_unicode(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    if (U_SUCCESS(status)) u = nfc->normalize(u, status);
    u.toLower(icu::Locale::getRoot());
    if (U_SUCCESS(status)) u = nfc->normalize(u, status);

    icu::UnicodeString collapsed;
    bool pending_space = false;
    for (int32_t i = 0; i < u.length();) {
        UChar32 cp = u.char32At(i);
        i += U16_LENGTH(cp);
        if (u_isUWhiteSpace(cp)) {
            pending_space = !collapsed.isEmpty();
            continue;
        }
        if (pending_space) {
            collapsed.append(static_cast<UChar>(' '));
            pending_space = false;
        }
        collapsed.append(cp);
    }
    std::string out;
    collapsed.toUTF8String(out);
    return out;
}

// Fixed English stopword list, sorted for binary search.
inline constexpr std::string_view kStopwords[] = {
    "a",       "about",   "above",  "after",   "again",   "against", "all",    "am",     "an",
    "and",     "any",     "are",    "as",      "at",      "be",      "because", "been",  "before",
    "being",   "below",   "between", "both",   "but",     "by",      "can",     "could", "did",
    "do",      "does",    "doing",  "down",    "during",  "each",    "few",     "for",   "from",
    "further", "had",     "has",    "have",    "having",  "he",      "her",     "here",  "hers",
    "herself", "him",     "himself", "his",    "how",     "i",       "if",      "in",    "into",
    "is",      "it",      "its",    "itself",  "just",    "me",      "more",    "most",  "my",
    "myself",  "no",      "nor",    "not",     "now",     "of",      "off",     "on",    "once",
    "only",    "or",      "other",  "our",     "ours",    "ourselves", "out",   "over",  "own",
    "same",    "she",     "should", "so",      "some",    "such",    "than",    "that",  "the",
    "their",   "theirs",  "them",   "themselves", "then", "there",   "these",   "they",  "this",
    "those",   "through", "to",     "too",     "under",   "until",   "up",      "very",  "was",
    "we",      "were",    "what",   "when",    "where",   "which",   "while",   "who",   "whom",
    "why",     "will",    "with",   "would",   "you",     "your",    "yours",   "yourself",
    "yourselves",
};

}  // namespace detail

// NFC, lowercase, trim, collapse internal whitespace runs to one space.
inline std::string normalize(std::string_view s) {
    return detail::is_ascii(s) ? detail::normalize_ascii(s) : detail::normalize_unicode(s);
}

inline bool is_stopword(std::string_view token) {
    return std::binary_search(std::begin(detail::kStopwords), std::end(detail::kStopwords), token);
}

inline std::span<const std::string_view> stopwords() { return detail::kStopwords; }

// Splits an already-normalized string into maximal runs of letters/digits.
// Stopwords are kept; callers filter with content_tokens().
inline std::vector<std::string> split_words(std::string_view normalized) {
    std::vector<std::string> out;
    std::string current;
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(normalized.data());
    const auto len = static_cast<int32_t>(normalized.size());
    for (int32_t i = 0; i < len;) {
        int32_t start = i;
        UChar32 cp;
        U8_NEXT(bytes, i, len, cp);
        bool word = cp >= 0 && (cp < 0x80 ? ((cp >= 'a' && cp <= 'z') || (cp >= '0' && cp <= '9') ||
                                              (cp >= 'A' && cp <= 'Z'))
                                          : static_cast<bool>(u_isalnum(cp)));
        if (word) {
            current.append(normalized.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

// Non-stopword tokens of raw text (normalizes first). Order preserved,
// duplicates kept so callers can build term frequencies.
inline std::vector<std::string> content_tokens(std::string_view raw) {
    auto words = split_words(normalize(raw));
    std::erase_if(words, [](const std::string& w) { return is_stopword(w); });
    return words;
}

// Sorted, de-duplicated content tokens.
inline std::vector<std::string> token_set(std::string_view raw) {
    auto t = content_tokens(raw);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

inline std::map<std::string, int> term_frequencies(std::string_view raw) {
    std::map<std::string, int> tf;
    for (auto& t : content_tokens(raw)) ++tf[t];
    return tf;
}

}  // namespace tablink::text
