#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qacap::metrics {

// Lowercased, punctuation-free tokens. Never contains empty strings.
using TokenSeq = std::vector<std::string>;

// Lowercase ASCII, drop ASCII punctuation, split on whitespace runs.
TokenSeq tokenize(std::string_view caption);

// Token-level normalization used for model outputs, which arrive already
// split: lowercases and strips punctuation, but keeps a pure-punctuation
// token (lowercased) rather than dropping it, so positions stay aligned with
// the per-token probabilities.
std::string normalize_token(std::string_view token);

inline constexpr double kRougeBeta = 1.2;
inline constexpr double kCiderSigma = 6.0;
inline constexpr int kCiderMaxN = 4;
inline constexpr int kBleuMaxN = 4;

// Sufficient statistics for BLEU: clipped matches and candidate n-gram totals
// per order, plus hypothesis and closest reference lengths.
struct BleuStats {
    std::vector<double> matches;
    std::vector<double> totals;
    double hyp_len = 0;
    double ref_len = 0;

    BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(const TokenSeq& hyp, const std::vector<TokenSeq>& refs, int max_n);
// Geometric mean of the first `n` clipped precisions times the brevity
// penalty; 0 if any order has no match.
double bleu_from_stats(const BleuStats& stats, int n);

// Sentence BLEU-n.
double bleu(const TokenSeq& hyp, const std::vector<TokenSeq>& refs, int n);

// Corpus BLEU-1..max_n from pooled statistics (the usual caption-benchmark
// convention). Index i holds BLEU-(i+1).
std::vector<double> corpus_bleu(const std::vector<std::pair<TokenSeq, std::vector<TokenSeq>>>& corpus,
                                int max_n = kBleuMaxN);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

// Max over references of the LCS F-measure with beta = 1.2.
double rouge_l(const TokenSeq& hyp, const std::vector<TokenSeq>& refs);

struct CiderResult {
    std::vector<double> per_image;
    double mean = 0;
};

using CaptionCorpus = std::vector<std::pair<TokenSeq, std::vector<TokenSeq>>>;

// CIDEr-D with document frequencies taken from the corpus references,
// clipped candidate weights, Gaussian length penalty (sigma 6) and the x10
// scale. Needs at least two images.
CiderResult cider_d(const CaptionCorpus& corpus);

struct AlignmentResult {
    double ter = 0;                     // edits / reference length
    std::size_t edits = 0;
    std::vector<bool> per_word_correct; // one flag per hypothesis token
    std::size_t chosen_ref_index = 0;
};

// Unit-cost Levenshtein distance between token sequences.
std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b);

// Word-level alignment against the closest reference (lowest TER, ties to the
// lowest index). A hypothesis word is correct when some minimum-cost
// alignment matches it. No block shifts.
AlignmentResult ter_align(const TokenSeq& hyp, const std::vector<TokenSeq>& refs);

}  // namespace qacap::metrics
