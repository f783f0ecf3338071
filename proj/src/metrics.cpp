#include "qacap/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "qacap/error.hpp"

namespace qacap::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, int>;

// Counts of every n-gram of order exactly n.
NgramCounts ngrams(const TokenSeq& seq, int n) {
    NgramCounts out;
    if (seq.size() < static_cast<std::size_t>(n)) return out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= seq.size(); ++i)
        ++out[std::vector<std::string_view>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                            seq.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    return out;
}

void require_refs(const std::vector<TokenSeq>& refs, const char* metric) {
    if (refs.empty()) throw ParameterError(std::string(metric) + ": no references");
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

TokenSeq tokenize(std::string_view caption) {
    TokenSeq out;
    std::string cur;
    for (char c : caption) {
        if (is_space(c)) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else if (!is_punct(c)) {
            cur.push_back(lower(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string normalize_token(std::string_view token) {
    std::string out, raw;
    for (char c : token) {
        if (is_space(c)) continue;
        raw.push_back(lower(c));
        if (!is_punct(c)) out.push_back(lower(c));
    }
    if (!out.empty()) return out;
    return raw.empty() ? std::string(token) : raw;
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
    matches.resize(std::max(matches.size(), o.matches.size()));
    totals.resize(std::max(totals.size(), o.totals.size()));
    for (std::size_t i = 0; i < o.matches.size(); ++i) matches[i] += o.matches[i];
    for (std::size_t i = 0; i < o.totals.size(); ++i) totals[i] += o.totals[i];
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
}

BleuStats bleu_stats(const TokenSeq& hyp, const std::vector<TokenSeq>& refs, int max_n) {
    require_refs(refs, "BLEU");
    if (max_n < 1) throw ParameterError("BLEU order must be >= 1");
    BleuStats s;
    s.matches.assign(static_cast<std::size_t>(max_n), 0.0);
    s.totals.assign(static_cast<std::size_t>(max_n), 0.0);
    s.hyp_len = static_cast<double>(hyp.size());

    // Closest reference length, ties to the shorter one.
    std::size_t best = refs.front().size();
    for (const auto& r : refs) {
        const auto d = [&](std::size_t len) {
            return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
        };
        if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    s.ref_len = static_cast<double>(best);

    for (int n = 1; n <= max_n; ++n) {
        const auto hyp_counts = ngrams(hyp, n);
        NgramCounts max_ref;
        for (const auto& r : refs)
            for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
        double matched = 0, total = 0;
        for (const auto& [g, c] : hyp_counts) {
            total += c;
            if (auto it = max_ref.find(g); it != max_ref.end()) matched += std::min(c, it->second);
        }
        s.matches[static_cast<std::size_t>(n - 1)] = matched;
        s.totals[static_cast<std::size_t>(n - 1)] = total;
    }
    return s;
}

double bleu_from_stats(const BleuStats& s, int n) {
    if (n < 1 || static_cast<std::size_t>(n) > s.matches.size())
        throw ParameterError("BLEU order " + std::to_string(n) + " not available");
    if (s.hyp_len == 0) return 0.0;
    double log_p = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (s.matches[i] == 0 || s.totals[i] == 0) return 0.0;
        log_p += std::log(s.matches[i] / s.totals[i]);
    }
    const double bp = s.hyp_len < s.ref_len ? std::exp(1.0 - s.ref_len / s.hyp_len) : 1.0;
    return bp * std::exp(log_p / n);
}

double bleu(const TokenSeq& hyp, const std::vector<TokenSeq>& refs, int n) {
    if (n < 1 || n > kBleuMaxN) throw ParameterError("BLEU order must be in [1, 4]");
    return bleu_from_stats(bleu_stats(hyp, refs, n), n);
}

std::vector<double> corpus_bleu(const std::vector<std::pair<TokenSeq, std::vector<TokenSeq>>>& corpus,
                                int max_n) {
    BleuStats pooled;
    pooled.matches.assign(static_cast<std::size_t>(max_n), 0.0);
    pooled.totals.assign(static_cast<std::size_t>(max_n), 0.0);
    for (const auto& [hyp, refs] : corpus) pooled += bleu_stats(hyp, refs, max_n);
    std::vector<double> out;
    for (int n = 1; n <= max_n; ++n) out.push_back(bleu_from_stats(pooled, n));
    return out;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const TokenSeq& hyp, const std::vector<TokenSeq>& refs) {
    require_refs(refs, "ROUGE-L");
    if (hyp.empty()) return 0.0;
    constexpr double beta2 = kRougeBeta * kRougeBeta;
    double best = 0.0;
    for (const auto& r : refs) {
        if (r.empty()) continue;
        const auto lcs = static_cast<double>(lcs_length(hyp, r));
        if (lcs == 0) continue;
        const double prec = lcs / static_cast<double>(hyp.size());
        const double rec = lcs / static_cast<double>(r.size());
        best = std::max(best, (1 + beta2) * prec * rec / (rec + beta2 * prec));
    }
    return best;
}

namespace {

struct CiderVec {
    std::array<std::map<std::vector<std::string_view>, double>, kCiderMaxN> weights;
    std::array<double, kCiderMaxN> norm{};
    double length = 0;
};

}  // namespace

CiderResult cider_d(const CaptionCorpus& corpus) {
    if (corpus.size() < 2)
        throw ParameterError("CIDEr-D needs a corpus of at least 2 images for document frequencies");
    for (const auto& [hyp, refs] : corpus) require_refs(refs, "CIDEr-D");

    // Document frequency: number of images whose reference set contains the n-gram.
    std::map<std::vector<std::string_view>, double> df;
    for (const auto& [hyp, refs] : corpus) {
        std::set<std::vector<std::string_view>> seen;
        for (const auto& r : refs)
            for (int n = 1; n <= kCiderMaxN; ++n)
                for (const auto& [g, c] : ngrams(r, n)) seen.insert(g);
        for (const auto& g : seen) df[g] += 1.0;
    }
    const double log_images = std::log(static_cast<double>(corpus.size()));

    auto vectorize = [&](const TokenSeq& seq) {
        CiderVec v;
        v.length = static_cast<double>(seq.size());
        for (int n = 1; n <= kCiderMaxN; ++n) {
            auto& w = v.weights[static_cast<std::size_t>(n - 1)];
            double& norm = v.norm[static_cast<std::size_t>(n - 1)];
            for (const auto& [g, tf] : ngrams(seq, n)) {
                auto it = df.find(g);
                const double d = it == df.end() ? 1.0 : std::max(1.0, it->second);
                const double x = tf * (log_images - std::log(d));
                w[g] = x;
                norm += x * x;
            }
            norm = std::sqrt(norm);
        }
        return v;
    };

    CiderResult out;
    out.per_image.reserve(corpus.size());
    for (const auto& [hyp, refs] : corpus) {
        const CiderVec h = vectorize(hyp);
        std::array<double, kCiderMaxN> acc{};
        for (const auto& ref : refs) {
            const CiderVec r = vectorize(ref);
            const double delta = h.length - r.length;
            const double penalty = std::exp(-(delta * delta) / (2 * kCiderSigma * kCiderSigma));
            for (std::size_t n = 0; n < kCiderMaxN; ++n) {
                double val = 0.0;
                for (const auto& [g, x] : h.weights[n]) {
                    auto it = r.weights[n].find(g);
                    if (it != r.weights[n].end()) val += std::min(x, it->second) * it->second;
                }
                if (h.norm[n] != 0 && r.norm[n] != 0) val /= h.norm[n] * r.norm[n];
                acc[n] += val * penalty;
            }
        }
        double score = 0.0;
        for (double a : acc) score += a;
        score = score / kCiderMaxN / static_cast<double>(refs.size()) * 10.0;
        out.per_image.push_back(score);
    }
    double sum = 0.0;
    for (double s : out.per_image) sum += s;
    out.mean = sum / static_cast<double>(out.per_image.size());
    return out;
}

std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

// Prefix distances fwd[i][j] = d(hyp[0,i), ref[0,j)) and suffix distances
// bwd[i][j] = d(hyp[i,m), ref[j,n)). A match cell (i, j) lies on an optimal
// path iff fwd[i][j] + bwd[i+1][j+1] equals the total distance.
AlignmentResult align_one(const TokenSeq& hyp, const TokenSeq& ref) {
    const std::size_t m = hyp.size(), n = ref.size();
    std::vector<std::vector<std::size_t>> fwd(m + 1, std::vector<std::size_t>(n + 1));
    std::vector<std::vector<std::size_t>> bwd(m + 2, std::vector<std::size_t>(n + 2, 0));
    for (std::size_t i = 0; i <= m; ++i) fwd[i][0] = i;
    for (std::size_t j = 0; j <= n; ++j) fwd[0][j] = j;
    for (std::size_t i = 1; i <= m; ++i)
        for (std::size_t j = 1; j <= n; ++j)
            fwd[i][j] = std::min({fwd[i - 1][j] + 1, fwd[i][j - 1] + 1,
                                  fwd[i - 1][j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1)});
    for (std::size_t i = m + 1; i-- > 0;) {
        for (std::size_t j = n + 1; j-- > 0;) {
            if (i == m) bwd[i][j] = n - j;
            else if (j == n) bwd[i][j] = m - i;
            else
                bwd[i][j] = std::min({bwd[i + 1][j] + 1, bwd[i][j + 1] + 1,
                                      bwd[i + 1][j + 1] + (hyp[i] == ref[j] ? 0 : 1)});
        }
    }
    AlignmentResult r;
    r.edits = fwd[m][n];
    r.ter = static_cast<double>(r.edits) / static_cast<double>(n);
    r.per_word_correct.assign(m, false);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n && !r.per_word_correct[i]; ++j)
            if (hyp[i] == ref[j] && fwd[i][j] + bwd[i + 1][j + 1] == r.edits)
                r.per_word_correct[i] = true;
    return r;
}

}  // namespace

AlignmentResult ter_align(const TokenSeq& hyp, const std::vector<TokenSeq>& refs) {
    if (hyp.empty()) throw ParameterError("TER alignment: empty hypothesis");
    require_refs(refs, "TER alignment");
    AlignmentResult best;
    bool have = false;
    for (std::size_t k = 0; k < refs.size(); ++k) {
        if (refs[k].empty())
            throw ParameterError("TER alignment: reference " + std::to_string(k) + " is empty");
        AlignmentResult r = align_one(hyp, refs[k]);
        r.chosen_ref_index = k;
        if (!have || r.ter < best.ter) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

}  // namespace qacap::metrics
