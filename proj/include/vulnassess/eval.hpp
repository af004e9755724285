#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "vulnassess/errors.hpp"

namespace vulnassess {

constexpr int kNumSeverities = 4;

struct PredictionSet {
    // (true label 0..3, probability distribution over the four severities)
    std::vector<std::pair<int, std::array<double, 4>>> items;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t support = 0;
};

struct MetricReport {
    double auc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::array<ClassMetrics, 4> per_class{};
};

inline double f1_from_pr(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace detail {

inline int argmax4(const std::array<double, 4> &d) {
    int best = 0;
    for (int c = 1; c < 4; ++c)
        if (d[static_cast<size_t>(c)] > d[static_cast<size_t>(best)]) best = c;
    return best;
}

/// Binary ROC AUC via the Mann–Whitney rank statistic with midrank ties.
inline double binary_auc(const std::vector<double> &scores, const std::vector<bool> &positive) {
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    std::vector<double> rank(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    size_t n_pos = 0;
    for (size_t k = 0; k < n; ++k) {
        if (positive[k]) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    }
    size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nan("");
    double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

} // namespace detail

/// One-vs-Rest AUC, macro-averaged over classes that have both positives and
/// negatives.
inline double auc_ovr(const PredictionSet &p) {
    std::set<int> distinct;
    for (const auto &[label, dist] : p.items) distinct.insert(label);
    if (distinct.size() < 2) throw DegenerateLabels();

    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < kNumSeverities; ++c) {
        std::vector<double> scores;
        std::vector<bool> pos;
        for (const auto &[label, dist] : p.items) {
            scores.push_back(dist[static_cast<size_t>(c)]);
            pos.push_back(label == c);
        }
        double a = detail::binary_auc(scores, pos);
        if (!std::isnan(a)) {
            sum += a;
            ++counted;
        }
    }
    if (counted == 0) throw DegenerateLabels();
    return sum / counted;
}

/// Argmax predictions; per-class precision/recall with 0/0 := 0 and the F1
/// formula 2PR/(P+R). Headline precision/recall are unweighted means over
/// classes that occur as truth or prediction; headline F1 combines them.
inline MetricReport prf_macro(const PredictionSet &p) {
    std::array<size_t, 4> tp{}, fp{}, fn{};
    for (const auto &[label, dist] : p.items) {
        int pred = detail::argmax4(dist);
        if (pred == label) ++tp[static_cast<size_t>(label)];
        else {
            ++fp[static_cast<size_t>(pred)];
            ++fn[static_cast<size_t>(label)];
        }
    }
    MetricReport r;
    double psum = 0, rsum = 0;
    int defined = 0;
    for (size_t c = 0; c < 4; ++c) {
        auto &m = r.per_class[c];
        m.support = tp[c] + fn[c];
        size_t predicted = tp[c] + fp[c];
        m.precision = predicted > 0 ? static_cast<double>(tp[c]) / static_cast<double>(predicted) : 0.0;
        m.recall = m.support > 0 ? static_cast<double>(tp[c]) / static_cast<double>(m.support) : 0.0;
        m.f1 = f1_from_pr(m.precision, m.recall);
        if (m.support > 0 || predicted > 0) {
            psum += m.precision;
            rsum += m.recall;
            ++defined;
        }
    }
    if (defined > 0) {
        r.precision = psum / defined;
        r.recall = rsum / defined;
    }
    r.f1 = f1_from_pr(r.precision, r.recall);
    if (!p.items.empty()) {
        try {
            r.auc = auc_ovr(p);
        } catch (const DegenerateLabels &) {
            r.auc = 0.0;
        }
    }
    return r;
}

/// Macro F1 per CWE over parallel prediction/label/CWE lists; CWEs with fewer
/// than 10 samples are omitted.
inline std::map<std::string, double> f1_per_cwe(const PredictionSet &preds,
                                                const std::vector<std::string> &cwe_ids,
                                                size_t min_samples = 10) {
    if (preds.items.size() != cwe_ids.size())
        throw LengthMismatch(preds.items.size(), cwe_ids.size());
    std::map<std::string, PredictionSet> groups;
    for (size_t i = 0; i < cwe_ids.size(); ++i)
        if (!cwe_ids[i].empty()) groups[cwe_ids[i]].items.push_back(preds.items[i]);
    std::map<std::string, double> out;
    for (const auto &[cwe, subset] : groups) {
        if (subset.items.size() < min_samples) continue;
        out[cwe] = prf_macro(subset).f1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// suggestion-quality metrics
// ---------------------------------------------------------------------------

/// Lowercased tokens split on whitespace, punctuation characters standing
/// alone.
inline std::vector<std::string> text_tokens(const std::string &text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            out.push_back(std::string(1, static_cast<char>(c)));
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return out;
}

/// BLEU-4: modified n-gram precision for n = 1..4 with add-one smoothing on
/// zero counts, times the brevity penalty.
inline double bleu4(const std::string &candidate, const std::vector<std::string> &references) {
    auto cand = text_tokens(candidate);
    if (cand.empty() || references.empty()) return 0.0;

    std::vector<std::vector<std::string>> refs;
    for (const auto &r : references) refs.push_back(text_tokens(r));

    // closest reference length; ties resolved toward the shorter one
    size_t closest = refs[0].size();
    for (const auto &r : refs) {
        auto diff = [&](size_t len) {
            return len > cand.size() ? len - cand.size() : cand.size() - len;
        };
        if (diff(r.size()) < diff(closest) || (diff(r.size()) == diff(closest) && r.size() < closest))
            closest = r.size();
    }

    auto ngram_counts = [](const std::vector<std::string> &toks, size_t n) {
        std::map<std::vector<std::string>, size_t> counts;
        for (size_t i = 0; i + n <= toks.size(); ++i)
            ++counts[std::vector<std::string>(toks.begin() + static_cast<long>(i),
                                              toks.begin() + static_cast<long>(i + n))];
        return counts;
    };

    double log_sum = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
        auto cand_counts = ngram_counts(cand, n);
        std::map<std::vector<std::string>, size_t> ref_max;
        for (const auto &r : refs)
            for (const auto &[g, c] : ngram_counts(r, n)) ref_max[g] = std::max(ref_max[g], c);

        size_t total = 0, matched = 0;
        for (const auto &[gram, c] : cand_counts) {
            total += c;
            auto it = ref_max.find(gram);
            if (it != ref_max.end()) matched += std::min(c, it->second);
        }
        double pn = matched == 0 ? (static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0)
                                 : static_cast<double>(matched) / static_cast<double>(total);
        log_sum += std::log(pn);
    }
    double geo = std::exp(log_sum / 4.0);
    double bp = cand.size() >= closest
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(cand.size()));
    return geo * bp;
}

namespace detail {

inline size_t lcs_length(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    std::vector<std::vector<size_t>> dp(a.size() + 1, std::vector<size_t>(b.size() + 1, 0));
    for (size_t i = 1; i <= a.size(); ++i)
        for (size_t j = 1; j <= b.size(); ++j)
            dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                            : std::max(dp[i - 1][j], dp[i][j - 1]);
    return dp[a.size()][b.size()];
}

} // namespace detail

constexpr double kRougeBeta = 1.2; // F-measure convention, disclosed in reports

/// ROUGE-L F-measure over the longest common token subsequence.
inline double rouge_l(const std::string &candidate, const std::string &reference) {
    auto cand = text_tokens(candidate);
    auto ref = text_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    double lcs = static_cast<double>(detail::lcs_length(cand, ref));
    if (lcs == 0.0) return 0.0;
    double p = lcs / static_cast<double>(cand.size());
    double r = lcs / static_cast<double>(ref.size());
    double b2 = kRougeBeta * kRougeBeta;
    return (1.0 + b2) * p * r / (r + b2 * p);
}

namespace detail {

/// Compact Porter-style suffix stripper; enough stemming to align inflected
/// unigram variants (running/run, fixes/fix, validated/validate).
inline bool porter_vowel(const std::string &w, size_t i) {
    char c = w[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    return c == 'y' && i > 0 && !porter_vowel(w, i - 1);
}

inline bool has_vowel(const std::string &w, size_t end) {
    for (size_t i = 0; i < end && i < w.size(); ++i)
        if (porter_vowel(w, i)) return true;
    return false;
}

inline size_t porter_measure(const std::string &w, size_t end) {
    size_t m = 0;
    bool prev_vowel = false;
    for (size_t i = 0; i < end && i < w.size(); ++i) {
        bool v = porter_vowel(w, i);
        if (!v && prev_vowel) ++m;
        prev_vowel = v;
    }
    return m;
}

inline bool ends_with(const std::string &w, const std::string &suf) {
    return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
}

inline std::string stem(std::string w) {
    if (w.size() <= 2) return w;
    // step 1a
    if (ends_with(w, "sses")) w.erase(w.size() - 2);
    else if (ends_with(w, "ies")) w.erase(w.size() - 2);
    else if (!ends_with(w, "ss") && ends_with(w, "s")) w.erase(w.size() - 1);
    // step 1b
    bool cleanup = false;
    if (ends_with(w, "eed")) {
        if (porter_measure(w, w.size() - 3) > 0) w.erase(w.size() - 1);
    } else if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
        w.erase(w.size() - 2);
        cleanup = true;
    } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
        w.erase(w.size() - 3);
        cleanup = true;
    }
    if (cleanup) {
        if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
            w += 'e';
        } else if (w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] &&
                   !porter_vowel(w, w.size() - 1) && w.back() != 'l' && w.back() != 's' &&
                   w.back() != 'z') {
            w.erase(w.size() - 1);
        } else if (porter_measure(w, w.size()) == 1 && w.size() >= 3 &&
                   !porter_vowel(w, w.size() - 1) && porter_vowel(w, w.size() - 2) &&
                   !porter_vowel(w, w.size() - 3) && w.back() != 'w' && w.back() != 'x' &&
                   w.back() != 'y') {
            w += 'e';
        }
    }
    // step 1c
    if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
    return w;
}

} // namespace detail

/// METEOR with exact then stem unigram alignment, harmonic F-mean weighted
/// toward recall, and the cubed fragmentation penalty. No synonym stage.
inline double meteor(const std::string &candidate, const std::string &reference) {
    auto cand = text_tokens(candidate);
    auto ref = text_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    std::vector<int> cand_to_ref(cand.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);

    auto align = [&](auto key) {
        for (size_t i = 0; i < cand.size(); ++i) {
            if (cand_to_ref[i] >= 0) continue;
            for (size_t j = 0; j < ref.size(); ++j) {
                if (ref_used[j]) continue;
                if (key(cand[i]) == key(ref[j])) {
                    cand_to_ref[i] = static_cast<int>(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    };
    align([](const std::string &w) { return w; });
    align([](const std::string &w) { return detail::stem(w); });

    size_t matches = 0;
    for (int j : cand_to_ref)
        if (j >= 0) ++matches;
    if (matches == 0) return 0.0;

    double p = static_cast<double>(matches) / static_cast<double>(cand.size());
    double r = static_cast<double>(matches) / static_cast<double>(ref.size());
    double fmean = 10.0 * p * r / (r + 9.0 * p);

    size_t chunks = 0;
    int prev_j = -2;
    bool in_chunk = false;
    for (size_t i = 0; i < cand.size(); ++i) {
        int j = cand_to_ref[i];
        if (j < 0) {
            in_chunk = false;
            continue;
        }
        if (!in_chunk || j != prev_j + 1) ++chunks;
        in_chunk = true;
        prev_j = j;
    }
    double frag = static_cast<double>(chunks) / static_cast<double>(matches);
    double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

} // namespace vulnassess
