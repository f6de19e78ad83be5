#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/eval.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::eval {

std::string_view to_string(DescriptionType t) noexcept {
    switch (t) {
        case DescriptionType::Short: return "short";
        case DescriptionType::FiftyWord: return "fifty_word";
        case DescriptionType::Long: return "long";
        case DescriptionType::ShotByShot: return "shot_by_shot";
    }
    return "unknown";
}

std::optional<DescriptionType> parse_description_type(std::string_view s) {
    const auto lower = util::to_lower(util::trim(s));
    if (lower == "short") return DescriptionType::Short;
    if (lower == "fifty_word" || lower == "50-word" || lower == "50_word") return DescriptionType::FiftyWord;
    if (lower == "long") return DescriptionType::Long;
    if (lower == "shot_by_shot" || lower == "shot-by-shot") return DescriptionType::ShotByShot;
    return std::nullopt;
}

double coverage_percent(int covered, int total) {
    if (total < 1 || covered < 0 || covered > total)
        throw Error(ErrorCode::InvalidTally, fmt::format("covered={} total={} is not a valid tally", covered, total));
    return 100.0 * covered / total;
}

MeanSigma mean_sigma(const std::vector<double>& values) {
    MeanSigma r;
    r.n = values.size();
    if (values.empty()) return r;
    const double n = static_cast<double>(values.size());
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.sigma = std::sqrt(ss / n);  // population
    return r;
}

ErrorStats error_stats(const std::vector<VideoLabels>& labels, DescriptionType type) {
    std::vector<double> counts;
    for (const auto& l : labels)
        if (l.type == type && l.errors) counts.push_back(*l.errors);
    ErrorStats s;
    const auto ms = mean_sigma(counts);
    s.mean = ms.mean;
    s.sigma = ms.sigma;
    s.videos = counts.size();
    for (double c : counts) s.total += static_cast<std::int64_t>(c);
    if (!counts.empty())
        s.zero_fraction = static_cast<double>(std::count(counts.begin(), counts.end(), 0.0)) / static_cast<double>(counts.size());
    return s;
}

MeanSigma coverage_stats(const std::vector<VideoLabels>& labels, DescriptionType type) {
    std::vector<double> pct;
    for (const auto& l : labels)
        if (l.type == type && l.covered && l.total) pct.push_back(coverage_percent(*l.covered, *l.total));
    return mean_sigma(pct);
}

std::size_t description_words(const summarize::DescriptionSet& set, DescriptionType type) {
    switch (type) {
        case DescriptionType::Short: return summarize::word_count(set.short_description);
        case DescriptionType::FiftyWord: return summarize::word_count(set.fifty_word ? *set.fifty_word : set.long_description);
        case DescriptionType::Long: return summarize::word_count(set.long_description);
        case DescriptionType::ShotByShot: {
            std::size_t n = 0;
            for (const auto& s : set.shot_by_shot) n += summarize::word_count(s.text);
            return n;
        }
    }
    return 0;
}

MeanSigma word_stats(const std::vector<summarize::DescriptionSet>& sets, DescriptionType type) {
    std::vector<double> words;
    for (const auto& s : sets) words.push_back(static_cast<double>(description_words(s, type)));
    return mean_sigma(words);
}

int agreement_bin(int count) { return std::clamp(count, 0, kAgreementBins - 1); }

double weighted_agreement(const std::vector<int>& rater1, const std::vector<int>& rater2) {
    if (rater1.size() != rater2.size())
        throw Error(ErrorCode::LengthMismatch, fmt::format("{} vs {} ratings", rater1.size(), rater2.size()));
    if (rater1.empty()) throw Error(ErrorCode::LengthMismatch, "no ratings to compare");
    constexpr int k = kAgreementBins;
    const double n = static_cast<double>(rater1.size());
    double observed[k][k] = {};
    double row[k] = {}, col[k] = {};
    for (std::size_t i = 0; i < rater1.size(); ++i) {
        const int a = agreement_bin(rater1[i]);
        const int b = agreement_bin(rater2[i]);
        observed[a][b] += 1.0 / n;
        row[a] += 1.0 / n;
        col[b] += 1.0 / n;
    }
    double po = 0.0, pe = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double w = 1.0 - std::abs(i - j) / static_cast<double>(k - 1);
            po += w * observed[i][j];
            pe += w * row[i] * col[j];
        }
    }
    if (std::abs(1.0 - pe) < 1e-12) return std::abs(1.0 - po) < 1e-12 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

EvalReport build_report(const std::vector<VideoLabels>& labels, const std::vector<summarize::DescriptionSet>& sets) {
    EvalReport report;
    for (const auto type : kAllDescriptionTypes) {
        TypeReport row{type, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
        std::vector<int> r1, r2;
        bool any_errors = false, any_coverage = false;
        for (const auto& l : labels) {
            if (l.type != type) continue;
            any_errors |= l.errors.has_value();
            any_coverage |= l.covered && l.total;
            if (l.errors && l.second_rater_errors) {
                r1.push_back(*l.errors);
                r2.push_back(*l.second_rater_errors);
            }
        }
        // An empty label set still yields a zeroed report.
        if (any_errors || labels.empty()) row.errors = error_stats(labels, type);
        if (any_coverage || labels.empty()) row.coverage = coverage_stats(labels, type);
        if (!sets.empty()) row.words = word_stats(sets, type);
        if (!r1.empty()) row.agreement = weighted_agreement(r1, r2);
        report.rows.push_back(row);
    }
    return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["method"] = {{"sigma", "population"},
                   {"agreement", "linear-weighted Cohen's kappa"},
                   {"agreement_bins", {"0", "1", "2", ">=3"}}};
    j["types"] = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
        nlohmann::ordered_json r;
        r["type"] = std::string(to_string(row.type));
        if (row.errors) {
            r["errors"] = {{"mean", row.errors->mean},
                           {"sigma", row.errors->sigma},
                           {"total", row.errors->total},
                           {"videos", row.errors->videos},
                           {"zero_fraction", row.errors->zero_fraction}};
        } else {
            r["errors"] = nullptr;
        }
        r["coverage_percent"] = row.coverage ? nlohmann::ordered_json{{"mean", row.coverage->mean},
                                                                      {"sigma", row.coverage->sigma},
                                                                      {"videos", row.coverage->n}}
                                             : nlohmann::ordered_json(nullptr);
        r["words"] = row.words ? nlohmann::ordered_json{{"mean", row.words->mean},
                                                        {"sigma", row.words->sigma},
                                                        {"videos", row.words->n}}
                               : nlohmann::ordered_json(nullptr);
        r["agreement"] = row.agreement ? nlohmann::ordered_json(*row.agreement) : nlohmann::ordered_json(nullptr);
        j["types"].push_back(std::move(r));
    }
    return j;
}

std::string format_table(const EvalReport& report) {
    static constexpr auto kNames = std::array{"Short Description", "50-Word Description", "Long Description",
                                              "Shot-by-Shot Description"};
    std::string out;
    out += "# sigma: population standard deviation; agreement: linear-weighted kappa, bins 0/1/2/>=3\n";
    out += fmt::format("{:<26} {:>6} {:>6} {:>5}  {:>6} {:>6}  {:>6} {:>6}  {:>6}\n", "", "Errors", "", "", "Cover",
                       "", "Words", "", "");
    out += fmt::format("{:<26} {:>6} {:>6} {:>5}  {:>6} {:>6}  {:>6} {:>6}  {:>6}\n", "Description Type", "mu",
                       "sigma", "#", "mu", "sigma", "mu", "sigma", "kappa");
    auto num = [](std::optional<double> v, const char* spec) {
        return v ? fmt::format(fmt::runtime(spec), *v) : std::string("-");
    };
    for (const auto& row : report.rows) {
        const auto& e = row.errors;
        const auto& c = row.coverage;
        const auto& w = row.words;
        out += fmt::format("{:<26} {:>6} {:>6} {:>5}  {:>6} {:>6}  {:>6} {:>6}  {:>6}\n",
                           kNames[static_cast<std::size_t>(row.type)],
                           num(e ? std::optional(e->mean) : std::nullopt, "{:.2f}"),
                           num(e ? std::optional(e->sigma) : std::nullopt, "{:.2f}"),
                           e ? std::to_string(e->total) : std::string("-"),
                           num(c ? std::optional(c->mean) : std::nullopt, "{:.0f}%"),
                           num(c ? std::optional(c->sigma) : std::nullopt, "{:.0f}%"),
                           num(w ? std::optional(w->mean) : std::nullopt, "{:.0f}"),
                           num(w ? std::optional(w->sigma) : std::nullopt, "{:.0f}"), num(row.agreement, "{:.2f}"));
    }
    return out;
}

}  // namespace shortscribe::eval
