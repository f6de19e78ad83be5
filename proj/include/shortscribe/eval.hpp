#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "summarize.hpp"

namespace shortscribe::eval {

enum class DescriptionType { Short, FiftyWord, Long, ShotByShot };

inline constexpr std::array<DescriptionType, 4> kAllDescriptionTypes = {
    DescriptionType::Short, DescriptionType::FiftyWord, DescriptionType::Long, DescriptionType::ShotByShot};

std::string_view to_string(DescriptionType t) noexcept;
/// Accepts "short", "fifty_word" (or "50-word"), "long", "shot_by_shot".
std::optional<DescriptionType> parse_description_type(std::string_view s);

/// Human tallies for one video and one description type.
struct VideoLabels {
    std::string video_id;
    DescriptionType type = DescriptionType::Short;
    std::optional<int> errors;
    std::optional<int> covered;
    std::optional<int> total;
    std::optional<int> second_rater_errors;
};

struct ErrorStats {
    double mean = 0.0;
    double sigma = 0.0;
    std::int64_t total = 0;
    double zero_fraction = 0.0;
    std::size_t videos = 0;
};

struct MeanSigma {
    double mean = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
};

/// 100 * covered / total. InvalidTally unless total >= 1 and 0 <= covered <= total.
double coverage_percent(int covered, int total);

/// Population mean / sigma over the given values; {0,0,0} for an empty list.
MeanSigma mean_sigma(const std::vector<double>& values);

/// Over the labels of type `type` that carry an error count.
ErrorStats error_stats(const std::vector<VideoLabels>& labels, DescriptionType type);
MeanSigma coverage_stats(const std::vector<VideoLabels>& labels, DescriptionType type);

/// Word count of the chosen field; shot-by-shot concatenates its lines and
/// the 50-word field falls back to the long description when not condensed.
std::size_t description_words(const summarize::DescriptionSet& set, DescriptionType type);
MeanSigma word_stats(const std::vector<summarize::DescriptionSet>& sets, DescriptionType type);

/// Count bins used for agreement: 0, 1, 2, >=3.
inline constexpr int kAgreementBins = 4;
int agreement_bin(int count);

/// Linear-weighted Cohen's kappa over binned counts. LengthMismatch on
/// unequal lengths; 1.0 when both raters agree perfectly.
double weighted_agreement(const std::vector<int>& rater1, const std::vector<int>& rater2);

struct TypeReport {
    DescriptionType type;
    std::optional<ErrorStats> errors;
    std::optional<MeanSigma> coverage;
    std::optional<MeanSigma> words;
    std::optional<double> agreement;
};

struct EvalReport {
    std::vector<TypeReport> rows;
};

EvalReport build_report(const std::vector<VideoLabels>& labels,
                        const std::vector<summarize::DescriptionSet>& sets = {});

nlohmann::ordered_json to_json(const EvalReport& report);
/// Plain-text table in the hallucinations / coverage / words layout.
std::string format_table(const EvalReport& report);

/// Labels file: CSV with header video_id,dtype,errors,covered,total,rater or a
/// JSON array of objects with the same keys. Empty fields are allowed.
/// LabelSchemaError carries the offending line (CSV) or element index (JSON).
std::vector<VideoLabels> load_labels(const std::filesystem::path& path);
std::vector<VideoLabels> parse_labels_csv(std::string_view text);
std::vector<VideoLabels> parse_labels_json(std::string_view text);

}  // namespace shortscribe::eval
