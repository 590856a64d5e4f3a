#pragma once
// Evaluation: AUROC, TPR at a fixed FPR, F1 at the best development
// threshold, per-domain breakdowns and per-type 2D distribution summaries.
//
// Classification convention everywhere: score >= threshold => positive.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aidetect/corpus.hpp"
#include "aidetect/detector2d.hpp"
#include "aidetect/metrics.hpp"

namespace aidetect {

struct ScoredSample {
    std::string doc_id;
    double score = 0.0;
    Label label = Label::Negative;
    std::string domain;
    ParticipationType ptype = ParticipationType::HumanContentHumanExpression;
};

// Mann-Whitney statistic via midranks; ties count 1/2.
double auroc(std::span<const ScoredSample> samples);

struct TprAtFpr {
    double tpr = 0.0;
    double threshold = 0.0;  // +inf when no observed score meets the budget
};

// Threshold = smallest observed score t with (#neg >= t) / #neg <= budget.
TprAtFpr tpr_at_fpr(std::span<const ScoredSample> samples, double fpr_budget = 0.05);

struct F1AtThreshold {
    double f1 = 0.0;
    double threshold = 0.0;
};

// Scans every distinct score as a threshold; ties go to the lowest threshold.
F1AtThreshold best_f1(std::span<const ScoredSample> dev);
double f1_at(std::span<const ScoredSample> test, double threshold);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

// One point per distinct score (descending threshold), plus the (0, 0) start.
std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples);

struct TypedFeature {
    FeatureVector features;
    ParticipationType ptype = ParticipationType::HumanContentHumanExpression;
};

// Mean and unbiased covariance of (content, expression) for one type, plus
// the one-standard-deviation ellipse.
struct TypeSummary {
    ParticipationType ptype = ParticipationType::HumanContentHumanExpression;
    std::size_t n = 0;
    std::array<double, 2> mean{0.0, 0.0};
    std::array<std::array<double, 2>, 2> covariance{};
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle_deg = 0.0;  // major axis vs the content axis
};

// Types with fewer than two samples are omitted with a warning.
std::vector<TypeSummary> distribution_summary(std::span<const TypedFeature> features);

enum class DetectorKind : std::uint8_t {
    Expression,  // metric on the expression axis only (the plain detector on T)
    Content,     // metric on the content axis only
    TwoD,        // fitted 2D classifier
};
std::string_view to_string(DetectorKind d);
DetectorKind parse_detector(std::string_view s);  // expression | content | 2d

// One labeled document with both feature scores.
struct EvalSample {
    std::string doc_id;
    std::string domain;
    ParticipationType ptype = ParticipationType::HumanContentHumanExpression;
    Split split = Split::Test;
    FeatureVector features;
};

struct EvalOptions {
    double fpr_budget = 0.05;
    bool macro = false;                  // also report the macro average over domains
    bool per_domain_classifier = false;  // fit one 2D classifier per domain
    std::optional<std::size_t> n_dev;    // seeded dev subsample for fitting (per domain with per-domain classifiers)
    std::uint64_t seed = 0;
    FeaturePair pair = FeaturePair::ContentVsText;
    FitOptions fit;
};

struct DomainResult {
    std::size_t n = 0;
    std::optional<double> auroc;  // absent when the domain has a single class
    std::optional<double> tpr5;
};

struct OverallResult {
    double auroc = 0.0;
    double f1 = 0.0;
    double tpr5 = 0.0;
    double threshold = 0.0;       // best dev F1 threshold, applied to test
    double tpr5_threshold = 0.0;
    std::optional<double> macro_auroc;
    std::size_t n_dev = 0;
    std::size_t n_test = 0;
};

struct EvalReport {
    DetectionTask task = DetectionTask::Level2;
    MetricKind metric = MetricKind::FastDetect;
    DetectorKind detector = DetectorKind::TwoD;
    FeaturePair pair = FeaturePair::ContentVsText;
    std::map<std::string, DomainResult> per_domain;
    OverallResult overall;
    std::vector<TypeSummary> distribution;
    std::vector<Classifier2D> classifiers;  // 2D only; one per domain when requested
    std::vector<ScoredSample> test_scores;  // not serialized into the report record
};

// Fits on the dev split (2D only), picks the F1 threshold on dev and scores
// the test split. Throws MetricError when the test split has a single class.
EvalReport evaluate_task(DetectionTask task, MetricKind metric, DetectorKind detector,
                         std::span<const EvalSample> samples, const EvalOptions& options = {});

// Builds EvalSamples for every labeled document with a split, in corpus order.
std::vector<EvalSample> collect_samples(
    const std::vector<Document>& docs,
    const std::function<FeatureVector(const Document&)>& features, std::size_t concurrency = 1);

EvalReport evaluate_task(DetectionTask task, MetricKind metric, DetectorKind detector,
                         const std::vector<Document>& corpus,
                         const std::function<FeatureVector(const Document&)>& features,
                         const EvalOptions& options = {});

// Structured JSON record (pretty-printed, stable key order).
std::string report_to_json(const EvalReport& report);

// Tab-separated plot data with a header row.
std::string roc_points_tsv(const EvalReport& report);
std::string distribution_points_tsv(std::span<const EvalSample> samples);
std::string distribution_summary_tsv(std::span<const TypeSummary> summary);

}  // namespace aidetect
