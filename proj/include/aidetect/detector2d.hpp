#pragma once
// Two-dimensional detection: a metric applied to a content feature and to an
// expression feature gives a point per document; a small L2-regularized
// logistic model fit on development samples separates the two classes.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aidetect/corpus.hpp"
#include "aidetect/decouple.hpp"
#include "aidetect/metrics.hpp"
#include "aidetect/provider.hpp"

namespace aidetect {

// Which texts feed the (content, expression) axes.
enum class FeaturePair : std::uint8_t {
    ContentVsText,        // (C2, T) default
    ContentVsExpression,  // (C2, E2) ablation
};
std::string_view to_string(FeaturePair p);
FeaturePair parse_feature_pair(std::string_view s);  // c2-t | c2-e2

struct FeatureVector {
    std::string doc_id;
    double content_score = 0.0;
    double expression_score = 0.0;
    bool operator==(const FeatureVector&) const = default;
};

// Scores texts with one metric, and documents along both feature axes.
class FeatureBuilder {
public:
    FeatureBuilder(Provider& provider, ProviderConfig scoring_cfg, Decoupler& decoupler,
                   MetricKind metric, FeaturePair pair = FeaturePair::ContentVsText);

    double score(std::string_view text);

    // content = metric(C2(text)); expression = metric(T) or metric(E2(text)).
    // Errors are rethrown as FeatureError carrying the document id.
    FeatureVector build(const Document& doc);

    MetricKind metric() const { return metric_; }
    FeaturePair pair() const { return pair_; }

private:
    Provider& provider_;
    ProviderConfig cfg_;
    Decoupler& decoupler_;
    MetricKind metric_;
    FeaturePair pair_;
};

FeatureVector build_features(Provider& provider, const ProviderConfig& scoring_cfg,
                             Decoupler& decoupler, MetricKind metric, const Document& doc,
                             FeaturePair pair = FeaturePair::ContentVsText);

struct LabeledFeature {
    FeatureVector features;
    Label label = Label::Negative;
};

struct Classifier2D {
    std::array<double, 2> weights{0.0, 0.0};  // (content, expression)
    double bias = 0.0;
    std::array<double, 2> feature_means{0.0, 0.0};
    std::array<double, 2> feature_scales{1.0, 1.0};
    MetricKind metric = MetricKind::FastDetect;
    DetectionTask task = DetectionTask::Level2;
    FeaturePair pair = FeaturePair::ContentVsText;

    bool operator==(const Classifier2D&) const = default;
};

struct FitOptions {
    double l2 = 1.0;                  // penalty (l2/2)*|w|^2 on top of the summed log-loss
    double gradient_tolerance = 1e-8;
    int max_iterations = 100;
};

inline constexpr double kScaleFloor = 1e-9;
inline constexpr std::size_t kMinFitSamples = 4;

// Standardizes each feature over the dev set (population std, floored) and
// fits the logistic model with damped Newton steps. Samples are put in a
// canonical order first, so the result does not depend on input order.
Classifier2D fit(std::span<const LabeledFeature> dev, MetricKind metric, DetectionTask task,
                 FeaturePair pair = FeaturePair::ContentVsText, const FitOptions& options = {});

// w . standardize(fv) + b, a monotone transform of P(positive).
double score2d(const Classifier2D& clf, const FeatureVector& fv);

std::string serialize(const Classifier2D& clf);
Classifier2D parse_classifier(std::string_view text);
void save_classifier(const Classifier2D& clf, const std::filesystem::path& path);
Classifier2D load_classifier(const std::filesystem::path& path);

}  // namespace aidetect
