#include "aidetect/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

using ojson = nlohmann::ordered_json;

namespace {

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const ScoredSample> samples) {
    ClassCounts c;
    for (const auto& s : samples) {
        if (!std::isfinite(s.score)) {
            throw MetricError("non-finite score for document '" + s.doc_id + "'");
        }
        (s.label == Label::Positive ? c.pos : c.neg) += 1;
    }
    if (c.pos == 0 || c.neg == 0) {
        throw MetricError("evaluation needs at least one positive and one negative sample");
    }
    return c;
}

std::vector<double> distinct_scores(std::span<const ScoredSample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.score);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Number of elements of an ascending vector that are >= t.
std::size_t count_at_least(const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(sorted.end() -
                                    std::lower_bound(sorted.begin(), sorted.end(), t));
}

void split_sorted(std::span<const ScoredSample> samples, std::vector<double>& pos,
                  std::vector<double>& neg) {
    for (const auto& s : samples) (s.label == Label::Positive ? pos : neg).push_back(s.score);
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson optional_number(const std::optional<double>& v) {
    return v ? number_or_null(*v) : ojson(nullptr);
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace

double auroc(std::span<const ScoredSample> samples) {
    const auto counts = count_classes(samples);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });

    // Sum of (doubled) midranks of positives keeps the arithmetic in integers.
    std::uint64_t pos_rank_x2 = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
        const std::uint64_t midrank_x2 = (i + 1) + j;  // ranks i+1..j averaged, times 2
        for (std::size_t k = i; k < j; ++k) {
            if (samples[order[k]].label == Label::Positive) pos_rank_x2 += midrank_x2;
        }
        i = j;
    }
    const auto np = static_cast<std::uint64_t>(counts.pos);
    const auto nn = static_cast<std::uint64_t>(counts.neg);
    const std::uint64_t u_x2 = pos_rank_x2 - np * (np + 1);
    return static_cast<double>(u_x2) / (2.0 * static_cast<double>(np) * static_cast<double>(nn));
}

TprAtFpr tpr_at_fpr(std::span<const ScoredSample> samples, double fpr_budget) {
    const auto counts = count_classes(samples);
    std::vector<double> pos, neg;
    split_sorted(samples, pos, neg);
    // Largest admissible false-positive count, robust to budget*n rounding.
    const auto allowed = static_cast<std::size_t>(
        std::floor(fpr_budget * static_cast<double>(counts.neg) + 1e-9));
    for (double t : distinct_scores(samples)) {
        if (count_at_least(neg, t) <= allowed) {
            return {static_cast<double>(count_at_least(pos, t)) / static_cast<double>(counts.pos), t};
        }
    }
    return {0.0, std::numeric_limits<double>::infinity()};
}

F1AtThreshold best_f1(std::span<const ScoredSample> dev) {
    const auto counts = count_classes(dev);
    std::vector<double> pos, neg;
    split_sorted(dev, pos, neg);
    F1AtThreshold best{-1.0, 0.0};
    for (double t : distinct_scores(dev)) {
        const auto tp = count_at_least(pos, t);
        const auto fp = count_at_least(neg, t);
        const double f1 = f1_from_counts(tp, fp, counts.pos - tp);
        if (f1 > best.f1) best = {f1, t};
    }
    return best;
}

double f1_at(std::span<const ScoredSample> test, double threshold) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& s : test) {
        const bool predicted = s.score >= threshold;
        if (s.label == Label::Positive) {
            (predicted ? tp : fn) += 1;
        } else if (predicted) {
            ++fp;
        }
    }
    return f1_from_counts(tp, fp, fn);
}

std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
    const auto counts = count_classes(samples);
    std::vector<double> pos, neg;
    split_sorted(samples, pos, neg);
    auto thresholds = distinct_scores(samples);
    std::reverse(thresholds.begin(), thresholds.end());
    std::vector<RocPoint> out;
    out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    for (double t : thresholds) {
        out.push_back({t,
                       static_cast<double>(count_at_least(neg, t)) / static_cast<double>(counts.neg),
                       static_cast<double>(count_at_least(pos, t)) / static_cast<double>(counts.pos)});
    }
    return out;
}

std::vector<TypeSummary> distribution_summary(std::span<const TypedFeature> features) {
    std::vector<TypeSummary> out;
    for (auto type : kAllParticipationTypes) {
        std::vector<std::array<double, 2>> pts;
        for (const auto& f : features) {
            if (f.ptype == type) pts.push_back({f.features.content_score, f.features.expression_score});
        }
        if (pts.empty()) continue;
        if (pts.size() < 2) {
            log_warning("type " + std::to_string(to_int(type)) +
                        " has fewer than 2 samples; omitted from distribution summary");
            continue;
        }
        TypeSummary s;
        s.ptype = type;
        s.n = pts.size();
        const double n = static_cast<double>(pts.size());
        for (const auto& p : pts) {
            s.mean[0] += p[0];
            s.mean[1] += p[1];
        }
        s.mean[0] /= n;
        s.mean[1] /= n;
        for (const auto& p : pts) {
            const double d0 = p[0] - s.mean[0];
            const double d1 = p[1] - s.mean[1];
            s.covariance[0][0] += d0 * d0;
            s.covariance[0][1] += d0 * d1;
            s.covariance[1][1] += d1 * d1;
        }
        for (auto& row : s.covariance) {
            for (auto& v : row) v /= n - 1.0;
        }
        s.covariance[1][0] = s.covariance[0][1];

        const double a = s.covariance[0][0];
        const double b = s.covariance[0][1];
        const double c = s.covariance[1][1];
        const double mid = 0.5 * (a + c);
        const double rad = std::hypot(0.5 * (a - c), b);
        s.semi_major = std::sqrt(std::max(0.0, mid + rad));
        s.semi_minor = std::sqrt(std::max(0.0, mid - rad));
        s.angle_deg = 0.5 * std::atan2(2.0 * b, a - c) * 180.0 / M_PI;
        out.push_back(s);
    }
    return out;
}

std::string_view to_string(DetectorKind d) {
    switch (d) {
        case DetectorKind::Expression: return "expression";
        case DetectorKind::Content: return "content";
        case DetectorKind::TwoD: return "2d";
    }
    return "?";
}

DetectorKind parse_detector(std::string_view s) {
    for (auto d : {DetectorKind::Expression, DetectorKind::Content, DetectorKind::TwoD}) {
        if (to_string(d) == s) return d;
    }
    throw UsageError("unknown detector '" + std::string(s) + "' (expected expression|content|2d)");
}

namespace {

ScoredSample to_scored(const EvalSample& e, DetectionTask task, double score) {
    return {e.doc_id, score, derive_label(task, e.ptype), e.domain, e.ptype};
}

std::vector<const EvalSample*> subsample(std::vector<const EvalSample*> dev,
                                         const EvalOptions& options) {
    if (!options.n_dev) return dev;
    if (*options.n_dev > dev.size()) {
        throw UsageError("requested " + std::to_string(*options.n_dev) +
                         " dev samples but only " + std::to_string(dev.size()) + " exist");
    }
    const auto perm = seeded_permutation(dev.size(), options.seed);
    std::vector<const EvalSample*> out;
    for (std::size_t i = 0; i < *options.n_dev; ++i) out.push_back(dev[perm[i]]);
    return out;
}

Classifier2D fit_on(const std::vector<const EvalSample*>& dev, DetectionTask task,
                    MetricKind metric, const EvalOptions& options) {
    std::vector<LabeledFeature> labeled;
    labeled.reserve(dev.size());
    for (const auto* e : dev) labeled.push_back({e->features, derive_label(task, e->ptype)});
    return fit(labeled, metric, task, options.pair, options.fit);
}

}  // namespace

EvalReport evaluate_task(DetectionTask task, MetricKind metric, DetectorKind detector,
                         std::span<const EvalSample> samples, const EvalOptions& options) {
    EvalReport report;
    report.task = task;
    report.metric = metric;
    report.detector = detector;
    report.pair = options.pair;

    std::vector<const EvalSample*> dev_all, test;
    for (const auto& s : samples) (s.split == Split::Dev ? dev_all : test).push_back(&s);
    if (test.empty()) throw MetricError("corpus has no test split");
    if (dev_all.empty()) throw MetricError("corpus has no dev split");
    {
        std::vector<ScoredSample> labels;
        for (const auto* e : test) labels.push_back(to_scored(*e, task, 0.0));
        count_classes(labels);
    }

    std::vector<const EvalSample*> dev;
    std::map<std::string, Classifier2D> domain_clf;
    std::optional<Classifier2D> pooled_clf;

    if (detector == DetectorKind::TwoD && options.per_domain_classifier) {
        std::set<std::string> domains;
        for (const auto* e : test) domains.insert(e->domain);
        for (const auto& d : domains) {
            std::vector<const EvalSample*> dom_dev;
            for (const auto* e : dev_all) {
                if (e->domain == d) dom_dev.push_back(e);
            }
            dom_dev = subsample(std::move(dom_dev), options);
            domain_clf.emplace(d, fit_on(dom_dev, task, metric, options));
            report.classifiers.push_back(domain_clf.at(d));
            dev.insert(dev.end(), dom_dev.begin(), dom_dev.end());
        }
    } else {
        dev = subsample(dev_all, options);
        if (detector == DetectorKind::TwoD) {
            pooled_clf = fit_on(dev, task, metric, options);
            report.classifiers.push_back(*pooled_clf);
        }
    }

    auto score_of = [&](const EvalSample& e) {
        switch (detector) {
            case DetectorKind::Expression: return e.features.expression_score;
            case DetectorKind::Content: return e.features.content_score;
            case DetectorKind::TwoD: {
                const auto& clf = pooled_clf ? *pooled_clf : domain_clf.at(e.domain);
                return score2d(clf, e.features);
            }
        }
        return 0.0;
    };

    std::vector<ScoredSample> dev_scores, test_scores;
    for (const auto* e : dev) {
        if (detector == DetectorKind::TwoD && !pooled_clf && !domain_clf.count(e->domain)) continue;
        dev_scores.push_back(to_scored(*e, task, score_of(*e)));
    }
    for (const auto* e : test) test_scores.push_back(to_scored(*e, task, score_of(*e)));

    const auto f1 = best_f1(dev_scores);
    report.overall.threshold = f1.threshold;
    report.overall.f1 = f1_at(test_scores, f1.threshold);
    report.overall.auroc = auroc(test_scores);
    const auto tpr = tpr_at_fpr(test_scores, options.fpr_budget);
    report.overall.tpr5 = tpr.tpr;
    report.overall.tpr5_threshold = tpr.threshold;
    report.overall.n_dev = dev_scores.size();
    report.overall.n_test = test_scores.size();

    std::map<std::string, std::vector<ScoredSample>> by_domain;
    for (const auto& s : test_scores) by_domain[s.domain].push_back(s);
    double macro_sum = 0.0;
    std::size_t macro_n = 0;
    for (const auto& [domain, scored] : by_domain) {
        DomainResult r;
        r.n = scored.size();
        const bool has_pos = std::any_of(scored.begin(), scored.end(),
                                         [](const auto& s) { return s.label == Label::Positive; });
        const bool has_neg = std::any_of(scored.begin(), scored.end(),
                                         [](const auto& s) { return s.label == Label::Negative; });
        if (has_pos && has_neg) {
            r.auroc = auroc(scored);
            r.tpr5 = tpr_at_fpr(scored, options.fpr_budget).tpr;
            macro_sum += *r.auroc;
            ++macro_n;
        }
        report.per_domain.emplace(domain, r);
    }
    if (options.macro && macro_n > 0) report.overall.macro_auroc = macro_sum / static_cast<double>(macro_n);

    std::vector<TypedFeature> typed;
    for (const auto* e : test) typed.push_back({e->features, e->ptype});
    report.distribution = distribution_summary(typed);
    report.test_scores = std::move(test_scores);
    return report;
}

std::vector<EvalSample> collect_samples(
    const std::vector<Document>& docs,
    const std::function<FeatureVector(const Document&)>& features, std::size_t concurrency) {
    std::vector<const Document*> eligible;
    for (const auto& d : docs) {
        if (d.is_labeled() && d.split) eligible.push_back(&d);
    }
    std::vector<EvalSample> out(eligible.size());
    std::vector<std::exception_ptr> errors(eligible.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < eligible.size(); i = next++) {
            const auto& d = *eligible[i];
            try {
                out[i] = {d.id, d.domain, d.type(), *d.split, features(d)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_threads = std::max<std::size_t>(1, std::min(concurrency, eligible.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

EvalReport evaluate_task(DetectionTask task, MetricKind metric, DetectorKind detector,
                         const std::vector<Document>& corpus,
                         const std::function<FeatureVector(const Document&)>& features,
                         const EvalOptions& options) {
    const auto samples = collect_samples(corpus, features);
    return evaluate_task(task, metric, detector, samples, options);
}

std::string report_to_json(const EvalReport& report) {
    ojson j;
    j["task"] = to_string(report.task);
    j["metric"] = to_string(report.metric);
    j["detector"] = to_string(report.detector);
    j["feature_pair"] = to_string(report.pair);

    ojson overall;
    overall["auroc"] = report.overall.auroc;
    overall["f1"] = report.overall.f1;
    overall["threshold"] = number_or_null(report.overall.threshold);
    overall["tpr5"] = report.overall.tpr5;
    overall["tpr5_threshold"] = number_or_null(report.overall.tpr5_threshold);
    if (report.overall.macro_auroc) overall["macro_auroc"] = *report.overall.macro_auroc;
    overall["n_dev"] = report.overall.n_dev;
    overall["n_test"] = report.overall.n_test;
    j["overall"] = std::move(overall);

    ojson domains = ojson::object();
    for (const auto& [name, r] : report.per_domain) {
        domains[name] = {{"n", r.n}, {"auroc", optional_number(r.auroc)},
                         {"tpr5", optional_number(r.tpr5)}};
    }
    j["per_domain"] = std::move(domains);

    ojson dist = ojson::array();
    for (const auto& s : report.distribution) {
        dist.push_back({{"type", to_int(s.ptype)},
                        {"n", s.n},
                        {"mean", {s.mean[0], s.mean[1]}},
                        {"covariance",
                         {{s.covariance[0][0], s.covariance[0][1]},
                          {s.covariance[1][0], s.covariance[1][1]}}},
                        {"ellipse",
                         {{"semi_major", s.semi_major},
                          {"semi_minor", s.semi_minor},
                          {"angle_deg", s.angle_deg}}}});
    }
    j["distribution"] = std::move(dist);

    ojson clfs = ojson::array();
    for (const auto& c : report.classifiers) {
        clfs.push_back({{"weights", {c.weights[0], c.weights[1]}},
                        {"bias", c.bias},
                        {"means", {c.feature_means[0], c.feature_means[1]}},
                        {"scales", {c.feature_scales[0], c.feature_scales[1]}}});
    }
    j["classifiers"] = std::move(clfs);
    return j.dump(2) + "\n";
}

std::string roc_points_tsv(const EvalReport& report) {
    std::ostringstream out;
    out << "task\tmetric\tdetector\tthreshold\tfpr\ttpr\n";
    for (const auto& p : roc_curve(report.test_scores)) {
        out << to_string(report.task) << '\t' << to_string(report.metric) << '\t'
            << to_string(report.detector) << '\t'
            << (std::isfinite(p.threshold) ? format_double(p.threshold) : "inf") << '\t'
            << format_double(p.fpr) << '\t' << format_double(p.tpr) << '\n';
    }
    return out.str();
}

std::string distribution_points_tsv(std::span<const EvalSample> samples) {
    std::ostringstream out;
    out << "doc_id\tdomain\ttype\tsplit\tcontent\texpression\n";
    for (const auto& s : samples) {
        out << s.doc_id << '\t' << s.domain << '\t' << to_int(s.ptype) << '\t'
            << to_string(s.split) << '\t' << format_double(s.features.content_score) << '\t'
            << format_double(s.features.expression_score) << '\n';
    }
    return out.str();
}

std::string distribution_summary_tsv(std::span<const TypeSummary> summary) {
    std::ostringstream out;
    out << "type\tn\tmean_content\tmean_expression\tcov_cc\tcov_ce\tcov_ee\t"
           "semi_major\tsemi_minor\tangle_deg\n";
    for (const auto& s : summary) {
        out << to_int(s.ptype) << '\t' << s.n << '\t' << format_double(s.mean[0]) << '\t'
            << format_double(s.mean[1]) << '\t' << format_double(s.covariance[0][0]) << '\t'
            << format_double(s.covariance[0][1]) << '\t' << format_double(s.covariance[1][1])
            << '\t' << format_double(s.semi_major) << '\t' << format_double(s.semi_minor)
            << '\t' << format_double(s.angle_deg) << '\n';
    }
    return out.str();
}

}  // namespace aidetect
