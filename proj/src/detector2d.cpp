#include "aidetect/detector2d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

std::string_view to_string(FeaturePair p) {
    return p == FeaturePair::ContentVsText ? "c2-t" : "c2-e2";
}

FeaturePair parse_feature_pair(std::string_view s) {
    if (s == "c2-t") return FeaturePair::ContentVsText;
    if (s == "c2-e2") return FeaturePair::ContentVsExpression;
    throw UsageError("unknown feature pair '" + std::string(s) + "' (expected c2-t|c2-e2)");
}

FeatureBuilder::FeatureBuilder(Provider& provider, ProviderConfig scoring_cfg,
                               Decoupler& decoupler, MetricKind metric, FeaturePair pair)
    : provider_(provider),
      cfg_(std::move(scoring_cfg)),
      decoupler_(decoupler),
      metric_(metric),
      pair_(pair) {
    if (requires_sampling_model(metric_) && !cfg_.sampling_model) {
        throw ConfigError(std::string(to_string(metric_)) + " requires a sampling model");
    }
}

double FeatureBuilder::score(std::string_view text) {
    const auto stats = provider_.score_text(cfg_, text);
    return compute_metric(metric_, stats);
}

FeatureVector FeatureBuilder::build(const Document& doc) {
    try {
        if (is_blank(doc.text)) throw InputError("empty text");
        FeatureVector fv;
        fv.doc_id = doc.id;
        fv.content_score = score(decoupler_.neutralize_content(doc.text, doc.language));
        fv.expression_score =
            pair_ == FeaturePair::ContentVsText
                ? score(doc.text)
                : score(decoupler_.neutralize_expression(doc.text, doc.language));
        if (!std::isfinite(fv.content_score) || !std::isfinite(fv.expression_score)) {
            throw MetricError("non-finite feature score");
        }
        return fv;
    } catch (const FeatureError&) {
        throw;
    } catch (const Error& e) {
        throw FeatureError(doc.id, e);
    }
}

FeatureVector build_features(Provider& provider, const ProviderConfig& scoring_cfg,
                             Decoupler& decoupler, MetricKind metric, const Document& doc,
                             FeaturePair pair) {
    return FeatureBuilder(provider, scoring_cfg, decoupler, metric, pair).build(doc);
}

namespace {

double sigmoid(double s) {
    if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// log(1 + exp(s)) without overflow.
double softplus(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

struct Point {
    double x0;
    double x1;
    double y;
};

// Solves the 3x3 system h * d = g by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> h, std::array<double, 3> g) {
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r) {
            if (std::abs(h[r][c]) > std::abs(h[piv][c])) piv = r;
        }
        std::swap(h[c], h[piv]);
        std::swap(g[c], g[piv]);
        if (std::abs(h[c][c]) < 1e-300) throw FitError("singular Hessian in logistic fit");
        for (int r = c + 1; r < 3; ++r) {
            const double f = h[r][c] / h[c][c];
            for (int k = c; k < 3; ++k) h[r][k] -= f * h[c][k];
            g[r] -= f * g[c];
        }
    }
    std::array<double, 3> d{};
    for (int r = 2; r >= 0; --r) {
        double acc = g[r];
        for (int k = r + 1; k < 3; ++k) acc -= h[r][k] * d[k];
        d[r] = acc / h[r][r];
    }
    return d;
}

double objective(const std::vector<Point>& pts, const std::array<double, 3>& theta, double l2) {
    double loss = 0.0;
    for (const auto& p : pts) {
        const double s = theta[0] * p.x0 + theta[1] * p.x1 + theta[2];
        loss += softplus(s) - p.y * s;
    }
    return loss + 0.5 * l2 * (theta[0] * theta[0] + theta[1] * theta[1]);
}

}  // namespace

Classifier2D fit(std::span<const LabeledFeature> dev, MetricKind metric, DetectionTask task,
                 FeaturePair pair, const FitOptions& options) {
    if (dev.size() < kMinFitSamples) {
        throw FitError("fit needs at least " + std::to_string(kMinFitSamples) +
                       " dev samples, got " + std::to_string(dev.size()));
    }
    std::size_t positives = 0;
    for (const auto& s : dev) {
        if (!std::isfinite(s.features.content_score) || !std::isfinite(s.features.expression_score)) {
            throw FitError("non-finite feature for document '" + s.features.doc_id + "'");
        }
        positives += s.label == Label::Positive;
    }
    if (positives == 0 || positives == dev.size()) {
        throw FitError("dev set contains a single class; both labels are required");
    }

    std::vector<Point> pts;
    pts.reserve(dev.size());
    for (const auto& s : dev) {
        pts.push_back({s.features.content_score, s.features.expression_score,
                       s.label == Label::Positive ? 1.0 : 0.0});
    }
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return std::tie(a.x0, a.x1, a.y) < std::tie(b.x0, b.x1, b.y);
    });

    Classifier2D clf;
    clf.metric = metric;
    clf.task = task;
    clf.pair = pair;
    const double n = static_cast<double>(pts.size());
    for (int f = 0; f < 2; ++f) {
        double sum = 0.0;
        for (const auto& p : pts) sum += f == 0 ? p.x0 : p.x1;
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& p : pts) {
            const double d = (f == 0 ? p.x0 : p.x1) - mean;
            ss += d * d;
        }
        clf.feature_means[f] = mean;
        clf.feature_scales[f] = std::max(std::sqrt(ss / n), kScaleFloor);
    }
    for (auto& p : pts) {
        p.x0 = (p.x0 - clf.feature_means[0]) / clf.feature_scales[0];
        p.x1 = (p.x1 - clf.feature_means[1]) / clf.feature_scales[1];
    }

    std::array<double, 3> theta{0.0, 0.0, 0.0};
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        std::array<double, 3> g{options.l2 * theta[0], options.l2 * theta[1], 0.0};
        std::array<std::array<double, 3>, 3> h{};
        h[0][0] = h[1][1] = options.l2;
        for (const auto& p : pts) {
            const double s = theta[0] * p.x0 + theta[1] * p.x1 + theta[2];
            const double mu = sigmoid(s);
            const double r = mu - p.y;
            const std::array<double, 3> x{p.x0, p.x1, 1.0};
            const double w = mu * (1.0 - mu);
            for (int a = 0; a < 3; ++a) {
                g[a] += r * x[a];
                for (int b = 0; b < 3; ++b) h[a][b] += w * x[a] * x[b];
            }
        }
        const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        if (gnorm < options.gradient_tolerance) {
            converged = true;
            break;
        }
        // Tiny ridge keeps the bias direction solvable when every mu saturates.
        h[2][2] += 1e-12;
        const auto step = solve3(h, g);
        const double f0 = objective(pts, theta, options.l2);
        double t = 1.0;
        std::array<double, 3> next{};
        for (int ls = 0; ls < 60; ++ls) {
            for (int a = 0; a < 3; ++a) next[a] = theta[a] - t * step[a];
            if (objective(pts, next, options.l2) <= f0) break;
            t *= 0.5;
        }
        if (next == theta) {
            converged = true;  // no representable progress left
            break;
        }
        theta = next;
    }
    if (!converged) {
        throw FitError("logistic fit did not reach gradient tolerance in " +
                       std::to_string(options.max_iterations) + " iterations");
    }
    clf.weights = {theta[0], theta[1]};
    clf.bias = theta[2];
    return clf;
}

double score2d(const Classifier2D& clf, const FeatureVector& fv) {
    const double z0 = (fv.content_score - clf.feature_means[0]) / clf.feature_scales[0];
    const double z1 = (fv.expression_score - clf.feature_means[1]) / clf.feature_scales[1];
    return clf.weights[0] * z0 + clf.weights[1] * z1 + clf.bias;
}

std::string serialize(const Classifier2D& clf) {
    std::ostringstream out;
    out << "format aidetect-classifier-v1\n"
        << "metric " << to_string(clf.metric) << '\n'
        << "task " << to_string(clf.task) << '\n'
        << "feature_pair " << to_string(clf.pair) << '\n'
        << "weights " << format_double(clf.weights[0]) << ' ' << format_double(clf.weights[1]) << '\n'
        << "bias " << format_double(clf.bias) << '\n'
        << "means " << format_double(clf.feature_means[0]) << ' '
        << format_double(clf.feature_means[1]) << '\n'
        << "scales " << format_double(clf.feature_scales[0]) << ' '
        << format_double(clf.feature_scales[1]) << '\n';
    return out.str();
}

Classifier2D parse_classifier(std::string_view text) {
    std::map<std::string, std::vector<std::string>> fields;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key.front() == '#') continue;
        std::vector<std::string> values;
        for (std::string v; ls >> v;) values.push_back(v);
        fields[key] = std::move(values);
    }
    auto get = [&](const std::string& key, std::size_t n) -> const std::vector<std::string>& {
        auto it = fields.find(key);
        if (it == fields.end() || it->second.size() != n) {
            throw ValidationError("classifier file: missing or malformed '" + key + "'");
        }
        return it->second;
    };
    auto num = [](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("classifier file: bad number '" + s + "'");
        }
    };
    if (get("format", 1)[0] != "aidetect-classifier-v1") {
        throw ValidationError("classifier file: unsupported format");
    }
    Classifier2D clf;
    clf.metric = parse_metric(get("metric", 1)[0]);
    clf.task = parse_task(get("task", 1)[0]);
    clf.pair = parse_feature_pair(get("feature_pair", 1)[0]);
    const auto& w = get("weights", 2);
    clf.weights = {num(w[0]), num(w[1])};
    clf.bias = num(get("bias", 1)[0]);
    const auto& m = get("means", 2);
    clf.feature_means = {num(m[0]), num(m[1])};
    const auto& s = get("scales", 2);
    clf.feature_scales = {num(s[0]), num(s[1])};
    if (!(clf.feature_scales[0] > 0.0 && clf.feature_scales[1] > 0.0)) {
        throw ValidationError("classifier file: scales must be strictly positive");
    }
    return clf;
}

void save_classifier(const Classifier2D& clf, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write classifier file " + path.string());
    out << serialize(clf);
}

Classifier2D load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open classifier file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_classifier(ss.str());
}

}  // namespace aidetect
