#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mpls/model.hpp"

namespace mpls {

enum class Algorithm { MNR, AMNR, closed_form };

inline std::string_view to_string(Algorithm a)
{
    switch (a) {
        case Algorithm::MNR: return "MNR";
        case Algorithm::AMNR: return "AMNR";
        case Algorithm::closed_form: return "closed_form";
    }
    return "unknown";
}

inline Algorithm algorithm_from_string(std::string_view name)
{
    if (name == "MNR") return Algorithm::MNR;
    if (name == "AMNR") return Algorithm::AMNR;
    if (name == "closed_form") return Algorithm::closed_form;
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

struct MetricRow {
    std::string model;
    Algorithm algorithm = Algorithm::closed_form;
    int repetition = 0;
    Eigen::Index n = 0;
    double auc = std::numeric_limits<double>::quiet_NaN();
    double re = std::numeric_limits<double>::quiet_NaN();
    double time = std::numeric_limits<double>::quiet_NaN();
    double lambda_selected = std::numeric_limits<double>::quiet_NaN();
    // Empty on success; otherwise the failure message and the metrics are NaN.
    std::string error;

    bool ok() const { return error.empty(); }
};

/// Mann-Whitney AUC with midranks (ties get half credit).
inline double auc(const Vector& scores, const std::vector<bool>& labels)
{
    detail::require(static_cast<std::size_t>(scores.size()) == labels.size(), "scores and labels differ in length");
    detail::require(scores.allFinite(), "scores must be finite");
    const std::size_t m = labels.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
    });
    std::vector<double> rank(m);
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        const double v = scores[static_cast<Eigen::Index>(order[i])];
        while (j < m && scores[static_cast<Eigen::Index>(order[j])] == v) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
        i = j;
    }
    double pos = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (labels[i]) {
            pos += 1.0;
            sum += rank[i];
        }
    }
    const double neg = static_cast<double>(m) - pos;
    detail::require(pos > 0.0 && neg > 0.0, "AUC needs at least one positive and one negative label");
    return (sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Support recovery score of an estimate: AUC of |beta_hat| against beta_true != 0.
inline double support_auc(const Vector& beta_true, const Vector& beta_hat)
{
    detail::require(beta_true.size() == beta_hat.size(), "coefficient vectors differ in length");
    std::vector<bool> labels(static_cast<std::size_t>(beta_true.size()));
    for (Eigen::Index j = 0; j < beta_true.size(); ++j) labels[static_cast<std::size_t>(j)] = beta_true[j] != 0.0;
    return auc(beta_hat.cwiseAbs(), labels);
}

/// sum (beta - beta_hat)^2 / sum beta^2.
inline double relative_error(const Vector& beta_true, const Vector& beta_hat)
{
    detail::require(beta_true.size() == beta_hat.size(), "coefficient vectors differ in length");
    const double denom = beta_true.squaredNorm();
    detail::require(denom > 0.0, "relative error is undefined for an all-zero truth");
    return (beta_true - beta_hat).squaredNorm() / denom;
}

struct Summary {
    std::size_t count = 0;
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
    // Sample standard deviation (n - 1); zero for a single value.
    double sd = std::numeric_limits<double>::quiet_NaN();
};

/// Quantile by linear interpolation between order statistics: position
/// (m - 1) q in the sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q)
{
    detail::require(!sorted.empty(), "quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline Summary summarize(std::span<const double> values)
{
    detail::require(!values.empty(), "cannot summarize an empty group");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    Summary s;
    s.count = v.size();
    s.median = quantile_sorted(v, 0.5);
    s.q1 = quantile_sorted(v, 0.25);
    s.q3 = quantile_sorted(v, 0.75);
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return s;
}

struct GroupSummary {
    std::string model;
    Algorithm algorithm = Algorithm::closed_form;
    Eigen::Index n = 0;
    std::size_t rows = 0;
    std::size_t errors = 0;
    // Over successful rows only; NaN fields when every row failed.
    Summary auc;
    Summary re;
    Summary time;
};

/// Per (model, algorithm, n) statistics, ordered by that key.
inline std::vector<GroupSummary> summarize(std::span<const MetricRow> rows)
{
    detail::require(!rows.empty(), "cannot summarize an empty row set");
    using Key = std::tuple<std::string, int, Eigen::Index>;
    std::map<Key, std::vector<const MetricRow*>> groups;
    for (const auto& r : rows) groups[{r.model, static_cast<int>(r.algorithm), r.n}].push_back(&r);
    std::vector<GroupSummary> out;
    for (const auto& [key, members] : groups) {
        GroupSummary g;
        g.model = std::get<0>(key);
        g.algorithm = static_cast<Algorithm>(std::get<1>(key));
        g.n = std::get<2>(key);
        g.rows = members.size();
        std::vector<double> a, e, t;
        for (const auto* r : members) {
            if (!r->ok()) {
                ++g.errors;
                continue;
            }
            a.push_back(r->auc);
            e.push_back(r->re);
            t.push_back(r->time);
        }
        if (!a.empty()) {
            g.auc = summarize(std::span<const double>(a));
            g.re = summarize(std::span<const double>(e));
            g.time = summarize(std::span<const double>(t));
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace mpls
