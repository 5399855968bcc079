#pragma once

// Naive reference implementations used by the tests. They read only the raw
// value lists of a spec and rebuild everything else themselves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sce/dataset.hpp"
#include "sce/distance.hpp"

namespace oracle {

struct Table {
    std::vector<std::vector<double>> axes;  // per feature, coordinate of each value
    std::vector<std::vector<double>> rows;  // enumeration, last feature fastest
    [[nodiscard]] std::size_t p() const { return axes.size(); }
    [[nodiscard]] std::size_t n() const { return rows.size(); }
};

inline Table table_of(const sce::DatasetSpec& spec) {
    Table t;
    for (const auto& f : spec.features) {
        std::vector<double> axis;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            if (f.kind == sce::FeatureKind::numeric_discrete) {
                axis.push_back(std::get<double>(f.values[i]));
            } else {
                axis.push_back(static_cast<double>(i));
            }
        }
        t.axes.push_back(axis);
    }
    std::vector<std::size_t> odo(t.p(), 0);
    while (true) {
        std::vector<double> row;
        for (std::size_t k = 0; k < t.p(); ++k) row.push_back(t.axes[k][odo[k]]);
        t.rows.push_back(row);
        std::size_t k = t.p();
        while (k > 0) {
            --k;
            if (++odo[k] < t.axes[k].size()) break;
            odo[k] = 0;
            if (k == 0) return t;
        }
    }
}

inline double range_of(const std::vector<double>& axis) {
    return *std::max_element(axis.begin(), axis.end()) - *std::min_element(axis.begin(), axis.end());
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline std::vector<double> column(const Table& t, std::size_t k) {
    std::vector<double> c;
    for (const auto& r : t.rows) c.push_back(r[k]);
    return c;
}

inline double mad(const Table& t, std::size_t k) {
    auto c = column(t, k);
    const double m = median(c);
    for (auto& x : c) x = std::fabs(x - m);
    return median(c);
}

inline double pop_std(const Table& t, std::size_t k) {
    const auto c = column(t, k);
    double mean = 0.0;
    for (double x : c) mean += x;
    mean /= static_cast<double>(c.size());
    double ss = 0.0;
    for (double x : c) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(c.size()));
}

enum class Metric { gower, l1, l2 };

struct Distance {
    Metric metric = Metric::gower;
    std::vector<double> scale;
    const Table* table = nullptr;

    Distance(const Table& t, Metric m) : metric(m), table(&t) {
        for (std::size_t k = 0; k < t.p(); ++k) {
            if (m == Metric::gower) scale.push_back(range_of(t.axes[k]));
            if (m == Metric::l1) scale.push_back(mad(t, k));
            if (m == Metric::l2) scale.push_back(pop_std(t, k));
        }
    }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        const auto& a = table->rows[i];
        const auto& b = table->rows[j];
        double sum = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - b[k];
            switch (metric) {
                case Metric::gower:
                    if (scale[k] > 0.0) sum += std::fabs(d) / scale[k];
                    break;
                case Metric::l1: sum += std::fabs(d) / scale[k]; break;
                case Metric::l2: sum += d * d / scale[k]; break;
            }
        }
        return metric == Metric::gower ? sum / static_cast<double>(a.size()) : sum;
    }
};

inline Metric metric_of(sce::DistanceTag tag) {
    if (tag == sce::DistanceTag::l1_mad) return Metric::l1;
    if (tag == sce::DistanceTag::l2_std) return Metric::l2;
    return Metric::gower;
}

struct Nearest {
    double distance = 0.0;
    std::vector<std::size_t> ids;
};

// Two passes: find the minimum, then collect every id that attains it.
inline std::optional<Nearest> nearest(const Distance& d, const std::vector<int>& labels, std::size_t source,
                                      int target) {
    std::optional<double> best;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j == source || labels[j] != target) continue;
        const double v = d(source, j);
        if (!best || v < *best) best = v;
    }
    if (!best) return std::nullopt;
    Nearest out{*best, {}};
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j != source && labels[j] == target && d(source, j) == *best) out.ids.push_back(j);
    }
    return out;
}

inline double max_pairwise(const Distance& d) {
    double best = 0.0;
    for (std::size_t i = 0; i < d.table->n(); ++i) {
        for (std::size_t j = i + 1; j < d.table->n(); ++j) best = std::max(best, d(i, j));
    }
    return best;
}

// One elicited answer: the proposed id, or nothing when the answer did not parse.
struct Answer {
    std::size_t source = 0;
    int predicted = 0;
    std::optional<std::size_t> proposal;
};

struct Scores {
    std::size_t total = 0;
    std::size_t valid = 0;
    std::size_t no_cf = 0;
    std::optional<double> validity_pct;
    std::optional<double> mean_ed;
    std::optional<double> exact_pct;
};

inline Scores score(const std::vector<Answer>& answers, const std::vector<int>& labels, const Distance& d) {
    Scores s;
    s.total = answers.size();
    double ed_sum = 0.0;
    std::size_t exact = 0;
    for (const auto& a : answers) {
        const int target = 1 - a.predicted;
        const auto best = nearest(d, labels, a.source, target);
        if (!best) {
            ++s.no_cf;
            continue;
        }
        if (!a.proposal) continue;
        const std::size_t cf = *a.proposal;
        if (std::find(best->ids.begin(), best->ids.end(), cf) != best->ids.end()) ++exact;
        if (cf != a.source && labels[cf] == target) {
            ++s.valid;
            ed_sum += d(a.source, cf) - best->distance;
        }
    }
    const std::size_t evaluable = s.total - s.no_cf;
    if (evaluable > 0) {
        s.validity_pct = 100.0 * static_cast<double>(s.valid) / static_cast<double>(evaluable);
        s.exact_pct = 100.0 * static_cast<double>(exact) / static_cast<double>(evaluable);
    }
    if (s.valid > 0) s.mean_ed = ed_sum / static_cast<double>(s.valid);
    return s;
}

// Linear threshold rule on rank / (cardinality - 1); class 0 when the score reaches the threshold.
inline std::vector<int> linear_labels(const Table& t, const std::vector<double>& w, double threshold) {
    std::vector<int> labels;
    std::vector<std::size_t> card;
    for (const auto& a : t.axes) card.push_back(a.size());
    for (std::size_t i = 0; i < t.n(); ++i) {
        std::size_t rest = i;
        std::vector<std::size_t> idx(t.p());
        for (std::size_t k = t.p(); k-- > 0;) {
            idx[k] = rest % card[k];
            rest /= card[k];
        }
        double s = 0.0;
        for (std::size_t k = 0; k < t.p(); ++k) {
            s += w[k] * (static_cast<double>(idx[k]) / static_cast<double>(card[k] - 1));
        }
        labels.push_back(s >= threshold ? 0 : 1);
    }
    return labels;
}

}  // namespace oracle
