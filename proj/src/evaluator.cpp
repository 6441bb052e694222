#include "hive/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace hive {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    tn += other.tn;
    return *this;
}

std::string to_string(AggregationMode mode) {
    return mode == AggregationMode::pooled ? "pooled" : "weighted";
}

ConfusionCounts confusion(std::span<const Verdict> predictions,
                          std::span<const Label> labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("confusion: predictions and labels differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool positive = predictions[i] == Verdict::anomalous;
        const bool swarm = labels[i] == Label::swarm;
        if (positive)
            ++(swarm ? c.tp : c.fp);
        else
            ++(swarm ? c.fn : c.tn);
    }
    return c;
}

Metrics metrics(const ConfusionCounts& counts) {
    Metrics m;
    const double tp = static_cast<double>(counts.tp);
    if (counts.tp + counts.fp > 0)
        m.precision = tp / static_cast<double>(counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0)
        m.recall = tp / static_cast<double>(counts.tp + counts.fn);
    if (counts.tp > 0) {
        m.has_f1 = true;
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

DatasetReport dataset_report(std::string dataset, const ConfusionCounts& counts,
                             bool excluded) {
    DatasetReport row;
    row.dataset = std::move(dataset);
    row.counts = counts;
    row.scores = metrics(counts);
    row.excluded = excluded;
    return row;
}

EvalReport aggregate(const std::vector<DatasetReport>& rows, AggregationMode mode) {
    EvalReport report;
    report.rows = rows;
    report.mode = mode;

    ConfusionCounts sums;
    double weight = 0.0, p = 0.0, r = 0.0, f1 = 0.0;
    bool any = false;
    for (const auto& row : rows) {
        if (row.excluded) continue;
        any = true;
        sums += row.counts;
        const double w = static_cast<double>(row.counts.total());
        weight += w;
        p += w * row.scores.precision;
        r += w * row.scores.recall;
        f1 += w * (row.scores.has_f1 ? row.scores.f1 : 0.0);
    }
    if (!any) throw std::invalid_argument("aggregate: no contributing dataset");

    report.overall.dataset = "All";
    report.overall.counts = sums;
    if (mode == AggregationMode::pooled) {
        report.overall.scores = metrics(sums);
    } else {
        Metrics m;
        if (weight > 0.0) {
            m.precision = p / weight;
            m.recall = r / weight;
            m.f1 = f1 / weight;
        }
        m.has_f1 = sums.tp > 0;
        if (!m.has_f1) m.f1 = 0.0;
        report.overall.scores = m;
    }
    return report;
}

namespace {

std::string two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string full_precision(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void append_row(std::string& out, const std::string& detector,
                const std::string& dataset, const DatasetReport& row) {
    out += detector;
    out += '\t';
    out += dataset;
    out += '\t';
    out += two_decimals(row.scores.precision);
    out += '\t';
    out += two_decimals(row.scores.recall);
    out += '\t';
    out += row.scores.has_f1 ? two_decimals(row.scores.f1) : "NA";
    out += '\t';
    out += std::to_string(row.counts.tp);
    out += '\t';
    out += std::to_string(row.counts.fp);
    out += '\t';
    out += std::to_string(row.counts.tn);
    out += '\t';
    out += std::to_string(row.counts.fn);
    out += '\n';
}

void append_long(std::string& out, const std::string& dataset,
                 const std::string& detector, const char* metric,
                 const std::string& value) {
    out += dataset;
    out += ',';
    out += detector;
    out += ',';
    out += metric;
    out += ',';
    out += value;
    out += '\n';
}

void append_long_row(std::string& out, const std::string& detector,
                     const std::string& dataset, const DatasetReport& row) {
    append_long(out, dataset, detector, "precision", full_precision(row.scores.precision));
    append_long(out, dataset, detector, "recall", full_precision(row.scores.recall));
    append_long(out, dataset, detector, "f1",
                row.scores.has_f1 ? full_precision(row.scores.f1) : "NA");
    append_long(out, dataset, detector, "tp", std::to_string(row.counts.tp));
    append_long(out, dataset, detector, "fp", std::to_string(row.counts.fp));
    append_long(out, dataset, detector, "tn", std::to_string(row.counts.tn));
    append_long(out, dataset, detector, "fn", std::to_string(row.counts.fn));
}

} // namespace

std::string render_report(const EvalReport& report, const std::string& detector) {
    std::string out = "detector\tdataset\tP\tR\tF1\tTP\tFP\tTN\tFN\n";
    bool starred = false;
    for (const auto& row : report.rows) {
        starred = starred || row.excluded;
        append_row(out, detector, row.excluded ? row.dataset + "*" : row.dataset, row);
    }
    append_row(out, detector, "All (" + to_string(report.mode) + ")", report.overall);
    if (starred) out += "* excluded from the overall row\n";
    return out;
}

std::string long_format(const EvalReport& report, const std::string& detector) {
    std::string out = "dataset,detector,metric,value\n";
    for (const auto& row : report.rows) append_long_row(out, detector, row.dataset, row);
    append_long_row(out, detector, "All", report.overall);
    return out;
}

namespace {

// Pearson correlation over the listed samples with pairwise deletion. NaN
// when either side is constant; exact 1 on the diagonal of a varying sensor.
double pair_correlation(const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<std::size_t>& samples, bool tagged,
                        bool diagonal) {
    std::vector<double> x, y;
    x.reserve(samples.size());
    y.reserve(samples.size());
    for (std::size_t t : samples) {
        if (std::isfinite(a[t]) && std::isfinite(b[t])) {
            x.push_back(a[t]);
            y.push_back(b[t]);
        }
    }
    if (x.size() < 2) {
        if (tagged)
            throw std::invalid_argument(
                "sensor_correlations: fewer than two complete samples for a sensor pair");
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (diagonal) return 1.0;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::vector<double>> correlation_matrix(
    const SensorTrace& trace, const std::vector<std::size_t>& cols,
    const std::vector<std::size_t>& samples, bool tagged) {
    const std::size_t k = cols.size();
    if (!tagged) return {};
    std::vector<std::vector<double>> m(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) {
            const double r = pair_correlation(trace.values[cols[i]],
                                              trace.values[cols[j]], samples,
                                              tagged, i == j);
            m[i][j] = m[j][i] = r;
        }
    return m;
}

} // namespace

CorrelationReport sensor_correlations(const SensorTrace& trace,
                                      const std::vector<std::string>& sensor_ids,
                                      const std::vector<DayTag>& days) {
    if (sensor_ids.empty())
        throw std::invalid_argument("sensor_correlations: no sensors selected");
    std::vector<std::size_t> cols;
    cols.reserve(sensor_ids.size());
    for (const auto& id : sensor_ids) cols.push_back(trace.sensor_index(id));

    std::vector<std::size_t> pools[2]; // [0] normal, [1] anomalous
    bool tagged[2] = {false, false};
    for (const auto& day : days) {
        if (day.source != trace.source) continue;
        tagged[day.anomalous] = true;
        const Minute lo = std::max(day.start, trace.start);
        const Minute hi = std::min(day.start + day.length, trace.end());
        for (Minute m = lo; m < hi; ++m)
            pools[day.anomalous].push_back(static_cast<std::size_t>(m - trace.start));
    }

    CorrelationReport report;
    report.sensors = sensor_ids;
    report.normal = correlation_matrix(trace, cols, pools[0], tagged[0]);
    report.anomalous = correlation_matrix(trace, cols, pools[1], tagged[1]);
    return report;
}

} // namespace hive
